import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one verdict line per capability check after the test run.

    The checks in test_acceptance.py record their verdicts in a module
    level list; printing them here goes through pytest's own terminal
    writer, so the lines appear even with output capture enabled.
    """
    module = sys.modules.get("test_acceptance")
    verdicts = getattr(module, "RECORDED_VERDICTS", None)
    if not verdicts:
        return
    terminalreporter.section("capability checks")
    for number, text, verdict in sorted(verdicts):
        terminalreporter.write_line(f"check {number} ({text}): {verdict}")
