"""Watch half a recording, then predict the rest with an uncertainty band.

Trains one model per motion class, hands the forecaster the first half of
a held-out recording, and compares the predicted mean and one-standard-
deviation band against what the sensor actually measured.
"""

import math

import numpy as np

from lrhmm import (
    ObservationSequence,
    SyntheticConfig,
    TrainingConfig,
    baum_welch,
    forecast,
    generate_synthetic,
)

common = dict(amplitude=1.0, noise_std=0.015, duration_s=1.0, dt=0.025,
              n_sequences=30, random_start_phase=False)
cfg_1 = SyntheticConfig(omega=1.05 * math.pi, rng_seed=101, **common)
cfg_2 = SyntheticConfig(omega=1.48 * math.pi, rng_seed=202, **common)

# hold the last trial of class 1 out of training
class_1 = generate_synthetic(cfg_1, (), label=1)["dr1"]
class_2 = generate_synthetic(cfg_2, (), label=2)["dr1"]
holdout, class_1 = class_1[-1], class_1[:-1]

training = TrainingConfig(max_iterations=50, rng_seed=0)
model_1, _ = baum_welch(class_1, training)
model_2, _ = baum_welch(class_2[:-1], training)

half = holdout.n_steps // 2
history = ObservationSequence(holdout.values[:half], holdout.dt)
trajectory = forecast(history, model_1, model_2)

print(f"classified the {half}-step history as class {trajectory.class_label}")
print("step   truth    mean     band")
future = holdout.values[half:, 0]
for r in range(0, len(future), 4):
    mean = trajectory.means[r, 0]
    sd = trajectory.stddevs[r, 0]
    print(f"{half + r:>4}  {future[r]:6.3f}  {mean:6.3f}  +/- {sd:.3f}")

covered = np.abs(future - trajectory.means[:, 0]) <= trajectory.stddevs[:, 0]
print(f"band covered {covered.sum()}/{covered.size} future points "
      f"(about 68% expected)")
