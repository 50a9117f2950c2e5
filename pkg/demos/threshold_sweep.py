"""Trace the estimation error as a function of the threshold level.

Runs a small shared-seed Monte Carlo sweep for the gaussian family and
prints the mean root-MISE curve: too little thresholding leaves noise
in, too much erases signal, and the minimum sits near the universal
level sqrt(2 log n).
"""

import numpy as np

from wavegplm import FitConfig, SimulationConfig, calibrate_threshold

n = 256
config = SimulationConfig(
    family_kind="gaussian",
    function="sinus",
    n=n,
    target_snr_f=9.0,
    replications=20,
    seed=1,
    fit=FitConfig(kappa=500, delta=1e-10),
)

universal = np.sqrt(2.0 * np.log(n))
grid = np.linspace(0.2, 2.0, 10) * universal
curve = calibrate_threshold(config, grid)

print(f"universal level sqrt(2 log n) = {universal:.4f}\n")
print("lambda    lambda/universal   mean rmise")
for lam, err in zip(curve.lambdas, curve.mean_rmise):
    marker = "  <- minimum" if lam == curve.argmin_lambda else ""
    print(f"{lam:7.4f}   {lam / universal:16.2f}   {err:10.4f}{marker}")
