"""
Error over object size and tilt
===============================

Calibrate once on the reference sweep, then evaluate every
(diameter, tilt) cell. Pass ``--quick`` for a coarse grid.
"""
import sys
import time
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from softjig import PipelineSetup, SweepConfig, compute_calibration, evaluate_rmse_grid, run_sweep
from softjig.io import write_grid_csv

quick = "--quick" in sys.argv
out = Path(__file__).with_name("output")
out.mkdir(exist_ok=True)

setup = PipelineSetup()
params = compute_calibration(run_sweep(SweepConfig(alpha=10, diameter=60, n=36), setup, seed=0))

diameters = (30, 50, 80) if quick else (30, 40, 50, 60, 70, 80)
alphas = (5, 15) if quick else (5, 10, 15, 20)
t0 = time.perf_counter()
grid = evaluate_rmse_grid(diameters, alphas, params, setup, n=12 if quick else 36, seed=0)
print(f"grid done in {time.perf_counter() - t0:.1f} s")

print("D \\ alpha " + "".join(f"{a:>8g}" for a in grid.alphas))
for d, row in zip(grid.diameters, grid.rmse):
    print(f"{d:>9g} " + "".join(f"{v:8.3f}" for v in row))
print("failed samples per cell:", grid.failed.tolist())
write_grid_csv(out / "04_rmse_grid.csv", grid)

fig, ax = plt.subplots(figsize=(5, 4))
for j, a in enumerate(grid.alphas):
    ax.plot(grid.diameters, grid.rmse[:, j], "o-", label=f"alpha {a:g} deg")
ax.set_xlabel("object diameter (mm)")
ax.set_ylabel("RMSE (deg)")
ax.legend()
fig.tight_layout()
fig.savefig(out / "04_rmse_grid.png", dpi=100)
print("largest cell RMSE:", float(np.nanmax(grid.rmse)))
