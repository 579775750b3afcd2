"""Reduced-scale simulation study and rejection-ratio heat map.

Runs the no-bias study on the reduced preset (a few seconds), prints the l
heat map and its MAE against the ideal map. Pass a method name (l, g, a,
pv) as the first argument to map another method.
"""
import sys

import numpy as np

from ratingprecision import BiasScenario
from ratingprecision.sim import PRESETS, heatmap, mae_vs_ideal, run_study

method = sys.argv[1] if len(sys.argv) > 1 else "l"
preset = PRESETS["reduced"]
archive = run_study(BiasScenario("none"), preset.sigmas, preset.ps[-1:], preset.r, master_seed=7)
h = heatmap(archive, method, preset.pairs, seed=1)
np.set_printoptions(precision=2, suppress=True, linewidth=120)
print(f"sigmas {list(preset.sigmas)}")
print(h.ratios)
print(f"MAE vs ideal ({method}): {mae_vs_ideal(h):.4f}")
