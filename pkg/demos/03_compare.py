"""Comparing the precision of two experiments.

A pair drawn with the same user uncertainty should rarely differ; a pair
with 0.5 vs 1.0 should differ under every method.
"""
from ratingprecision import ExperimentConfig, compare, simulate_experiment


def draw(sigma, seed):
    return simulate_experiment(ExperimentConfig(sigma=sigma, seed=seed)).ratings


pairs = {"same sigma 0.75": (draw(0.75, 1), draw(0.75, 2)), "sigma 0.5 vs 1.0": (draw(0.5, 3), draw(1.0, 4))}
for label, (m1, m2) in pairs.items():
    print(label)
    for method in ("l", "g", "a", "pv"):
        out = compare(m1, m2, method)
        print(f"  {method:2s} p={out.p_value:.2E} {'significant' if out.significant else 'not significant'}")
