"""Quantised-normal ratings and the synthetic experiment generator.

Prints the category probabilities for a few latent means, the matching
MOS/SOS moments and the SOS parameter implied by each user uncertainty,
then draws one experiment per bias scenario.
"""
import numpy as np

from ratingprecision import BiasScenario, ExperimentConfig, QNormParams, simulate_experiment
from ratingprecision.qnorm import moments, pmf, sigma_to_sos_a

print("pmf over categories 1..5 at sigma = 0.75")
for mu in (1.0, 2.3, 3.0, 4.6):
    p = pmf(QNormParams(mu, 0.75))
    e, sd = moments(QNormParams(mu, 0.75))
    print(f"  mu={mu:.1f}  {np.round(p, 3)}  E={e:.3f} SD={sd:.3f}")

print("\nSOS parameter a implied by sigma")
for sigma in (0.4, 0.75, 1.0, 1.25):
    print(f"  sigma={sigma:.2f}  a={sigma_to_sos_a(sigma):.4f}")

print("\none experiment per scenario (30 users x 21 stimuli, sigma 0.75, p 0.8)")
for kind in ("none", "mixed", "extreme"):
    exp = simulate_experiment(ExperimentConfig(sigma=0.75, scenario=BiasScenario(kind), p=0.8, seed=1))
    r = exp.ratings.ratings
    print(f"  {kind:8s} biased users {int(np.count_nonzero(exp.biases)):2d}  "
          f"MOS range {np.nanmean(r, 0).min():.2f}..{np.nanmean(r, 0).max():.2f}")
