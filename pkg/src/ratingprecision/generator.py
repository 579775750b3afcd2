"""Simulated subjective experiments.

Every user gets one bias drawn at the start of an experiment; each cell of
the ``n x k`` rating matrix is then an independent QNorm draw with mean
``mu_x + beta_u`` and the experiment-wide uncertainty ``sigma``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .core import DomainError, RatingMatrix
from .qnorm import sample_grid

NO_BIAS = "none"
MIXED = "mixed"
EXTREME = "extreme"
SCENARIOS = (NO_BIAS, MIXED, EXTREME)

TABLE_I_K = 21
TABLE_I_N = 30
TABLE_I_SIGMAS = tuple(round(0.40 + 0.05 * i, 2) for i in range(18))
TABLE_I_PS = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.98, 1.0)
DEFAULT_REPETITIONS = 200


def equidistant_mu(k: int = TABLE_I_K) -> tuple:
    if k == 1:
        return (3.0,)
    return tuple(float(1 + 4 * i / (k - 1)) for i in range(k))


@dataclass(frozen=True)
class BiasScenario:
    """Which users are biased and by how much.

    ``kind`` is one of ``"none"``, ``"mixed"`` (``+-magnitude`` with total
    probability ``1 - p``) or ``"extreme"`` (``+-magnitude`` for everyone,
    ``p`` ignored).
    """

    kind: str = NO_BIAS
    magnitude: Optional[float] = None

    def __post_init__(self):
        if self.kind not in SCENARIOS:
            raise DomainError(f"unknown bias scenario {self.kind!r}")
        if self.magnitude is None:
            default = {NO_BIAS: 0.0, MIXED: 0.5, EXTREME: 1.0}[self.kind]
            object.__setattr__(self, "magnitude", default)
        if self.kind != NO_BIAS and not self.magnitude > 0:
            raise DomainError("bias magnitude must be > 0")

    @classmethod
    def parse(cls, name: str) -> "BiasScenario":
        return cls(name)


@dataclass(frozen=True)
class ExperimentConfig:
    k: int = TABLE_I_K
    n: int = TABLE_I_N
    mu: tuple = field(default_factory=equidistant_mu)
    sigma: float = 0.75
    scenario: BiasScenario = field(default_factory=BiasScenario)
    p: float = 1.0
    seed: int = 0
    repetition: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(float(m) for m in self.mu))
        if len(self.mu) != self.k:
            raise DomainError(f"mu has {len(self.mu)} entries, expected k={self.k}")
        if self.n < 2 or self.k < 1:
            raise DomainError("need n >= 2 subjects and k >= 1 stimuli")
        if any(not 1.0 <= m <= 5.0 for m in self.mu):
            raise DomainError("every mu_x must lie in [1, 5]")
        if not self.sigma > 0:
            raise DomainError(f"sigma must be > 0, got {self.sigma}")
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"p must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class SimulatedExperiment:
    config: ExperimentConfig
    ratings: RatingMatrix
    biases: np.ndarray
    repetition_index: int = 0


def draw_biases(scenario: BiasScenario, p: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """Biases for ``size`` users; one uniform per user.

    Mixed: ``u < p`` gives no bias, the next ``(1 - p) / 2`` of the unit
    interval a negative bias and the rest a positive bias.
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    u = rng.random(size)
    m = scenario.magnitude
    if scenario.kind == NO_BIAS:
        return np.zeros(size)
    if scenario.kind == EXTREME:
        return np.where(u < 0.5, -m, m)
    return np.where(u < p, 0.0, np.where(u < p + (1.0 - p) / 2.0, -m, m))


def draw_bias(scenario: BiasScenario, p: float, rng: np.random.Generator) -> float:
    return float(draw_biases(scenario, p, rng, 1)[0])


def simulate_experiment(config: ExperimentConfig, rng: Optional[np.random.Generator] = None) -> SimulatedExperiment:
    """Synthesize one experiment.

    Without ``rng`` a PCG64 stream seeded with ``config.seed`` is used. The
    stream is consumed as ``n`` bias uniforms followed by ``n * k`` rating
    uniforms in row-major (user, stimulus) order.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    beta = draw_biases(config.scenario, config.p, rng, config.n)
    u = rng.random((config.n, config.k))
    latent_mean = np.asarray(config.mu)[None, :] + beta[:, None]
    q = sample_grid(latent_mean, config.sigma, u)
    return SimulatedExperiment(
        config=config,
        ratings=RatingMatrix(q.astype(float)),
        biases=beta,
        repetition_index=config.repetition,
    )


def derive_seed(master_seed: int, *key: int) -> int:
    """64-bit child seed for ``key`` under ``master_seed``."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(hi) << 32 | int(lo)


def scenario_ps(scenario: BiasScenario, ps=TABLE_I_PS) -> tuple:
    """No-bias probabilities that matter for ``scenario``."""
    if scenario.kind == MIXED:
        return tuple(ps)
    return (1.0,) if scenario.kind == NO_BIAS else (0.0,)


def study_grid(
    scenario: BiasScenario,
    sigmas=TABLE_I_SIGMAS,
    ps=TABLE_I_PS,
    r: int = DEFAULT_REPETITIONS,
    master_seed: int = 0,
    k: int = TABLE_I_K,
    n: int = TABLE_I_N,
) -> list:
    """All experiment configs of a study, ordered by (sigma, p, repetition).

    Repetition ``rep`` of cell ``(i, j)`` is seeded with
    ``derive_seed(master_seed, i, j, rep)``.
    """
    if r < 1:
        raise DomainError("need at least one repetition")
    mu = equidistant_mu(k)
    out = []
    for i, s in enumerate(sigmas):
        for j, p in enumerate(scenario_ps(scenario, ps)):
            base = ExperimentConfig(k=k, n=n, mu=mu, sigma=float(s), scenario=scenario, p=float(p))
            for rep in range(r):
                out.append(replace(base, seed=derive_seed(master_seed, i, j, rep), repetition=rep))
    return out
