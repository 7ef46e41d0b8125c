"""Finite-shot measurement simulation and the Hamiltonian-randomness ensemble.

All randomness flows through per-task substreams derived from a master
seed plus integer stream indices, so every sampled feature vector is
reproducible regardless of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import IsingProblem, ProbDist, evolve, evolve_many, output_distribution
from .errors import ConfigError, NumericalError


@dataclass(frozen=True)
class ShotConfig:
    shots: int
    seed: int = 0

    def __post_init__(self):
        if self.shots < 1:
            raise ConfigError(f"shots must be >= 1, got {self.shots}")


@dataclass(frozen=True)
class NoiseConfig:
    amplitude: float = 0.1
    realizations: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ConfigError("noise amplitude must be >= 0")
        if self.realizations < 1:
            raise ConfigError("need at least one noise realization")


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for (master seed, stream indices)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


def sample_shots(dist: ProbDist, cfg: ShotConfig, stream: tuple[int, ...] = ()) -> ProbDist:
    """Estimate a distribution from M measurement shots.

    Draws basis indices by inverse CDF over the cumulative sums with the
    substream (cfg.seed, *stream); returns counts / M.
    """
    if dist.source != "exact":
        raise ValueError("sample_shots expects an exact distribution")
    rng = substream(cfg.seed, *stream)
    cdf = np.cumsum(dist.probs)
    draws = rng.random(cfg.shots)
    idx = np.searchsorted(cdf, draws, side="right")
    np.minimum(idx, dist.probs.shape[0] - 1, out=idx)
    counts = np.bincount(idx, minlength=dist.probs.shape[0])
    return ProbDist(counts / cfg.shots, source="sampled", shots=cfg.shots)


def perturb_problem(problem: IsingProblem, cfg: NoiseConfig,
                    realization_index: int) -> IsingProblem:
    """Add uniform [-a, a) perturbations to every coupling and field.

    Fields are perturbed even when the base problem has none, and values
    may leave [-1, 1]: this models hardware imperfection, not programmed
    input.  Deterministic in (cfg.seed, realization_index); couplings are
    drawn before fields.
    """
    rng = substream(cfg.seed, realization_index)
    a = cfg.amplitude
    couplings = problem.couplings + rng.uniform(-a, a, problem.couplings.shape[0])
    fields = problem.fields + rng.uniform(-a, a, problem.n_qubits)
    return IsingProblem(problem.n_qubits, problem.edges, couplings, fields)


def ensemble_distribution(problem: IsingProblem, schedule, T: float,
                          cfg: NoiseConfig, scale: float = 1.0,
                          dt_target: float | None = None,
                          threads: int = 1) -> ProbDist:
    """Mean exact output distribution over R perturbed realizations."""
    perturbed = [perturb_problem(problem, cfg, r) for r in range(cfg.realizations)]
    try:
        states = evolve_many(perturbed, schedule, T, scale=scale,
                             dt_target=dt_target, threads=threads)
    except NumericalError:
        # rerun one by one to attribute the failure
        for r, p in enumerate(perturbed):
            try:
                evolve(p, schedule, T, scale=scale, dt_target=dt_target)
            except NumericalError as exc:
                raise NumericalError(f"realization {r}: {exc}") from None
        raise
    mean = np.mean([output_distribution(s).probs for s in states], axis=0)
    return ProbDist(mean, source="exact")


def total_variation(p: ProbDist, q: ProbDist) -> float:
    """Total-variation distance between two distributions."""
    return 0.5 * float(np.sum(np.abs(p.probs - q.probs)))
