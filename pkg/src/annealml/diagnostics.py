"""Participation-ratio diagnostics and distribution-matching scans.

PR = 1 / sum_b p_b^2 over all 2^N basis outcomes measures the effective
number of occupied outcomes: 1 for a delta, 2^N for the uniform
distribution.  APR averages it over a dataset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import ProbDist, evolve_many, output_distribution
from .errors import ConfigError


def _probs(dist) -> np.ndarray:
    p = dist.probs if isinstance(dist, ProbDist) else np.asarray(dist, dtype=float)
    if abs(float(p.sum()) - 1.0) > 1e-6:
        raise ValueError("distribution is not normalized")
    return p


def participation_ratio(dist) -> float:
    """Effective number of occupied basis outcomes, in [1, 2^N]."""
    p = _probs(dist)
    return 1.0 / float(np.dot(p, p))


def apr(dists) -> float:
    """Mean participation ratio over a dataset of distributions."""
    dists = list(dists)
    if not dists:
        raise ConfigError("APR over an empty dataset")
    return float(np.mean([participation_ratio(d) for d in dists]))


def squared_distance(p, q) -> float:
    """Squared Euclidean distance between two distributions."""
    return float(np.sum((_probs(p) - _probs(q)) ** 2))


@dataclass
class LtScan:
    """Mean squared-error curve over candidate times and its minimizer."""

    t_grid: np.ndarray
    mean_l: np.ndarray
    t_star: float


def lt_scan(reference_dists, problems, schedule, t_grid, scale: float = 1.0,
            dt_target: float | None = None, threads: int = 1) -> LtScan:
    """Match reference distributions against simulations over a time grid.

    For every candidate T the problems are evolved and the squared
    distance to the corresponding reference is averaged over images; the
    minimizer T* breaks ties toward the smallest grid time.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0:
        raise ConfigError("empty time grid")
    if np.any(np.diff(t_grid) <= 0):
        raise ConfigError("time grid must be strictly increasing")
    refs = np.stack([_probs(d) for d in reference_dists])
    if len(problems) != refs.shape[0]:
        raise ConfigError("one reference distribution per problem required")

    mean_l = np.empty(t_grid.shape[0])
    for i, t in enumerate(t_grid):
        states = evolve_many(problems, schedule, float(t), scale=scale,
                             dt_target=dt_target, threads=threads)
        sims = np.stack([output_distribution(s).probs for s in states])
        if sims.shape[1] != refs.shape[1]:
            raise ConfigError("reference and simulation dimensions differ")
        mean_l[i] = float(np.mean(np.sum((refs - sims) ** 2, axis=1)))
    t_star = float(t_grid[int(np.argmin(mean_l))])
    return LtScan(t_grid, mean_l, t_star)


@dataclass
class CollapseResult:
    """APR-vs-time table with the rescaled abscissa and collapse scores."""

    rows: list[tuple[int, float, float, float]]   # (n_qubits, T, T / 2^(alpha N), APR)
    score_unrescaled: float
    score_rescaled: float
    alpha: float


def _collapse_score(curves):
    """Mean pairwise inter-curve area on log-log axes.

    Curves are (x, y) arrays; each pair is interpolated onto its overlap
    window and the trapezoid area of |log y1 - log y2| is normalized by
    the window width.
    """
    keys = sorted(curves)
    areas = []
    for i in range(len(keys)):
        for j in range(i + 1, len(keys)):
            x1, y1 = curves[keys[i]]
            x2, y2 = curves[keys[j]]
            lo, hi = max(x1[0], x2[0]), min(x1[-1], x2[-1])
            if hi <= lo:
                raise ConfigError(
                    f"curves for N={keys[i]} and N={keys[j]} do not overlap; "
                    "widen the time grid"
                )
            grid = np.linspace(lo, hi, 128)
            diff = np.abs(np.interp(grid, x1, y1) - np.interp(grid, x2, y2))
            areas.append(np.trapezoid(diff, grid) / (hi - lo))
    return float(np.mean(areas))


def rescaled_time_table(t_grid, apr_by_n: dict[int, np.ndarray],
                        alpha: float = 0.4) -> CollapseResult:
    """Rescale annealing times by 2^(alpha N) and score the curve collapse.

    A smaller rescaled score than unrescaled score means the APR curves
    for different qubit counts moved toward a common curve.
    """
    if len(apr_by_n) < 2:
        raise ConfigError("need APR curves for at least two qubit counts")
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0):
        raise ConfigError("annealing times must be positive")

    rows = []
    plain, rescaled = {}, {}
    for n, curve in sorted(apr_by_n.items()):
        curve = np.asarray(curve, dtype=float)
        if curve.shape != t_grid.shape:
            raise ConfigError(f"APR curve for N={n} does not match the time grid")
        if np.any(curve <= 0):
            raise ConfigError(f"APR curve for N={n} has non-positive entries")
        t_resc = t_grid / 2.0 ** (alpha * n)
        rows.extend((n, float(t), float(tr), float(a))
                    for t, tr, a in zip(t_grid, t_resc, curve))
        plain[n] = (np.log(t_grid), np.log(curve))
        rescaled[n] = (np.log(t_resc), np.log(curve))

    return CollapseResult(
        rows=rows,
        score_unrescaled=_collapse_score(plain),
        score_rescaled=_collapse_score(rescaled),
        alpha=alpha,
    )
