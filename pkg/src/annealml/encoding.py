"""PCA compression, bounded normalization, and Ising-problem encodings.

Feature vectors are compressed with PCA fitted on training data only,
min-max normalized per feature into [-1, 1], rescaled by gamma, and
assigned to the couplings (and, for chains, fields) of an IsingProblem.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import IsingProblem
from .errors import EncodingError

# Fixed 8-qubit working graph: the 16 bipartite couplers {0..3}x{4..7} in
# lexicographic order, then the four intra-group couplers.  Exactly 20
# edges, so a 20-dim feature vector fills it.
CANONICAL_DIGITS_EDGES: tuple[tuple[int, int], ...] = tuple(
    [(l, m) for l in range(4) for m in range(4, 8)]
    + [(0, 1), (2, 3), (4, 5), (6, 7)]
)


@dataclass
class PcaModel:
    """Top-k principal axes of the training data.

    components rows are orthonormal, ordered by descending explained
    variance, each with its largest-magnitude entry made positive.
    """

    mean: np.ndarray
    components: np.ndarray          # (k, d)
    explained_variance: np.ndarray  # (k,)
    rank_deficient: bool = False

    @property
    def k(self):
        return self.components.shape[0]


def pca_fit(data, k: int) -> PcaModel:
    """Fit a k-component PCA via SVD of the centered data matrix.

    If the data has fewer than k nonzero covariance eigenvalues, the
    remaining components complete an orthonormal set from the null space
    and the model is flagged rank-deficient.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("data must be a 2-d matrix")
    n, d = data.shape
    if not 1 <= k <= d:
        raise ValueError(f"k must be in [1, {d}], got {k}")
    if n <= k:
        raise ValueError(f"need more samples than components, got {n} <= {k}")

    mean = data.mean(axis=0)
    centered = data - mean
    _, sing, vt = np.linalg.svd(centered, full_matrices=True)
    variances = np.zeros(d)
    variances[: sing.shape[0]] = sing**2 / n

    rank = int(np.sum(sing > sing[0] * max(n, d) * np.finfo(float).eps)) if sing.size else 0
    rank_deficient = rank < k
    if rank_deficient:
        warnings.warn(
            f"data has rank {rank} < k = {k}; trailing components are an "
            "arbitrary orthonormal completion",
            RuntimeWarning,
            stacklevel=2,
        )

    components = vt[:k].copy()
    for row in components:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0:
            row *= -1.0
    return PcaModel(mean, components, variances[:k], rank_deficient)


def pca_transform(model: PcaModel, sample) -> np.ndarray:
    """Project one sample (or a stack of samples) onto the principal axes."""
    sample = np.asarray(sample, dtype=float)
    if sample.shape[-1] != model.mean.shape[0]:
        raise ValueError(
            f"sample dimension {sample.shape[-1]} != model dimension {model.mean.shape[0]}"
        )
    return (sample - model.mean) @ model.components.T


class Normalizer:
    """Per-feature min-max map onto [-1, 1], fitted on training projections.

    Degenerate features (max == min) map to 0; transform clamps, so test
    points outside the training range stay within the hardware bounds.
    """

    def __init__(self):
        self.lo = None
        self.hi = None

    @property
    def fitted(self):
        return self.lo is not None

    def fit_transform(self, train):
        train = np.asarray(train, dtype=float)
        self.lo = train.min(axis=0)
        self.hi = train.max(axis=0)
        return self.transform(train)

    def transform(self, sample):
        if not self.fitted:
            raise RuntimeError("normalizer used before fit")
        sample = np.asarray(sample, dtype=float)
        span = self.hi - self.lo
        safe = np.where(span == 0, 1.0, span)
        out = 2.0 * (sample - self.lo) / safe - 1.0
        out = np.where(span == 0, 0.0, out)
        return np.clip(out, -1.0, 1.0)


def encode_digits(x_prime, gamma: float, edges=None, n_qubits: int = 8) -> IsingProblem:
    """Map a feature vector onto couplings of the fixed working graph.

    Coupling on edge i is gamma * x_prime[i] in canonical edge order; no
    longitudinal fields (fast-anneal constraint).  The edge list can be
    overridden when the true topology is known.
    """
    if edges is None:
        edges = CANONICAL_DIGITS_EDGES
    x_prime = np.asarray(x_prime, dtype=float)
    if x_prime.shape != (len(edges),):
        raise EncodingError(
            f"feature vector has {x_prime.shape[0] if x_prime.ndim == 1 else '?'} "
            f"entries, graph has {len(edges)} edges"
        )
    if not 0.0 <= gamma <= 1.0:
        raise EncodingError(f"gamma must lie in [0, 1], got {gamma}")
    couplings = gamma * x_prime
    if couplings.size and np.max(np.abs(couplings)) > 1.0:
        raise EncodingError("scaled couplings leave [-1, 1]")
    return IsingProblem.fast_anneal(n_qubits, edges, couplings)


def encode_mnist_chain(x_prime, n_qubits: int) -> IsingProblem:
    """Map a (2N-1)-dim vector onto a nearest-neighbor chain.

    The first N-1 entries are the chain couplings J_l on edges (l, l+1),
    the remaining N are the longitudinal fields h_l.
    """
    x_prime = np.asarray(x_prime, dtype=float)
    expected = 2 * n_qubits - 1
    if x_prime.shape != (expected,):
        raise EncodingError(
            f"chain on {n_qubits} qubits needs {expected} features, "
            f"got {x_prime.shape}"
        )
    edges = tuple((l, l + 1) for l in range(n_qubits - 1))
    return IsingProblem(
        n_qubits, edges, x_prime[: n_qubits - 1], x_prime[n_qubits - 1 :]
    )


def save_encoder(path, pca: PcaModel, normalizer: Normalizer, seed=None):
    """Persist a fitted PCA + normalizer pair as a JSON document."""
    doc = {
        "pca": {
            "mean": pca.mean.tolist(),
            "components": pca.components.tolist(),
            "explained_variance": pca.explained_variance.tolist(),
            "k": pca.k,
            "rank_deficient": pca.rank_deficient,
        },
        "normalizer": {
            "lo": None if normalizer.lo is None else normalizer.lo.tolist(),
            "hi": None if normalizer.hi is None else normalizer.hi.tolist(),
        },
        "seed": seed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)


def load_encoder(path):
    """Inverse of save_encoder; returns (PcaModel, Normalizer, seed)."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    p = doc["pca"]
    pca = PcaModel(
        np.asarray(p["mean"], dtype=float),
        np.asarray(p["components"], dtype=float),
        np.asarray(p["explained_variance"], dtype=float),
        bool(p["rank_deficient"]),
    )
    norm = Normalizer()
    if doc["normalizer"]["lo"] is not None:
        norm.lo = np.asarray(doc["normalizer"]["lo"], dtype=float)
        norm.hi = np.asarray(doc["normalizer"]["hi"], dtype=float)
    return pca, norm, doc.get("seed")
