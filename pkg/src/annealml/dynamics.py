"""Time-dependent transverse-field Ising dynamics on dense state vectors.

The Hamiltonian interpolates between a uniform transverse field and a
diagonal Ising problem:

    H(s) = scale * [ -A(s)/2 * sum_l sx_l  +  B(s)/2 * (sum_lm J sz sz + sum_l h sz) ]

with s = t/T the normalized anneal position.  Basis convention is
little-endian: qubit l corresponds to bit l of the basis index, and bit
value 0 maps to spin z = +1 (the sz eigenvalue of |0>).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import DataError, NumericalError

MAX_QUBITS = 14               # keeps state vectors at or below 16,384 amplitudes
ORACLE_MAX_QUBITS = 4
ORACLE_MIN_STEPS = 100_000
DEFAULT_STEPS = 10_000        # evolve() default: dt_target = T / 10,000
RENORM_THRESHOLD = 1e-12      # squared-norm drift above which the state is renormalized

# cap on dim * batch_columns per kernel call; 32-64 columns saturate the
# kernel's batch vectorization while keeping scratch cache-resident
_MAX_BLOCK_ELEMS = 1 << 17
_MAX_BLOCK_COLS = 64


@dataclass(frozen=True)
class IsingProblem:
    """Couplings J on an edge list plus longitudinal fields h on N qubits."""

    n_qubits: int
    edges: tuple[tuple[int, int], ...]
    couplings: np.ndarray
    fields: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        edges = tuple((int(l), int(m)) for l, m in self.edges)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "couplings", np.asarray(self.couplings, dtype=float))
        object.__setattr__(self, "fields", np.asarray(self.fields, dtype=float))
        for l, m in edges:
            if not (0 <= l < m < self.n_qubits):
                raise ValueError(f"edge ({l}, {m}) out of range for {self.n_qubits} qubits")
        if len(set(edges)) != len(edges):
            raise ValueError("duplicate edges")
        if self.couplings.shape != (len(edges),):
            raise ValueError("couplings length must equal number of edges")
        if self.fields.shape != (self.n_qubits,):
            raise ValueError("fields length must equal n_qubits")

    @classmethod
    def fast_anneal(cls, n_qubits, edges, couplings):
        """Hardware-style problem: no longitudinal fields, |J| <= 1."""
        couplings = np.asarray(couplings, dtype=float)
        if couplings.size and np.max(np.abs(couplings)) > 1.0:
            raise ValueError("fast-anneal couplings must lie in [-1, 1]")
        return cls(n_qubits, tuple(edges), couplings, np.zeros(n_qubits))


@dataclass(frozen=True)
class AnnealSchedule:
    """Schedule functions A(s), B(s), either the built-in linear ramp or a table.

    The linear kind is exactly A(s) = 2(1-s), B(s) = 2s.  Tabulated
    schedules interpolate piecewise-linearly; angular_factor converts
    tabulated frequency values into angular frequencies (default 2*pi)
    and is ignored by the linear kind.
    """

    kind: str = "linear"
    s_table: np.ndarray | None = None
    a_table: np.ndarray | None = None
    b_table: np.ndarray | None = None
    angular_factor: float = 2.0 * math.pi

    def __post_init__(self):
        if self.kind == "linear":
            return
        if self.kind != "tabulated":
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        s = np.asarray(self.s_table, dtype=float)
        a = np.asarray(self.a_table, dtype=float)
        b = np.asarray(self.b_table, dtype=float)
        if s.ndim != 1 or s.shape != a.shape or s.shape != b.shape:
            raise ValueError("schedule table columns must be 1-d and equal length")
        if np.any(np.diff(s) <= 0):
            raise ValueError("schedule s samples must be strictly increasing")
        if s[0] != 0.0 or s[-1] != 1.0:
            raise ValueError("schedule table must cover s = 0 and s = 1")
        if np.any(a < 0) or np.any(b < 0):
            raise ValueError("schedule values A(s), B(s) must be nonnegative")
        object.__setattr__(self, "s_table", s)
        object.__setattr__(self, "a_table", a)
        object.__setattr__(self, "b_table", b)

    @classmethod
    def linear(cls):
        return cls(kind="linear")

    @classmethod
    def from_table(cls, s, a, b, angular_factor=2.0 * math.pi):
        return cls(kind="tabulated", s_table=s, a_table=a, b_table=b,
                   angular_factor=angular_factor)

    @classmethod
    def from_csv(cls, path, angular_factor=2.0 * math.pi):
        """Load a tabulated schedule from a CSV file with header ``s,A,B``."""
        try:
            fh = open(path, "r", encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot read {path}: {exc}") from None
        with fh:
            header = fh.readline().strip()
            if [c.strip() for c in header.split(",")] != ["s", "A", "B"]:
                raise DataError(f"{path}: expected header 's,A,B', got {header!r}")
            try:
                table = np.loadtxt(fh, delimiter=",", ndmin=2)
            except ValueError as exc:
                raise DataError(f"{path}: malformed schedule row ({exc})") from None
        if table.shape[1] != 3:
            raise DataError(f"{path}: expected 3 columns, got {table.shape[1]}")
        try:
            return cls.from_table(table[:, 0], table[:, 1], table[:, 2],
                                  angular_factor=angular_factor)
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from None

    def coefficients(self, s):
        """A(s), B(s) evaluated at an array of anneal positions."""
        s = np.asarray(s, dtype=float)
        if self.kind == "linear":
            return 2.0 * (1.0 - s), 2.0 * s
        a = np.interp(s, self.s_table, self.a_table) * self.angular_factor
        b = np.interp(s, self.s_table, self.b_table) * self.angular_factor
        return a, b


@dataclass
class QuantumState:
    """Complex amplitudes over the 2^N computational basis (little-endian)."""

    amplitudes: np.ndarray
    norm_drift: float = 0.0     # |norm^2 - 1| before any renormalization
    n_steps: int = 0

    @property
    def n_qubits(self):
        return int(self.amplitudes.shape[0]).bit_length() - 1


@dataclass
class ProbDist:
    """Probabilities over the 2^N basis outcomes, exact or shot-estimated."""

    probs: np.ndarray
    source: str = "exact"       # "exact" | "sampled"
    shots: int | None = None

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if np.any(self.probs < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(float(self.probs.sum()) - 1.0) > 1e-9:
            raise ValueError("probabilities must sum to 1")
        if self.source not in ("exact", "sampled"):
            raise ValueError(f"unknown source {self.source!r}")

    @property
    def n_qubits(self):
        return int(self.probs.shape[0]).bit_length() - 1


def uniform_state(n_qubits: int) -> QuantumState:
    """Product of (|0> + |1>)/sqrt(2) on every qubit."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    dim = 1 << n_qubits
    amp = 1.0 / math.sqrt(dim)
    return QuantumState(np.full(dim, amp, dtype=np.complex128))


def diagonal_energies(problem: IsingProblem) -> np.ndarray:
    """Energy of every basis state under the diagonal part sum J zz + sum h z."""
    dim = 1 << problem.n_qubits
    bits = (np.arange(dim)[:, None] >> np.arange(problem.n_qubits)) & 1
    z = 1.0 - 2.0 * bits
    energies = z @ problem.fields
    if problem.edges:
        l_idx = np.array([e[0] for e in problem.edges])
        m_idx = np.array([e[1] for e in problem.edges])
        energies = energies + (z[:, l_idx] * z[:, m_idx]) @ problem.couplings
    return energies


def diagonal_ground_states(problem: IsingProblem) -> set[int]:
    """Basis indices minimizing the diagonal Ising energy."""
    energies = diagonal_energies(problem)
    return set(int(b) for b in np.flatnonzero(energies == energies.min()))


def hamiltonian_at(problem: IsingProblem, schedule: AnnealSchedule, s: float,
                   scale: float = 1.0) -> sp.csr_matrix:
    """Sparse Hamiltonian at anneal position s.

    Diagonal from the Ising problem, off-diagonal entries between basis
    states at Hamming distance 1 from the transverse field.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    if scale <= 0:
        raise ValueError("scale must be > 0")
    a, b = schedule.coefficients(np.array([s]))
    a, b = float(a[0]), float(b[0])
    n = problem.n_qubits
    dim = 1 << n
    h = sp.diags(scale * 0.5 * b * diagonal_energies(problem), format="csr",
                 dtype=np.complex128)
    if a != 0.0:
        rows = np.repeat(np.arange(dim), n)
        cols = (np.arange(dim)[:, None] ^ (1 << np.arange(n))).ravel()
        data = np.full(dim * n, -scale * 0.5 * a, dtype=np.complex128)
        h = h + sp.csr_matrix((data, (rows, cols)), shape=(dim, dim))
    return h


def _stage_coefficients(schedule, n_steps, scale):
    """Kernel coefficient tables on the half-step grid s_j = j / (2 n_steps)."""
    s = np.arange(2 * n_steps + 1, dtype=float) / (2 * n_steps)
    a, b = schedule.coefficients(s)
    return -scale * 0.5 * a, scale * 0.5 * b


def _resolve_steps(T, dt_target):
    if T <= 0:
        raise ValueError("T must be > 0")
    if dt_target is None:
        return DEFAULT_STEPS
    if dt_target <= 0:
        raise ValueError("dt_target must be > 0")
    return max(1, int(math.ceil(T / dt_target)))


def _evolve_columns(diag_rows, schedule, T, scale, n_steps, threads):
    """Evolve a stack of diagonals; returns (amplitudes (B, dim), drifts (B,)).

    Each column is an independent state, so chunking and thread scheduling
    cannot change the result.
    """
    n_problems, dim = diag_rows.shape
    dt = T / n_steps
    ax, bz = _stage_coefficients(schedule, n_steps, scale)
    amp0 = 1.0 / math.sqrt(dim)

    max_cols = max(1, min(_MAX_BLOCK_COLS, _MAX_BLOCK_ELEMS // dim))
    if threads > 1:
        max_cols = min(max_cols, max(1, math.ceil(n_problems / (threads * 4))))
    spans = [(a, min(a + max_cols, n_problems)) for a in range(0, n_problems, max_cols)]

    out = np.empty((n_problems, dim), dtype=np.complex128)
    drifts = np.empty(n_problems)

    def run_block(span):
        lo, hi = span
        psi = np.full((dim, hi - lo), amp0, dtype=np.complex128)
        dg = np.ascontiguousarray(diag_rows[lo:hi].T)
        norms = np.empty(hi - lo)
        bad = kernels.rk4_evolve_batch(psi, dg, ax, bz, dt, norms)
        if bad >= 0:
            raise NumericalError(f"non-finite amplitudes at integration step {bad}")
        return span, psi, norms

    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_block, spans))
    else:
        results = [run_block(span) for span in spans]

    for (lo, hi), psi, norms in results:
        block = psi.T
        drift = np.abs(norms - 1.0)
        renorm = drift > RENORM_THRESHOLD
        if np.any(renorm):
            block = block.copy()
            block[renorm] /= np.sqrt(norms[renorm])[:, None]
        out[lo:hi] = block
        drifts[lo:hi] = drift
    return out, drifts


def evolve(problem: IsingProblem, schedule: AnnealSchedule, T: float,
           scale: float = 1.0, dt_target: float | None = None) -> QuantumState:
    """RK4 integration from the uniform superposition to the final state.

    Step count is ceil(T / dt_target) with dt_target defaulting to
    T / 10,000; the Hamiltonian is evaluated at the RK4 stage times.  The
    state is renormalized only if the squared-norm drift exceeds 1e-12;
    the drift before renormalization is recorded on the result.
    """
    return evolve_many([problem], schedule, T, scale=scale, dt_target=dt_target)[0]


def evolve_many(problems, schedule, T, scale=1.0, dt_target=None,
                threads: int = 1) -> list[QuantumState]:
    """Evolve several problems of equal size under one schedule and time."""
    if not problems:
        return []
    if scale <= 0:
        raise ValueError("scale must be > 0")
    n = problems[0].n_qubits
    if n > MAX_QUBITS:
        raise ValueError(f"n_qubits must be <= {MAX_QUBITS}")
    if any(p.n_qubits != n for p in problems):
        raise ValueError("all problems in a batch must have the same n_qubits")
    n_steps = _resolve_steps(T, dt_target)
    diag_rows = np.stack([diagonal_energies(p) for p in problems])
    amps, drifts = _evolve_columns(diag_rows, schedule, T, scale, n_steps, threads)
    return [QuantumState(amps[i], norm_drift=float(drifts[i]), n_steps=n_steps)
            for i in range(len(problems))]


def evolve_oracle(problem: IsingProblem, schedule: AnnealSchedule, T: float,
                  scale: float = 1.0, n_steps: int = ORACLE_MIN_STEPS) -> QuantumState:
    """Brute-force reference propagation, independent of the RK4 path.

    Splits [0, T] into n_steps slices and applies the exact exponential of
    each slice's dense midpoint Hamiltonian, obtained by Hermitian
    eigendecomposition.  Restricted to small systems.
    """
    n = problem.n_qubits
    if n > ORACLE_MAX_QUBITS:
        raise ValueError(f"oracle limited to n_qubits <= {ORACLE_MAX_QUBITS}")
    if n_steps < ORACLE_MIN_STEPS:
        raise ValueError(f"oracle requires n_steps >= {ORACLE_MIN_STEPS}")
    if T <= 0:
        raise ValueError("T must be > 0")
    if scale <= 0:
        raise ValueError("scale must be > 0")

    dim = 1 << n
    dt = T / n_steps
    diag = diagonal_energies(problem)
    x_sum = np.zeros((dim, dim))
    idx = np.arange(dim)
    for l in range(n):
        x_sum[idx, idx ^ (1 << l)] = 1.0
    diag_idx = (idx, idx)

    psi = uniform_state(n).amplitudes
    chunk = 8192
    for start in range(0, n_steps, chunk):
        stop = min(start + chunk, n_steps)
        mids = (np.arange(start, stop) + 0.5) / n_steps
        a, b = schedule.coefficients(mids)
        h_block = (-scale * 0.5 * a)[:, None, None] * x_sum
        h_block[(slice(None),) + diag_idx] += (scale * 0.5 * b)[:, None] * diag
        w, v = np.linalg.eigh(h_block)
        phases = np.exp(-1j * w * dt)
        u_block = (v * phases[:, None, :]) @ np.conj(np.swapaxes(v, 1, 2))
        for u in u_block:
            psi = u @ psi
    norm_sq = float(np.real(np.vdot(psi, psi)))
    drift = abs(norm_sq - 1.0)
    if drift > RENORM_THRESHOLD:
        psi = psi / math.sqrt(norm_sq)
    return QuantumState(psi, norm_drift=drift, n_steps=n_steps)


def output_distribution(state: QuantumState) -> ProbDist:
    """Squared amplitudes of a normalized state as an exact distribution."""
    amps = state.amplitudes
    probs = amps.real ** 2 + amps.imag ** 2
    if abs(float(probs.sum()) - 1.0) > 1e-6:
        raise ValueError("state is not normalized")
    return ProbDist(probs, source="exact")
