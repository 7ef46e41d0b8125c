"""End-to-end experiment pipelines: encode, evolve, sample, train, report.

A sweep iterates the cross product of (n_qubits, gamma, T, shots,
repetition), reusing cached exact distributions across shot counts and
repetitions.  All randomness is derived from the master seed plus
explicit stream indices, so results are independent of execution order
and identical across re-runs.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .datasets import (
    DIGITS_TEST_SIZE,
    DIGITS_TRAIN_SIZE,
    load_digits_csv,
    load_mnist_idx,
    split_train_test,
    stratified_subsample,
)
from .diagnostics import apr, lt_scan, rescaled_time_table
from .dynamics import ProbDist, evolve_many, output_distribution
from .encoding import (
    CANONICAL_DIGITS_EDGES,
    Normalizer,
    encode_digits,
    encode_mnist_chain,
    pca_fit,
    pca_transform,
)
from .errors import AnnealmlError, ConfigError
from .learning import fit_and_score, linear_baseline
from .sampling import NoiseConfig, ShotConfig, ensemble_distribution, sample_shots

N_CLASSES = 10

# substream identifiers (master seed, stream, ...indices)
_STREAM_SHOTS = 1
_STREAM_NOISE = 2
_STREAM_TRAIN = 3
_STREAM_SPLIT = 4

RESULT_COLUMNS = [
    "config_hash", "dataset", "sweep", "n_qubits", "gamma", "T", "shots",
    "noise_amplitude", "noise_realizations", "repetition",
    "train_accuracy", "test_accuracy",
    "baseline_train_accuracy", "baseline_test_accuracy",
    "apr_train", "wall_time_s", "error",
]


def derive_seed(master: int, *key: int) -> int:
    """Child seed for (master, stream indices); stable across runs."""
    seq = np.random.SeedSequence(master, spawn_key=tuple(int(k) for k in key))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass
class DataBundle:
    train_images: np.ndarray
    train_labels: np.ndarray
    test_images: np.ndarray
    test_labels: np.ndarray


@dataclass
class EncodedData:
    """Per-qubit-count encoding products shared by all sweep points."""

    n_qubits: int
    x_train: np.ndarray        # normalized features in [-1, 1]
    x_test: np.ndarray
    proj_train: np.ndarray     # raw PCA projections (baseline inputs)
    proj_test: np.ndarray
    pca: object
    normalizer: Normalizer


def load_bundle(cfg: ExperimentConfig) -> DataBundle:
    cfg.dataset_paths()
    if cfg.dataset == "digits":
        images, labels = load_digits_csv(cfg.digits_csv)
        n_train = cfg.train_size if cfg.train_size is not None else DIGITS_TRAIN_SIZE
        n_test = cfg.test_size if cfg.test_size is not None else DIGITS_TEST_SIZE
        tr, te = split_train_test(images.shape[0], n_train, n_test,
                                  derive_seed(cfg.seed, _STREAM_SPLIT, 0))
        return DataBundle(images[tr], labels[tr], images[te], labels[te])

    train_x, train_y = load_mnist_idx(cfg.mnist_train_images, cfg.mnist_train_labels)
    test_x, test_y = load_mnist_idx(cfg.mnist_test_images, cfg.mnist_test_labels)
    if cfg.subsample is not None:
        n_train, n_test = cfg.subsample
        tr = stratified_subsample(train_y, n_train, derive_seed(cfg.seed, _STREAM_SPLIT, 1))
        te = stratified_subsample(test_y, n_test, derive_seed(cfg.seed, _STREAM_SPLIT, 2))
        train_x, train_y = train_x[tr], train_y[tr]
        test_x, test_y = test_x[te], test_y[te]
    return DataBundle(train_x, train_y, test_x, test_y)


def resolved_edges(cfg: ExperimentConfig):
    if cfg.edges is None:
        return CANONICAL_DIGITS_EDGES
    return tuple((int(l), int(m)) for l, m in cfg.edges)


def encode_bundle(cfg: ExperimentConfig, bundle: DataBundle, n_qubits: int) -> EncodedData:
    """PCA (train-fit only) then min-max normalization into [-1, 1]."""
    if cfg.dataset == "digits":
        k = len(resolved_edges(cfg))
    else:
        k = 2 * n_qubits - 1
    pca = pca_fit(bundle.train_images, k)
    proj_train = pca_transform(pca, bundle.train_images)
    proj_test = pca_transform(pca, bundle.test_images)
    norm = Normalizer()
    x_train = norm.fit_transform(proj_train)
    x_test = norm.transform(proj_test)
    return EncodedData(n_qubits, x_train, x_test, proj_train, proj_test, pca, norm)


def build_problems(cfg: ExperimentConfig, encoded: EncodedData, gamma: float):
    if cfg.dataset == "digits":
        edges = resolved_edges(cfg)
        make = lambda x: encode_digits(x, gamma, edges=edges)
    else:
        n = encoded.n_qubits
        make = lambda x: encode_mnist_chain(gamma * x, n)
    train = [make(x) for x in encoded.x_train]
    test = [make(x) for x in encoded.x_test]
    return train, test


def compute_exact_dists(cfg: ExperimentConfig, problems, schedule, T: float) -> np.ndarray:
    """Exact output distributions, optionally noise-ensemble averaged."""
    if cfg.noise_amplitude > 0:
        rows = []
        for i, problem in enumerate(problems):
            noise = NoiseConfig(cfg.noise_amplitude, cfg.noise_realizations,
                                seed=derive_seed(cfg.seed, _STREAM_NOISE, i))
            rows.append(ensemble_distribution(problem, schedule, T, noise,
                                              scale=cfg.scale, dt_target=cfg.dt_target,
                                              threads=cfg.threads).probs)
        return np.stack(rows)
    states = evolve_many(problems, schedule, T, scale=cfg.scale,
                         dt_target=cfg.dt_target, threads=cfg.threads)
    return np.stack([output_distribution(s).probs for s in states])


def sample_features(cfg: ExperimentConfig, dists: np.ndarray, shots: int | None,
                    rep: int, index_offset: int) -> np.ndarray:
    """Shot-estimated (or exact) feature matrix from exact distributions."""
    if shots is None:
        return dists
    out = np.empty_like(dists)
    for i, probs in enumerate(dists):
        shot_cfg = ShotConfig(shots, seed=cfg.seed)
        sampled = sample_shots(ProbDist(probs), shot_cfg,
                               stream=(_STREAM_SHOTS, index_offset + i, rep))
        out[i] = sampled.probs
    return out


class SweepEngine:
    """Shared state for one sweep run: dataset, encodings, caches."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.schedule = cfg.make_schedule()
        self.bundle = load_bundle(cfg)
        self.encoded: dict[int, EncodedData] = {}
        self._dist_cache: dict[tuple, np.ndarray] = {}
        self._baseline_cache: dict[tuple, dict] = {}

    def encoded_for(self, n_qubits: int) -> EncodedData:
        if n_qubits not in self.encoded:
            self.encoded[n_qubits] = encode_bundle(self.cfg, self.bundle, n_qubits)
        return self.encoded[n_qubits]

    def hyper(self):
        cfg = self.cfg
        return dict(learning_rate=cfg.learning_rate, batch_size=cfg.batch_size,
                    epochs=cfg.epochs, epsilon=cfg.epsilon)

    def train_seed(self, rep: int) -> int:
        return derive_seed(self.cfg.seed, _STREAM_TRAIN, rep)

    def baseline(self, n_qubits: int, rep: int) -> dict:
        """Linear model on the raw PCA projections, one fit per (N, rep)."""
        key = (n_qubits, rep)
        if key not in self._baseline_cache:
            enc = self.encoded_for(n_qubits)
            self._baseline_cache[key] = linear_baseline(
                enc.proj_train, self.bundle.train_labels,
                enc.proj_test, self.bundle.test_labels,
                N_CLASSES, seed=self.train_seed(rep), **self.hyper(),
            )
        return self._baseline_cache[key]

    def distributions(self, n_qubits: int, gamma: float, T: float):
        """(train_dists, test_dists, apr_train), cached per sweep point."""
        key = (n_qubits, gamma, T)
        if self.cfg.cache and key in self._dist_cache:
            return self._dist_cache[key]
        enc = self.encoded_for(n_qubits)
        train_problems, test_problems = build_problems(self.cfg, enc, gamma)
        train_dists = compute_exact_dists(self.cfg, train_problems, self.schedule, T)
        test_dists = compute_exact_dists(self.cfg, test_problems, self.schedule, T)
        apr_train = apr(train_dists)
        value = (train_dists, test_dists, apr_train)
        if self.cfg.cache:
            self._dist_cache[key] = value
        return value

    def run(self, sweep_name: str) -> list[dict]:
        cfg = self.cfg
        rows = []
        for n_qubits in cfg.resolved_qubit_counts():
            for gamma in cfg.gammas:
                for T in cfg.t_grid:
                    try:
                        train_dists, test_dists, apr_train = self.distributions(
                            n_qubits, gamma, T)
                    except AnnealmlError as exc:
                        rows.append(self._error_row(sweep_name, n_qubits, gamma,
                                                    T, "", "", str(exc)))
                        continue
                    for shots in cfg.shots:
                        for rep in range(cfg.repetitions):
                            rows.append(self._score_point(
                                sweep_name, n_qubits, gamma, T, shots, rep,
                                train_dists, test_dists, apr_train))
        return rows

    def _score_point(self, sweep_name, n_qubits, gamma, T, shots, rep,
                     train_dists, test_dists, apr_train) -> dict:
        cfg = self.cfg
        started = time.perf_counter()
        try:
            n_train = train_dists.shape[0]
            feats_train = sample_features(cfg, train_dists, shots, rep, 0)
            feats_test = sample_features(cfg, test_dists, shots, rep, n_train)
            scored = fit_and_score(feats_train, self.bundle.train_labels,
                                   feats_test, self.bundle.test_labels,
                                   N_CLASSES, seed=self.train_seed(rep),
                                   **self.hyper())
            base = self.baseline(n_qubits, rep)
        except AnnealmlError as exc:
            return self._error_row(sweep_name, n_qubits, gamma, T, shots, rep,
                                   str(exc))
        return {
            "config_hash": cfg.config_hash(),
            "dataset": cfg.dataset,
            "sweep": sweep_name,
            "n_qubits": n_qubits,
            "gamma": gamma,
            "T": T,
            "shots": "" if shots is None else shots,
            "noise_amplitude": cfg.noise_amplitude,
            "noise_realizations": cfg.noise_realizations if cfg.noise_amplitude > 0 else 0,
            "repetition": rep,
            "train_accuracy": scored["train_accuracy"],
            "test_accuracy": scored["test_accuracy"],
            "baseline_train_accuracy": base["train_accuracy"],
            "baseline_test_accuracy": base["test_accuracy"],
            "apr_train": apr_train,
            "wall_time_s": time.perf_counter() - started,
            "error": "",
        }

    def _error_row(self, sweep_name, n_qubits, gamma, T, shots, rep, message) -> dict:
        cfg = self.cfg
        return {
            "config_hash": cfg.config_hash(),
            "dataset": cfg.dataset,
            "sweep": sweep_name,
            "n_qubits": n_qubits,
            "gamma": gamma,
            "T": T,
            "shots": "" if shots is None else shots,
            "noise_amplitude": cfg.noise_amplitude,
            "noise_realizations": cfg.noise_realizations if cfg.noise_amplitude > 0 else 0,
            "repetition": rep,
            "train_accuracy": "",
            "test_accuracy": "",
            "baseline_train_accuracy": "",
            "baseline_test_accuracy": "",
            "apr_train": "",
            "wall_time_s": "",
            "error": message,
        }


def run_sweep(cfg: ExperimentConfig, sweep_name: str = "time") -> list[dict]:
    return SweepEngine(cfg).run(sweep_name)


def _format_cell(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows(path, rows, columns=None):
    """UTF-8 CSV with a header row; floats via repr for byte stability."""
    columns = columns or RESULT_COLUMNS
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row[c]) for c in columns])


def read_rows(path) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def aggregate_rows(rows, group_by=("dataset", "n_qubits", "gamma", "T", "shots",
                                   "noise_amplitude")):
    """Mean/std of accuracies over repetitions for each sweep point."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        if row.get("error"):
            continue
        key = tuple(row[k] for k in group_by)
        groups.setdefault(key, []).append(row)
    out = []
    for key in sorted(groups, key=str):
        members = groups[key]
        summary = dict(zip(group_by, key))
        for col in ("train_accuracy", "test_accuracy", "baseline_test_accuracy",
                    "apr_train"):
            values = np.array([float(m[col]) for m in members])
            summary[f"{col}_mean"] = float(values.mean())
            summary[f"{col}_std"] = float(values.std())
        summary["n_repetitions"] = len(members)
        out.append(summary)
    return out


def run_apr_scan(cfg: ExperimentConfig):
    """Per-sample PR table plus APR curves and the collapse scores.

    Returns (sample_rows, summary_rows, collapse_by_gamma); collapse
    scores need at least two qubit counts.
    """
    engine = SweepEngine(cfg)
    sample_rows, summary_rows = [], []
    curves: dict[float, dict[int, np.ndarray]] = {g: {} for g in cfg.gammas}
    for n_qubits in cfg.resolved_qubit_counts():
        enc = engine.encoded_for(n_qubits)
        for gamma in cfg.gammas:
            train_problems, _ = build_problems(cfg, enc, gamma)
            curve = []
            for T in cfg.t_grid:
                dists = compute_exact_dists(cfg, train_problems, engine.schedule, T)
                prs = 1.0 / np.einsum("ij,ij->i", dists, dists)
                sample_rows.extend(
                    {"n_qubits": n_qubits, "T": T, "gamma": gamma,
                     "sample_index": i, "pr": float(p)}
                    for i, p in enumerate(prs)
                )
                summary_rows.append({"n_qubits": n_qubits, "T": T, "gamma": gamma,
                                     "apr": float(prs.mean())})
                curve.append(float(prs.mean()))
            curves[gamma][n_qubits] = np.asarray(curve)
    collapse = {}
    if len(cfg.resolved_qubit_counts()) >= 2:
        for gamma, by_n in curves.items():
            collapse[gamma] = rescaled_time_table(np.asarray(cfg.t_grid), by_n)
    return sample_rows, summary_rows, collapse


def run_lt_scan(cfg: ExperimentConfig, reference_dists, n_images: int | None = None):
    """Scan cfg.t_grid for the simulator time best matching the references.

    reference_dists: (n, 2^N) array aligned with the first n training
    images at the first configured gamma.
    """
    engine = SweepEngine(cfg)
    enc = engine.encoded_for(cfg.resolved_qubit_counts()[0])
    gamma = cfg.gammas[0]
    train_problems, _ = build_problems(cfg, enc, gamma)
    refs = np.asarray(reference_dists, dtype=float)
    if n_images is not None:
        refs = refs[:n_images]
    if refs.shape[0] > len(train_problems):
        raise ConfigError("more reference distributions than training images")
    problems = train_problems[: refs.shape[0]]
    return lt_scan(refs, problems, engine.schedule, cfg.t_grid,
                   scale=cfg.scale, dt_target=cfg.dt_target, threads=cfg.threads)


def synthesize_reference(cfg: ExperimentConfig, t_hidden: float,
                         shots: int | None = 10_000, scale_factor: float = 1.0,
                         n_images: int = 100) -> np.ndarray:
    """Simulator-generated reference distributions for scan self-tests.

    scale_factor < 1 generates dynamics effectively slower than the
    labeled time, mimicking references whose nominal time overstates the
    dynamics they actually contain.
    """
    engine = SweepEngine(cfg)
    enc = engine.encoded_for(cfg.resolved_qubit_counts()[0])
    gamma = cfg.gammas[0]
    train_problems, _ = build_problems(cfg, enc, gamma)
    problems = train_problems[:n_images]
    states = evolve_many(problems, engine.schedule, t_hidden,
                         scale=cfg.scale * scale_factor,
                         dt_target=cfg.dt_target, threads=cfg.threads)
    dists = np.stack([output_distribution(s).probs for s in states])
    if shots is None:
        return dists
    out = np.empty_like(dists)
    for i, probs in enumerate(dists):
        out[i] = sample_shots(ProbDist(probs), ShotConfig(shots, seed=cfg.seed),
                              stream=(_STREAM_SHOTS, i, 0)).probs
    return out
