"""Experiment configuration: a single JSON document with defaulted fields.

Every field has a default except the dataset paths.  The config hash
covers the semantic fields only (not output location, thread count, or
caching), so re-runs of the same experiment are identifiable.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

from .dynamics import AnnealSchedule
from .errors import ConfigError

_NON_SEMANTIC_FIELDS = {"out_dir", "threads", "cache"}


@dataclass
class ExperimentConfig:
    dataset: str = "digits"                    # "digits" | "mnist"
    digits_csv: str | None = None
    mnist_train_images: str | None = None
    mnist_train_labels: str | None = None
    mnist_test_images: str | None = None
    mnist_test_labels: str | None = None

    n_qubits: int = 8
    qubit_counts: list[int] | None = None      # multi-N scans (mnist chains)
    edges: list[list[int]] | None = None       # digits graph override

    schedule: str = "linear"                   # "linear" or a schedule CSV path
    angular_factor: float = 2.0 * math.pi
    t_grid: list[float] = field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0, 8.0])
    gammas: list[float] = field(default_factory=lambda: [0.25])
    scale: float = 1.0
    dt_target: float | None = None             # None -> T / 10,000

    shots: list[int | None] = field(default_factory=lambda: [1000])  # None -> exact
    noise_amplitude: float = 0.0
    noise_realizations: int = 100
    repetitions: int = 1

    train_size: int | None = None              # None -> dataset default
    test_size: int | None = None
    subsample: list[int] | None = None         # [n_train, n_test], mnist only

    learning_rate: float = 0.01
    batch_size: int = 32
    epochs: int = 200
    epsilon: float = 1e-8

    seed: int = 0
    out_dir: str = "results"
    threads: int = 1
    cache: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.dataset not in ("digits", "mnist"):
            raise ConfigError(f"unknown dataset {self.dataset!r}")
        if self.dataset == "digits" and self.n_qubits != 8:
            raise ConfigError("the digits pipeline runs on the fixed 8-qubit graph")
        if not self.t_grid:
            raise ConfigError("t_grid must not be empty")
        if any(t <= 0 for t in self.t_grid):
            raise ConfigError("annealing times must be positive")
        if sorted(self.t_grid) != list(self.t_grid) or len(set(self.t_grid)) != len(self.t_grid):
            raise ConfigError("t_grid must be strictly increasing")
        if not self.gammas:
            raise ConfigError("gammas must not be empty")
        if any(not 0.0 <= g <= 1.0 for g in self.gammas):
            raise ConfigError("gamma values must lie in [0, 1]")
        if not self.shots:
            raise ConfigError("shots list must not be empty")
        if any(m is not None and m < 1 for m in self.shots):
            raise ConfigError("shot counts must be >= 1 (or null for exact)")
        if self.noise_amplitude < 0:
            raise ConfigError("noise amplitude must be >= 0")
        if self.noise_realizations < 1:
            raise ConfigError("need at least one noise realization")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.subsample is not None:
            if self.dataset != "mnist":
                raise ConfigError("subsample applies to the mnist dataset only")
            if len(self.subsample) != 2 or any(s < 1 for s in self.subsample):
                raise ConfigError("subsample must be [n_train, n_test] positive counts")
        if self.qubit_counts is not None:
            if self.dataset != "mnist":
                raise ConfigError("qubit_counts scans apply to the mnist chain only")
            if len(self.qubit_counts) < 1:
                raise ConfigError("qubit_counts must not be empty")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.dt_target is not None and self.dt_target <= 0:
            raise ConfigError("dt_target must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(doc, origin=str(path))

    @classmethod
    def from_dict(cls, doc: dict, origin: str = "config") -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"{origin}: unknown fields {sorted(unknown)}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(f"{origin}: {exc}") from None

    def resolved_qubit_counts(self) -> list[int]:
        return list(self.qubit_counts) if self.qubit_counts else [self.n_qubits]

    def make_schedule(self) -> AnnealSchedule:
        if self.schedule == "linear":
            return AnnealSchedule.linear()
        return AnnealSchedule.from_csv(self.schedule, angular_factor=self.angular_factor)

    def dataset_paths(self) -> list[str]:
        if self.dataset == "digits":
            if not self.digits_csv:
                raise ConfigError("digits_csv path is required")
            return [self.digits_csv]
        missing = [
            name
            for name in ("mnist_train_images", "mnist_train_labels",
                         "mnist_test_images", "mnist_test_labels")
            if not getattr(self, name)
        ]
        if missing:
            raise ConfigError(f"mnist paths are required: missing {missing}")
        return [self.mnist_train_images, self.mnist_train_labels,
                self.mnist_test_images, self.mnist_test_labels]

    def config_hash(self) -> str:
        doc = asdict(self)
        for key in _NON_SEMANTIC_FIELDS:
            doc.pop(key, None)
        canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:12]

    def to_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=1)
