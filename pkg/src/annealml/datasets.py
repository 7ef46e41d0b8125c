"""Dataset ingestion: Digits CSV and MNIST IDX files, splits, subsampling."""

from __future__ import annotations

import gzip
import struct

import numpy as np

from .errors import ConfigError, DataError

MNIST_IMAGE_MAGIC = 2051
MNIST_LABEL_MAGIC = 2049

DIGITS_COLUMNS = 65          # 64 pixel intensities then the label
DIGITS_TRAIN_SIZE = 1347
DIGITS_TEST_SIZE = 450


def load_digits_csv(path):
    """Read an 8x8 digits file: 64 pixel columns plus a 0-9 label column.

    A non-numeric first line is treated as a header.  Returns
    (images (n, 64) float, labels (n,) int).
    """
    rows = []
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != DIGITS_COLUMNS:
                raise DataError(
                    f"{path}: line {lineno}: expected {DIGITS_COLUMNS} columns, "
                    f"got {len(cells)}"
                )
            try:
                values = [float(c) for c in cells]
            except ValueError:
                if lineno == 1:
                    continue    # header line
                raise DataError(f"{path}: line {lineno}: non-numeric value") from None
            label = values[-1]
            if label != int(label) or not 0 <= label <= 9:
                raise DataError(f"{path}: line {lineno}: label must be an integer 0-9")
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    return data[:, :64], data[:, 64].astype(int)


def write_digits_csv(path, images, labels):
    images = np.asarray(images, dtype=float)
    labels = np.asarray(labels, dtype=int)
    with open(path, "w", encoding="utf-8") as fh:
        for row, label in zip(images, labels):
            fh.write(",".join(repr(float(v)) for v in row) + f",{int(label)}\n")


def split_train_test(n: int, n_train: int, n_test: int, seed: int):
    """Deterministic shuffle split; returns (train_idx, test_idx)."""
    if n_train + n_test > n:
        raise ConfigError(
            f"split sizes {n_train}+{n_test} exceed dataset size {n}"
        )
    perm = np.random.default_rng(seed).permutation(n)
    return perm[:n_train], perm[n_train : n_train + n_test]


def _open_maybe_gzip(path):
    try:
        with open(path, "rb") as fh:
            head = fh.read(2)
        if head == b"\x1f\x8b":
            return gzip.open(path, "rb")
        return open(path, "rb")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None


def _read_be32(fh, path, what):
    data = fh.read(4)
    if len(data) != 4:
        raise DataError(f"{path}: truncated while reading {what}")
    return struct.unpack(">i", data)[0]


def load_mnist_idx(images_path, labels_path):
    """Read an IDX image/label file pair (optionally gzip-compressed).

    Pixel bytes are scaled to [0, 1]; returns (images (n, rows*cols),
    labels (n,)).
    """
    with _open_maybe_gzip(images_path) as fh:
        magic = _read_be32(fh, images_path, "magic")
        if magic != MNIST_IMAGE_MAGIC:
            raise DataError(
                f"{images_path}: expected image magic {MNIST_IMAGE_MAGIC}, got {magic}"
            )
        count = _read_be32(fh, images_path, "item count")
        n_rows = _read_be32(fh, images_path, "row count")
        n_cols = _read_be32(fh, images_path, "column count")
        payload = fh.read(count * n_rows * n_cols + 1)
        if len(payload) != count * n_rows * n_cols:
            raise DataError(
                f"{images_path}: payload has {len(payload)} bytes, "
                f"expected {count * n_rows * n_cols}"
            )
        images = np.frombuffer(payload, dtype=np.uint8).reshape(count, n_rows * n_cols)

    with _open_maybe_gzip(labels_path) as fh:
        magic = _read_be32(fh, labels_path, "magic")
        if magic != MNIST_LABEL_MAGIC:
            raise DataError(
                f"{labels_path}: expected label magic {MNIST_LABEL_MAGIC}, got {magic}"
            )
        label_count = _read_be32(fh, labels_path, "item count")
        payload = fh.read(label_count + 1)
        if len(payload) != label_count:
            raise DataError(f"{labels_path}: truncated label payload")
        labels = np.frombuffer(payload, dtype=np.uint8).astype(int)

    if label_count != count:
        raise DataError(
            f"image count {count} != label count {label_count} "
            f"({images_path} vs {labels_path})"
        )
    return images.astype(float) / 255.0, labels


def write_mnist_idx(images_path, labels_path, images, labels):
    """Write uint8 images (n, rows, cols) and labels as IDX files."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    n, n_rows, n_cols = images.shape
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">iiii", MNIST_IMAGE_MAGIC, n, n_rows, n_cols))
        fh.write(images.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">ii", MNIST_LABEL_MAGIC, n))
        fh.write(labels.tobytes())


def stratified_subsample(labels, n: int, seed: int) -> np.ndarray:
    """Deterministic label-stratified subsample of size n; sorted indices.

    Per-class counts are allocated proportionally (largest remainder),
    capped by availability.
    """
    labels = np.asarray(labels, dtype=int)
    total = labels.shape[0]
    if n > total:
        raise ConfigError(f"subsample size {n} exceeds pool size {total}")
    classes, counts = np.unique(labels, return_counts=True)
    exact = n * counts / total
    alloc = np.floor(exact).astype(int)
    remainders = exact - alloc
    # distribute the leftovers by largest remainder, ties toward lower class
    order = np.lexsort((classes, -remainders))
    i = 0
    while alloc.sum() < n:
        c = order[i % classes.shape[0]]
        if alloc[c] < counts[c]:
            alloc[c] += 1
        i += 1
    rng = np.random.default_rng(seed)
    picks = []
    for cls, take in zip(classes, alloc):
        pool = np.flatnonzero(labels == cls)
        picks.append(rng.choice(pool, size=take, replace=False))
    return np.sort(np.concatenate(picks))


def fetch_sklearn_digits():
    """The canonical 1,797-image digits set bundled with scikit-learn."""
    try:
        from sklearn.datasets import load_digits
    except ImportError:
        raise DataError(
            "scikit-learn is required to fetch the bundled digits set; "
            "install annealml[datasets] or point the config at a digits CSV"
        ) from None
    bunch = load_digits()
    return bunch.data, bunch.target.astype(int)
