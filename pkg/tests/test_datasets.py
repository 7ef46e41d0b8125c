import gzip

import numpy as np
import pytest

from annealml.datasets import (
    load_digits_csv,
    load_mnist_idx,
    split_train_test,
    stratified_subsample,
    write_digits_csv,
    write_mnist_idx,
)
from annealml.errors import ConfigError, DataError


class TestDigitsCsv:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        images = rng.uniform(0, 16, size=(12, 64)).round(3)
        labels = rng.integers(0, 10, 12)
        path = tmp_path / "d.csv"
        write_digits_csv(path, images, labels)
        x, y = load_digits_csv(path)
        assert np.array_equal(x, images)
        assert np.array_equal(y, labels)

    def test_canonical_file_shape(self, digits_csv):
        images, labels = load_digits_csv(digits_csv)
        assert images.shape == (1797, 64)
        assert set(np.unique(labels)) == set(range(10))

    def test_header_autodetected(self, tmp_path):
        path = tmp_path / "h.csv"
        header = ",".join(f"p{i}" for i in range(64)) + ",label\n"
        row = ",".join(["1.0"] * 64) + ",3\n"
        path.write_text(header + row)
        images, labels = load_digits_csv(path)
        assert images.shape == (1, 64)
        assert labels[0] == 3

    def test_wrong_column_count(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text(",".join(["1"] * 64) + "\n")
        with pytest.raises(DataError, match="line 1"):
            load_digits_csv(path)

    def test_malformed_row_names_line(self, tmp_path):
        path = tmp_path / "m.csv"
        good = ",".join(["1.0"] * 64) + ",3\n"
        bad = ",".join(["1.0"] * 63 + ["oops"]) + ",3\n"
        path.write_text(good + bad)
        with pytest.raises(DataError, match="line 2"):
            load_digits_csv(path)

    def test_label_out_of_range(self, tmp_path):
        path = tmp_path / "l.csv"
        path.write_text(",".join(["1.0"] * 64) + ",10\n")
        with pytest.raises(DataError):
            load_digits_csv(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("")
        with pytest.raises(DataError):
            load_digits_csv(path)


class TestSplit:
    def test_canonical_split_sizes(self, digits_csv):
        images, _ = load_digits_csv(digits_csv)
        tr, te = split_train_test(images.shape[0], 1347, 450, seed=0)
        assert tr.shape[0] == 1347 and te.shape[0] == 450
        assert len(set(tr) | set(te)) == 1797   # disjoint, covering

    def test_deterministic(self):
        a = split_train_test(100, 60, 20, seed=5)
        b = split_train_test(100, 60, 20, seed=5)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_oversized_split_rejected(self):
        with pytest.raises(ConfigError):
            split_train_test(100, 90, 20, seed=0)


class TestMnistIdx:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(1)
        images = rng.integers(0, 256, size=(7, 28, 28), dtype=np.uint8)
        labels = rng.integers(0, 10, 7, dtype=np.uint8)
        ip, lp = tmp_path / "img", tmp_path / "lab"
        write_mnist_idx(ip, lp, images, labels)
        x, y = load_mnist_idx(ip, lp)
        assert x.shape == (7, 784)
        assert np.array_equal(y, labels)
        assert np.max(x) <= 1.0 and np.min(x) >= 0.0
        assert np.array_equal((x * 255).astype(np.uint8).reshape(7, 28, 28), images)

    def test_gzip_supported(self, tmp_path):
        rng = np.random.default_rng(2)
        images = rng.integers(0, 256, size=(3, 4, 4), dtype=np.uint8)
        labels = np.array([1, 2, 3], dtype=np.uint8)
        ip, lp = tmp_path / "img", tmp_path / "lab"
        write_mnist_idx(ip, lp, images, labels)
        for path in (ip, lp):
            gz = path.with_suffix(".gz")
            gz.write_bytes(gzip.compress(path.read_bytes()))
        x, y = load_mnist_idx(ip.with_suffix(".gz"), lp.with_suffix(".gz"))
        assert x.shape == (3, 16)
        assert np.array_equal(y, labels)

    def test_magic_mismatch(self, tmp_path):
        rng = np.random.default_rng(3)
        images = rng.integers(0, 256, size=(2, 2, 2), dtype=np.uint8)
        labels = np.array([0, 1], dtype=np.uint8)
        ip, lp = tmp_path / "img", tmp_path / "lab"
        write_mnist_idx(ip, lp, images, labels)
        with pytest.raises(DataError, match="magic"):
            load_mnist_idx(lp, ip)   # label file supplied as images

    def test_truncated_payload(self, tmp_path):
        rng = np.random.default_rng(4)
        images = rng.integers(0, 256, size=(4, 3, 3), dtype=np.uint8)
        labels = np.array([0, 1, 2, 3], dtype=np.uint8)
        ip, lp = tmp_path / "img", tmp_path / "lab"
        write_mnist_idx(ip, lp, images, labels)
        ip.write_bytes(ip.read_bytes()[:-5])
        with pytest.raises(DataError, match="payload"):
            load_mnist_idx(ip, lp)

    def test_count_mismatch(self, tmp_path):
        rng = np.random.default_rng(5)
        ip, lp = tmp_path / "img", tmp_path / "lab"
        write_mnist_idx(ip, lp,
                        rng.integers(0, 256, size=(3, 2, 2), dtype=np.uint8),
                        np.zeros(3, dtype=np.uint8))
        ip2, lp2 = tmp_path / "img2", tmp_path / "lab2"
        write_mnist_idx(ip2, lp2,
                        rng.integers(0, 256, size=(4, 2, 2), dtype=np.uint8),
                        np.zeros(4, dtype=np.uint8))
        with pytest.raises(DataError, match="count"):
            load_mnist_idx(ip, lp2)


class TestStratifiedSubsample:
    def test_deterministic(self):
        labels = np.repeat(np.arange(10), 50)
        a = stratified_subsample(labels, 100, seed=7)
        b = stratified_subsample(labels, 100, seed=7)
        assert np.array_equal(a, b)

    def test_stratification_proportional(self):
        labels = np.concatenate([np.zeros(300, dtype=int), np.ones(100, dtype=int)])
        idx = stratified_subsample(labels, 40, seed=8)
        assert idx.shape[0] == 40
        taken = labels[idx]
        assert np.sum(taken == 0) == 30
        assert np.sum(taken == 1) == 10

    def test_oversample_rejected(self):
        with pytest.raises(ConfigError):
            stratified_subsample(np.zeros(5, dtype=int), 6, seed=0)

    def test_standin_corpus_loads(self, mnist_standin):
        x, y = load_mnist_idx(mnist_standin["train_images"],
                              mnist_standin["train_labels"])
        assert x.shape[1] == 784
        assert x.shape[0] >= 6000
        xt, yt = load_mnist_idx(mnist_standin["test_images"],
                                mnist_standin["test_labels"])
        assert xt.shape[0] >= 1000
        assert set(np.unique(y)) == set(range(10))
