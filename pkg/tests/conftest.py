import numpy as np
import pytest

from annealml.datasets import fetch_sklearn_digits, write_digits_csv, write_mnist_idx
from annealml.dynamics import AnnealSchedule, IsingProblem


@pytest.fixture(scope="session")
def digits_data():
    return fetch_sklearn_digits()


@pytest.fixture(scope="session")
def digits_csv(tmp_path_factory, digits_data):
    images, labels = digits_data
    path = tmp_path_factory.mktemp("digits") / "digits.csv"
    write_digits_csv(path, images, labels)
    return str(path)


@pytest.fixture(scope="session")
def linear_schedule():
    return AnnealSchedule.linear()


@pytest.fixture(scope="session")
def tabulated_schedule():
    """Smooth nonlinear schedule covering s in [0, 1], dimensionless units."""
    s = np.linspace(0.0, 1.0, 21)
    return AnnealSchedule.from_table(s, 2.0 * (1.0 - s) ** 2, 2.0 * s**2,
                                     angular_factor=1.0)


def make_chain(n_qubits, seed, coupling_scale=1.0):
    """Seeded random chain instance with |J|, |h| <= coupling_scale."""
    rng = np.random.default_rng(seed)
    edges = tuple((l, l + 1) for l in range(n_qubits - 1))
    return IsingProblem(
        n_qubits,
        edges,
        coupling_scale * rng.uniform(-1, 1, n_qubits - 1),
        coupling_scale * rng.uniform(-1, 1, n_qubits),
    )


def _upscale_28(image8):
    """8x8 digit (0..16) to a 24x24 block on a 28x28 canvas, uint8 0..240."""
    block = np.kron(image8.reshape(8, 8), np.ones((3, 3)))
    return (block * 15.0).astype(np.uint8)


def _place(block, dy, dx):
    canvas = np.zeros((28, 28), dtype=np.uint8)
    canvas[2 + dy : 26 + dy, 2 + dx : 26 + dx] = block
    return canvas


_TRAIN_OFFSETS = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (2, 0), (0, 2)]
_TEST_OFFSETS = [(0, 0), (-2, 0), (0, -2)]


@pytest.fixture(scope="session")
def mnist_standin(tmp_path_factory, digits_data):
    """28x28 IDX corpus built from the bundled digits set.

    Base images are split before augmentation so train and test never
    share shifted variants of the same source image.  Stands in for
    MNIST when the real IDX files are unavailable.
    """
    images, labels = digits_data
    rng = np.random.default_rng(2026)
    order = rng.permutation(images.shape[0])
    train_base, test_base = order[:1437], order[1437:]

    def build(base_idx, offsets):
        imgs, labs = [], []
        for i in base_idx:
            block = _upscale_28(images[i])
            for dy, dx in offsets:
                imgs.append(_place(block, dy, dx))
                labs.append(labels[i])
        return np.stack(imgs), np.asarray(labs)

    train_x, train_y = build(train_base, _TRAIN_OFFSETS)
    test_x, test_y = build(test_base, _TEST_OFFSETS)

    root = tmp_path_factory.mktemp("mnist_standin")
    paths = {
        "train_images": str(root / "train-images-idx3-ubyte"),
        "train_labels": str(root / "train-labels-idx1-ubyte"),
        "test_images": str(root / "t10k-images-idx3-ubyte"),
        "test_labels": str(root / "t10k-labels-idx1-ubyte"),
    }
    write_mnist_idx(paths["train_images"], paths["train_labels"], train_x, train_y)
    write_mnist_idx(paths["test_images"], paths["test_labels"], test_x, test_y)
    return paths
