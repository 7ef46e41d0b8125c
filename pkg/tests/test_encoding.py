import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annealml.dynamics import diagonal_ground_states
from annealml.encoding import (
    CANONICAL_DIGITS_EDGES,
    Normalizer,
    encode_digits,
    encode_mnist_chain,
    load_encoder,
    pca_fit,
    pca_transform,
    save_encoder,
)
from annealml.errors import EncodingError


def eigh_pca_oracle(data, k):
    """Reference: explicit covariance matrix + Hermitian eigendecomposition."""
    data = np.asarray(data, dtype=float)
    centered = data - data.mean(axis=0)
    cov = centered.T @ centered / data.shape[0]
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals, kind="stable")[::-1]
    comps = eigvecs[:, order[:k]].T.copy()
    for row in comps:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0:
            row *= -1.0
    return comps, eigvals[order[:k]]


class TestPca:
    def test_collinear_data(self):
        rng = np.random.default_rng(0)
        t = rng.normal(size=40)
        data = np.outer(t, [1.0, 1.0]) / np.sqrt(2)
        model = pca_fit(data, 1)
        direction = np.array([1.0, 1.0]) / np.sqrt(2)
        assert np.allclose(np.abs(model.components[0] @ direction), 1.0)
        with pytest.warns(RuntimeWarning):   # collinear: rank 1 < k = 2
            full = pca_fit(data, 2)
        assert full.explained_variance[1] == pytest.approx(0.0, abs=1e-20)

    def test_isotropic_variances_equal(self):
        rng = np.random.default_rng(1)
        base = rng.normal(size=(400, 3))
        # symmetrize so the sample covariance is exactly isotropic
        data = np.concatenate([base, -base])
        data = data @ np.linalg.inv(np.linalg.cholesky(np.cov(data.T, bias=True))).T
        model = pca_fit(data, 3)
        assert np.allclose(model.explained_variance, model.explained_variance[0])

    def test_matches_eigh_oracle(self):
        rng = np.random.default_rng(2)
        data = rng.normal(size=(50, 10)) @ np.diag(np.linspace(3, 0.5, 10))
        model = pca_fit(data, 5)
        comps, eigvals = eigh_pca_oracle(data, 5)
        assert np.max(np.abs(model.components - comps)) < 1e-8
        assert np.max(np.abs(model.explained_variance - eigvals)) < 1e-8

    def test_transform_trivials(self):
        rng = np.random.default_rng(3)
        data = rng.normal(size=(30, 4))
        model = pca_fit(data, 2)
        assert np.allclose(pca_transform(model, model.mean), 0.0)
        comps, _ = eigh_pca_oracle(data, 2)
        sample = rng.normal(size=4)
        expected = comps @ (sample - data.mean(axis=0))
        assert np.max(np.abs(pca_transform(model, sample) - expected)) < 1e-8

    def test_identity_components_passthrough(self):
        from annealml.encoding import PcaModel
        model = PcaModel(np.zeros(3), np.eye(3), np.ones(3))
        sample = np.array([0.4, -1.2, 2.0])
        assert np.array_equal(pca_transform(model, sample), sample)

    def test_rank_deficient_completion(self):
        rng = np.random.default_rng(4)
        t = rng.normal(size=(20, 1))
        data = t @ np.array([[1.0, 2.0, 0.0]])   # rank 1 in 3 dims
        with pytest.warns(RuntimeWarning):
            model = pca_fit(data, 3)
        assert model.rank_deficient
        assert np.allclose(model.components @ model.components.T, np.eye(3), atol=1e-9)

    def test_shape_errors(self):
        data = np.zeros((10, 3))
        with pytest.raises(ValueError):
            pca_fit(data, 0)
        with pytest.raises(ValueError):
            pca_fit(data, 4)
        with pytest.raises(ValueError):
            pca_fit(np.zeros((3, 5)), 3)   # n <= k
        model = pca_fit(np.random.default_rng(5).normal(size=(10, 3)), 2)
        with pytest.raises(ValueError):
            pca_transform(model, np.zeros(4))


class TestNormalizer:
    def test_endpoints_and_midpoint(self):
        norm = Normalizer()
        out = norm.fit_transform(np.array([[1.0], [3.0]]))
        assert np.array_equal(out.ravel(), [-1.0, 1.0])
        assert norm.transform(np.array([[2.0]]))[0, 0] == 0.0

    def test_constant_feature_maps_to_zero(self):
        norm = Normalizer()
        out = norm.fit_transform(np.array([[5.0, 1.0], [5.0, 2.0]]))
        assert np.all(out[:, 0] == 0.0)

    def test_clamping(self):
        norm = Normalizer()
        norm.fit_transform(np.array([[1.0], [3.0]]))
        assert norm.transform(np.array([[5.0]]))[0, 0] == 1.0
        assert norm.transform(np.array([[-5.0]]))[0, 0] == -1.0

    def test_transform_before_fit(self):
        with pytest.raises(RuntimeError):
            Normalizer().transform(np.zeros((1, 2)))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_output_always_bounded(self, seed):
        rng = np.random.default_rng(seed)
        train = rng.normal(size=(8, 3)) * rng.uniform(0, 100)
        test = rng.normal(size=(5, 3)) * 1000
        norm = Normalizer()
        assert np.all(np.abs(norm.fit_transform(train)) <= 1.0)
        assert np.all(np.abs(norm.transform(test)) <= 1.0)


class TestEncodeDigits:
    def test_canonical_graph_shape(self):
        assert len(CANONICAL_DIGITS_EDGES) == 20
        assert CANONICAL_DIGITS_EDGES[0] == (0, 4)
        assert CANONICAL_DIGITS_EDGES[15] == (3, 7)
        assert CANONICAL_DIGITS_EDGES[16:] == ((0, 1), (2, 3), (4, 5), (6, 7))

    def test_zero_vector(self):
        p = encode_digits(np.zeros(20), 0.5)
        assert np.all(p.couplings == 0.0)
        assert np.all(p.fields == 0.0)

    def test_first_edge_assignment(self):
        x = np.zeros(20)
        x[0] = 1.0
        p = encode_digits(x, 0.25)
        assert p.couplings[0] == 0.25
        assert p.edges[0] == (0, 4)
        assert np.all(p.couplings[1:] == 0.0)

    def test_gamma_bounds_couplings(self):
        rng = np.random.default_rng(7)
        x = rng.uniform(-1, 1, 20)
        p = encode_digits(x, 0.25)
        assert np.max(np.abs(p.couplings)) <= 0.25

    def test_no_longitudinal_fields(self):
        p = encode_digits(np.random.default_rng(8).uniform(-1, 1, 20), 1.0)
        assert np.all(p.fields == 0.0)

    def test_errors(self):
        with pytest.raises(EncodingError):
            encode_digits(np.zeros(19), 0.5)
        with pytest.raises(EncodingError):
            encode_digits(np.zeros(20), 1.5)
        with pytest.raises(EncodingError):
            encode_digits(np.full(20, 1.5), 1.0)   # gamma*x beyond [-1, 1]

    def test_custom_edge_list(self):
        edges = ((0, 1), (1, 2))
        p = encode_digits(np.array([0.5, -0.5]), 1.0, edges=edges, n_qubits=3)
        assert p.edges == edges
        assert np.array_equal(p.couplings, [0.5, -0.5])

    @given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
    @settings(max_examples=25, deadline=None)
    def test_encoded_always_in_hardware_range(self, seed, gamma):
        x = np.random.default_rng(seed).uniform(-1, 1, 20)
        p = encode_digits(x, gamma)
        assert np.all(np.abs(p.couplings) <= 1.0)


class TestEncodeChain:
    def test_index_map_three_qubits(self):
        p = encode_mnist_chain(np.array([0.1, 0.2, 0.3, 0.4, 0.5]), 3)
        assert p.edges == ((0, 1), (1, 2))
        assert np.array_equal(p.couplings, [0.1, 0.2])
        assert np.array_equal(p.fields, [0.3, 0.4, 0.5])

    def test_antiferromagnetic_bond(self):
        p = encode_mnist_chain(np.array([1.0, 0.0, 0.0]), 2)
        assert diagonal_ground_states(p) == {0b01, 0b10}

    def test_round_trip_exact(self):
        rng = np.random.default_rng(9)
        x = rng.uniform(-1, 1, 11)
        p = encode_mnist_chain(x, 6)
        assert np.array_equal(np.concatenate([p.couplings, p.fields]), x)

    def test_length_mismatch(self):
        with pytest.raises(EncodingError):
            encode_mnist_chain(np.zeros(4), 3)


class TestPersistence:
    def test_encoder_roundtrip(self, tmp_path):
        rng = np.random.default_rng(10)
        data = rng.normal(size=(40, 6))
        pca = pca_fit(data, 3)
        norm = Normalizer()
        norm.fit_transform(pca_transform(pca, data))
        path = tmp_path / "encoder.json"
        save_encoder(path, pca, norm, seed=123)
        pca2, norm2, seed = load_encoder(path)
        assert seed == 123
        assert np.array_equal(pca2.components, pca.components)
        assert np.array_equal(pca2.mean, pca.mean)
        assert np.array_equal(norm2.lo, norm.lo)
        sample = rng.normal(size=6)
        assert np.array_equal(
            norm2.transform(pca_transform(pca2, sample[None, :])),
            norm.transform(pca_transform(pca, sample[None, :])),
        )
        # document is valid JSON with the expected top-level fields
        doc = json.loads(path.read_text())
        assert set(doc) == {"pca", "normalizer", "seed"}

    def test_deterministic_encoding(self):
        rng = np.random.default_rng(11)
        data = rng.normal(size=(50, 8))
        a = pca_fit(data, 4)
        b = pca_fit(data.copy(), 4)
        assert np.array_equal(a.components, b.components)
        x = rng.normal(size=8)
        pa = encode_digits(
            np.clip(pca_transform(a, x), -1, 1)[:4].repeat(5), 0.5)
        pb = encode_digits(
            np.clip(pca_transform(b, x), -1, 1)[:4].repeat(5), 0.5)
        assert np.array_equal(pa.couplings, pb.couplings)
