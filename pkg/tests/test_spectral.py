import numpy as np
import pytest

from qaoatrust.graphs import Graph, generate
from qaoatrust.linalg import jacobi_eigh
from qaoatrust.spectral import (
    canonical_signs,
    handcrafted,
    laplacian_eigs,
    node_features,
    spectral_encoding,
)


def test_jacobi_matches_numpy() -> None:
    rng = np.random.default_rng(0)
    for n in (1, 2, 5, 12):
        a = rng.standard_normal((n, n))
        sym = a + a.T
        values, vectors = jacobi_eigh(sym)
        assert np.allclose(values, np.linalg.eigvalsh(sym), atol=1e-9)
        assert np.allclose(vectors.T @ vectors, np.eye(n), atol=1e-9)
        assert np.allclose(sym @ vectors, vectors * values, atol=1e-8)


def test_jacobi_rejects_non_symmetric() -> None:
    with pytest.raises(ValueError):
        jacobi_eigh(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(ValueError):
        jacobi_eigh(np.zeros((2, 3)))


def test_laplacian_eigs_returns_copies() -> None:
    g = generate("REG3", 8, 1)
    values, vectors = laplacian_eigs(g)
    values[0] = 100.0
    assert g.spectrum[0][0] != 100.0
    assert vectors.shape == (8, 8)


def test_canonical_signs_use_odd_power_sums() -> None:
    vectors = np.array([[0.0, -0.5], [-1.0, 0.5], [0.2, 0.0]])
    out = canonical_signs(vectors)
    assert np.sum(out[:, 0] ** 3) > 0
    assert np.array_equal(out[:, 1], vectors[:, 1])
    weighted = canonical_signs(vectors, degrees=np.array([3.0, 1.0, 2.0]))
    assert np.array_equal(weighted[:, 1], -vectors[:, 1])


def test_canonical_signs_ignore_vertex_order() -> None:
    rng = np.random.default_rng(3)
    vectors = rng.standard_normal((9, 5))
    degrees = rng.integers(1, 6, size=9).astype(float)
    perm = rng.permutation(9)
    for sign in (1.0, -1.0):
        out = canonical_signs(sign * vectors[perm], degrees[perm])
        assert np.allclose(out, canonical_signs(vectors, degrees)[perm])


def test_small_graph_spectra() -> None:
    values, _ = laplacian_eigs(Graph.from_edges(2, [(0, 1)]))
    assert np.allclose(values, [0.0, 2.0], atol=1e-10)
    values, _ = laplacian_eigs(Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)]))
    assert np.allclose(values, [0.0, 2.0, 2.0, 4.0], atol=1e-10)


@pytest.mark.parametrize("count", [100, pytest.param(1000, marks=pytest.mark.slow)])
def test_decomposition_residual_and_orthonormality(count: int) -> None:
    rng = np.random.default_rng(2024)
    for _ in range(count):
        n = int(rng.integers(2, 17))
        rows, cols = np.triu_indices(n, k=1)
        keep = rng.random(rows.size) < rng.uniform(0.1, 0.9)
        g = Graph.from_edges(n, zip(rows[keep].tolist(), cols[keep].tolist()))
        values, vectors = laplacian_eigs(g)
        assert np.all(np.diff(values) >= -1e-12)
        assert np.max(np.abs(vectors @ np.diag(values) @ vectors.T - g.laplacian)) <= 1e-8
        assert np.max(np.abs(vectors.T @ vectors - np.eye(n))) <= 1e-8


def test_encoding_zero_pads_small_graphs() -> None:
    g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
    enc = spectral_encoding(g, k=6)
    assert enc.vectors.shape == (4, 6)
    assert np.all(enc.vectors[:, 3:] == 0.0)
    assert np.all(enc.eigenvalues[3:] == 0.0)
    assert spectral_encoding(g, k=0).vectors.shape == (4, 0)
    with pytest.raises(ValueError):
        spectral_encoding(g, k=-1)


def test_random_signs_flip_whole_columns() -> None:
    g = generate("ER", 10, 5)
    canonical = spectral_encoding(g, k=4)
    flipped = spectral_encoding(g, k=4, sign_seed=11)
    for j in range(4):
        col = flipped.vectors[:, j]
        assert np.allclose(col, canonical.vectors[:, j]) or np.allclose(col, -canonical.vectors[:, j])


def test_node_features_shape_and_degree_column() -> None:
    g = generate("BA", 9, 0)
    feats = node_features(g, spectral_encoding(g, k=6))
    assert feats.shape == (9, 7)
    assert np.allclose(feats[:, 0], g.degrees / 9)


def test_handcrafted_complete_graph() -> None:
    g = Graph.from_edges(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
    feats = handcrafted(g)
    assert feats.density == pytest.approx(1.0)
    assert feats.clustering == pytest.approx(1.0)
    assert feats.fiedler == pytest.approx(4.0)
    assert feats.spectral_radius == pytest.approx(4.0)
    assert feats.as_array().shape == (8,)
