import itertools

import numpy as np
import pytest
from scipy.linalg import expm

from qaoatrust.engine import (
    AngleVector,
    MeteredObjective,
    NoiseModel,
    best_sampled_ratio,
    bitstring,
    brute_force_maxcut,
    canonicalize_angles,
    circuit_resources,
    cut_table,
    evolve,
    expectation,
    finite_diff_gradient,
    noisy_expectation,
    output_distribution,
    sample_bitstrings,
    shot_estimate,
)
from qaoatrust.graphs import Graph, generate


def _all_small_graphs() -> list[Graph]:
    graphs = []
    for n in (1, 2, 3):
        pairs = list(itertools.combinations(range(n), 2))
        for r in range(len(pairs) + 1):
            for edges in itertools.combinations(pairs, r):
                graphs.append(Graph.from_edges(n, edges))
    return graphs


def _dense_expectation(g: Graph, theta: np.ndarray) -> float:
    dim = 2**g.n
    costs = cut_table(g).costs.astype(float)
    x = np.array([[0.0, 1.0], [1.0, 0.0]])
    mixer = np.zeros((dim, dim))
    for q in range(g.n):
        mixer += np.kron(np.kron(np.eye(2 ** (g.n - 1 - q)), x), np.eye(2**q))
    psi = np.full(dim, dim**-0.5, dtype=complex)
    p = theta.size // 2
    for layer in range(p):
        psi = expm(-1j * theta[layer] * np.diag(costs)) @ psi
        psi = expm(-1j * theta[p + layer] * mixer) @ psi
    return float(np.real(np.vdot(psi, costs * psi)))


def test_statevector_matches_matrix_exponential() -> None:
    rng = np.random.default_rng(0)
    for g in _all_small_graphs():
        for p in (1, 2):
            for _ in range(100 // 10):
                theta = rng.uniform(-np.pi, np.pi, size=2 * p)
                assert abs(expectation(g, theta) - _dense_expectation(g, theta)) <= 1e-9


def test_state_is_normalized() -> None:
    g = generate("ER", 10, 1)
    state = evolve(g, [0.3, -1.1, 0.7, 0.2])
    assert state.norm() == pytest.approx(1.0, abs=1e-12)
    assert state.n == 10


def test_zero_angles_give_half_the_edges() -> None:
    for seed in range(100):
        n = 4 + seed % 13
        g = generate("ER", n, seed)
        assert abs(expectation(g, np.zeros(4)) - g.m / 2) <= 1e-12


def test_single_edge_reaches_optimum() -> None:
    g = Graph.from_edges(2, [(0, 1)])
    best = max(expectation(g, [np.pi / 2, s * np.pi / 8]) for s in (-1, 1))
    assert best == pytest.approx(1.0, abs=1e-9)


def test_noise_is_affine() -> None:
    g = generate("REG3", 8, 3)
    theta = np.array([0.4, 0.9, -0.3, 0.25])
    for eps in (0.0, 0.01, 0.2, 1.0):
        noise = NoiseModel(epsilon=eps)
        nu = noise.nu(2)
        expected = (1 - nu) * expectation(g, theta) + nu * g.m / 2
        assert noisy_expectation(g, theta, noise) - expected == pytest.approx(0.0, abs=1e-12)
    assert NoiseModel(epsilon=0.01).nu(2) == pytest.approx(1 - 0.99**4)


def test_invalid_inputs() -> None:
    g = generate("ER", 6, 0)
    with pytest.raises(ValueError):
        expectation(g, [0.1, 0.2, 0.3])
    with pytest.raises(ValueError):
        expectation(g, [np.nan, 0.1])
    with pytest.raises(ValueError):
        NoiseModel(epsilon=1.5)
    with pytest.raises(ValueError):
        AngleVector(gammas=(0.1,), betas=())


def test_angle_vector_layout() -> None:
    vec = AngleVector.from_array([1.0, 2.0, 3.0, 4.0])
    assert vec.gammas == (1.0, 2.0)
    assert vec.betas == (3.0, 4.0)
    assert expectation(generate("BA", 6, 0), vec) == expectation(generate("BA", 6, 0), vec.as_array())


def test_brute_force_maxcut_triangle() -> None:
    triangle = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    c_max, optimal = brute_force_maxcut(triangle)
    assert c_max == 2
    assert len(optimal) == 6
    assert bitstring(1, 3) == "100"


def test_circuit_resources() -> None:
    triangle = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    assert circuit_resources(triangle, 2) == {"cnot": 36, "rotations": 24}


def test_sampling_is_seeded_and_unbiased() -> None:
    g = generate("ER", 6, 2)
    theta = [0.5, 0.2, -0.4, 0.3]
    first = sample_bitstrings(g, theta, 200, seed=5)
    assert np.array_equal(first, sample_bitstrings(g, theta, 200, seed=5))
    estimate = shot_estimate(g, theta, 20000, seed=1)
    assert estimate == pytest.approx(expectation(g, theta), abs=0.1)
    probs = output_distribution(g, theta, NoiseModel(epsilon=1.0))
    assert np.allclose(probs, 1 / 64)


def test_canonicalize_preserves_objective() -> None:
    rng = np.random.default_rng(4)
    g = generate("WS", 8, 0)
    for _ in range(50):
        theta = rng.uniform(-3 * np.pi, 3 * np.pi, size=4)
        canon = canonicalize_angles(theta)
        assert expectation(g, canon) == pytest.approx(expectation(g, theta), abs=1e-9)
        assert np.all((canon[:2] >= -np.pi) & (canon[:2] < np.pi))
        assert np.all((canon[2:] >= -np.pi / 2) & (canon[2:] < np.pi / 2))
        assert canon[0] >= 0


def test_gradient_vanishes_at_zero() -> None:
    g = generate("ER", 6, 0)
    assert np.allclose(finite_diff_gradient(g, np.zeros(4)), 0.0, atol=1e-8)


def test_metered_objective_counts_every_call() -> None:
    g = generate("ER", 6, 1)
    objective = MeteredObjective(g)
    values = [objective([0.1 * i, 0.2, 0.3, 0.1]) for i in range(5)]
    assert objective.evals == 5
    theta, best = objective.best()
    assert best == max(values)
    ratio = objective.sampled_ratio(theta)
    assert objective.evals == 5
    assert 0.0 < ratio <= 1.0


def test_metered_best_prefers_earliest_tie() -> None:
    g = generate("ER", 6, 1)
    objective = MeteredObjective(g)
    objective([0.2, 0.1])
    objective([0.2, 0.1])
    theta, _ = objective.best()
    assert theta is objective.trace[0][0]


def test_shot_mode_ratio_uses_measurements() -> None:
    g = generate("REG3", 6, 0)
    objective = MeteredObjective(g, noise=NoiseModel(shots=64), seed=9)
    trace = [np.array([0.2 * i, 0.1, 0.4, -0.2]) for i in range(4)]
    for theta in trace:
        objective(theta)
    c_max = cut_table(g).c_max
    assert objective.sampled_ratio(trace[0]) == objective.best_measured_cut / c_max
    assert objective.sampled_ratio(trace[0]) == best_sampled_ratio(trace, g, 64, seed=9)
