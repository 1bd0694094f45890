import numpy as np
import pytest

from qaoatrust.neldermead import nelder_mead
from qaoatrust.trust import TrustRegion


def _bowl(x: np.ndarray) -> float:
    return -((x[0] - 1.0) ** 2) - 2.0 * (x[1] + 2.0) ** 2


def test_maximizes_concave_quadratic() -> None:
    result = nelder_mead(_bowl, np.zeros(2), max_iters=300, initial_step=0.5)
    assert result.converged
    assert np.allclose(result.x, [1.0, -2.0], atol=1e-3)
    assert result.fun == pytest.approx(0.0, abs=1e-4)
    assert result.evals == len(result.trace)
    assert result.fun == max(value for _, value in result.trace)


def test_projector_keeps_every_vertex_feasible() -> None:
    box = lambda x: np.clip(x, -0.5, 0.5)  # noqa: E731
    result = nelder_mead(_bowl, np.array([2.0, 2.0]), max_iters=100, projector=box, initial_step=-0.3)
    for x, _ in result.trace:
        assert np.all(np.abs(x) <= 0.5)
    assert result.fun >= _bowl(np.array([0.5, 0.5]))


def test_initial_value_skips_start_evaluation() -> None:
    x0 = np.array([0.3, 0.1, 0.2])
    without = nelder_mead(lambda x: -np.sum(x**2), x0, max_iters=0)
    with_value = nelder_mead(lambda x: -np.sum(x**2), x0, max_iters=0, initial_value=-0.14)
    assert without.evals == 4
    assert with_value.evals == 3
    assert with_value.fun == pytest.approx(-0.14)
    assert np.array_equal(with_value.x, x0)


def test_iteration_cap_is_respected() -> None:
    result = nelder_mead(_bowl, np.zeros(2), max_iters=5)
    assert result.iterations <= 5
    assert not result.converged


def test_rejects_non_finite() -> None:
    with pytest.raises(ValueError):
        nelder_mead(_bowl, np.array([np.nan, 0.0]), max_iters=5)
    with pytest.raises(ValueError):
        nelder_mead(lambda x: float("nan"), np.zeros(2), max_iters=5)


def test_quadratic_from_nearby_start() -> None:
    center = np.array([0.3, -0.2])
    result = nelder_mead(lambda x: -np.sum((x - center) ** 2), center + [0.1, -0.1], max_iters=500)
    assert result.converged
    assert np.max(np.abs(result.x - center)) <= 1e-3
    assert result.evals < 200


def test_trust_region_projector_stops_on_boundary() -> None:
    region = TrustRegion(center=np.zeros(2), inv_scale=np.array([5.0, 10.0]), q=1.0)
    target = np.array([1.0, 1.0])

    def objective(x: np.ndarray) -> float:
        return -float(np.sum((x - target) ** 2))

    result = nelder_mead(objective, region.center, max_iters=500, projector=region.project)
    assert all(region.contains(x) for x, _ in result.trace)
    assert region.mahalanobis_sq(result.x) == pytest.approx(region.q, abs=1e-3)

    angles = np.linspace(0.0, 2.0 * np.pi, 20001)
    boundary = np.column_stack([0.2 * np.cos(angles), 0.1 * np.sin(angles)])
    best_on_boundary = max(objective(x) for x in boundary)
    assert result.fun >= best_on_boundary - 1e-3


def test_projected_search_properties_on_random_regions() -> None:
    rng = np.random.default_rng(11)
    for _ in range(1000):
        dim = int(rng.integers(2, 5))
        region = TrustRegion(
            center=rng.normal(size=dim), inv_scale=rng.uniform(0.5, 5.0, size=dim), q=rng.uniform(0.5, 10.0)
        )
        peak = region.center + rng.normal(scale=3.0, size=dim)
        objective = lambda x: -float(np.sum((x - peak) ** 2))  # noqa: E731
        x0 = region.project(region.center + rng.normal(size=dim) / region.inv_scale)
        result = nelder_mead(objective, x0, max_iters=20, projector=region.project, initial_step=0.2)
        values = [value for _, value in result.trace]
        assert all(region.contains(x) for x, _ in result.trace)
        assert result.fun == max(values)
        assert result.fun >= objective(x0)


def test_tolerances_are_strict() -> None:
    collapse = lambda x: np.zeros(2)  # noqa: E731
    exact = nelder_mead(lambda x: 1.0, np.zeros(2), max_iters=3, projector=collapse, x_atol=0.0, f_atol=0.0)
    assert not exact.converged
    assert exact.iterations == 3
    loose = nelder_mead(lambda x: 1.0, np.zeros(2), max_iters=3, projector=collapse, x_atol=1e-12, f_atol=1e-12)
    assert loose.converged
    assert loose.iterations == 0
