import numpy as np
import pytest

from qaoatrust.bounds import (
    BoundInputs,
    anticoncentration_check,
    best_of_k_check,
    best_of_k_gap,
    bound_table,
    generalization_gap,
    landscape_check,
    landscape_slack,
    lipschitz_bound,
    noisy_bound,
    rademacher_term,
    sample_complexity,
    volume_ratio,
)
from qaoatrust.engine import expectation
from qaoatrust.graphs import generate
from qaoatrust.trust import TrustRegion, chi2_quantile


def test_reference_values() -> None:
    inputs = BoundInputs()
    lip = lipschitz_bound(21, 2)
    assert lip == pytest.approx(84.0)
    assert landscape_slack(lip, inputs.q, inputs.sigma) == pytest.approx(38.81, abs=0.01)
    assert best_of_k_gap(lip, inputs.sigma, 3) == pytest.approx(14.55, abs=0.01)
    assert volume_ratio(inputs.sigma, 0.95, 2) == pytest.approx(1.44e-4, rel=0.02)
    coef, offset = noisy_bound(inputs)
    assert coef == pytest.approx(0.8175, abs=1e-3)
    assert offset == pytest.approx(-36.87, abs=0.01)


def test_generalization_terms() -> None:
    inputs = BoundInputs()
    assert generalization_gap(inputs) == pytest.approx(7.07, abs=0.05)
    assert rademacher_term(inputs) < generalization_gap(inputs)
    n = sample_complexity(BoundInputs(accuracy=2.0))
    assert generalization_gap(BoundInputs(n_train=n, accuracy=2.0)) <= 2.0
    assert sample_complexity(BoundInputs(accuracy=1.0)) > n


def test_bound_table() -> None:
    table = bound_table().set_index("quantity")
    assert len(table) == 15
    assert table.loc["chi2_quantile", "value"] == pytest.approx(chi2_quantile(4, 0.95))
    assert table.loc["lipschitz", "value"] == pytest.approx(84.0)
    assert table.loc["output_guarantee", "value"] == pytest.approx(2 * table.loc["landscape_slack", "value"])
    assert table.loc["sigma2_max", "value"] == pytest.approx(0.0225)
    assert table["expression"].map(lambda s: isinstance(s, str) and s != "").all()


def test_inputs_validation() -> None:
    with pytest.raises(ValueError, match="sigma"):
        BoundInputs(sigma=(0.1, 0.1))
    with pytest.raises(ValueError):
        BoundInputs(n_train=0)
    with pytest.raises(ValueError):
        BoundInputs(delta=1.0)


def _region(sigma: float) -> tuple:
    g = generate("REG3", 8, 0)
    center = np.array([0.6, 0.9, 0.5, 0.25])
    return g, TrustRegion.from_gaussian(center, np.full(4, sigma**2), alpha=0.95)


def test_landscape_check_on_small_region() -> None:
    g, region = _region(0.01)
    check = landscape_check(g, region, draws=50, seed=1)
    assert set(check) == {"min_f", "bound", "lipschitz_hat", "holds"}
    assert check["holds"]
    assert check["bound"] <= expectation(g, region.center)
    assert 0.0 < check["lipschitz_hat"] <= lipschitz_bound(g.m, 2)


def test_best_of_k_check() -> None:
    g, region = _region(0.05)
    check = best_of_k_check(g, region, k=3, repetitions=40, seed=2, lipschitz_draws=20)
    assert check["holds"]
    assert check["mean_best"] <= g.m


def test_anticoncentration_check() -> None:
    g, region = _region(0.1)
    result = anticoncentration_check(g, region, draws=100, seed=0)
    assert result["min_variance"] >= 0.0
    assert result["floor"] >= 0.0
    if result["kappa"] <= 0:
        assert result["holds"] is None
    else:
        assert isinstance(result["holds"], bool)
