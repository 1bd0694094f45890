import math
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from qaoatrust.calibration import (
    CalibrationConstants,
    calibration_report,
    conformal_quantile,
    conformal_rank,
    conformal_score,
    coverage,
    ece,
    fit_constants,
    reliability_deciles,
    scalar_uncertainty,
    spearman_rho,
)
from qaoatrust.datasets import find_target
from qaoatrust.graphs import generate
from qaoatrust.predictor import GaussianPrediction
from qaoatrust.training import TrainingConfig, train


def _predictions(count: int, seed: int = 0) -> tuple[list, list]:
    rng = np.random.default_rng(seed)
    preds, targets = [], []
    for _ in range(count):
        mu = rng.normal(size=4)
        var = rng.uniform(0.05, 0.5, size=4)
        preds.append(GaussianPrediction(mu=mu, var=var))
        targets.append(mu + np.sqrt(var) * rng.standard_normal(4))
    return preds, targets


def test_scalar_uncertainty_and_score() -> None:
    pred = GaussianPrediction(mu=np.zeros(4), var=np.array([0.1, 0.2, 0.3, 0.4]))
    assert scalar_uncertainty(pred) == pytest.approx(0.25)
    assert conformal_score(pred, np.array([1.0, 0.0, 0.0, 0.0])) == pytest.approx(10.0)


def test_fit_constants() -> None:
    preds, targets = _predictions(21)
    constants = fit_constants(preds, targets)
    u = [scalar_uncertainty(p) for p in preds]
    assert constants.u_med == pytest.approx(np.median(u))
    assert constants.u_iqr == pytest.approx(stats.iqr(u))
    assert len(constants.conformal_scores) == 21
    assert list(constants.conformal_scores) == sorted(constants.conformal_scores)


def test_fit_constants_rejects_degenerate_sets() -> None:
    preds, targets = _predictions(3)
    with pytest.raises(ValueError):
        fit_constants(preds[:1], targets[:1])
    with pytest.raises(ValueError):
        fit_constants(preds, targets[:2])
    same = [preds[0]] * 3
    with pytest.raises(ValueError, match="IQR"):
        fit_constants(same, targets)


def test_conformal_rank() -> None:
    assert conformal_rank(58, 0.05) == 57
    assert conformal_rank(58, 0.10) == 54
    assert conformal_rank(9, 0.10) == 9
    with pytest.raises(ValueError):
        conformal_rank(10, 0.0)


def test_conformal_quantile_picks_order_statistic() -> None:
    scores = [5.0, 1.0, 4.0, 2.0, 3.0, 9.0, 7.0, 8.0, 6.0]
    assert conformal_quantile(scores, 0.10) == 9.0
    assert conformal_quantile(scores, 0.5) == 5.0
    with pytest.raises(ValueError, match="too few"):
        conformal_quantile(scores[:5], 0.05)
    with pytest.raises(ValueError):
        conformal_quantile(scores, 1.5)


def test_conformal_coverage_on_exchangeable_scores() -> None:
    rng = np.random.default_rng(42)
    covered = []
    for _ in range(200):
        calibration = rng.chisquare(4, size=58)
        test = rng.chisquare(4, size=500)
        covered.append(coverage(test, conformal_quantile(calibration, 0.10)))
    assert np.mean(covered) >= 0.90


def test_constants_text_round_trip(tmp_path: Path) -> None:
    constants = CalibrationConstants(u_med=0.1 + 0.2, u_iqr=1 / 3, conformal_scores=(0.1, 2.5))
    assert CalibrationConstants.from_text(constants.to_text()) == constants
    constants.dump(tmp_path / "calibration.txt")
    assert CalibrationConstants.load(tmp_path / "calibration.txt") == constants
    with pytest.raises(ValueError, match="Missing"):
        CalibrationConstants.from_text("u_med = 1.0\n")
    with pytest.raises(ValueError):
        CalibrationConstants(u_med=0.0, u_iqr=0.0)
    with pytest.raises(ValueError):
        CalibrationConstants(u_med=0.0, u_iqr=1.0, conformal_scores=(2.0, 1.0))


def test_reliability_deciles() -> None:
    rng = np.random.default_rng(1)
    u = rng.random(95)
    table = reliability_deciles(u, 2 * u + 1)
    assert len(table) == 10
    assert table["count"].sum() == 95
    assert ece(u, 2 * u + 1) == pytest.approx(0.0, abs=1e-12)
    assert ece(u, -u) > 0.3
    with pytest.raises(ValueError):
        reliability_deciles(u[:5], u[:5])


def test_spearman() -> None:
    x = np.arange(10.0)
    assert spearman_rho(x, x**3) == pytest.approx(1.0)
    assert spearman_rho(x, -x) == pytest.approx(-1.0)
    y = np.random.default_rng(0).random(10)
    assert spearman_rho(x, y) == pytest.approx(stats.spearmanr(x, y).statistic)
    with pytest.raises(ValueError):
        spearman_rho(x, np.ones(10))


def test_calibration_report() -> None:
    preds, targets = _predictions(40, seed=3)
    constants = fit_constants(preds, targets)
    report = calibration_report(preds, targets, constants).set_index("quantity")["value"]
    assert report["n"] == 40
    assert report["q_chi2_0.95"] == pytest.approx(stats.chi2.ppf(0.95, 4))
    assert 0.0 <= report["coverage_chi2_0.90"] <= report["coverage_chi2_0.95"] <= 1.0
    assert report["coverage_conformal_0.95"] >= 0.95


def test_calibration_report_small_sets_give_nan() -> None:
    preds, targets = _predictions(6, seed=4)
    constants = fit_constants(preds, targets)
    report = calibration_report(preds, targets, constants).set_index("quantity")["value"]
    assert math.isnan(report["q_conformal_0.95"])
    assert not math.isnan(report["q_chi2_0.95"])


@pytest.mark.slow
def test_conformal_coverage_with_trained_model() -> None:
    families = ("ER", "REG3", "BA", "WS")

    def examples(start: int, count: int) -> list:
        graphs = [generate(families[i % 4], 8, start + i) for i in range(count)]
        return [(g, find_target(g, restarts=1, iters=60, seed=start + i)) for i, g in enumerate(graphs)]

    train_set, pool = examples(0, 32), examples(10_000, 300)
    model = train(train_set, TrainingConfig(phase1_epochs=15, phase2_epochs=15, seed=1)).model
    preds = model.predict_batch([g for g, _ in pool])
    scores = np.array([conformal_score(pred, target) for pred, (_, target) in zip(preds, pool)])

    rng = np.random.default_rng(7)
    m_cal = 58
    m_test = len(scores) - m_cal
    covered = []
    for _ in range(200):
        order = rng.permutation(len(scores))
        q = conformal_quantile(scores[order[:m_cal]], 0.10)
        covered.append(coverage(scores[order[m_cal:]], q))
    covered = np.array(covered)
    assert covered.mean() >= 0.90
    assert np.mean(covered >= 0.90 - 3.0 * math.sqrt(0.09 / m_test)) >= 0.85
