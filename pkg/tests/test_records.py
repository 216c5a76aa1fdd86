import pytest
from pydantic import ValidationError

from orthoreg.services.records import RunRecord, arm_summary, best_test_error


def _epoch(step, train_err, test_err):
    return RunRecord(
        step=step,
        losses={"task": 1.0 / (step + 1), "reg": 0.0},
        train_err_pct=train_err,
        test_err_pct=test_err,
    )


def test_overfit_gap():
    assert _epoch(1, 2.0, 3.5).overfit_gap_pct == pytest.approx(1.5)
    toy = RunRecord(step=0, losses={"reg": 0.1})
    assert toy.overfit_gap_pct is None


def test_error_rates_are_percentages():
    with pytest.raises(ValidationError):
        _epoch(0, 101.0, 5.0)
    with pytest.raises(ValidationError):
        _epoch(0, 1.0, -0.5)


def test_arm_summary_picks_best_epoch():
    records = [_epoch(0, 90.0, 90.0), _epoch(1, 5.0, 4.0), _epoch(2, 1.0, 4.5)]
    assert best_test_error(records) == 4.0
    summary = arm_summary(records)
    assert summary["best_test_err_pct"] == 4.0
    assert summary["final_test_err_pct"] == 4.5
    assert summary["final_overfit_gap_pct"] == pytest.approx(3.5)
    assert summary["epochs"] == 2
