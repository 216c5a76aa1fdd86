import statistics

from pydantic import BaseModel, ConfigDict, Field

from orthoreg.services.anglestats import AngleStats


class RunRecord(BaseModel):
    """Metrics for one toy step or one training epoch.

    angle_stats is keyed by layer label ("l1", "l2", ...); error rates are
    None for toy runs.
    """

    model_config = ConfigDict(frozen=True)

    step: int = Field(ge=0)
    losses: dict[str, float]
    train_err_pct: float | None = Field(default=None, ge=0, le=100)
    test_err_pct: float | None = Field(default=None, ge=0, le=100)
    angle_stats: dict[str, AngleStats] = Field(default_factory=dict)

    @property
    def overfit_gap_pct(self):
        if self.train_err_pct is None or self.test_err_pct is None:
            return None
        return self.test_err_pct - self.train_err_pct

    def mean_nn_angle(self, layer: str = "l1"):
        return self.angle_stats[layer].mean_nn_angle


def best_test_error(records: list[RunRecord]):
    return min(r.test_err_pct for r in records if r.test_err_pct is not None)


def final_record(records: list[RunRecord]):
    return records[-1]


def arm_summary(records: list[RunRecord]):
    last = final_record(records)
    return {
        "best_test_err_pct": best_test_error(records),
        "final_test_err_pct": last.test_err_pct,
        "final_train_err_pct": last.train_err_pct,
        "final_overfit_gap_pct": last.overfit_gap_pct,
        "epochs": last.step,
    }


def median(values):
    return statistics.median(values)
