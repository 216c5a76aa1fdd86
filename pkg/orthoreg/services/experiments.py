"""Reproducible studies built on the regularizer and the network engine.

Nothing here touches the filesystem: every runner returns records or
summaries and leaves writing artifacts to the command-line layer.
"""

import inspect
import logging
import statistics
import time
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from orthoreg.core.errors import ConfigurationError
from orthoreg.data.dataset import Dataset
from orthoreg.services.anglestats import summarize
from orthoreg.services.linalg import Matrix, as_matrix, normalize_rows
from orthoreg.services.nn import TrainConfig, init_model, train
from orthoreg.services.records import RunRecord, arm_summary, median
from orthoreg.services.regularizer import (
    RegConfig,
    RegMode,
    configured_loss,
    pairwise_coefficient,
    reg_step,
)
from orthoreg.workers.pool import run_arms

logger = logging.getLogger(__name__)

UNREGULARIZED = "unregularized"
MODE_ARMS = (UNREGULARIZED, RegMode.GLOBAL.value, RegMode.LOCAL.value)


class Direction(StrEnum):
    DESCENT = "descent"
    ASCENT = "ascent"


class ToyConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_vectors: int = Field(default=30, ge=2)
    dims: int = Field(default=2, ge=2)
    steps: int = Field(default=300, ge=0)
    step_size: float = Field(default=0.003, gt=0)
    mode: RegMode = RegMode.LOCAL
    direction: Direction = Direction.DESCENT
    lam: float = Field(default=10.0, gt=0)
    seed: int = 0
    n_bins: int = Field(default=36, ge=1)

    def reg_config(self):
        return RegConfig(
            mode=self.mode,
            gamma=1.0,
            lam=self.lam,
            restore_magnitudes=True,
            normalize_reg_grad=False,
        )

    @property
    def alpha(self):
        if self.direction == Direction.ASCENT:
            return -self.step_size
        return self.step_size


def init_unit_vectors(n: int, dims: int, seed: int) -> Matrix:
    """Random unit rows: uniform angles on the circle, normalized Gaussians above."""
    rng = np.random.default_rng(seed)
    if dims == 2:
        phi = rng.uniform(0.0, 2.0 * np.pi, size=n)
        return np.column_stack([np.cos(phi), np.sin(phi)])
    unit, _ = normalize_rows(rng.standard_normal((n, dims)))
    return unit


def _toy_record(step: int, theta: Matrix, reg: RegConfig, n_bins: int):
    return RunRecord(
        step=step,
        losses={"reg": configured_loss(theta, reg)},
        angle_stats={"l1": summarize(theta, n_bins)},
    )


def run_toy(cfg: ToyConfig, initial=None) -> list[RunRecord]:
    """Regularizer-only dynamics of unit vectors; returns steps + 1 records.

    initial overrides the seeded start and must be n_vectors x dims.
    """
    if initial is None:
        theta = init_unit_vectors(cfg.n_vectors, cfg.dims, cfg.seed)
    else:
        theta = as_matrix(initial, "initial")
        if theta.shape != (cfg.n_vectors, cfg.dims):
            raise ConfigurationError(
                f"Initial matrix is {theta.shape}, config expects "
                f"{(cfg.n_vectors, cfg.dims)}."
            )
    reg = cfg.reg_config()
    records = [_toy_record(0, theta, reg, cfg.n_bins)]
    for step in range(1, cfg.steps + 1):
        theta = reg_step(theta, None, cfg.alpha, reg)
        records.append(_toy_record(step, theta, reg, cfg.n_bins))
        logger.debug(
            "toy_step step=%s mean_nn_angle=%.4f",
            step,
            records[-1].mean_nn_angle(),
        )
    logger.info(
        "toy_finished mode=%s direction=%s steps=%s mean_nn_angle=%.4f",
        cfg.mode.value,
        cfg.direction.value,
        cfg.steps,
        records[-1].mean_nn_angle(),
    )
    return records


def trace_instability(records: list[RunRecord], window: int = 100) -> float:
    """Std of step-to-step changes in mean NN angle over the last window steps."""
    trace = np.array([r.mean_nn_angle() for r in records[-(window + 1) :]])
    if trace.shape[0] < 2:
        return 0.0
    return float(np.std(np.diff(trace)))


def toy_summary(records: list[RunRecord], window: int = 100):
    first, last = records[0], records[-1]
    return {
        "steps": last.step,
        "initial_mean_nn_angle_deg": first.mean_nn_angle(),
        "final_mean_nn_angle_deg": last.mean_nn_angle(),
        "final_min_angle_deg": last.angle_stats["l1"].min_pairwise_angle,
        "final_loss": last.losses["reg"],
        "trace_step_std_deg": trace_instability(records, window),
    }


class BoundRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int
    initial_min_angle: float
    global_min_angle: float
    local_min_angle: float

    @property
    def gap(self):
        return self.local_min_angle - self.global_min_angle


class BoundSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    d: int
    steps: int
    step_size: float
    lam: float
    rows: list[BoundRow]

    @property
    def median_gap(self):
        return median([row.gap for row in self.rows])

    def payload(self):
        return {
            "n": self.n,
            "d": self.d,
            "steps": self.steps,
            "step_size": self.step_size,
            "lambda": self.lam,
            "median_global_min_angle_deg": median(
                [row.global_min_angle for row in self.rows]
            ),
            "median_local_min_angle_deg": median(
                [row.local_min_angle for row in self.rows]
            ),
            "median_gap_deg": self.median_gap,
        }


def _descend(theta: Matrix, steps: int, step_size: float, reg: RegConfig):
    for _ in range(steps):
        theta = reg_step(theta, None, step_size, reg)
    return theta


def run_bound_comparison(
    n: int,
    d: int,
    steps: int = 300,
    step_size: float = 0.03,
    seeds=(0, 1, 2, 3, 4),
    lam: float = 10.0,
) -> BoundSummary:
    """Global vs local descent from the same random unit rows, per seed."""
    if n < 2 or d < 1:
        raise ConfigurationError(f"Need n >= 2 and d >= 1, got n={n} d={d}.")
    if steps < 0 or not step_size > 0:
        raise ConfigurationError("steps must be >= 0 and step_size > 0.")
    if not seeds:
        raise ConfigurationError("At least one seed is required.")
    if n <= d:
        logger.warning(
            "bound_compare_uninformative n=%s d=%s reason=orthonormal_rows_exist",
            n,
            d,
        )
    rows = []
    for seed in seeds:
        start = init_unit_vectors(n, d, seed)
        final = {}
        for mode in (RegMode.GLOBAL, RegMode.LOCAL):
            reg = RegConfig(mode=mode, gamma=1.0, lam=lam, restore_magnitudes=True)
            theta = _descend(start.copy(), steps, step_size, reg)
            final[mode] = summarize(theta).min_pairwise_angle
        rows.append(
            BoundRow(
                seed=seed,
                initial_min_angle=summarize(start).min_pairwise_angle,
                global_min_angle=final[RegMode.GLOBAL],
                local_min_angle=final[RegMode.LOCAL],
            )
        )
        logger.info(
            "bound_seed_done seed=%s global=%.3f local=%.3f",
            seed,
            rows[-1].global_min_angle,
            rows[-1].local_min_angle,
        )
    return BoundSummary(n=n, d=d, steps=steps, step_size=step_size, lam=lam, rows=rows)


def mnist_layer_sizes(
    input_dim: int, hidden: int = 1024, layers: int = 3, classes: int = 10
):
    if hidden < 1 or layers < 1:
        raise ConfigurationError("hidden and layers must be positive.")
    return [input_dim] + [hidden] * layers + [classes]


def train_arm(layer_sizes, train_set: Dataset, test_set: Dataset, cfg: TrainConfig):
    """One model from the config seed, trained to completion."""
    model = init_model(layer_sizes, cfg.seed)
    return train(model, train_set, test_set, cfg)


def _with_reg(cfg: TrainConfig, **changes):
    return cfg.model_copy(update={"reg": cfg.reg.model_copy(update=changes)})


def gamma_label(gamma: float):
    return f"gamma={gamma:g}"


def run_mnist(
    cfg: TrainConfig,
    gamma_values,
    train_set: Dataset,
    test_set: Dataset,
    layer_sizes,
    workers: int = 1,
) -> dict[str, list[RunRecord]]:
    """One arm per gamma, all from the same seed and initialization."""
    gammas = [float(g) for g in gamma_values]
    if not gammas:
        raise ConfigurationError("At least one gamma value is required.")
    if any(g < 0 for g in gammas):
        raise ConfigurationError(f"gamma values must be >= 0, got {gammas}.")
    arms = [
        (gamma_label(g), (layer_sizes, train_set, test_set, _with_reg(cfg, gamma=g)))
        for g in gammas
    ]
    return run_arms(train_arm, arms, workers)


def mode_configs(cfg: TrainConfig):
    if cfg.reg.gamma == 0:
        raise ConfigurationError("Mode comparison needs gamma > 0.")
    return {
        UNREGULARIZED: _with_reg(cfg, gamma=0.0),
        RegMode.GLOBAL.value: _with_reg(cfg, mode=RegMode.GLOBAL),
        RegMode.LOCAL.value: _with_reg(cfg, mode=RegMode.LOCAL),
    }


def run_mode_comparison(
    cfg: TrainConfig,
    train_set: Dataset,
    test_set: Dataset,
    layer_sizes,
    workers: int = 1,
) -> dict[str, list[RunRecord]]:
    """Unregularized, global and local arms from identical initialization."""
    arms = [
        (label, (layer_sizes, train_set, test_set, arm_cfg))
        for label, arm_cfg in mode_configs(cfg).items()
    ]
    return run_arms(train_arm, arms, workers)


class SweepParameter(StrEnum):
    GAMMA = "gamma"
    LAMBDA = "lambda"
    MODE = "mode"


class SweepConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    parameter: SweepParameter
    values: tuple[str, ...] = Field(min_length=1)
    base_train: TrainConfig
    repeats: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_values(self):
        for value in self.values:
            if self.parameter == SweepParameter.MODE:
                if value not in MODE_ARMS:
                    raise ValueError(f"mode values must be one of {MODE_ARMS}")
                continue
            number = float(value)
            if self.parameter == SweepParameter.GAMMA and number < 0:
                raise ValueError("gamma values must be >= 0")
            if self.parameter == SweepParameter.LAMBDA and number <= 0:
                raise ValueError("lambda values must be > 0")
        return self

    def arm_config(self, value: str, repeat: int) -> TrainConfig:
        cfg = self.base_train.model_copy(update={"seed": self.base_train.seed + repeat})
        if self.parameter == SweepParameter.GAMMA:
            return _with_reg(cfg, gamma=float(value))
        if self.parameter == SweepParameter.LAMBDA:
            return _with_reg(cfg, lam=float(value))
        return mode_configs(cfg)[value]

    def arm_label(self, value: str, repeat: int):
        return f"{self.parameter.value}={value},seed={self.base_train.seed + repeat}"


def run_sweep(
    sweep: SweepConfig,
    train_set: Dataset,
    test_set: Dataset,
    layer_sizes,
    workers: int = 1,
) -> dict[str, list[RunRecord]]:
    arms = [
        (
            sweep.arm_label(value, repeat),
            (layer_sizes, train_set, test_set, sweep.arm_config(value, repeat)),
        )
        for value in sweep.values
        for repeat in range(sweep.repeats)
    ]
    return run_arms(train_arm, arms, workers)


def sweep_summary(sweep: SweepConfig, runs: dict[str, list[RunRecord]]):
    """Median over repeats of each arm's best test error and final gap."""
    rows = []
    for value in sweep.values:
        summaries = [
            arm_summary(runs[sweep.arm_label(value, repeat)])
            for repeat in range(sweep.repeats)
        ]
        rows.append(
            {
                "parameter": sweep.parameter.value,
                "value": value,
                "repeats": sweep.repeats,
                "median_best_test_err_pct": median(
                    [s["best_test_err_pct"] for s in summaries]
                ),
                "median_final_overfit_gap_pct": median(
                    [s["final_overfit_gap_pct"] for s in summaries]
                ),
            }
        )
    return rows


def loss_curves(lams=(1.0, 5.0, 10.0, 20.0, 50.0), n_points: int = 181):
    """Pair loss and gradient coefficient against the angle between two detectors.

    Returns (header, rows). The global coefficient is the cosine itself, the
    weight on the partner row in the simplified global gradient.
    """
    if n_points < 2:
        raise ConfigurationError("n_points must be at least 2.")
    lams = [float(lam) for lam in lams]
    if not lams or any(lam <= 0 for lam in lams):
        raise ConfigurationError(f"lambda values must be positive, got {lams}.")
    header = ["angle_deg", "cos", "global_loss", "global_coeff"]
    for lam in lams:
        header += [f"local_loss_lam{lam:g}", f"local_coeff_lam{lam:g}"]
    rows = []
    for angle in np.linspace(0.0, 180.0, n_points):
        cos = float(np.cos(np.radians(angle)))
        row = [float(angle), cos, cos * cos, cos]
        for lam in lams:
            row.append(float(np.logaddexp(0.0, lam * (cos - 1.0))))
            row.append(pairwise_coefficient(cos, lam))
        rows.append(row)
    return header, rows


def reg_step_takes_batch() -> bool:
    """Whether the regularization step signature has any activation input."""
    params = inspect.signature(reg_step).parameters
    return any("batch" in name or "activation" in name for name in params)


def time_reg_step(
    n: int = 256,
    d: int = 784,
    batch_sizes=(128, 256, 512, 1024),
    repeats: int = 5,
    seed: int = 0,
    cfg: RegConfig | None = None,
) -> dict[int, float]:
    """Median wall time of one reg_step per training batch size.

    The task gradient is built from a batch of each size, but the timed call
    only ever sees the n x d weight-shaped gradient.
    """
    if repeats < 1:
        raise ConfigurationError("repeats must be at least 1.")
    cfg = cfg or RegConfig(mode=RegMode.LOCAL, gamma=1.0)
    rng = np.random.default_rng(seed)
    theta = rng.standard_normal((n, d))
    timings = {}
    for batch in batch_sizes:
        inputs = rng.standard_normal((batch, d))
        deltas = rng.standard_normal((batch, n))
        task_grad = deltas.T @ inputs / batch
        samples = []
        for _ in range(repeats):
            start = time.perf_counter()
            reg_step(theta, task_grad, 0.01, cfg)
            samples.append(time.perf_counter() - start)
        timings[int(batch)] = statistics.median(samples)
        logger.info("reg_step_timed batch=%s seconds=%.6f", batch, timings[batch])
    return timings
