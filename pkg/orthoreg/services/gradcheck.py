"""Central finite-difference checks for the regularizer gradients."""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from orthoreg.core.errors import ConfigurationError
from orthoreg.services.linalg import Matrix, normalize_rows
from orthoreg.services.regularizer import (
    global_grad,
    global_grad_exact,
    global_loss,
    local_grad,
    local_loss_raw,
)

logger = logging.getLogger(__name__)

FD_STEP = 1e-6


def central_difference(
    func: Callable[[Matrix], float], x: Matrix, step: float = FD_STEP
) -> Matrix:
    """Numerical gradient of a scalar function of a matrix."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for index in np.ndindex(x.shape):
        original = x[index]
        x[index] = original + step
        f_plus = func(x)
        x[index] = original - step
        f_minus = func(x)
        x[index] = original
        grad[index] = (f_plus - f_minus) / (2.0 * step)
    return grad


def relative_error(expected: Matrix, actual: Matrix) -> float:
    scale = max(float(np.linalg.norm(expected)), float(np.linalg.norm(actual)))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(expected - actual)) / scale


def tangential_residual(diff: Matrix, unit: Matrix) -> float:
    """Largest component of any diff row orthogonal to the matching unit row."""
    radial = np.sum(diff * unit, axis=1)[:, None] * unit
    return float(np.max(np.linalg.norm(diff - radial, axis=1)))


@dataclass
class GradCheckReport:
    trials: int
    seed: int
    errors: dict[str, list[float]] = field(default_factory=dict)

    def add(self, name: str, value: float):
        self.errors.setdefault(name, []).append(value)

    def worst(self):
        return {name: max(values) for name, values in self.errors.items()}

    def passed(self, tol: float):
        return all(value < tol for value in self.worst().values())

    def lines(self):
        lines = [f"gradcheck trials={self.trials} seed={self.seed}"]
        for name, value in sorted(self.worst().items()):
            lines.append(f"{name} max_rel_error={value:.3e}")
        return lines


def random_shape(rng: np.random.Generator):
    return int(rng.integers(2, 9)), int(rng.integers(2, 17))


def run_gradcheck(
    trials: int = 20, seed: int = 0, lam: float = 10.0, step: float = FD_STEP
) -> GradCheckReport:
    """Compare analytic and numerical gradients over random shapes.

    global_exact and local are FD checks; global_simplified is the largest
    tangential difference between the simplified gradient and the exact
    one at the same scale.
    """
    if trials < 1:
        raise ConfigurationError(f"trials must be at least 1, got {trials}.")
    rng = np.random.default_rng(seed)
    report = GradCheckReport(trials=trials, seed=seed)
    for trial in range(trials):
        n, d = random_shape(rng)
        theta = rng.standard_normal((n, d))

        numeric = central_difference(global_loss, theta, step)
        report.add(
            "global_exact", relative_error(numeric, global_grad_exact(theta).grad)
        )

        unit, _ = normalize_rows(theta)
        numeric = central_difference(lambda m: local_loss_raw(m, lam), unit, step)
        report.add("local", relative_error(numeric, local_grad(unit, lam).grad))

        diff = global_grad(unit).grad - 0.5 * global_grad_exact(unit).grad
        report.add("global_simplified", tangential_residual(diff, unit))
        logger.debug("gradcheck_trial trial=%s n=%s d=%s", trial, n, d)
    return report
