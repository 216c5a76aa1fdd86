"""Squared-cosine (global) and softplus-squashed (local) decorrelation losses.

Both losses sum over ordered detector pairs (i, j), i != j. The global loss
penalises any correlation; the local loss only penalises pairs closer than
about 90 degrees, so negatively correlated detectors are left alone.
"""

import logging
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from orthoreg.core.errors import ConfigurationError, ShapeError
from orthoreg.services.linalg import (
    EPS,
    Matrix,
    as_matrix,
    as_vector,
    check_rows,
    gram,
    normalize_rows,
    require_unit_rows,
    row_norms,
    zero_diag,
)

logger = logging.getLogger(__name__)


class RegMode(StrEnum):
    GLOBAL = "global"
    LOCAL = "local"


class RegConfig(BaseModel):
    """How a weight matrix is regularized.

    `lam` is the locality coefficient and is ignored in global mode.
    """

    model_config = ConfigDict(frozen=True)

    mode: RegMode = RegMode.GLOBAL
    gamma: float = Field(default=0.0, ge=0)
    lam: float = Field(default=10.0, gt=0)
    restore_magnitudes: bool = True
    normalize_reg_grad: bool = False


class RegGradient(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grad: np.ndarray
    loss_value: float = Field(ge=0)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def cosine_similarity(u, v) -> float:
    u = as_vector(u, "u")
    v = as_vector(v, "v")
    if u.shape != v.shape:
        raise ShapeError(f"Vector lengths differ: {u.shape[0]} vs {v.shape[0]}.")
    check_rows(np.vstack([u, v]))
    cos = float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))
    return min(1.0, max(-1.0, cos))


def cosine_matrix(theta) -> Matrix:
    """Pairwise cosines of the rows, clamped to [-1, 1]."""
    unit, _ = normalize_rows(theta)
    return np.clip(gram(unit), -1.0, 1.0)


def global_loss(theta) -> float:
    unit, _ = normalize_rows(theta)
    off = zero_diag(gram(unit))
    return 0.5 * float(np.sum(off * off))


def global_grad_exact(theta) -> RegGradient:
    """True derivative of global_loss, including the normalization terms.

    For row i with cosines c_ik: 2/|θ_i| * Σ_k c_ik (θ̂_k - c_ik θ̂_i).
    """
    theta = as_matrix(theta, "theta")
    unit, norms = normalize_rows(theta)
    cos = zero_diag(gram(unit))
    radial = np.sum(cos * cos, axis=1)
    grad = 2.0 * (cos @ unit - radial[:, None] * unit) / norms[:, None]
    return RegGradient(grad=grad, loss_value=0.5 * float(np.sum(cos * cos)))


def global_grad(theta_normalized) -> RegGradient:
    """Simplified gradient (ΘΘᵀ - diag(ΘΘᵀ))Θ for unit-row matrices."""
    theta = require_unit_rows(theta_normalized)
    off = zero_diag(gram(theta))
    return RegGradient(grad=off @ theta, loss_value=0.5 * float(np.sum(off * off)))


def local_loss_raw(theta: Matrix, lam: float) -> float:
    """Local loss on raw inner products, without the unit-row check."""
    off = zero_diag(gram(theta))
    terms = np.logaddexp(0.0, lam * (off - 1.0))
    np.fill_diagonal(terms, 0.0)
    return float(np.sum(terms))


def _check_lambda(lam: float):
    if not lam > 0:
        raise ConfigurationError(f"lambda must be positive, got {lam}.")


def local_loss(theta_normalized, lam: float = 10.0) -> float:
    _check_lambda(lam)
    theta = require_unit_rows(theta_normalized)
    return local_loss_raw(theta, lam)


def local_coefficients(theta_normalized, lam: float = 10.0) -> Matrix:
    """Pairwise coefficients λ·sigmoid(λ(<θ_i, θ_k> - 1)) with a zero diagonal.

    Equal to λ e^{λs} / (e^{λs} + e^λ) but never overflows.
    """
    _check_lambda(lam)
    theta = require_unit_rows(theta_normalized)
    coeff = lam * _sigmoid(lam * (gram(theta) - 1.0))
    np.fill_diagonal(coeff, 0.0)
    return coeff


def pairwise_coefficient(cos: float, lam: float = 10.0) -> float:
    _check_lambda(lam)
    return float(lam * _sigmoid(lam * (cos - 1.0)))


def local_grad(theta_normalized, lam: float = 10.0) -> RegGradient:
    """Gradient of local_loss with respect to the raw entries of Θ.

    Each unordered pair appears twice in the loss, so the gradient is
    (M + Mᵀ)Θ for the coefficient matrix M.
    """
    theta = require_unit_rows(theta_normalized)
    coeff = local_coefficients(theta, lam)
    grad = (coeff + coeff.T) @ theta
    return RegGradient(grad=grad, loss_value=local_loss_raw(theta, lam))


def configured_loss(theta, cfg: RegConfig) -> float:
    """Loss of the configured mode, evaluated on the normalized rows."""
    unit, _ = normalize_rows(theta)
    if cfg.mode == RegMode.LOCAL:
        return local_loss_raw(unit, cfg.lam)
    return global_loss(unit)


def regularization_gradient(theta_normalized, cfg: RegConfig) -> RegGradient:
    if cfg.mode == RegMode.LOCAL:
        return local_grad(theta_normalized, cfg.lam)
    return global_grad(theta_normalized)


def reg_step(theta, task_grad, alpha: float, cfg: RegConfig) -> Matrix:
    """One combined update Δ = -α(∇J + γ∇C) on a weight matrix.

    ∇C is computed on the row-normalized matrix. With restore_magnitudes the
    rows are rescaled to the norms they would have after the task update
    alone, so the regularizer only moves angles. A negative alpha ascends.
    """
    theta = as_matrix(theta, "theta")
    if not np.isfinite(alpha) or alpha == 0:
        raise ConfigurationError(f"alpha must be finite and non-zero, got {alpha}.")
    if task_grad is None:
        task = np.zeros_like(theta)
    else:
        task = as_matrix(task_grad, "task_grad")
        if task.shape != theta.shape:
            raise ShapeError(
                f"Task gradient shape {task.shape} does not match {theta.shape}.",
            )

    unit, _ = normalize_rows(theta)
    if cfg.gamma == 0:
        return theta - alpha * task

    reg = regularization_gradient(unit, cfg).grad
    if cfg.normalize_reg_grad:
        magnitude = float(np.linalg.norm(reg))
        if magnitude > EPS:
            reg = reg / magnitude

    updated = theta - alpha * (task + cfg.gamma * reg)
    if cfg.restore_magnitudes:
        target = row_norms(theta - alpha * task)
        current = check_rows(updated)
        updated = updated * (target / current)[:, None]
    return updated
