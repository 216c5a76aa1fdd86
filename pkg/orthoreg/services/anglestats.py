import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from orthoreg.core.errors import ConfigurationError, ShapeError
from orthoreg.services.linalg import Matrix, Vector, as_matrix
from orthoreg.services.regularizer import cosine_matrix


class AngleStats(BaseModel):
    """Pairwise geometry of a weight matrix, angles in degrees."""

    model_config = ConfigDict(frozen=True)

    n_detectors: int = Field(ge=2)
    min_pairwise_angle: float = Field(ge=0, le=180)
    mean_nn_angle: float = Field(ge=0, le=180)
    histogram: list[int]
    bin_edges: list[float]

    def histogram_payload(self):
        return {"bin_edges_deg": self.bin_edges, "counts": self.histogram}


def _require_pairs(theta) -> Matrix:
    theta = as_matrix(theta, "theta")
    if theta.shape[0] < 2:
        raise ShapeError("Angle statistics need at least two rows.")
    return theta


def pairwise_angles(theta) -> Matrix:
    """Angles between every pair of rows, 0 on the diagonal."""
    theta = _require_pairs(theta)
    angles = np.degrees(np.arccos(cosine_matrix(theta)))
    np.fill_diagonal(angles, 0.0)
    return angles


def nn_angles(theta) -> Vector:
    """Angle from each row to its nearest other row."""
    angles = pairwise_angles(theta)
    np.fill_diagonal(angles, np.inf)
    return angles.min(axis=1)


def summarize(theta, n_bins: int = 36) -> AngleStats:
    if n_bins < 1:
        raise ConfigurationError(f"n_bins must be at least 1, got {n_bins}.")
    angles = pairwise_angles(theta)
    n = angles.shape[0]
    upper = angles[np.triu_indices(n, k=1)]
    counts, edges = np.histogram(upper, bins=n_bins, range=(0.0, 180.0))
    nearest = angles + np.diag(np.full(n, np.inf))
    nn = nearest.min(axis=1)
    smallest = float(upper.min())
    return AngleStats(
        n_detectors=n,
        min_pairwise_angle=smallest,
        # Rounding in the mean must not drop it below its own minimum.
        mean_nn_angle=max(float(nn.mean()), smallest),
        histogram=[int(c) for c in counts],
        bin_edges=[float(e) for e in edges],
    )
