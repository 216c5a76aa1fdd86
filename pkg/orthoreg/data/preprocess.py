import cv2
import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from orthoreg.core.errors import ConfigurationError, DegenerateDataError
from orthoreg.data.dataset import Dataset


class PixelStats(BaseModel):
    """Global scalar mean and standard deviation over every training pixel."""

    model_config = ConfigDict(frozen=True)

    mean: float
    std: float = Field(gt=0)


def fit_stats(ds: Dataset) -> PixelStats:
    std = float(np.std(ds.images))
    if not std > 0:
        raise DegenerateDataError("Global pixel std is zero; cannot standardize.")
    return PixelStats(mean=float(np.mean(ds.images)), std=std)


def standardize(ds: Dataset, stats: PixelStats | None = None):
    """Return (standardized dataset, stats used).

    Pass the training stats when standardizing a test split.
    """
    if stats is None:
        stats = fit_stats(ds)
    images = (ds.images - stats.mean) / stats.std
    return Dataset(images, ds.labels, ds.image_side), stats


def upsample(ds: Dataset, target_side: int = 32) -> Dataset:
    """Bilinear resize of every image to target_side x target_side."""
    side = ds.image_side
    if side is None:
        raise ConfigurationError("Upsampling needs square image data.")
    if target_side < side:
        raise ConfigurationError(
            f"Cannot upsample {side}px images down to {target_side}px."
        )
    if target_side == side:
        return ds
    out = np.empty((ds.n_examples, target_side * target_side), dtype=np.float64)
    for index, row in enumerate(ds.images):
        image = row.reshape(side, side)
        resized = cv2.resize(
            image, (target_side, target_side), interpolation=cv2.INTER_LINEAR
        )
        out[index] = resized.reshape(-1)
    return Dataset(out, ds.labels, target_side)
