from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from orthoreg.core.errors import LabelRangeError, ShapeError
from orthoreg.services.linalg import Matrix, as_matrix


@dataclass(frozen=True)
class Dataset:
    """Flattened examples (one per row) with integer class labels.

    image_side is set for square images and None for generic feature data.
    """

    images: Matrix
    labels: npt.NDArray[np.int64]
    image_side: int | None = None

    def __post_init__(self):
        images = as_matrix(self.images, "images")
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1 or labels.shape[0] != images.shape[0]:
            raise ShapeError(
                f"Got {labels.shape[0]} labels for {images.shape[0]} examples."
            )
        if self.image_side is not None and images.shape[1] != self.image_side**2:
            raise ShapeError(
                f"Rows have {images.shape[1]} values, expected {self.image_side}^2."
            )
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "labels", labels)

    @property
    def n_examples(self):
        return self.images.shape[0]

    @property
    def n_features(self):
        return self.images.shape[1]

    def check_labels(self, n_classes: int):
        if np.any(self.labels < 0) or np.any(self.labels >= n_classes):
            raise LabelRangeError(f"Labels must lie in [0, {n_classes}).")

    def subset(self, count: int):
        return Dataset(self.images[:count], self.labels[:count], self.image_side)
