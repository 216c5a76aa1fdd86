"""MNIST IDX containers.

Images: magic 0x00000803, then count, rows, cols as big-endian uint32,
then count*rows*cols unsigned bytes. Labels: magic 0x00000801, count, then
count unsigned bytes. Files ending in .gz are decompressed first.
"""

import gzip
import logging
import struct
from pathlib import Path

import numpy as np

from orthoreg.core.errors import (
    BadMagicError,
    CountMismatchError,
    DataFileError,
    IdxFormatError,
    IdxLabelRangeError,
    TruncatedFileError,
)
from orthoreg.data.dataset import Dataset

logger = logging.getLogger(__name__)

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
MNIST_CLASSES = 10


def _read_header(data: bytes, source: str, magic: int, n_dims: int):
    header_size = 4 * (1 + n_dims)
    if len(data) < header_size:
        raise TruncatedFileError(source, header_size, len(data))
    fields = struct.unpack(f">{1 + n_dims}I", data[:header_size])
    if fields[0] != magic:
        raise BadMagicError(source, magic, fields[0])
    return header_size, fields[1:]


def _payload(data: bytes, source: str, offset: int, expected: int):
    actual = len(data) - offset
    if actual < expected:
        raise TruncatedFileError(source, offset + expected, len(data))
    if actual > expected:
        raise IdxFormatError(
            f"{source}: {actual - expected} unexpected trailing bytes.",
            details={"source": source},
        )
    if expected == 0:
        return np.zeros(0, dtype=np.uint8)
    return np.frombuffer(data, dtype=np.uint8, count=expected, offset=offset)


def parse_images(data: bytes, source: str = "<images>"):
    """Decode an image container into (count x rows*cols) floats in [0, 1]."""
    offset, (count, rows, cols) = _read_header(data, source, IMAGES_MAGIC, 3)
    if rows == 0:
        raise IdxFormatError(f"{source}: images must have at least one pixel.")
    if rows != cols:
        raise IdxFormatError(f"{source}: images must be square, got {rows}x{cols}.")
    pixels = _payload(data, source, offset, count * rows * cols)
    images = pixels.reshape(count, rows * cols).astype(np.float64) / 255.0
    return images, rows


def parse_labels(data: bytes, source: str = "<labels>", n_classes=MNIST_CLASSES):
    offset, (count,) = _read_header(data, source, LABELS_MAGIC, 1)
    labels = _payload(data, source, offset, count).astype(np.int64)
    if labels.size and int(labels.max()) >= n_classes:
        raise IdxLabelRangeError(source, int(labels.max()), n_classes)
    return labels


def _read_file(path: Path):
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DataFileError(str(path), f"cannot read file ({exc.strerror})") from exc
    if path.suffix == ".gz":
        try:
            return gzip.decompress(raw)
        except (OSError, EOFError) as exc:
            raise DataFileError(str(path), "corrupt gzip stream") from exc
    return raw


def load_idx(images_path, labels_path) -> Dataset:
    images_path = Path(images_path)
    labels_path = Path(labels_path)
    images, side = parse_images(_read_file(images_path), str(images_path))
    labels = parse_labels(_read_file(labels_path), str(labels_path))
    if images.shape[0] != labels.shape[0]:
        raise CountMismatchError(images.shape[0], labels.shape[0])
    if images.shape[0] == 0:
        raise IdxFormatError(f"{images_path}: container holds no images.")
    logger.info(
        "idx_loaded images=%s labels=%s count=%s side=%s",
        images_path,
        labels_path,
        images.shape[0],
        side,
    )
    return Dataset(images=images, labels=labels, image_side=side)


def mnist_paths(data_dir, split: str = "train"):
    """Locate the canonical MNIST files for a split, plain or gzipped."""
    prefix = "train" if split == "train" else "t10k"
    directory = Path(data_dir)
    found = []
    for kind in ("images-idx3-ubyte", "labels-idx1-ubyte"):
        plain = directory / f"{prefix}-{kind}"
        gzipped = directory / f"{prefix}-{kind}.gz"
        if plain.exists():
            found.append(plain)
        elif gzipped.exists():
            found.append(gzipped)
        else:
            raise DataFileError(str(plain), "MNIST file not found")
    return found[0], found[1]
