import gzip
import struct

import numpy as np
import pytest
from conftest import idx_images, idx_labels

from orthoreg.core.errors import (
    AppError,
    BadMagicError,
    CountMismatchError,
    DataFileError,
    IdxFormatError,
    IdxLabelRangeError,
    TruncatedFileError,
)
from orthoreg.data.idx import load_idx, mnist_paths, parse_images, parse_labels


def test_parse_images_scales_to_unit_interval():
    pixels = np.array([[[0, 255], [51, 102]]])
    images, side = parse_images(idx_images(pixels))
    assert side == 2
    assert images.shape == (1, 4)
    assert images[0].tolist() == pytest.approx([0.0, 1.0, 0.2, 0.4])


def test_parse_labels_roundtrip():
    labels = parse_labels(idx_labels(np.array([3, 1, 9])))
    assert labels.tolist() == [3, 1, 9]
    assert labels.dtype == np.int64


def test_labels_file_with_image_magic():
    data = struct.pack(">2I", 0x00000803, 1) + b"\x01"
    with pytest.raises(BadMagicError) as exc:
        parse_labels(data, "labels.idx")
    assert "labels.idx" in str(exc.value)


def test_truncated_payload_names_sizes():
    data = idx_images(np.zeros((2, 3, 3)))[:-4]
    with pytest.raises(TruncatedFileError) as exc:
        parse_images(data)
    assert exc.value.expected_bytes == 16 + 18
    assert exc.value.actual_bytes == 16 + 14


def test_truncated_header():
    with pytest.raises(TruncatedFileError):
        parse_images(b"\x00\x00\x08")


def test_trailing_bytes_are_rejected():
    with pytest.raises(IdxFormatError):
        parse_labels(idx_labels(np.array([1, 2])) + b"\x00")


def test_non_square_images_are_rejected():
    data = struct.pack(">4I", 0x00000803, 1, 2, 3) + bytes(6)
    with pytest.raises(IdxFormatError):
        parse_images(data)


def test_label_out_of_range():
    with pytest.raises(IdxLabelRangeError) as exc:
        parse_labels(idx_labels(np.array([0, 10])), "labels.idx")
    assert isinstance(exc.value, IdxFormatError)
    assert exc.value.code == "idx_label_range"
    assert exc.value.details["label"] == 10
    assert "labels.idx" in exc.value.message


def test_zero_pixel_images_are_rejected_by_the_parser():
    data = struct.pack(">4I", 0x00000803, 5, 0, 0)
    with pytest.raises(IdxFormatError) as exc:
        parse_images(data, "empty.idx")
    assert "at least one pixel" in exc.value.message


def test_fuzzed_headers_never_escape_as_other_errors():
    rng = np.random.default_rng(0)
    for _ in range(300):
        dims = rng.integers(0, 2**32, size=3, dtype=np.uint64)
        if rng.random() < 0.5:
            dims = rng.integers(0, 40, size=3, dtype=np.uint64)
        magic = 0x00000803 if rng.random() < 0.8 else int(rng.integers(0, 2**32))
        header = struct.pack(">4I", magic, *(int(d) for d in dims))
        payload = bytes(int(rng.integers(0, 200)))
        cut = int(rng.integers(0, len(header) + 1))
        for blob in (header + payload, header[:cut]):
            try:
                images, side = parse_images(blob)
            except IdxFormatError:
                continue
            assert images.shape[1] == side * side


def test_load_idx_plain_and_gzip(tmp_path):
    pixels = np.arange(2 * 4 * 4).reshape(2, 4, 4)
    (tmp_path / "img").write_bytes(idx_images(pixels))
    (tmp_path / "lbl.gz").write_bytes(gzip.compress(idx_labels(np.array([4, 7]))))
    ds = load_idx(tmp_path / "img", tmp_path / "lbl.gz")
    assert ds.n_examples == 2
    assert ds.image_side == 4
    assert ds.labels.tolist() == [4, 7]


def test_load_idx_count_mismatch(tmp_path):
    (tmp_path / "img").write_bytes(idx_images(np.zeros((3, 2, 2))))
    (tmp_path / "lbl").write_bytes(idx_labels(np.array([1, 2])))
    with pytest.raises(CountMismatchError):
        load_idx(tmp_path / "img", tmp_path / "lbl")


def test_load_idx_missing_file_names_path(tmp_path):
    with pytest.raises(DataFileError) as exc:
        load_idx(tmp_path / "nope", tmp_path / "nope-labels")
    assert exc.value.path.endswith("nope")
    assert isinstance(exc.value, AppError)


def test_corrupt_gzip(tmp_path):
    (tmp_path / "img.gz").write_bytes(b"not gzip at all")
    (tmp_path / "lbl").write_bytes(idx_labels(np.array([1])))
    with pytest.raises(DataFileError):
        load_idx(tmp_path / "img.gz", tmp_path / "lbl")


def test_mnist_paths(mnist_dir):
    images, labels = mnist_paths(mnist_dir, "train")
    assert images.name == "train-images-idx3-ubyte"
    assert labels.name == "train-labels-idx1-ubyte"
    test_images, _ = mnist_paths(mnist_dir, "test")
    assert test_images.name.startswith("t10k")
    with pytest.raises(DataFileError):
        mnist_paths(mnist_dir / "missing", "train")
