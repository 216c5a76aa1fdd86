"""Plain-text weight matrices: a header line "n d", then n rows of d decimals."""

import math
from pathlib import Path

import numpy as np

from orthoreg.core.errors import DataFileError, WeightFileParseError
from orthoreg.services.linalg import Matrix, as_matrix
from orthoreg.storage.filesystem import write_text


def _parse_count(token: str, line: int, source: str):
    try:
        value = int(token)
    except ValueError as exc:
        raise WeightFileParseError(line, f"bad count {token!r}", source) from exc
    if value < 1:
        message = f"count must be positive, got {value}"
        raise WeightFileParseError(line, message, source)
    return value


def parse_weights(text: str, source: str = "<weights>") -> Matrix:
    lines = text.split("\n")
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise WeightFileParseError(1, "missing header line", source)
    header = lines[0].split()
    if len(header) != 2:
        raise WeightFileParseError(1, "header must be 'n d'", source)
    n = _parse_count(header[0], 1, source)
    d = _parse_count(header[1], 1, source)

    rows = []
    for offset in range(n):
        line_no = offset + 2
        if line_no > len(lines):
            raise WeightFileParseError(
                line_no, f"expected {n} rows, found {len(lines) - 1}", source
            )
        tokens = lines[line_no - 1].split()
        if len(tokens) != d:
            raise WeightFileParseError(
                line_no, f"expected {d} values, found {len(tokens)}", source
            )
        try:
            values = [float(token) for token in tokens]
        except ValueError as exc:
            raise WeightFileParseError(line_no, "non-numeric value", source) from exc
        if not all(math.isfinite(value) for value in values):
            raise WeightFileParseError(line_no, "non-finite value", source)
        rows.append(values)
    if len(lines) > n + 1:
        raise WeightFileParseError(n + 2, f"unexpected data after {n} rows", source)
    return np.array(rows, dtype=np.float64)


def format_weights(m) -> str:
    m = as_matrix(m)
    lines = [f"{m.shape[0]} {m.shape[1]}"]
    for row in m:
        lines.append(" ".join(format(float(value), ".17g") for value in row))
    return "\n".join(lines) + "\n"


def read_weight_file(path) -> Matrix:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DataFileError(str(path), "cannot read weight file") from exc
    return parse_weights(text, str(path))


def write_weight_file(path, m):
    write_text(Path(path), format_weights(m))
