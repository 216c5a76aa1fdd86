from dataclasses import dataclass
from typing import Any


@dataclass(eq=False)
class AppError(Exception):
    """Base error type carrying a stable code and a process exit code."""

    message: str
    exit_code: int = 1
    code: str = "error"
    details: dict[str, Any] | None = None

    def __str__(self):
        return self.message

    def to_payload(self):
        payload: dict[str, Any] = {
            "status": "error",
            "code": self.code,
            "message": self.message,
        }
        if self.details:
            payload["details"] = self.details
        return payload


class ShapeError(AppError):
    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(
            message=message, exit_code=1, code="shape_mismatch", details=details
        )


class DegenerateRowError(AppError):
    """A weight row too short to define a direction."""

    def __init__(self, row_index: int, norm: float):
        self.row_index = row_index
        super().__init__(
            message=f"Row {row_index} is degenerate (norm={norm:.3e}).",
            exit_code=1,
            code="degenerate_row",
            details={"row": row_index, "norm": norm},
        )


class PreconditionError(AppError):
    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(
            message=message, exit_code=1, code="precondition_failed", details=details
        )


class ConfigurationError(AppError):
    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(
            message=message, exit_code=2, code="config_error", details=details
        )


class DataFileError(AppError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(
            message=f"{path}: {message}",
            exit_code=1,
            code="data_file",
            details={"path": path},
        )


class IdxFormatError(AppError):
    def __init__(
        self, message: str, code: str = "idx_format", details: dict | None = None
    ):
        super().__init__(message=message, exit_code=1, code=code, details=details)


class BadMagicError(IdxFormatError):
    def __init__(self, source: str, expected: int, actual: int):
        super().__init__(
            f"{source}: bad IDX magic 0x{actual:08x}, expected 0x{expected:08x}.",
            code="idx_bad_magic",
            details={"source": source, "expected": expected, "actual": actual},
        )


class TruncatedFileError(IdxFormatError):
    def __init__(self, source: str, expected_bytes: int, actual_bytes: int):
        self.expected_bytes = expected_bytes
        self.actual_bytes = actual_bytes
        super().__init__(
            f"{source}: truncated IDX payload, expected {expected_bytes} bytes "
            f"but found {actual_bytes}.",
            code="idx_truncated",
            details={
                "source": source,
                "expected_bytes": expected_bytes,
                "actual_bytes": actual_bytes,
            },
        )


class CountMismatchError(IdxFormatError):
    def __init__(self, n_images: int, n_labels: int):
        super().__init__(
            f"Image count {n_images} does not match label count {n_labels}.",
            code="idx_count_mismatch",
            details={"images": n_images, "labels": n_labels},
        )


class IdxLabelRangeError(IdxFormatError):
    def __init__(self, source: str, label: int, n_classes: int):
        super().__init__(
            f"{source}: label {label} outside [0, {n_classes}).",
            code="idx_label_range",
            details={"source": source, "label": label, "n_classes": n_classes},
        )


class LabelRangeError(AppError):
    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(
            message=message, exit_code=1, code="label_range", details=details
        )


class WeightFileParseError(AppError):
    def __init__(self, line: int, message: str, source: str = "<weights>"):
        self.line = line
        super().__init__(
            message=f"{source}:{line}: {message}",
            exit_code=1,
            code="weight_file_parse",
            details={"line": line, "source": source},
        )


class DegenerateDataError(AppError):
    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(
            message=message, exit_code=1, code="degenerate_data", details=details
        )


class GradientCheckError(AppError):
    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(
            message=message, exit_code=1, code="gradcheck_failed", details=details
        )
