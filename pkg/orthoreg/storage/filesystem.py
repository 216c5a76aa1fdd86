import csv
import io
import json
from pathlib import Path


def ensure_dir(path: Path):
    """Ensure a directory exists."""
    path.mkdir(parents=True, exist_ok=True)


def write_text(path: Path, text: str):
    """Write UTF-8 text with LF endings, creating parent directories."""
    ensure_dir(path.parent)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)


def format_cell(value):
    """Locale-independent CSV cell: shortest round-trip repr for floats."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def render_csv(header: list[str], rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(value) for value in row])
    return buffer.getvalue()


def write_csv(path: Path, header: list[str], rows):
    write_text(path, render_csv(header, rows))


def render_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_json(path: Path, payload):
    write_text(path, render_json(payload))
