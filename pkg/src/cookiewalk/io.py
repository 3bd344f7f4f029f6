"""CSV/JSON output with atomic writes."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from . import __version__


def stamp_line() -> str:
    now = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return f"# cookiewalk {__version__} generated {now}\n"


def write_atomic(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header, rows, stamp: bool = True) -> str:
    buf = io.StringIO()
    if stamp:
        buf.write(stamp_line())
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def read_csv_body(path) -> list[list[str]]:
    """Rows of a CSV written by :func:`csv_text`, without the stamp line."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.reader(lines))


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


class OutputSet:
    """Files written by one command; all removed if the command fails."""

    def __init__(self, directory):
        self.directory = Path(directory) if directory is not None else None
        self.written: list[Path] = []

    def csv(self, name, header, rows):
        return self._write(name, csv_text(header, rows))

    def json(self, name, obj):
        return self._write(name, json_text(obj))

    def _write(self, name, text):
        if self.directory is None:
            return None
        path = write_atomic(self.directory / name, text)
        self.written.append(path)
        return path

    def discard(self):
        for p in self.written:
            try:
                p.unlink()
            except FileNotFoundError:
                pass
        self.written.clear()
