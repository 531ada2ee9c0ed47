"""Text matrix files and atomic output.

Layout::

    # comment lines start with '#'
    d ROWS COLS
    re,im re,im ...        (one row per line, 17 significant digits)

Seventeen significant digits round-trip every double exactly.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import ShapeError


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def format_matrix(a, comments: Iterable[str] = ()) -> str:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim == 1:
        a = a[:, None]
    lines = [f"# {c}" for c in comments]
    lines.append(f"d {a.shape[0]} {a.shape[1]}")
    for row in a:
        lines.append(" ".join(f"{_fmt(v.real)},{_fmt(v.imag)}" for v in row))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    tokens: list[str] = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())
    if len(tokens) < 3 or tokens[0] != "d":
        raise ShapeError("matrix file must start with a 'd ROWS COLS' header")
    try:
        rows, cols = int(tokens[1]), int(tokens[2])
    except ValueError:
        raise ShapeError("matrix header has non-integer dimensions") from None
    body = tokens[3:]
    if rows < 1 or cols < 1 or len(body) != rows * cols:
        raise ShapeError(f"expected {rows}x{cols} entries, found {len(body)}")
    out = np.empty(rows * cols, dtype=np.complex128)
    for i, tok in enumerate(body):
        try:
            re, im = tok.split(",")
            out[i] = complex(float(re), float(im))
        except ValueError:
            raise ShapeError(f"malformed entry {tok!r}; expected 're,im'") from None
    if not np.all(np.isfinite(out)):
        raise ShapeError("matrix file has non-finite entries")
    return out.reshape(rows, cols)


def read_matrix(path) -> np.ndarray:
    return parse_matrix(Path(path).read_text())


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, path: Optional[str], stream) -> None:
    if path:
        write_atomic(path, text)
    else:
        stream.write(text)
