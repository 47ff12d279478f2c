"""Matrix JSON, CSV formatting and atomic output."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
import tempfile
from numbers import Real
from typing import Iterable, Sequence

import numpy as np


class MatrixFormatError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _rows(obj, name: str, dim: int) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != dim:
        raise MatrixFormatError(name, f"expected a list of {dim} rows")
    out = np.empty((dim, dim))
    for i, row in enumerate(obj):
        if not isinstance(row, list) or len(row) != dim:
            raise MatrixFormatError(f"{name}[{i}]", f"expected a row of {dim} numbers")
        for j, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, Real) or not math.isfinite(x):
                raise MatrixFormatError(f"{name}[{i}][{j}]", f"not a finite number: {x!r}")
            out[i, j] = x
    return out


def matrix_from_json(obj) -> np.ndarray:
    """``{"dim": m, "re": [[...]], "im": [[...]]}``; ``im`` defaults to zero."""
    if not isinstance(obj, dict):
        raise MatrixFormatError("<root>", "expected a JSON object")
    dim = obj.get("dim")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise MatrixFormatError("dim", f"expected a positive integer, got {dim!r}")
    if "re" not in obj:
        raise MatrixFormatError("re", "missing")
    A = _rows(obj["re"], "re", dim)
    if obj.get("im") is not None:
        return A + 1j * _rows(obj["im"], "im", dim)
    return A


def matrix_to_json(A) -> dict:
    A = np.asarray(A)
    out = {"dim": int(A.shape[0]), "re": A.real.tolist()}
    if np.iscomplexobj(A) and np.any(A.imag):
        out["im"] = A.imag.tolist()
    return out


def load_matrix(path: str) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MatrixFormatError("<root>", f"invalid JSON in {path}: {exc}") from exc
    return matrix_from_json(obj)


def format_float(x) -> str:
    """17 significant digits, '.' decimal, independent of locale."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else v if isinstance(v, (str, int)) else format_float(v) for v in row])
    return buf.getvalue()


def write_output(text: str, path: str | None) -> None:
    """Write ``text`` to ``path`` atomically, or to stdout when ``path`` is None or '-'."""
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
