"""Readers and writers for tensors, matrices, series and fitted models.

Tensor text format: a first line ``dims I J K`` followed by the entries of
the mode-1 unfolding, row by row, whitespace separated (any line breaks).
Matrices are headerless CSV with one row per line. Every writer goes through
a temporary file in the target directory and an atomic rename.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from dataclasses import asdict
from pathlib import Path
from typing import Union

import numpy as np

from .decompositions import FitReport, ParafacModel, SdtModel, TuckerModel, model_kind
from .tensor_core import as_matrix, as_tensor3, fold_n, unfold_n

__all__ = [
    "ParseError",
    "atomic_write_text",
    "format_tensor",
    "parse_tensor",
    "read_tensor",
    "write_tensor",
    "read_matrix",
    "write_matrix",
    "read_vector",
    "write_json",
    "save_model",
    "load_model",
]

PathLike = Union[str, os.PathLike]


class ParseError(ValueError):
    """Malformed input file; ``line`` is 1-based (0 when unknown)."""

    def __init__(self, message: str, line: int = 0, source: str = "<string>"):
        where = f"{source}:{line}" if line else source
        super().__init__(f"{where}: {message}")
        self.line = line
        self.source = source


def atomic_write_text(path: PathLike, text: str) -> None:
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


def _fmt(x) -> str:
    # repr of a Python float round-trips exactly; ints stay ints
    if isinstance(x, (np.integer, int)):
        return str(int(x))
    return repr(float(x))


def format_tensor(t) -> str:
    t = as_tensor3(t)
    x1 = unfold_n(t, 1)
    lines = ["dims " + " ".join(str(d) for d in t.shape)]
    lines += [" ".join(_fmt(v) for v in row) for row in x1]
    return "\n".join(lines) + "\n"


def _number(tok: str, line: int, source: str):
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"not a number: {tok!r}", line, source) from None
    if not np.isfinite(v):
        raise ParseError(f"non-finite value {tok!r}", line, source)
    return v


def parse_tensor(text: str, source: str = "<string>") -> np.ndarray:
    lines = text.splitlines()
    head_no = next((i for i, ln in enumerate(lines) if ln.strip()), None)
    if head_no is None:
        raise ParseError("empty tensor file", 1, source)
    head = lines[head_no].split()
    if len(head) != 4 or head[0] != "dims":
        raise ParseError("expected header 'dims I J K'", head_no + 1, source)
    try:
        dims = tuple(int(d) for d in head[1:])
    except ValueError:
        raise ParseError("dimensions must be integers", head_no + 1, source) from None
    if min(dims) < 1:
        raise ParseError("dimensions must be positive", head_no + 1, source)
    n = dims[0] * dims[1] * dims[2]
    vals = []
    last = head_no + 1
    for i in range(head_no + 1, len(lines)):
        toks = lines[i].split()
        if toks:
            last = i + 1
        for tok in toks:
            if len(vals) == n:
                raise ParseError(f"more than {n} values", i + 1, source)
            vals.append(_number(tok, i + 1, source))
    if len(vals) != n:
        raise ParseError(f"expected {n} values, found {len(vals)}", last, source)
    dtype = np.int64 if all(isinstance(v, int) for v in vals) else float
    x1 = np.array(vals, dtype=dtype).reshape(dims[0], dims[1] * dims[2])
    return fold_n(x1, 1, dims)


def read_tensor(path: PathLike) -> np.ndarray:
    path = Path(path)
    return parse_tensor(path.read_text(), str(path))


def write_tensor(path: PathLike, t) -> None:
    atomic_write_text(path, format_tensor(t))


def _format_matrix(m) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in np.atleast_2d(m):
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_matrix(path: PathLike, m) -> None:
    atomic_write_text(path, _format_matrix(as_matrix(m)))


def read_matrix(path: PathLike) -> np.ndarray:
    path = Path(path)
    rows = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            vals = [float(_number(tok.strip(), i, str(path))) for tok in row]
            if rows and len(vals) != len(rows[0]):
                raise ParseError(f"row has {len(vals)} columns, expected {len(rows[0])}", i, str(path))
            rows.append(vals)
    if not rows:
        raise ParseError("empty matrix file", 1, str(path))
    return np.array(rows)


def read_vector(path: PathLike) -> np.ndarray:
    """Read a one-column CSV (or a single row) as a vector."""
    m = read_matrix(path)
    if min(m.shape) != 1:
        raise ParseError(f"expected a single column, got shape {m.shape}", 0, str(path))
    return m.ravel()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def write_json(path: PathLike, obj) -> None:
    atomic_write_text(path, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def save_model(directory: PathLike, model, report: FitReport = None, seed=None) -> None:
    """Write factor CSVs, the core (mode-1 unfolded) and ``metadata.json``."""
    d = Path(directory)
    kind = model_kind(model)
    write_matrix(d / "A.csv", model.A)
    write_matrix(d / "B.csv", model.B)
    write_matrix(d / "C.csv", model.C)
    if kind == "tucker":
        write_matrix(d / "core.csv", unfold_n(model.core, 1))
    elif kind == "sdt":
        write_matrix(d / "core_diag.csv", model.core_diag)
    meta = {"kind": kind, "dims": list(model.shape), "ranks": list(model.ranks), "seed": seed}
    if report is not None:
        rep = asdict(report)
        rep.pop("history")
        meta["report"] = rep
    write_json(d / "metadata.json", meta)


def load_model(directory: PathLike):
    d = Path(directory)
    meta = json.loads((d / "metadata.json").read_text())
    a, b, c = (read_matrix(d / f"{n}.csv") for n in "ABC")
    kind = meta["kind"]
    if kind == "parafac":
        return ParafacModel(a, b, c)
    if kind == "tucker":
        p, q, r = meta["ranks"]
        return TuckerModel(a, b, c, fold_n(read_matrix(d / "core.csv"), 1, (p, q, r)))
    if kind == "sdt":
        return SdtModel(a, b, c, read_matrix(d / "core_diag.csv"))
    raise ParseError(f"unknown model kind {kind!r}", 0, str(d / "metadata.json"))
