"""Text formats: field, phase, profile, threshold and aggregate CSVs, JSON summaries.

Every CSV starts with a one-row metadata table (its own header line), then
the data table.  Floats are written with ``repr`` so that reading a file back
reproduces the arrays bit for bit.  Writes are atomic (temporary file in the
target directory, then rename).
"""
from __future__ import annotations

import configparser
import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .boundary import BoundaryPhase
from .grid import PolarField, SectorField
from .radial import RadialProfile
from .symmetry import SymmetryClass

GLUING_TOL = 1e-9
FIELD_META = ("d", "sign", "delta", "R", "Nr", "Ntheta")
FIELD_COLUMNS = ("i", "j", "r", "theta", "u1", "u2")
AGGREGATE_COLUMNS = ("d", "sign", "delta", "R", "E_total", "W_mass", "winding", "delta0",
                     "in_threshold_region", "nonradiality", "status")


class FormatError(ValueError):
    pass


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def atomic_write(path, text: str) -> Path:
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


def _table(meta_keys, meta_vals, columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if meta_keys:
        w.writerow(meta_keys)
        w.writerow([fmt(v) for v in meta_vals])
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _read_table(path, n_meta: bool = True):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if n_meta:
        if len(rows) < 3:
            raise FormatError(f"{path}: truncated file")
        meta = dict(zip(rows[0], rows[1]))
        header, body = rows[2], rows[3:]
    else:
        meta, header, body = {}, rows[0], rows[1:]
    return meta, header, body


# --- fields ---------------------------------------------------------------------------


def field_csv(field, delta: float) -> str:
    if isinstance(field, SectorField):
        sym = field.symmetry
        meta = (sym.d, sym.sign, float(delta), float(field.R), field.Nr, field.Ntheta)
        r, th = field.r, field.theta
    elif isinstance(field, PolarField):
        if not field.is_uniform_disk:
            raise ValueError("only uniform disk fields can be written")
        sym = field.symmetry
        meta = (sym.d if sym else 0, sym.sign if sym else "none", float(delta), field.R, field.Nr, field.M)
        r, th = field.r, field.theta
    else:
        raise TypeError(f"cannot write {type(field).__name__}")
    v = field.values
    rows = ((i, j, r[i], th[j], v[i, j, 0], v[i, j, 1]) for i in range(r.size) for j in range(th.size))
    return _table(FIELD_META, meta, FIELD_COLUMNS, rows)


def write_field(path, field, delta: float) -> Path:
    return atomic_write(path, field_csv(field, delta))


def read_field(path):
    """Returns (field, delta); sector files must satisfy the gluing rules."""
    meta, header, body = _read_table(path)
    if tuple(header) != FIELD_COLUMNS or set(FIELD_META) - set(meta):
        raise FormatError(f"{path}: not a field file")
    try:
        d = int(meta["d"])
        sign = meta["sign"]
        delta = float(meta["delta"])
        R = float(meta["R"])
        Nr = int(meta["Nr"])
        Nt = int(meta["Ntheta"])
    except ValueError as exc:
        raise FormatError(f"{path}: bad header: {exc}") from exc
    cols = Nt + 1 if sign != "none" else Nt
    if len(body) != (Nr + 1) * cols:
        raise FormatError(f"{path}: expected {(Nr + 1) * cols} rows, found {len(body)}")
    data = np.array([[float(x) for x in row] for row in body])
    vals = np.empty((Nr + 1, cols, 2))
    ii, jj = data[:, 0].astype(int), data[:, 1].astype(int)
    vals[ii, jj, 0] = data[:, 4]
    vals[ii, jj, 1] = data[:, 5]
    if sign == "none":
        return PolarField(np.linspace(0.0, R, Nr + 1), vals), delta
    field = SectorField(SymmetryClass(d, sign), R, Nr, Nt, vals, {"delta": delta})
    res = field.gluing_residual()
    if res > GLUING_TOL:
        raise FormatError(f"{path}: gluing invariants violated (residual {res:.3g})")
    return field, delta


# --- phases and profiles ------------------------------------------------------------


def phase_csv(phase: BoundaryPhase, delta: float, C: float) -> str:
    z = phase.alpha * np.exp(1j * phase.psi)
    rows = zip(phase.theta, phase.psi, z.real, z.imag)
    return _table(("d", "sign", "delta", "M", "C"), (phase.d, phase.sign, float(delta), phase.M, float(C)),
                  ("theta", "psi", "u1", "u2"), rows)


def write_phase(path, phase: BoundaryPhase, delta: float, C: float) -> Path:
    return atomic_write(path, phase_csv(phase, delta, C))


def read_phase(path) -> BoundaryPhase:
    meta, header, body = _read_table(path)
    if tuple(header) != ("theta", "psi", "u1", "u2"):
        raise FormatError(f"{path}: not a phase file")
    psi = np.array([float(row[1]) for row in body])
    if psi.size != int(meta["M"]):
        raise FormatError(f"{path}: sample count does not match the header")
    return BoundaryPhase(psi, int(meta["d"]), meta["sign"],
                         {"delta": float(meta["delta"]), "C": float(meta["C"]), "M": psi.size})


def write_profile(path, profile: RadialProfile) -> Path:
    text = _table(("d", "R_max", "N", "tol"),
                  (profile.d, profile.R_max, profile.r_nodes.size - 1, float(profile.tol)),
                  ("r", "eta"), zip(profile.r_nodes, profile.eta))
    return atomic_write(path, text)


def read_profile(path) -> RadialProfile:
    meta, header, body = _read_table(path)
    if tuple(header) != ("r", "eta"):
        raise FormatError(f"{path}: not a profile file")
    data = np.array([[float(x) for x in row] for row in body])
    return RadialProfile(int(meta["d"]), data[:, 0], data[:, 1], tol=float(meta["tol"]))


# --- tables ---------------------------------------------------------------------------


def write_rows(path, columns, rows) -> Path:
    return atomic_write(path, _table(None, None, columns, rows))


def read_rows(path) -> list[dict]:
    _, header, body = _read_table(path, n_meta=False)
    return [dict(zip(header, row)) for row in body]


def write_json(path, record: dict) -> Path:
    return atomic_write(path, json.dumps(_jsonable(record), indent=2, sort_keys=True) + "\n")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


# --- key-value configuration ------------------------------------------------------------


def read_config(path) -> dict:
    """``key = value`` lines (``#`` comments); an optional ``[section]`` header is ignored."""
    text = Path(path).read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    if not text.lstrip().startswith("["):
        text = "[config]\n" + text
    parser.read_string(text)
    out = {}
    for section in parser.sections():
        out.update(parser[section])
    return out


def parse_list(value: str, kind=float) -> list:
    return [kind(v.strip()) for v in str(value).split(",") if v.strip()]
