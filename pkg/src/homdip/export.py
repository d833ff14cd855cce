"""Deterministic CSV/JSON writers and readers for profiles and run metadata."""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import MalformedInputError
from .interference import DipProfile, measured_profile


def fmt(x) -> str:
    return format(float(x), ".9g")


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(v if isinstance(v, str) else fmt(v) for v in row) for row in rows]
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path, payload) -> None:
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=_jsonable)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def write_profile_csv(path, profile: DipProfile) -> None:
    rows = zip(profile.tau, profile.probability, profile.normalized_values)
    write_csv(path, ["tau_fs", "probability", "normalized_probability"], rows)


def read_profile_csv(path, baseline_tau: float | None = None) -> DipProfile:
    """Read a delay scan for fitting.

    Files with a ``normalized_probability`` column are used as they are.
    Otherwise the first two columns are delay (fs) and signal; with
    ``baseline_tau`` the signal is divided by its mean over
    ``|τ| > baseline_tau``, without it the signal is taken as normalized.
    """
    with open(path, newline="", encoding="utf-8") as handle:
        records = [r for r in csv.reader(handle) if r and any(c.strip() for c in r)]
    if not records:
        raise MalformedInputError(f"{path}: empty file")
    header = [c.strip() for c in records[0]]
    try:
        float(header[0])
        has_header = False
    except ValueError:
        has_header = True
    body = records[1:] if has_header else records
    if has_header and "normalized_probability" in header:
        cols = (header.index("tau_fs") if "tau_fs" in header else 0, header.index("normalized_probability"))
    else:
        cols = (0, 1)
    tau, vals = [], []
    for lineno, row in enumerate(body, start=2 if has_header else 1):
        try:
            tau.append(float(row[cols[0]]))
            vals.append(float(row[cols[1]]))
        except (ValueError, IndexError):
            raise MalformedInputError(f"{path}: row {lineno}: expected numeric values") from None
    tau, vals = np.asarray(tau), np.asarray(vals)
    order = np.argsort(tau, kind="stable")
    tau, vals = tau[order], vals[order]
    if "normalized_probability" in header or baseline_tau is None:
        return DipProfile(tau, vals, 1.0, True)
    return measured_profile(tau, vals, baseline_tau)
