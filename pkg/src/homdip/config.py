"""JSON run configuration: defaults, presets, overrides and validation.

Layers are merged in the order defaults, preset, config file, ``--set``
overrides. Every key carries its unit in the name; unknown keys are errors.
"""

from __future__ import annotations

import copy
import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError, HomDipError
from .interference import BeamSplitter, InterferometerConfig, PurityModel
from .phase import MATERIALS, ChannelPhase, PhaseExpansion, dispersion_totals, load_materials, material_element
from .presets import DEFAULT_PURITY, PRESETS
from .spectra import apply_slit, gaussian_spectrum, monochromatic, read_spectrum_csv

_ELEMENT = {
    "beta0_rad": 0.0,
    "beta1_fs": 0.0,
    "beta2_fs2": 0.0,
    "beta3_fs3": 0.0,
    "material": None,
    "length_mm": 0.0,
}

DEFAULTS = {
    "preset": None,
    "pump": {"center_nm": 405.5, "fwhm_nm": 1.0, "csv": None},
    "pdc": {"center_nm": 811.0, "fwhm_nm": 20.0, "csv": None, "slit_width_nm": None, "slit_center_nm": None},
    "beamsplitter": {"T": 0.467, "R": 0.533},
    "purity": {"p": None, "theta_deg": None, "V_I": None},
    "signal": {"fiber": dict(_ELEMENT), "fourf": dict(_ELEMENT), "slm": dict(_ELEMENT)},
    "idler": {"fiber": dict(_ELEMENT)},
    "materials_csv": None,
    "grid": {"n_omega": 401, "n_omega_p": 201},
    "tau": {"start_fs": None, "stop_fs": None, "step_fs": None},
    "sweep": {"axis": "beta2", "values": [0.0, 17600.0, 35200.0]},
    "compensate": {
        "objective": "maximize-visibility",
        "beta2_min_fs2": -1e5,
        "beta2_max_fs2": 1e5,
        "beta3_min_fs3": -1e6,
        "beta3_max_fs3": 1e6,
    },
    "fit": {"free": ["beta2", "beta3", "tau0", "p"], "baseline_tau_fs": None},
}


def _preset_layer(name) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"preset: unknown preset {name!r}; choose from {sorted(PRESETS)}")
    p = PRESETS[name]
    return {
        "pump": {"fwhm_nm": p["pump_fwhm_nm"]},
        "pdc": {"fwhm_nm": p["pdc_fwhm_nm"], "slit_width_nm": p["slit_width_nm"]},
    }


def _merge(base: dict, layer: dict, path: str = "") -> None:
    for key, value in layer.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"{where}: unknown key")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where}: expected an object")
            _merge(base[key], value, where + ".")
        else:
            base[key] = value


def parse_set(item: str) -> tuple[str, object]:
    """``a.b.c=value``; the value is read as JSON, falling back to a string."""
    if "=" not in item:
        raise ConfigError(f"--set {item!r}: expected key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _nested(key: str, value) -> dict:
    out: dict = {}
    node = out
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value
    return out


def load_config(path=None, sets=(), grid: str | None = None, tau: str | None = None) -> dict:
    """Effective configuration dictionary after all layers are applied."""
    file_layer = {}
    if path is not None:
        try:
            file_layer = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        if not isinstance(file_layer, dict):
            raise ConfigError(f"{path}: top level must be an object")
    set_layers = [_nested(*parse_set(s)) for s in sets]
    if grid is not None:
        try:
            n, m = (int(x) for x in grid.lower().split("x"))
        except ValueError:
            raise ConfigError(f"--grid {grid!r}: expected NxM") from None
        set_layers.append({"grid": {"n_omega": n, "n_omega_p": m}})
    if tau is not None:
        try:
            start, stop, step = (float(x) for x in tau.split(":"))
        except ValueError:
            raise ConfigError(f"--tau {tau!r}: expected start:stop:step") from None
        set_layers.append({"tau": {"start_fs": start, "stop_fs": stop, "step_fs": step}})

    preset = file_layer.get("preset")
    for layer in set_layers:
        preset = layer.get("preset", preset)

    conf = copy.deepcopy(DEFAULTS)
    if preset is not None:
        _merge(conf, _preset_layer(preset))
    for layer in [file_layer, *set_layers]:
        _merge(conf, layer)
    conf["preset"] = preset
    _fill_purity(conf)
    return conf


def _fill_purity(conf: dict) -> None:
    given = {k: v for k, v in conf["purity"].items() if v is not None}
    if len(given) > 1:
        raise ConfigError(f"purity: give exactly one of p, theta_deg, V_I (got {sorted(given)})")
    if not given:
        conf["purity"]["p"] = DEFAULT_PURITY


def _num(conf: dict, key: str, positive=False, allow_none=False):
    node = conf
    for part in key.split("."):
        node = node[part]
    if node is None and allow_none:
        return None
    if isinstance(node, bool) or not isinstance(node, (int, float)) or not math.isfinite(node):
        raise ConfigError(f"{key}: expected a finite number, got {node!r}")
    if positive and node <= 0:
        raise ConfigError(f"{key}: must be positive, got {node!r}")
    return float(node)


def _spectrum(conf: dict, which: str):
    center = _num(conf, f"{which}.center_nm", positive=True)
    section = conf[which]
    if section["csv"]:
        spec = read_spectrum_csv(section["csv"], center)
    else:
        fwhm = _num(conf, f"{which}.fwhm_nm")
        if fwhm < 0:
            raise ConfigError(f"{which}.fwhm_nm: must be non-negative")
        if fwhm == 0:
            if which == "pdc":
                raise ConfigError("pdc.fwhm_nm: must be positive")
            return monochromatic(center)
        spec = gaussian_spectrum(center, fwhm)
    if which == "pdc":
        width = _num(conf, "pdc.slit_width_nm", positive=True, allow_none=True)
        if width is not None:
            spec = apply_slit(spec, width, _num(conf, "pdc.slit_center_nm", allow_none=True))
    return spec


def _element(conf: dict, key: str, label: str, materials: dict) -> PhaseExpansion:
    node = conf
    for part in key.split("."):
        node = node[part]
    el = PhaseExpansion(
        _num(conf, f"{key}.beta0_rad"),
        _num(conf, f"{key}.beta1_fs"),
        _num(conf, f"{key}.beta2_fs2"),
        _num(conf, f"{key}.beta3_fs3"),
        label=label,
    )
    if node["material"] is not None:
        if node["material"] not in materials:
            raise ConfigError(f"{key}.material: unknown material {node['material']!r}; known: {sorted(materials)}")
        length = _num(conf, f"{key}.length_mm")
        if length < 0:
            raise ConfigError(f"{key}.length_mm: must be non-negative")
        el = el + material_element(materials[node["material"]], length, label)
        el = PhaseExpansion(*el.coefficients, label=label)
    return el


_LABELS = {"fiber": "fiber", "fourf": "4F", "slm": "SLM"}


def channels(conf: dict, include_slm: bool = True) -> tuple[ChannelPhase, ChannelPhase]:
    materials = dict(MATERIALS)
    if conf["materials_csv"]:
        try:
            materials.update(load_materials(conf["materials_csv"]))
        except HomDipError as exc:
            raise ConfigError(f"materials_csv: {exc}") from None
    names = ["fiber", "fourf"] + (["slm"] if include_slm else [])
    signal = ChannelPhase(tuple(_element(conf, f"signal.{n}", _LABELS[n], materials) for n in names))
    idler = ChannelPhase((_element(conf, "idler.fiber", "fiber", materials),))
    return signal, idler


def build(conf: dict) -> InterferometerConfig:
    """InterferometerConfig described by an effective configuration."""
    T, R = _num(conf, "beamsplitter.T"), _num(conf, "beamsplitter.R")
    try:
        bs = BeamSplitter(T, R)
    except HomDipError as exc:
        raise ConfigError(f"beamsplitter: {exc}") from None
    pur = conf["purity"]
    try:
        if pur["theta_deg"] is not None:
            purity = PurityModel.from_theta(_num(conf, "purity.theta_deg"))
        elif pur["V_I"] is not None:
            purity = PurityModel.from_visibility(_num(conf, "purity.V_I"))
        else:
            purity = PurityModel.from_p(_num(conf, "purity.p"))
    except HomDipError as exc:
        raise ConfigError(f"purity: {exc}") from None
    signal, idler = channels(conf)
    n, m = conf["grid"]["n_omega"], conf["grid"]["n_omega_p"]
    if not (isinstance(n, int) and isinstance(m, int) and n >= 3 and m >= 1):
        raise ConfigError(f"grid: n_omega >= 3 and n_omega_p >= 1 must be integers, got {n}, {m}")
    return InterferometerConfig(
        pump=_spectrum(conf, "pump"),
        pdc=_spectrum(conf, "pdc"),
        bs=bs,
        purity=purity,
        signal=signal,
        idler=idler,
        n_omega=n,
        n_omega_p=m,
    )


def totals(conf: dict, include_slm: bool = True):
    signal, idler = channels(conf, include_slm)
    return dispersion_totals(signal, idler)


def tau_grid(conf: dict):
    """Explicit delay grid, or ``None`` to size it automatically."""
    t = conf["tau"]
    if all(t[k] is None for k in ("start_fs", "stop_fs", "step_fs")):
        return None
    start, stop, step = (_num(conf, f"tau.{k}") for k in ("start_fs", "stop_fs", "step_fs"))
    if step <= 0 or stop <= start:
        raise ConfigError("tau: need start_fs < stop_fs and step_fs > 0")
    n = int(round((stop - start) / step))
    return start + step * np.arange(n + 1)
