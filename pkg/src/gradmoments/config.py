"""INI configuration for runs and studies.

Example::

    [run]
    M = 10
    Kn = 0.1
    elements = 200
    cfl = 0.5
    T_final = 0.3
    boundary = vacuum                ; or maxwellian(rho, v, theta); boundary_left/right override
    initial = gaussian_density(0.5, 100)   ; or coefficients(c0, c1, ...)
    snapshot_every = 10

    [study]
    M_ref = 80
    Ms = 5, 10, 15, 20, 25, 30, 35, 40
    n_snapshots = 60
    dvm = false
    n_velocities = 64
    v_max = 8

    [matrix-study]
    d = 1
    M_max = 50
"""
from __future__ import annotations

import configparser
from dataclasses import replace
import math
import re

from .solver import SolverConfig
from .study import PRESETS, StudyConfig

__all__ = ["ConfigError", "load", "solver_config_from", "study_config_from", "matrix_study_from"]


class ConfigError(ValueError):
    pass


_CALL = re.compile(r"^\s*([a-z_]+)\s*\((.*)\)\s*$")


def _floats(text):
    text = text.strip()
    return tuple(float(v) for v in text.split(",")) if text else ()


def _parse_boundary(text):
    text = text.strip().lower()
    if text in ("", "vacuum"):
        return None
    m = _CALL.match(text)
    if not m or m.group(1) != "maxwellian":
        raise ConfigError(f"boundary must be 'vacuum' or 'maxwellian(rho, v, theta)', got {text!r}")
    vals = _floats(m.group(2))
    if len(vals) != 3:
        raise ConfigError("maxwellian() takes rho, v, theta")
    return vals


def _parse_initial(text):
    m = _CALL.match(text.strip().lower())
    if not m:
        raise ConfigError(f"cannot parse initial data {text!r}")
    name, args = m.group(1), _floats(m.group(2))
    if name == "gaussian_density":
        if len(args) != 2:
            raise ConfigError("gaussian_density() takes center, sharpness")
        return {"center": args[0], "sharpness": args[1], "initial_coeffs": None}
    if name == "coefficients":
        if not args:
            raise ConfigError("coefficients() needs at least one value")
        return {"initial_coeffs": args}
    raise ConfigError(f"unknown initial data {name!r}")


def load(path):
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return cp


def _get(sec, key, conv, default):
    if key not in sec:
        return default
    raw = sec[key]
    try:
        return conv(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def _kn(raw):
    raw = raw.strip().lower()
    return math.inf if raw in ("inf", "infinity", "none") else float(raw)


def solver_config_from(cp, section="run"):
    if section not in cp:
        raise ConfigError(f"missing [{section}] section")
    sec = cp[section]
    if "M" not in sec:
        raise ConfigError("[run] needs M")
    kw = dict(
        M=_get(sec, "M", int, None),
        kn=_get(sec, "Kn", _kn, 0.1),
        n_elements=_get(sec, "elements", int, 200),
        cfl=_get(sec, "cfl", float, 0.5),
        t_final=_get(sec, "T_final", float, 0.3),
        snapshot_every=_get(sec, "snapshot_every", int, 10),
    )
    both = _parse_boundary(sec.get("boundary", "vacuum"))
    kw["inflow_left"] = _parse_boundary(sec["boundary_left"]) if "boundary_left" in sec else both
    kw["inflow_right"] = _parse_boundary(sec["boundary_right"]) if "boundary_right" in sec else both
    kw.update(_parse_initial(sec.get("initial", "gaussian_density(0.5, 100)")))
    cfg = SolverConfig(**kw)
    try:
        return cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _bool(raw):
    raw = raw.strip().lower()
    if raw in ("1", "true", "yes", "on"):
        return True
    if raw in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def study_config_from(cp=None, preset=None, section="study"):
    if preset and preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}")
    base = PRESETS[preset] if preset else StudyConfig()
    if cp is None or section not in cp:
        if cp is not None and preset is None:
            raise ConfigError(f"missing [{section}] section")
        return base
    sec = cp[section]
    kw = {}
    for key, attr, conv in [("M_ref", "M_ref", int), ("elements", "n_elements", int),
                            ("T_final", "t_final", float), ("Kn", "kn", _kn), ("cfl", "cfl", float),
                            ("n_snapshots", "n_snapshots", int), ("dvm", "dvm", _bool),
                            ("n_velocities", "n_velocities", int), ("v_max", "v_max", float),
                            ("delta", "delta", float)]:
        val = _get(sec, key, conv, None)
        if val is not None:
            kw[attr] = val
    Ms = _get(sec, "Ms", lambda r: tuple(int(v) for v in r.split(",")), None)
    if Ms is not None:
        kw["Ms"] = Ms
    cfg = replace(base, **kw)
    try:
        return cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def matrix_study_from(cp, section="matrix-study"):
    if cp is None or section not in cp:
        return {}
    sec = cp[section]
    return {"d": _get(sec, "d", int, 1), "M_max": _get(sec, "M_max", int, 50)}
