"""Run configuration: strict schema validation, presets, object assembly."""

from __future__ import annotations

import copy
import json

from .action import FlowConfig
from .errors import ConfigError
from .fields import FieldBackground, make_potential, make_two_form
from .grid import build_grid
from .initial_data import (bump_map, constant_map, geodesic_wrap, noisy_wrap,
                           random_smooth_map, small_energy_map)
from .targets import make_target

# schema: section -> key -> (type(s), default).  Defaults of None mean the
# key is optional with no value; a missing section uses all defaults.
_SCHEMA = {
    "grid": {
        "nx": (int, 64),
        "ny": (int, 64),
        "Lx": (float, 2.0 * 3.141592653589793),
        "Ly": (float, 2.0 * 3.141592653589793),
        "lam": ((int, float, type(None)), None),   # constant conformal factor
    },
    "target": {
        "kind": (str, "sphere"),
        "q": (int, 4),
    },
    "fields": {
        "b_kind": (str, "zero"),
        "beta": (float, 0.0),
        "v_kind": (str, "zero"),
        "epsilon": (float, 0.0),
    },
    "initial": {
        "kind": (str, "constant"),
        "m": (int, 1),
        "n": (int, 0),
        "seed": (int, 0),
        "amplitude": (float, 0.3),
        "max_mode": (int, 4),
        "scale": (float, 0.5),
        "energy": (float, 0.01),
        "point": ((list, type(None)), None),
    },
    "flow": {
        "t_end": (float, 1.0),
        "cfl": (float, 0.2),
        "dt_init": ((float, type(None)), None),
        "dt_min": (float, 1e-9),
        "delta1": (float, 0.5),
        "ball_radius": (float, 0.5),
        "conv_tol": (float, 0.0),
        "record_every": (int, 10),
        "monitor": (bool, False),
    },
}

_INITIAL_KINDS = {"constant", "geodesic_wrap", "bump", "random_smooth",
                  "noisy_wrap", "small_energy"}


def _check_type(value, types, path):
    if isinstance(types, tuple):
        ok = isinstance(value, types)
    else:
        ok = isinstance(value, types)
    # bool is an int subclass; reject bool where int is expected
    if ok and isinstance(value, bool) and types is int:
        ok = False
    if not ok:
        raise ConfigError(f"{path}: expected {types}, got {type(value).__name__}")


def validate_config(raw: dict) -> dict:
    """Validate a nested config dict; unknown keys are errors.

    Returns a fully-populated copy with defaults filled in.  Integer values
    are accepted for float keys and converted.
    """
    if not isinstance(raw, dict):
        raise ConfigError(f"config must be a dict, got {type(raw).__name__}")
    out = {}
    for section in raw:
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section {section!r}")
        if not isinstance(raw[section], dict):
            raise ConfigError(f"{section}: expected a mapping")
    for section, keys in _SCHEMA.items():
        src = raw.get(section, {})
        for key in src:
            if key not in keys:
                raise ConfigError(f"unknown key {section}.{key}")
        sec = {}
        for key, (types, default) in keys.items():
            val = src.get(key, default)
            if val is not None:
                base = types if isinstance(types, tuple) else (types,)
                if float in base and isinstance(val, int) and not isinstance(val, bool):
                    val = float(val)
                _check_type(val, types, f"{section}.{key}")
            sec[key] = copy.deepcopy(val)
        out[section] = sec
    kind = out["initial"]["kind"]
    if kind not in _INITIAL_KINDS:
        raise ConfigError(f"initial.kind must be one of {sorted(_INITIAL_KINDS)}")
    return out


def default_config() -> dict:
    return validate_config({})


def load_config(path: str) -> dict:
    with open(path) as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from e
    return validate_config(raw)


def save_config(cfg: dict, path: str):
    with open(path, "w") as f:
        json.dump(cfg, f, indent=2, sort_keys=True)
        f.write("\n")


def build_objects(cfg: dict):
    """(grid, target, fields, u0, flow_config) from a validated config."""
    cfg = validate_config(cfg)
    g = cfg["grid"]
    grid = build_grid(g["nx"], g["ny"], Lx=g["Lx"], Ly=g["Ly"], lam=g["lam"])
    t = cfg["target"]
    target = make_target(t["kind"], q=t["q"])
    f = cfg["fields"]
    fields = FieldBackground(b=make_two_form(f["b_kind"], target.q, beta=f["beta"]),
                             V=make_potential(f["v_kind"], target.q,
                                              epsilon=f["epsilon"]))
    i = cfg["initial"]
    point = None if i["point"] is None else i["point"]
    kind = i["kind"]
    if kind == "constant":
        u0 = constant_map(grid, target, point=point)
    elif kind == "geodesic_wrap":
        u0 = geodesic_wrap(grid, target, m=i["m"], n=i["n"])
    elif kind == "bump":
        u0 = bump_map(grid, target, scale=i["scale"])
    elif kind == "random_smooth":
        u0 = random_smooth_map(grid, target, seed=i["seed"],
                               amplitude=i["amplitude"],
                               max_mode=i["max_mode"], point=point)
    elif kind == "noisy_wrap":
        u0 = noisy_wrap(grid, target, m=i["m"], n=i["n"], seed=i["seed"],
                        amplitude=i["amplitude"], max_mode=i["max_mode"])
    else:  # small_energy
        u0 = small_energy_map(grid, target, energy=i["energy"],
                              seed=i["seed"], max_mode=i["max_mode"],
                              point=point)
    fl = cfg["flow"]
    flow_cfg = FlowConfig(t_end=fl["t_end"], cfl=fl["cfl"], dt_init=fl["dt_init"],
                          dt_min=fl["dt_min"], delta1=fl["delta1"],
                          ball_radius=fl["ball_radius"], conv_tol=fl["conv_tol"],
                          record_every=fl["record_every"], monitor=fl["monitor"])
    return grid, target, fields, u0, flow_cfg


PRESETS = {
    # pure Dirichlet flow from smooth noise; relaxes toward a point
    "flat_harmonic": {
        "grid": {"nx": 64, "ny": 64},
        "initial": {"kind": "random_smooth", "seed": 1, "amplitude": 0.4},
        "flow": {"t_end": 1.0, "record_every": 20},
    },
    # three-sphere target, two-form + weak potential, noisy geodesic wrap
    "bfield_s3": {
        "grid": {"nx": 64, "ny": 64},
        "target": {"kind": "sphere", "q": 4},
        "fields": {"b_kind": "y4", "beta": 0.2, "v_kind": "height",
                   "epsilon": 5e-3},
        "initial": {"kind": "noisy_wrap", "m": 1, "n": 0, "seed": 2,
                    "amplitude": 0.1},
        "flow": {"t_end": 1.0, "record_every": 20},
    },
    # descent in a linear height potential from a constant map
    "potential_descent": {
        "grid": {"nx": 48, "ny": 48},
        "fields": {"v_kind": "height", "epsilon": 0.1},
        "initial": {"kind": "random_smooth", "seed": 3, "amplitude": 0.2},
        "flow": {"t_end": 2.0, "record_every": 20},
    },
    # concentrated stereographic bubble; exercises concentration scanning
    "concentration": {
        "grid": {"nx": 96, "ny": 96},
        "initial": {"kind": "bump", "scale": 0.15},
        "flow": {"t_end": 0.05, "record_every": 10, "monitor": True,
                 "ball_radius": 0.4},
    },
    # tiny-energy start; the small-energy gap predicts decay to a constant
    "gap_smallness": {
        "grid": {"nx": 48, "ny": 48},
        "initial": {"kind": "small_energy", "energy": 0.01, "seed": 4,
                    "max_mode": 2},
        "flow": {"t_end": 5.0, "record_every": 50},
    },
    # short run storing snapshots fit for parabolic rescaling probes
    "rescale_probe": {
        "grid": {"nx": 64, "ny": 64},
        "initial": {"kind": "bump", "scale": 0.3},
        "flow": {"t_end": 0.3, "record_every": 5, "ball_radius": 0.4},
    },
}


def preset_config(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; "
                          f"available: {sorted(PRESETS)}")
    return validate_config(copy.deepcopy(PRESETS[name]))
