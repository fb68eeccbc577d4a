"""JSON run configuration with strict validation."""

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field

from .solver import SimConfig, DATA_FAMILIES, INTEGRATORS

SUITES = ("conservation", "monotonicity", "local", "positivity", "norms")


class ConfigError(ValueError):
    """Schema violation; the message names the offending field."""


@dataclass
class PositivityOptions:
    k_values: list = field(default_factory=lambda: [4, 6])
    N_modes: list = field(default_factory=lambda: [4, 8, 16])
    restarts: int = 32
    samples: int = 100000
    tol: float = 1e-8
    chi: object = None
    fd_directions: int = 20


@dataclass
class MonotonicityOptions:
    k_values: list = field(default_factory=lambda: [4, 6])
    fields: int = 1000
    grid_N: int = 128
    max_mode: int = 20
    trajectories: int = 5
    t_end: float = 2.0


@dataclass
class NormsOptions:
    fields: int = 100
    grid_N: int = 256
    k: int = 6


@dataclass
class OrderOptions:
    dts: list = field(default_factory=list)
    t_end: float = 10.0
    amp: float = None


@dataclass
class RunConfig:
    sim: SimConfig
    suites: list = field(default_factory=lambda: ["conservation"])
    radii: list = field(default_factory=list)
    seed: int = 0
    out: str = "gbo_out"
    positivity: PositivityOptions = field(default_factory=PositivityOptions)
    monotonicity: MonotonicityOptions = field(default_factory=MonotonicityOptions)
    norms: NormsOptions = field(default_factory=NormsOptions)
    order: OrderOptions = field(default_factory=OrderOptions)
    sweep: list = field(default_factory=list)

    def to_dict(self):
        d = dataclasses.asdict(self)
        sim = d.pop("sim")
        d.update(sim)
        return d


_SIM_FIELDS = {f.name: f for f in dataclasses.fields(SimConfig)}
_RUN_KEYS = {"suites", "radii", "seed", "out", "positivity", "monotonicity", "norms",
             "order", "sweep"}
_SUB = {"positivity": PositivityOptions, "monotonicity": MonotonicityOptions,
        "norms": NormsOptions, "order": OrderOptions}


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _sub_options(name, raw):
    cls = _SUB[name]
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected an object")
    known = {f.name for f in dataclasses.fields(cls)}
    extra = sorted(set(raw) - known)
    if extra:
        raise ConfigError(f"{name}: unknown key(s) {', '.join(extra)}")
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _validate_sim(raw):
    if "k" in raw and not (_is_int(raw["k"]) and raw["k"] >= 4 and raw["k"] % 2 == 0):
        raise ConfigError("k: k must be even ≥ 4")
    if "N" in raw and not (_is_int(raw["N"]) and raw["N"] >= 16 and raw["N"] & (raw["N"] - 1) == 0):
        raise ConfigError("N: must be a power of two >= 16")
    for name in ("L", "dt", "t_end", "snapshot_every", "R"):
        if name in raw and not (_is_num(raw[name]) and raw[name] > 0):
            raise ConfigError(f"{name}: must be a positive number")
    if "integrator" in raw and raw["integrator"] not in INTEGRATORS:
        raise ConfigError(f"integrator: must be one of {', '.join(INTEGRATORS)}")
    if "data" in raw:
        data = raw["data"]
        if not isinstance(data, dict):
            raise ConfigError("data: expected an object")
        fam = data.get("family", "gaussian")
        if fam not in DATA_FAMILIES:
            raise ConfigError(f"data.family: must be one of {', '.join(DATA_FAMILIES)}")
        allowed = {"family", "amp", "width", "x0", "carrier", "cutoff", "seed"}
        extra = sorted(set(data) - allowed)
        if extra:
            raise ConfigError(f"data: unknown key(s) {', '.join(extra)}")
        for key in allowed - {"family", "seed"}:
            if key in data and not _is_num(data[key]):
                raise ConfigError(f"data.{key}: must be a number")
        if "width" in data and data["width"] <= 0:
            raise ConfigError("data.width: must be positive")


def auto_radii(L):
    """Three doubling radii, the largest a power of two with R + R^0.9 < L/4."""
    R = 1.0
    while (2 * R) + (2 * R) ** 0.9 < L / 4:
        R *= 2
    return [R / 4, R / 2, R]


def config_from_dict(raw):
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a JSON object")
    extra = sorted(set(raw) - set(_SIM_FIELDS) - _RUN_KEYS)
    if extra:
        raise ConfigError(f"unknown key(s): {', '.join(extra)}")
    _validate_sim(raw)
    sim_kwargs = {k: v for k, v in raw.items() if k in _SIM_FIELDS}
    if "data" in sim_kwargs:
        sim_kwargs["data"] = dict(sim_kwargs["data"])
    try:
        sim = SimConfig(**sim_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"simulation: {exc}") from None
    kw = {}
    if "suites" in raw:
        suites = raw["suites"]
        if not isinstance(suites, list) or not all(s in SUITES for s in suites):
            raise ConfigError(f"suites: must be a list drawn from {', '.join(SUITES)}")
        kw["suites"] = list(suites)
    if "radii" in raw:
        radii = raw["radii"]
        if not isinstance(radii, list) or not all(_is_num(r) and r > 0 for r in radii):
            raise ConfigError("radii: must be a list of positive numbers")
        for r in radii:
            if r + r ** 0.9 >= sim.L / 4:
                raise ConfigError(f"radii: R={r} does not fit the domain (need R + R^0.9 < L/4)")
        kw["radii"] = [float(r) for r in radii]
    else:
        kw["radii"] = auto_radii(sim.L)
    if "seed" in raw:
        if not (_is_int(raw["seed"]) and 0 <= raw["seed"] < 2 ** 64):
            raise ConfigError("seed: must be an unsigned 64-bit integer")
        kw["seed"] = raw["seed"]
    if "out" in raw:
        if not isinstance(raw["out"], str):
            raise ConfigError("out: must be a string")
        kw["out"] = raw["out"]
    for name in _SUB:
        if name in raw:
            kw[name] = _sub_options(name, raw[name])
    if "sweep" in raw:
        sweep = raw["sweep"]
        if not isinstance(sweep, list) or not all(isinstance(s, dict) for s in sweep):
            raise ConfigError("sweep: must be a list of override objects")
        for i, s in enumerate(sweep):
            if "sweep" in s:
                raise ConfigError(f"sweep[{i}]: nested sweeps are not allowed")
            merged = {key: val for key, val in raw.items() if key != "sweep"}
            merged.update(s)
            try:
                config_from_dict(merged)
            except ConfigError as exc:
                raise ConfigError(f"sweep[{i}]: {exc}") from None
        kw["sweep"] = [dict(s) for s in sweep]
    return RunConfig(sim=sim, **kw)


def parse_config(path):
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if not text.strip():
        raise ConfigError(f"config file is empty: {path}")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    return config_from_dict(raw)
