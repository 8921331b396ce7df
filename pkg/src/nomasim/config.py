"""Experiment configuration files (TOML) and built-in presets."""

from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .channel import FadingModel
from .semigf import VARIANTS
from .sic import DecodingPolicy

SCENARIOS = ("outage_sweep", "semigf_connectivity", "downlink_plan")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key or line."""


@dataclass
class OutageSweepConfig:
    snr_db: list[float]
    trials_per_point: int
    rates: list[float]
    policies: list[str] = field(default_factory=lambda: [p.value for p in DecodingPolicy])
    power_scale: list[float] = field(default_factory=lambda: [1.0, 1.0])
    fading: list[FadingModel] = field(default_factory=lambda: [FadingModel(), FadingModel()])
    svg: bool = True


@dataclass
class SemiGfConfig:
    orbs: int
    rho: float
    k_pgfu: list[int]
    slots: int
    variants: list[str] = field(default_factory=lambda: list(VARIANTS))
    gb_rate: float = 1.0
    gb_power: float = 100.0
    gf_rate: float = 1.0
    gf_power_min: float = 1.0
    gf_power_max: float = 100.0
    pool_levels: list[float] | None = None
    acb_q: float | None = None
    fading: FadingModel = field(default_factory=FadingModel)
    svg: bool = True


@dataclass
class SensorSpec:
    gain: float
    payload_bits: float
    blocklength: float
    error_prob: float


@dataclass
class BroadbandSpec:
    gain: float
    rate: float


@dataclass
class DownlinkConfig:
    power_budget: float
    sensors: list[SensorSpec]
    broadbands: list[BroadbandSpec]


@dataclass
class ExperimentConfig:
    scenario: str
    seed: int
    body: Any
    output_dir: str = "out"
    workers: int = 1
    label: str = ""

    @property
    def name(self) -> str:
        return self.label or self.scenario


# -- validation helpers ---------------------------------------------------------

def _fail(path, msg):
    raise ConfigError(f"{path}: {msg}")


class _Section:
    """Reads keys from a table, recording which were consumed."""

    def __init__(self, table: dict, path: str):
        if not isinstance(table, dict):
            _fail(path, "expected a table")
        self.table, self.path, self.used = table, path, set()

    def _key(self, key):
        return f"{self.path}.{key}" if self.path else key

    def get(self, key, kind, default=..., check=None, rule=""):
        self.used.add(key)
        path = self._key(key)
        if key not in self.table:
            if default is ...:
                _fail(path, "missing required key")
            return default
        value = self.table[key]
        value = _coerce(value, kind, path)
        if check is not None and not check(value):
            _fail(path, f"must satisfy {rule}, got {value!r}")
        return value

    def finish(self):
        unknown = sorted(set(self.table) - self.used)
        if unknown:
            _fail(self._key(unknown[0]), "unknown key")


def _coerce(value, kind, path):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            _fail(path, f"expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            _fail(path, "must be finite")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            _fail(path, f"expected an integer, got {value!r}")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            _fail(path, f"expected true/false, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            _fail(path, f"expected a string, got {value!r}")
        return value
    if isinstance(kind, list):
        if not isinstance(value, list):
            _fail(path, f"expected a list, got {value!r}")
        return [_coerce(v, kind[0], f"{path}[{i}]") for i, v in enumerate(value)]
    raise TypeError(kind)


def _fading(table, path) -> FadingModel:
    sec = _Section(table, path)
    kind = sec.get("kind", str, "rayleigh", lambda k: k in ("rayleigh", "deterministic"),
                   "kind in {rayleigh, deterministic}")
    if kind == "rayleigh":
        mean = sec.get("mean_gain", float, 1.0, lambda v: v > 0, "mean_gain > 0")
        sec.finish()
        return FadingModel.rayleigh(mean)
    gains = sec.get("fixed_gains", [float], ..., lambda g: len(g) > 0 and min(g) >= 0,
                    "a non-empty list of gains >= 0")
    sec.finish()
    return FadingModel.deterministic(gains)


def _increasing(xs):
    return len(xs) > 0 and all(b > a for a, b in zip(xs, xs[1:]))


def _outage(table, path) -> OutageSweepConfig:
    sec = _Section(table, path)
    snr = sec.get("snr_db", [float], ..., _increasing, "a non-empty strictly increasing grid")
    trials = sec.get("trials_per_point", int, ..., lambda t: t >= 1, "trials >= 1")
    rates = sec.get("rates", [float], ..., lambda r: len(r) == 2 and min(r) > 0,
                    "two target rates > 0 (primary, secondary)")
    policies = sec.get("policies", [str], [p.value for p in DecodingPolicy],
                       lambda ps: ps and all(p in {d.value for d in DecodingPolicy} for p in ps)
                       and len(set(ps)) == len(ps),
                       "distinct values from {csi_based, qos_based, hybrid}")
    scale = sec.get("power_scale", [float], [1.0, 1.0], lambda s: len(s) == 2 and min(s) >= 0,
                    "two multipliers >= 0")
    svg = sec.get("svg", bool, True)
    sec.used.add("fading")
    raw = table.get("fading", {})
    if isinstance(raw, list):
        if len(raw) != 2:
            _fail(f"{path}.fading", "per-user fading needs exactly two tables")
        fading = [_fading(t, f"{path}.fading[{i}]") for i, t in enumerate(raw)]
    else:
        model = _fading(raw, f"{path}.fading")
        fading = [model, model]
    sec.finish()
    return OutageSweepConfig(snr, trials, rates, policies, scale, fading, svg)


def _semigf(table, path) -> SemiGfConfig:
    sec = _Section(table, path)
    orbs = sec.get("orbs", int, ..., lambda m: m >= 1, "orbs >= 1")
    rho = sec.get("rho", float, ..., lambda r: 0 < r <= 1, "0 < rho <= 1")
    ks = sec.get("k_pgfu", [int], ..., lambda ks: len(ks) > 0 and min(ks) >= 1, "a non-empty list of K >= 1")
    slots = sec.get("slots", int, ..., lambda t: t >= 1, "slots >= 1")
    variants = sec.get("variants", [str], list(VARIANTS),
                       lambda vs: vs and all(v in VARIANTS for v in vs) and len(set(vs)) == len(vs),
                       "distinct values from {" + ", ".join(VARIANTS) + "}")
    cfg = SemiGfConfig(orbs, rho, ks, slots, variants)
    cfg.gb_rate = sec.get("gb_rate", float, 1.0, lambda v: v > 0, "gb_rate > 0")
    cfg.gb_power = sec.get("gb_power", float, 100.0, lambda v: v >= 0, "gb_power >= 0")
    cfg.gf_rate = sec.get("gf_rate", float, 1.0, lambda v: v > 0, "gf_rate > 0")
    cfg.gf_power_min = sec.get("gf_power_min", float, 1.0, lambda v: v >= 0, "gf_power_min >= 0")
    cfg.gf_power_max = sec.get("gf_power_max", float, 100.0, lambda v: v >= cfg.gf_power_min,
                               "gf_power_max >= gf_power_min")
    cfg.pool_levels = sec.get("pool_levels", [float], None,
                              lambda lv: len(lv) > 0 and min(lv) > 0 and all(b < a for a, b in zip(lv, lv[1:])),
                              "strictly decreasing levels > 0")
    cfg.acb_q = sec.get("acb_q", float, None, lambda q: 0 <= q <= 1, "0 <= acb_q <= 1")
    cfg.svg = sec.get("svg", bool, True)
    sec.used.add("fading")
    cfg.fading = _fading(table.get("fading", {}), f"{path}.fading")
    sec.finish()
    return cfg


def _downlink(table, path) -> DownlinkConfig:
    sec = _Section(table, path)
    budget = sec.get("power_budget", float, ..., lambda b: b >= 0, "power_budget >= 0")
    sec.used.update({"sensors", "broadbands"})
    sensors, broadbands = [], []
    for i, t in enumerate(_table_list(table.get("sensors", []), f"{path}.sensors")):
        s = _Section(t, f"{path}.sensors[{i}]")
        sensors.append(SensorSpec(
            s.get("gain", float, ..., lambda g: g >= 0, "gain >= 0"),
            s.get("payload_bits", float, ..., lambda b: b >= 1, "payload_bits >= 1"),
            s.get("blocklength", float, ..., lambda n: n >= 1, "blocklength >= 1"),
            s.get("error_prob", float, ..., lambda d: 0 < d < 0.5, "0 < error_prob < 0.5"),
        ))
        s.finish()
    for i, t in enumerate(_table_list(table.get("broadbands", []), f"{path}.broadbands")):
        s = _Section(t, f"{path}.broadbands[{i}]")
        broadbands.append(BroadbandSpec(
            s.get("gain", float, ..., lambda g: g >= 0, "gain >= 0"),
            s.get("rate", float, ..., lambda r: r > 0, "rate > 0"),
        ))
        s.finish()
    sec.finish()
    return DownlinkConfig(budget, sensors, broadbands)


def _table_list(value, path):
    if not isinstance(value, list) or not all(isinstance(v, dict) for v in value):
        _fail(path, "expected an array of tables")
    return value


_BODIES = {"outage_sweep": _outage, "semigf_connectivity": _semigf, "downlink_plan": _downlink}


def parse_config(text: str) -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        where = f"line {m.group(1)}" if m else "unknown line"
        raise ConfigError(f"parse error at {where}: {exc}") from None

    top = _Section(data, "")
    scenario = top.get("scenario", str, ..., lambda s: s in SCENARIOS, "scenario in {" + ", ".join(SCENARIOS) + "}")
    seed = top.get("seed", int, 0, lambda s: 0 <= s < 2**64, "0 <= seed < 2^64")
    output_dir = top.get("output_dir", str, "out")
    workers = top.get("workers", int, 1, lambda w: w >= 1, "workers >= 1")
    label = top.get("label", str, "")
    top.used.add(scenario)
    body = _BODIES[scenario](data.get(scenario, {}), scenario)
    top.finish()
    return ExperimentConfig(scenario, seed, body, output_dir, workers, label)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


PRESETS = {
    # primary needs 2 bits/s/Hz, secondary 0.4: both fixed orders floor, hybrid does not
    "fig2_style": """
scenario = "outage_sweep"
label = "fig2_style"
seed = 2021

[outage_sweep]
snr_db = [0, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60]
trials_per_point = 200000
rates = [2.0, 0.4]
policies = ["csi_based", "qos_based", "hybrid"]

[outage_sweep.fading]
kind = "rayleigh"
mean_gain = 1.0
""",
    "fig3_style": """
scenario = "semigf_connectivity"
label = "fig3_style"
seed = 2021

[semigf_connectivity]
orbs = 10
rho = 0.1
k_pgfu = [10, 50, 100, 150, 200, 250, 300, 350, 400]
slots = 10000
variants = ["plain", "power_pool", "power_pool_acb", "gb_only"]
gb_rate = 1.0
gb_power = 100.0
gf_rate = 1.0
gf_power_min = 1.0
gf_power_max = 100.0

[semigf_connectivity.fading]
kind = "rayleigh"
mean_gain = 1.0
""",
}


def preset(name: str) -> ExperimentConfig:
    try:
        text = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r} (have {', '.join(sorted(PRESETS))})") from None
    return parse_config(text)
