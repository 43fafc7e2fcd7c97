"""Scenario configuration files.

INI layout, one ``[scenario]`` section (name, seed, out) plus one section per
module.  Physical values carry unit suffixes (``3 MHz``, ``1 cm``) or are
written relative to a key resolved earlier, e.g. ``rabi_d = 150 gamma_ge`` or
``gamma_R = 1e-3 gamma_ge``.  Keys in ``[medium]`` can be referenced from any
section.  Every builder turns module validation errors into ConfigError
naming the section and key.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import blockade, detector, xpm
from .medium import C, MediumParams, group_velocity, transparency_width
from .units import parse_quantity

SCENARIOS = ("spectra", "slowlight", "store", "memory", "source", "xpm", "detect", "circuit")

_RELATIVE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*\*?\s*([A-Za-z_]\w*)\s*$")
_MISSING = object()


class ConfigError(ValueError):
    pass


class Section:
    """Typed access to one INI section; tracks which keys were read."""

    def __init__(self, name: str, raw: dict[str, str], refs: dict[str, float] | None = None):
        self.name = name
        self.raw = dict(raw)
        self.refs = dict(refs or {})
        self.used: set[str] = set()

    def __contains__(self, key):
        return key in self.raw

    def error(self, key, msg) -> ConfigError:
        return ConfigError(f"[{self.name}] {key}: {msg}")

    def _get(self, key, default):
        self.used.add(key)
        if key in self.raw:
            return self.raw[key]
        if default is _MISSING:
            raise self.error(key, "required key missing")
        return default

    def quantity(self, key, default=_MISSING):
        text = self._get(key, default)
        if not isinstance(text, str):
            return text
        m = _RELATIVE.match(text)
        if m and m.group(2) in self.refs:
            value = float(m.group(1)) * self.refs[m.group(2)]
        else:
            try:
                value = parse_quantity(text)
            except ValueError as e:
                raise self.error(key, str(e)) from None
        if not math.isfinite(value):
            raise self.error(key, f"not a finite number: {text!r}")
        self.refs[key] = value
        return value

    def integer(self, key, default=_MISSING):
        text = self._get(key, default)
        if not isinstance(text, str):
            return text
        try:
            return int(float(text)) if float(text).is_integer() else int(text)
        except ValueError:
            raise self.error(key, f"expected an integer, got {text!r}") from None

    def text(self, key, default=_MISSING):
        v = self._get(key, default)
        return v.strip() if isinstance(v, str) else v

    def complex_(self, key, default=_MISSING):
        text = self._get(key, default)
        if not isinstance(text, str):
            return text
        try:
            return complex(text.replace(" ", ""))
        except ValueError:
            raise self.error(key, f"expected a complex number, got {text!r}") from None

    def quantities(self, key, default=_MISSING):
        text = self._get(key, default)
        if not isinstance(text, str):
            return text
        out = []
        for part in text.split(","):
            self.raw["_item"] = part
            out.append(self.quantity("_item"))
        self.raw.pop("_item", None)
        self.refs.pop("_item", None)
        return out

    def finish(self):
        extra = sorted(set(self.raw) - self.used)
        if extra:
            raise self.error(extra[0], "unknown key")


@dataclass
class ScenarioConfig:
    name: str
    seed: int = 0
    out: Path = Path("out")
    sections: dict[str, dict[str, str]] = field(default_factory=dict)
    path: Path | None = None

    def has(self, name: str) -> bool:
        return name in self.sections

    def section(self, name: str, refs=None) -> Section:
        if name not in self.sections:
            raise ConfigError(f"[{name}] section required for scenario {self.name!r}")
        return Section(name, self.sections[name], refs)

    def echo(self) -> dict:
        return {"scenario": self.name, "seed": self.seed, "sections": self.sections}


def parse_config(text: str, path: Path | None = None) -> ScenarioConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from None
    if not cp.has_section("scenario"):
        raise ConfigError("[scenario] section missing")
    sc = Section("scenario", dict(cp["scenario"]))
    name = sc.text("name")
    if name not in SCENARIOS:
        raise sc.error("name", f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    seed = sc.integer("seed", 0)
    out = Path(sc.text("out", f"out/{name}"))
    sc.finish()
    sections = {s: dict(cp[s]) for s in cp.sections() if s != "scenario"}
    return ScenarioConfig(name, seed, out, sections, path)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None
    return parse_config(text, path)


# --- builders -----------------------------------------------------------------


def _wrap(section: Section, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except ConfigError:
        raise
    except (ValueError, TypeError) as e:
        raise ConfigError(f"[{section.name}] {e}") from None


def _medium_kw(s: Section) -> dict:
    kw = {}
    kw["gamma_ge"] = s.quantity("gamma_ge")
    kw["Gamma_e"] = s.quantity("Gamma_e", 2 * kw["gamma_ge"])
    kw["gamma_R"] = s.quantity("gamma_R", 0.0)
    if "omega" in s:
        kw["omega"] = s.quantity("omega")
    else:
        kw["omega"] = 2 * math.pi * C / s.quantity("wavelength")
    kw["rabi_d"] = s.quantity("rabi_d")
    kw["length"] = s.quantity("length")
    if "optical_depth" in s:
        if "kappa0" in s:
            raise s.error("kappa0", "give either optical_depth or kappa0")
        kw["kappa0"] = s.quantity("optical_depth") / (2 * kw["length"])
    else:
        kw["kappa0"] = s.quantity("kappa0")
    kw["delta_d"] = s.quantity("delta_d", 0.0)
    for key in ("area", "density", "dipole_ge", "n_atoms", "coupling_g"):
        if key in s:
            kw[key] = s.quantity(key)
    return kw


def medium(cfg: ScenarioConfig) -> tuple[MediumParams, dict]:
    s = cfg.section("medium")
    kw = _medium_kw(s)
    s.finish()
    return _wrap(s, MediumParams, **kw), s.refs


def pulse_duration(cfg: ScenarioConfig, p: MediumParams, refs=None) -> tuple[float, Section]:
    """``duration`` directly or ``fill`` = T v_g / L (default 0.5)."""
    s = cfg.section("pulse", refs) if cfg.has("pulse") else Section("pulse", {}, refs)
    if "duration" in s:
        T = s.quantity("duration")
    else:
        vg = group_velocity(p)
        if vg == 0:
            raise s.error("fill", "no group velocity without a drive; give duration")
        T = s.quantity("fill", 0.5) * p.length / vg
    if not T > 0:
        raise s.error("duration", "must be positive")
    return T, s


_TRIPOD_KEYS = ("zeeman", "zeeman_s", "b_field", "g_factor", "mean_velocity")


def tripod(cfg: ScenarioConfig) -> xpm.TripodParams:
    """``preset = example`` starts from the worked cold-atom example; ``delta_d = pi`` tunes phi to pi."""
    s = cfg.section("tripod")
    preset = s.text("preset", "")
    kw: dict = {}
    if preset not in ("", "example"):
        raise s.error("preset", f"unknown preset {preset!r}")
    if preset == "example":
        s.refs["gamma_ge"] = 2 * math.pi * 3e6
        for key in ("gamma_ge", "Gamma_e", "gamma_R", "omega", "rabi_d", "kappa0", "length", "coupling_g",
                    "n_atoms", "delta_q", *_TRIPOD_KEYS):
            if key in s:
                kw[key] = s.quantity(key)
        if "optical_depth" in s:
            kw["kappa0"] = s.quantity("optical_depth") / (2 * kw.get("length", 1e-2))
    else:
        sub = Section("tripod", {k: v for k, v in s.raw.items() if k != "delta_d"}, s.refs)
        kw = _medium_kw(sub)
        s.used.update(sub.used)
        s.refs.update(sub.refs)
        for key in _TRIPOD_KEYS:
            if key in s:
                kw[key] = s.quantity(key)
        if "zeeman" not in kw:
            raise s.error("zeeman", "required key missing")
        if "delta_q" in s and s.text("delta_q") != "window":
            kw["delta_q"] = s.quantity("delta_q")
        else:
            s.used.add("delta_q")
            probe = _wrap(s, MediumParams, **kw)
            kw["delta_q"] = transparency_width(probe) / C
    if "m_F" in s:
        kw["m_F"] = s.integer("m_F")
    if "modes" in s:
        kw["modes"] = s.integer("modes")
    tune = True
    if "delta_d" in s and s.text("delta_d") != "pi":
        kw["delta_d"] = s.quantity("delta_d")
        tune = False
    s.used.add("delta_d")
    s.finish()
    if preset == "example":
        return _wrap(s, xpm.tripod_example, **kw)
    kw.setdefault("delta_d", 1.0)
    p = _wrap(s, xpm.TripodParams, **kw)
    return _wrap(s, xpm.tune_to_pi, p) if tune else p


def trap(cfg: ScenarioConfig) -> tuple[blockade.TrapConfig, int, int]:
    """Returns the trap, the Monte Carlo sample count and the worker count."""
    s = cfg.section("trap")
    preset = s.text("preset", "")
    if preset not in ("", "rb"):
        raise s.error("preset", f"unknown preset {preset!r}")
    kw: dict = {}
    for key in ("length", "area", "density", "n_atoms", "rabi_r1", "rabi_r2", "gamma_r",
                "dd_shift_at_length", "preparation_time", "min_distance"):
        if key in s:
            kw[key] = s.quantity(key)
    if "rydberg_n" in s:
        kw["rydberg_n"] = s.integer("rydberg_n")
    if "geometry" in s:
        kw["geometry"] = s.text("geometry")
    if "n_atoms" not in kw and {"density", "area", "length"} <= set(kw):
        kw["n_atoms"] = kw["density"] * kw["area"] * kw["length"]
    samples = s.integer("samples", 1_000_000)
    workers = s.integer("workers", 1)
    if samples < blockade.MIN_SAMPLES:
        raise s.error("samples", f"need at least {blockade.MIN_SAMPLES}")
    if workers < 1:
        raise s.error("workers", "must be at least 1")
    s.finish()
    kw["rng_seed"] = cfg.seed
    build = blockade.rb_trap if preset == "rb" else blockade.TrapConfig
    return _wrap(s, build, **kw), samples, workers


def detector_params(cfg: ScenarioConfig) -> detector.DetectorParams:
    s = cfg.section("detector")
    preset = s.text("preset", "")
    if preset not in ("", "shelving"):
        raise s.error("preset", f"unknown preset {preset!r}")
    kw: dict = {}
    for key in ("rabi_p", "gamma_f", "gamma_sf", "gamma_s_lifetime", "quantum_efficiency", "dark_rate"):
        if key in s:
            kw[key] = s.quantity(key)
    if "integration_time" in s and s.text("integration_time") != "auto":
        kw["integration_time"] = s.quantity("integration_time")
    s.used.add("integration_time")
    s.used.update(k for k in ("trials", "alpha", "beta") if k in s)  # read by the detect scenario
    s.finish()
    kw["rng_seed"] = cfg.seed
    build = detector.shelving_example if preset == "shelving" else detector.DetectorParams
    return _wrap(s, build, **kw)
