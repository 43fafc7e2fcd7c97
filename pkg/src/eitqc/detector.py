"""Photon detection by stopping the photon in an EIT medium and shelving.

The stored excitation sits in |s>.  A pump Omega_p on the cycling transition
|s> -> |f> then scatters fluorescence at R_f until |s> decays, so a single
stored photon yields S_f = eta R_f t collected photons.  A click is modelled
as at least one count of a Poisson variable with mean S_f.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .checks import Check, Report, ratio
from .qmemory import PolarizationQubit


@dataclass(frozen=True)
class DetectorParams:
    rabi_p: float
    gamma_f: float
    gamma_sf: float
    gamma_s_lifetime: float
    quantum_efficiency: float
    integration_time: float | str = "auto"
    rng_seed: int = 0
    dark_rate: float = 0.0

    def __post_init__(self):
        if self.rabi_p < 0:
            raise ValueError("rabi_p must be non-negative")
        for name in ("gamma_f", "gamma_sf", "gamma_s_lifetime"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.quantum_efficiency <= 1:
            raise ValueError("quantum_efficiency must lie in (0, 1]")
        if self.dark_rate < 0:
            raise ValueError("dark_rate must be non-negative")
        t = self.integration_time
        if isinstance(t, str):
            if t != "auto":
                raise ValueError("integration_time must be a duration or 'auto'")
        elif not t > 0:
            raise ValueError("integration_time must be positive")

    @property
    def t(self) -> float:
        """Integration time; 'auto' means the lifetime 1/Gamma_s of |s>."""
        if self.integration_time == "auto":
            return 1.0 / self.gamma_s_lifetime
        return float(self.integration_time)


def fluorescence_rate(d: DetectorParams) -> float:
    """R_f = Gamma_f |Omega_p|^2 / (2 |Omega_p|^2 + gamma_sf^2)."""
    w = d.rabi_p**2
    return d.gamma_f * w / (2 * w + d.gamma_sf**2)


def signal(d: DetectorParams, saturated: bool = False) -> float:
    """S_f = eta R_f t; ``saturated`` uses R_f = Gamma_f / 2."""
    rate = 0.5 * d.gamma_f if saturated else fluorescence_rate(d)
    return d.quantum_efficiency * rate * d.t


def reliability(d: DetectorParams) -> Report:
    s = signal(d)
    rep = Report()
    rep.add(Check("signal_at_least_one", 1.0, s, ratio(1.0, s), bool(s >= 1.0), "S_f >= 1"))
    return rep


def click_probability(d: DetectorParams, photon_present: bool = True) -> float:
    if photon_present:
        return -math.expm1(-signal(d))
    return min(d.dark_rate * d.t, 1.0)


def click(d: DetectorParams, photon_present: bool, rng) -> bool:
    return bool(rng.random() < click_probability(d, photon_present))


def click_trials(d: DetectorParams, photon_present: bool, trials: int, rng) -> np.ndarray:
    """``trials`` independent clicks; same draws as calling click() repeatedly."""
    return rng.random(trials) < click_probability(d, photon_present)


@dataclass(frozen=True)
class Measurement:
    outcome: str  # "V", "H" or "none"
    qubit: PolarizationQubit  # collapsed onto the branch taken


V = PolarizationQubit(1, 0)
H = PolarizationQubit(0, 1)


def measure_polarization(q: PolarizationQubit, d: DetectorParams | None, rng) -> Measurement:
    """PBS routing: V with probability |alpha|^2, else H; the branch detector may miss.

    ``d=None`` is an ideal detector.
    """
    branch = "V" if rng.random() < abs(q.alpha) ** 2 else "H"
    collapsed = V if branch == "V" else H
    if d is not None and not click(d, True, rng):
        return Measurement("none", collapsed)
    return Measurement(branch, collapsed)


def write_records(path, outcomes) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", "outcome"])
        for i, o in enumerate(outcomes):
            w.writerow([i, o])


def shelving_example(**overrides) -> DetectorParams:
    """Gamma_f / Gamma_s = 1e4, eta = 1e-3, strongly saturated pump."""
    kw = dict(
        rabi_p=2 * math.pi * 1e9,
        gamma_f=2 * math.pi * 6e6,
        gamma_sf=2 * math.pi * 1e3,
        gamma_s_lifetime=2 * math.pi * 6e2,
        quantum_efficiency=1e-3,
    )
    kw.update(overrides)
    return DetectorParams(**kw)
