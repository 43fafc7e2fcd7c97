"""Linear optical response of a Lambda-type EIT ensemble.

All rates and detunings are angular (rad/s).  The probe sees the
susceptibility

    chi = (2 kappa0 / k) * i gamma_ge / (gamma_ge - i Delta + |Omega_d|^2 / (gamma_R - i delta_R))

with ``k = omega / c``.  Most helpers accept numpy arrays for the detunings.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import constants as const

from .checks import Check, Report, less, much_less

C = const.c
HBAR = const.hbar
EPS0 = const.epsilon_0

# Tv_g/L must exceed this multiple of (2 kappa0 L)^(-1/2) to count as "much greater".
CONTAINMENT_MARGIN = 5.0


@dataclass(frozen=True, kw_only=True)
class MediumParams:
    """Atomic and optical constants of one EIT ensemble (SI, angular rates)."""

    gamma_ge: float
    Gamma_e: float
    gamma_R: float
    omega: float
    rabi_d: complex
    kappa0: float
    length: float
    delta_d: float = 0.0
    area: float | None = None
    density: float | None = None
    dipole_ge: float | None = None
    n_atoms: float | None = None
    coupling_g: float | None = None

    def __post_init__(self):
        for name in ("gamma_ge", "Gamma_e", "omega", "kappa0", "length"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive, got {getattr(self, name)!r}")
        if self.gamma_R < 0:
            raise ValueError(f"gamma_R must be non-negative, got {self.gamma_R!r}")
        if self.gamma_ge < 0.5 * self.Gamma_e * (1 - 1e-12):
            raise ValueError("gamma_ge must be at least Gamma_e / 2")
        for name in ("area", "density", "dipole_ge", "n_atoms", "coupling_g"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be strictly positive when given")
        if None not in (self.n_atoms, self.density, self.area):
            expected = self.density * self.area * self.length
            if abs(self.n_atoms - expected) > 1e-6 * expected:
                raise ValueError(f"n_atoms={self.n_atoms:g} inconsistent with density*area*length={expected:g}")
        if self.dipole_ge is not None and self.density is not None:
            expected = self.sigma0 * self.density
            if abs(self.kappa0 - expected) > 1e-6 * expected:
                raise ValueError(f"kappa0={self.kappa0:g} inconsistent with sigma0*density={expected:g}")

    @classmethod
    def from_optical_depth(cls, optical_depth: float, **kw) -> "MediumParams":
        """Build parameters with ``kappa0`` chosen so that ``2 kappa0 L = optical_depth``."""
        return cls(kappa0=optical_depth / (2.0 * kw["length"]), **kw)

    def with_(self, **changes) -> "MediumParams":
        return replace(self, **changes)

    @property
    def k(self) -> float:
        return self.omega / C

    @property
    def optical_depth(self) -> float:
        return 2.0 * self.kappa0 * self.length

    @property
    def rabi_sq(self) -> float:
        return abs(self.rabi_d) ** 2

    @property
    def sigma0(self) -> float:
        if self.dipole_ge is None:
            raise ValueError("sigma0 needs dipole_ge")
        return self.dipole_ge**2 * self.omega / (2 * HBAR * C * EPS0 * self.gamma_ge)

    @property
    def collective_coupling_sq(self) -> float:
        """g^2 N; defaults to c kappa0 gamma_ge, the value that makes c cos^2(theta) equal v_g."""
        if self.coupling_g is not None and self.n_atoms is not None:
            return self.coupling_g**2 * self.n_atoms
        return C * self.kappa0 * self.gamma_ge


@dataclass(frozen=True)
class OpticalResponse:
    delta_R: np.ndarray
    delta: np.ndarray
    chi: np.ndarray
    transmission: np.ndarray
    phase: np.ndarray


def _reduced_chi(p: MediumParams, delta, delta_R):
    """chi in units of 2 kappa0 / k."""
    delta = np.asarray(delta, dtype=float)
    delta_R = np.asarray(delta_R, dtype=float)
    omega2 = p.rabi_sq
    raman = p.gamma_R - 1j * delta_R
    if omega2 == 0.0:
        drive = np.zeros(np.broadcast(delta, delta_R).shape, dtype=complex)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            drive = omega2 / raman
    denom = p.gamma_ge - 1j * delta + drive
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 1j * p.gamma_ge / denom
    # gamma_R = delta_R = 0 with a drive: the Raman term is infinite and chi vanishes
    out = np.where(np.isfinite(denom), out, 0.0 + 0.0j)
    return out


def susceptibility(p: MediumParams, delta, delta_R, normalized: bool = False):
    chi = _reduced_chi(p, delta, delta_R)
    if not normalized:
        chi = chi * (2.0 * p.kappa0 / p.k)
    return chi[()] if np.ndim(chi) == 0 else chi


def two_level_susceptibility(p: MediumParams, delta, normalized: bool = False):
    delta = np.asarray(delta, dtype=float)
    chi = 1j * p.gamma_ge / (p.gamma_ge - 1j * delta)
    if not normalized:
        chi = chi * (2.0 * p.kappa0 / p.k)
    return chi[()] if np.ndim(chi) == 0 else chi


def transmission(p: MediumParams, delta_R, delta=None):
    """Intensity transmission exp(-k Im(chi) L).  ``delta`` defaults to ``delta_R + delta_d``."""
    delta_R = np.asarray(delta_R, dtype=float)
    if delta is None:
        delta = delta_R + p.delta_d
    out = np.exp(-p.optical_depth * _reduced_chi(p, delta, delta_R).imag)
    return out[()] if np.ndim(out) == 0 else out


def transparency_width(p: MediumParams) -> float:
    od = p.optical_depth
    if od <= 1.0:
        raise ValueError(f"transparency width needs an optically dense medium (2 kappa0 L = {od:g} <= 1)")
    return p.rabi_sq / (p.gamma_ge * math.sqrt(od))


def transmission_gaussian(p: MediumParams, delta_R):
    w = transparency_width(p)
    delta_R = np.asarray(delta_R, dtype=float)
    out = np.exp(-(delta_R**2) / w**2)
    return out[()] if np.ndim(out) == 0 else out


def group_velocity(p: MediumParams) -> float:
    if p.rabi_sq == 0.0:
        return 0.0
    return C / (1.0 + C * p.kappa0 * p.gamma_ge / p.rabi_sq)


def group_velocity_approx(p: MediumParams) -> float:
    """Slow-light limit |Omega_d|^2 / (kappa0 gamma_ge)."""
    return p.rabi_sq / (p.kappa0 * p.gamma_ge)


@dataclass(frozen=True)
class PhaseShift:
    approx: float
    exact: float
    inside_window: bool


def linear_phase_shift(p: MediumParams, delta_R: float) -> PhaseShift:
    """Phase picked up over the full length, both the slope formula and (k/2) Re(chi) L."""
    approx = p.kappa0 * p.length * p.gamma_ge * delta_R / p.rabi_sq
    exact = float(p.kappa0 * p.length * _reduced_chi(p, delta_R + p.delta_d, delta_R).real)
    inside = abs(delta_R) < transparency_width(p)
    if not inside:
        warnings.warn(
            f"delta_R={delta_R:g} rad/s lies outside the transparency window; the linear phase formula is unreliable",
            RuntimeWarning,
            stacklevel=2,
        )
    return PhaseShift(approx, exact, inside)


def containment_checks(p: MediumParams, pulse_duration: float) -> list[Check]:
    """(2 kappa0 L)^(-1/2) << T v_g / L < 1, the condition for fitting a pulse inside the medium."""
    fill = pulse_duration * group_velocity(p) / p.length
    od = p.optical_depth
    lower = CONTAINMENT_MARGIN / math.sqrt(od)
    return [
        less("fits_in_medium", fill, 1.0, "T v_g / L < 1"),
        Check(
            "depth_vs_bandwidth",
            lower,
            fill,
            fill / lower if lower > 0 else float("inf"),
            # the boundary itself counts as feasible, with room for rounding in T v_g / L
            bool(fill >= lower * (1 - 1e-9)),
            f"T v_g / L >= {CONTAINMENT_MARGIN:g} (2 kappa0 L)^-1/2",
        ),
    ]


def eit_validity(p: MediumParams, pulse_duration: float | None = None) -> Report:
    """Diagnostics only: the usual EIT inequalities and, given a pulse, the containment window."""
    rep = Report()
    om2 = p.rabi_sq
    rep.add(much_less("raman_detuning", abs(p.delta_d) * p.gamma_R, om2, note="Delta_d gamma_R << |Omega_d|^2"))
    rep.add(
        much_less(
            "raman_detuning_sq",
            p.delta_d**2 * p.gamma_R / p.gamma_ge,
            om2,
            note="Delta_d^2 gamma_R / gamma_ge << |Omega_d|^2",
        )
    )
    rep.add(much_less("transparency", p.gamma_R * p.gamma_ge, om2, note="gamma_R << |Omega_d|^2 / gamma_ge"))
    rep.add(much_less("optical_depth", 1.0, p.optical_depth, note="2 kappa0 L >> 1"))
    if pulse_duration is not None:
        w = transparency_width(p) if p.optical_depth > 1 else 0.0
        inv_w = 1.0 / w if w > 0 else float("inf")
        rep.add(Check("bandwidth", inv_w, pulse_duration, pulse_duration / inv_w, bool(pulse_duration >= inv_w),
                      "T >~ 1 / dw_tw"))
        for c in containment_checks(p, pulse_duration):
            rep.add(c)
    return rep


def spectrum(p: MediumParams, delta_R) -> OpticalResponse:
    """Scan over Raman detuning with Delta = delta_R + Delta_d."""
    delta_R = np.asarray(delta_R, dtype=float)
    delta = delta_R + p.delta_d
    chi = np.asarray(susceptibility(p, delta, delta_R))
    return OpticalResponse(
        delta_R=delta_R,
        delta=delta,
        chi=chi,
        transmission=np.asarray(transmission(p, delta_R, delta)),
        phase=p.k / 2.0 * chi.real * p.length,
    )
