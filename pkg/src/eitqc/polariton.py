"""Dark-state polariton dynamics in a uniform EIT medium.

Coordinates: the medium occupies ``0 <= z < L``.  A free-space single-photon
pulse is described by an envelope ``f`` with the convention

    E(z, t) = f(z - c (t - origin_time))

so ``f`` is the spatial profile at ``t = origin_time``.  Inside the medium the
polariton ``Psi = cos(theta) E - sin(theta) sqrt(N) sigma_gs`` is advected at
``v_g(t) = c cos^2(theta(t))`` without change of shape.  Advection is done with
exact Fourier shifts; entry into and exit from the medium use the
characteristic maps, which stay exact when the drive changes while part of the
pulse is still outside.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np
from scipy.optimize import brentq

from .checks import Report
from .medium import C, MediumParams, containment_checks, transparency_width

ADIABATIC_MARGIN = 10.0
ENERGY_FRACTION = 0.999


class FeasibilityError(ValueError):
    """Raised when a pulse cannot be stored in the given medium."""


class BasisOverflow(ValueError):
    pass


# ---------------------------------------------------------------------------
# spectral helpers


def _wavenumbers(n, dz):
    return 2 * np.pi * np.fft.fftfreq(n, dz)


def fourier_shift(samples, dz, distance):
    """Translate a periodic grid function by ``distance`` (exact for band-limited data)."""
    k = _wavenumbers(len(samples), dz)
    return np.fft.ifft(np.fft.fft(samples) * np.exp(-1j * k * distance))


def spectral_eval(samples, z_start, dz, x, periodic=True, chunk=256):
    """Evaluate the trigonometric interpolant of ``samples`` at arbitrary points.

    With ``periodic=False`` points outside ``[z_start, z_start + n dz)`` return 0.
    """
    samples = np.asarray(samples, dtype=complex)
    n = len(samples)
    x = np.asarray(x, dtype=float)
    shape = x.shape
    x = x.ravel()
    coef = np.fft.fft(samples) / n
    k = _wavenumbers(n, dz)
    nyq = None
    if n % 2 == 0:
        nyq = coef[n // 2]
        coef = coef.copy()
        coef[n // 2] = 0.0
    y = x - z_start
    out = np.empty(len(x), dtype=complex)
    for i in range(0, len(x), chunk):
        yy = y[i:i + chunk]
        out[i:i + chunk] = np.exp(1j * np.outer(yy, k)) @ coef
        if nyq is not None:
            out[i:i + chunk] += nyq * np.cos(np.pi / dz * yy)
    if not periodic:
        out[(y < 0) | (y >= n * dz)] = 0.0
    return out.reshape(shape)


def _is_power_of_two(n):
    return n > 0 and n & (n - 1) == 0


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class PulseEnvelope:
    """Free-space envelope sampled on a periodic grid starting at ``z_start``."""

    samples: np.ndarray
    domain_length: float
    origin_time: float = 0.0
    z_start: float | None = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        object.__setattr__(self, "samples", s)
        if s.ndim != 1 or not _is_power_of_two(len(s)):
            raise ValueError(f"grid size must be a power of two, got {s.shape}")
        if not self.domain_length > 0:
            raise ValueError("domain_length must be positive")
        if self.z_start is None:
            object.__setattr__(self, "z_start", -0.5 * self.domain_length)

    @property
    def grid_size(self) -> int:
        return len(self.samples)

    @property
    def dz(self) -> float:
        return self.domain_length / self.grid_size

    @property
    def z(self) -> np.ndarray:
        return self.z_start + self.dz * np.arange(self.grid_size)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.dz)

    def is_normalized(self, tol=1e-9) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def normalized(self) -> "PulseEnvelope":
        return replace(self, samples=self.samples / math.sqrt(self.norm()))

    def centroid(self) -> float:
        w = np.abs(self.samples) ** 2
        return float(np.sum(w * self.z) / np.sum(w))

    def at(self, z, periodic=False):
        return spectral_eval(self.samples, self.z_start, self.dz, z, periodic=periodic)

    def field(self, z, t):
        """Free-space field f(z - c (t - origin_time))."""
        return self.at(np.asarray(z, dtype=float) - C * (t - self.origin_time))

    def overlap(self, other: "PulseEnvelope") -> complex:
        if other.grid_size != self.grid_size or not math.isclose(other.dz, self.dz, rel_tol=1e-12):
            raise ValueError("envelopes live on different grids")
        return complex(np.sum(np.conj(self.samples) * other.samples) * self.dz)

    @classmethod
    def gaussian(cls, duration, grid_size=4096, box_factor=4.0, center=0.0, origin_time=0.0, chirp=0.0):
        """Gaussian pulse whose central 99.9% of energy spans ``duration`` seconds.

        The box is ``box_factor`` times that energy width, centred on ``center``.
        """
        width = C * duration
        sigma = width / (2 * _gauss_quantile(ENERGY_FRACTION))  # rms width of |f|^2
        box = box_factor * width
        z0 = center - box / 2
        z = z0 + box / grid_size * np.arange(grid_size)
        u = z - center
        f = np.exp(-(u**2) / (4 * sigma**2) + 1j * chirp * u**2)
        return cls(f, box, origin_time, z0).normalized()


def _gauss_quantile(fraction):
    from scipy.special import erfinv

    return math.sqrt(2.0) * float(erfinv(fraction))


def pulse_duration(pulse: PulseEnvelope, fraction=ENERGY_FRACTION) -> float:
    """Width in time of the central ``fraction`` of the pulse energy."""
    w = np.abs(pulse.samples) ** 2
    cdf = np.cumsum(w) / np.sum(w)
    tail = (1 - fraction) / 2
    z = pulse.z + 0.5 * pulse.dz
    lo = np.interp(tail, cdf, z)
    hi = np.interp(1 - tail, cdf, z)
    return float(hi - lo) / C


@dataclass(frozen=True)
class DriveSchedule:
    """Piecewise-linear Omega_d(t); held constant before the first and after the last knot."""

    times: np.ndarray
    rabi: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        r = np.asarray(self.rabi, dtype=float)
        if t.ndim != 1 or t.shape != r.shape or len(t) < 1:
            raise ValueError("times and rabi must be equal-length 1-d arrays")
        if np.any(np.diff(t) <= 0):
            raise ValueError("schedule times must be strictly increasing")
        if np.any(r < 0):
            raise ValueError("Omega_d(t) must be non-negative")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "rabi", r)

    @classmethod
    def constant(cls, rabi, t0=0.0):
        return cls(np.array([t0]), np.array([abs(rabi)]))

    @classmethod
    def ramp(cls, rabi_from, rabi_to, t_start, duration, power=3, pieces=64):
        """Sampled ramp with Omega_d following a power law in the remaining distance to the end value.

        ``power`` controls how quickly Omega_d approaches ``rabi_to`` near zero, where the group
        velocity is small and most of the adiabatic transfer happens.
        """
        s = np.linspace(0.0, 1.0, pieces + 1)
        if rabi_to <= rabi_from:
            shape = (1 - s) ** power
            rabi = rabi_to + (rabi_from - rabi_to) * shape
        else:
            shape = s**power
            rabi = rabi_from + (rabi_to - rabi_from) * shape
        return cls(t_start + duration * s, rabi)

    @classmethod
    def load(cls, path):
        data = np.loadtxt(path, ndmin=2, comments="#", delimiter=None)
        if data.shape[1] != 2:
            raise ValueError(f"{path}: expected two columns t_s, rabi_d_rad_per_s")
        return cls(data[:, 0], data[:, 1])

    def save(self, path):
        np.savetxt(path, np.column_stack([self.times, self.rabi]), header="t_s rabi_d_rad_per_s")

    @property
    def start(self) -> float:
        return float(self.times[0])

    @property
    def end(self) -> float:
        return float(self.times[-1])

    def shifted(self, dt) -> "DriveSchedule":
        return DriveSchedule(self.times + dt, self.rabi)

    def rabi_at(self, t):
        return np.interp(t, self.times, self.rabi)

    def ramp_time(self) -> float:
        """Total duration of the segments where Omega_d changes."""
        moving = np.abs(np.diff(self.rabi)) > 0
        return float(np.sum(np.diff(self.times)[moving]))

    # group-velocity bookkeeping ------------------------------------------

    def _segments(self, coupling_sq):
        t, r = self.times, self.rabi
        knots = np.zeros(len(t))
        for i in range(len(t) - 1):
            knots[i + 1] = knots[i] + _segment_distance(r[i], r[i + 1], t[i + 1] - t[i], t[i + 1] - t[i],
                                                        coupling_sq)
        return knots

    def displacement(self, t, coupling_sq):
        """D(t) = integral of v_g from the first knot to ``t`` (negative before it)."""
        t = np.asarray(t, dtype=float)
        knots = self._segments(coupling_sq)
        out = np.empty(t.shape)
        tt, r = self.times, self.rabi
        before = t < tt[0]
        out[before] = (t[before] - tt[0]) * _vg(r[0], coupling_sq)
        after = t >= tt[-1]
        out[after] = knots[-1] + (t[after] - tt[-1]) * _vg(r[-1], coupling_sq)
        mid = ~(before | after)
        if np.any(mid):
            idx = np.searchsorted(tt, t[mid], side="right") - 1
            seg = tt[idx + 1] - tt[idx]
            out[mid] = knots[idx] + _segment_distance(r[idx], r[idx + 1], seg, t[mid] - tt[idx], coupling_sq)
        return out[()] if out.ndim == 0 else out

    def invert_displacement(self, d, coupling_sq, t_lo, t_hi, iters=200):
        """Times at which D reaches ``d``; NaN where it never does inside [t_lo, t_hi]."""
        d = np.asarray(d, dtype=float)
        lo = np.full(d.shape, float(t_lo))
        hi = np.full(d.shape, float(t_hi))
        d_lo = self.displacement(lo, coupling_sq)
        d_hi = self.displacement(hi, coupling_sq)
        ok = (d >= d_lo) & (d <= d_hi)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            dm = self.displacement(mid, coupling_sq)
            up = dm < d
            lo = np.where(up, mid, lo)
            hi = np.where(up, hi, mid)
            if np.all(hi - lo <= 4 * np.finfo(float).eps * np.maximum(abs(lo), abs(hi))):
                break
        out = np.where(ok, 0.5 * (lo + hi), np.nan)
        return out[()] if out.ndim == 0 else out


def _vg(rabi, coupling_sq):
    r2 = rabi * rabi
    if r2 == 0:
        return 0.0
    return C * r2 / (r2 + coupling_sq)


def _segment_distance(r1, r2, seg, elapsed, coupling_sq):
    """Integral of c Omega^2/(Omega^2 + G) over the first ``elapsed`` seconds of a linear segment."""
    r1, r2, seg, elapsed = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (r1, r2, seg, elapsed)))
    elapsed = np.maximum(elapsed, 0.0)
    sg = math.sqrt(coupling_sq)
    flat = np.abs(r2 - r1) <= 1e-12 * np.maximum(np.maximum(r1, r2), sg)
    b = np.where(flat, 1.0, (r2 - r1) / seg)
    r = r1 + b * elapsed
    # atan(r/sg) - atan(r1/sg) written without cancellation
    datan = np.arctan((r - r1) / sg / (1 + r * r1 / coupling_sq))
    ramped = C * (elapsed - sg / b * datan)
    const = C * elapsed * r1**2 / (r1**2 + coupling_sq)
    out = np.where(flat, const, ramped)
    return out[()] if out.ndim == 0 else out


def mixing_angle(g, n_atoms, rabi_d):
    """theta with tan^2(theta) = g^2 N / |Omega_d|^2, in [0, pi/2]."""
    if np.any(np.asarray(rabi_d) < 0):
        raise ValueError("rabi_d must be non-negative")
    return np.arctan2(g * np.sqrt(n_atoms), np.abs(rabi_d))


def _cos(theta):
    # exactly zero for a stored excitation instead of 6e-17
    return 0.0 if theta == math.pi / 2 else math.cos(theta)


def _theta(p: MediumParams, rabi):
    return np.arctan2(math.sqrt(p.collective_coupling_sq), np.abs(rabi))


@dataclass(frozen=True)
class PolaritonState:
    """Polariton Psi on a periodic grid covering the medium and its surroundings.

    Only ``0 <= x < L`` is physical medium.  During entry and exit the rest of
    the box carries the characteristic pre- and post-images of the pulse.
    """

    psi: np.ndarray
    theta: float
    medium: MediumParams
    clock: float
    x_start: float
    dx: float
    pulse_ref: PulseEnvelope | None = None
    entry_time: float | None = None
    lost_fraction: float = 0.0
    log: dict = field(default_factory=dict, compare=False)

    @property
    def grid(self) -> np.ndarray:
        return self.x_start + self.dx * np.arange(len(self.psi))

    @property
    def photonic(self) -> np.ndarray:
        return _cos(self.theta) * self.psi

    @property
    def spin(self) -> np.ndarray:
        """sqrt(N) sigma_gs; the minus sign follows from the definition of Psi."""
        return -math.sin(self.theta) * self.psi

    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.dx)

    def inside(self) -> np.ndarray:
        x = self.grid
        return (x >= 0) & (x < self.medium.length)


def medium_grid(p: MediumParams, grid_size=4096, box_factor=4.0):
    if not _is_power_of_two(grid_size):
        raise ValueError("grid size must be a power of two")
    box = box_factor * p.length
    x_start = -0.5 * (box - p.length)
    return x_start, box / grid_size


# ---------------------------------------------------------------------------
# constant drive


@dataclass(frozen=True)
class ConstantDriveResult:
    envelope: PulseEnvelope
    attenuation: float  # intensity factor over the full length
    phase: float  # phi(L)
    delay: float  # transit time L / v_g
    expected_loss: float


def _constant_coefficients(p: MediumParams, delta_R):
    tan2 = p.collective_coupling_sq / p.rabi_sq
    kappa = tan2 / C * (p.gamma_R + p.gamma_ge * delta_R**2 / p.rabi_sq)
    s = tan2 / C
    vg = C / (1 + tan2)
    return kappa, s, vg


def _field_constant(pulse: PulseEnvelope, p: MediumParams, z, t, delta_R=0.0):
    kappa, s, vg = _constant_coefficients(p, delta_R)
    z = np.asarray(z, dtype=float)
    L = p.length
    ct = C * (t - pulse.origin_time)
    arg = np.where(z < 0, z - ct, np.where(z < L, z * C / vg - ct, z + L * (C / vg - 1) - ct))
    zz = np.clip(z, 0.0, L)
    factor = np.where(z < 0, 1.0, np.exp(-kappa * zz + 1j * s * delta_R * zz))
    return pulse.at(arg) * factor


def propagate_constant_drive(pulse: PulseEnvelope, p: MediumParams, t: float, delta_R: float = 0.0):
    """Field on the pulse grid at time ``t`` for a drive that is always on.

    The three branches are free space before the medium, the compressed
    retarded-time solution inside and the restored free-space pulse beyond.
    """
    if p.rabi_sq == 0:
        raise ValueError("constant-drive propagation needs a nonzero drive")
    if abs(delta_R * (delta_R + p.delta_d)) * 10 > p.rabi_sq:
        raise ValueError("delta_R * Delta must be much smaller than |Omega_d|^2")
    kappa, s, vg = _constant_coefficients(p, delta_R)
    L = p.length
    z = pulse.z
    out = np.empty(pulse.grid_size, dtype=complex)
    ct = C * (t - pulse.origin_time)
    before = z < 0
    inside = (z >= 0) & (z < L)
    after = z >= L
    # spectral interpolation is the exact Fourier shift evaluated pointwise, without wrap-around
    out[before] = pulse.at(z[before] - ct)
    out[inside] = pulse.at(z[inside] * C / vg - ct) * np.exp((-kappa + 1j * s * delta_R) * z[inside])
    out[after] = pulse.at(z[after] + L * (C / vg - 1) - ct) * np.exp((-kappa + 1j * s * delta_R) * L)
    return ConstantDriveResult(
        envelope=replace(pulse, samples=out, origin_time=t, z_start=pulse.z_start),
        attenuation=math.exp(-2 * kappa * L),
        phase=s * delta_R * L,
        delay=L / vg,
        expected_loss=1 - math.exp(-2 * kappa * L),
    )


def transmitted_pulse(pulse: PulseEnvelope, p: MediumParams, delta_R: float = 0.0) -> PulseEnvelope:
    """The pulse after it has left the medium, as a free-space envelope on the input grid."""
    kappa, s, vg = _constant_coefficients(p, delta_R)
    L = p.length
    factor = np.exp((-kappa + 1j * s * delta_R) * L)
    return replace(pulse, samples=pulse.samples * factor, origin_time=pulse.origin_time + L / vg - L / C)


def intensity(obj, p: MediumParams, z, t, delta_R: float = 0.0):
    """<I(z, t)> for a free-space pulse sent through the medium, or for a polariton state.

    For a state the photonic part is advected at the current group velocity from ``state.clock``.
    """
    if isinstance(obj, PulseEnvelope):
        return np.abs(_field_constant(obj, p, z, t, delta_R)) ** 2
    if isinstance(obj, PolaritonState):
        vg = C * math.cos(obj.theta) ** 2
        shift = vg * (t - obj.clock)
        vals = spectral_eval(obj.photonic, obj.x_start, obj.dx, np.asarray(z, dtype=float) - shift)
        return np.abs(vals) ** 2
    raise TypeError(f"cannot evaluate intensity of {type(obj).__name__}")


# ---------------------------------------------------------------------------
# time-dependent drive


def storage_feasibility(p: MediumParams, pulse_duration: float) -> Report:
    rep = Report()
    for c in containment_checks(p, pulse_duration):
        rep.add(c)
    return rep


def _adiabatic_check(p: MediumParams, schedule: DriveSchedule):
    ramp = schedule.ramp_time()
    if ramp == 0:
        return
    peak = float(np.max(schedule.rabi))
    if p.optical_depth <= 1 or peak == 0:
        return
    margin = ramp * transparency_width(p.with_(rabi_d=peak))
    if margin < ADIABATIC_MARGIN * (1 - 1e-9):
        warnings.warn(
            f"drive ramp may be non-adiabatic: ramp time x transparency width = {margin:.3g} < {ADIABATIC_MARGIN:g}",
            RuntimeWarning,
            stacklevel=3,
        )


def evolve_polariton(state: PolaritonState, schedule: DriveSchedule, dt: float, until: float | None = None,
                     check_adiabatic: bool = True) -> PolaritonState:
    """Advance Psi from ``state.clock`` to ``until`` (default: schedule end) in steps of ``dt``.

    Each step translates Psi by the exact integral of v_g over the step and
    re-projects onto the new mixing angle; the norm of Psi is untouched.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    p = state.medium
    G = p.collective_coupling_sq
    t_end = schedule.end if until is None else until
    if check_adiabatic:
        _adiabatic_check(p, schedule)
    n_steps = max(int(math.ceil((t_end - state.clock) / dt - 1e-9)), 0)
    if n_steps == 0:
        return state
    times = np.linspace(state.clock, t_end, n_steps + 1)
    disp = schedule.displacement(times, G)
    steps = np.diff(disp)
    k = _wavenumbers(len(state.psi), state.dx)
    spec = np.fft.fft(state.psi)
    norm0 = state.norm()
    for d in steps:
        spec = spec * np.exp(-1j * k * d)
    psi = np.fft.ifft(spec)
    theta = float(_theta(p, schedule.rabi_at(t_end)))
    new = replace(state, psi=psi, theta=theta, clock=float(t_end), log=dict(state.log))
    new.log["norm_drift"] = abs(new.norm() - norm0)
    new.log["steps"] = state.log.get("steps", 0) + n_steps
    return new


def _entry_state(pulse: PulseEnvelope, p: MediumParams, schedule: DriveSchedule, t_state: float, grid_size: int):
    """Psi at ``t_state`` from the entry characteristic: slices that reach z = 0 at t_a sit at D(t_state) - D(t_a)."""
    G = p.collective_coupling_sq
    x_start, dx = medium_grid(p, grid_size)
    x = x_start + dx * np.arange(grid_size)
    # arrival window of the sampled pulse, padded by the box
    t_first = pulse.origin_time - (pulse.z_start + pulse.domain_length) / C
    t_last = pulse.origin_time - pulse.z_start / C
    d_state = schedule.displacement(t_state, G)
    t_a = schedule.invert_displacement(d_state - x, G, t_first, t_last)
    valid = np.isfinite(t_a)
    psi = np.zeros(grid_size, dtype=complex)
    ta = t_a[valid]
    rabi = schedule.rabi_at(ta)
    with np.errstate(divide="ignore"):
        inv_cos = np.sqrt(1 + G / rabi**2)
    u = -C * (ta - pulse.origin_time)
    psi[valid] = pulse.at(u) * np.where(np.isfinite(inv_cos), inv_cos, 0.0)
    return x_start, dx, psi


def _stored_centroid(pulse, p, schedule, t_end):
    G = p.collective_coupling_sq
    w = np.abs(pulse.samples) ** 2
    w = w / w.sum()
    t_a = pulse.origin_time - pulse.z / C
    x = schedule.displacement(t_end, G) - schedule.displacement(t_a, G)
    return float(np.sum(w * x))


def store(pulse: PulseEnvelope, p: MediumParams, ramp: float | DriveSchedule | None = None, *,
          grid_size: int = 4096, steps: int = 2000, target: float = 0.5, power: int = 3,
          check: bool = True) -> PolaritonState:
    """Map a free-space pulse onto a stationary spin wave.

    ``ramp`` is either an explicit schedule (absolute times, ending at zero
    drive) or a ramp duration; with a duration the ramp start is chosen so the
    stored excitation is centred at ``target * L``.  ``p.rabi_d`` is the drive
    before the ramp.  The returned state has ``theta = pi/2``; its ``spin``
    field is the stored spin wave.
    """
    T = pulse_duration(pulse)
    if check:
        rep = storage_feasibility(p, T)
        if not rep.ok:
            raise FeasibilityError("pulse does not fit the medium:\n" + rep.table())
    G = p.collective_coupling_sq
    rabi0 = abs(p.rabi_d)
    if isinstance(ramp, DriveSchedule):
        schedule = ramp
    else:
        ramp_time = 10.0 / transparency_width(p) if ramp is None else float(ramp)
        t_c = pulse.origin_time - pulse.centroid() / C

        def miss(t_r):
            sch = DriveSchedule.ramp(rabi0, 0.0, t_r, ramp_time, power=power)
            return _stored_centroid(pulse, p, sch, sch.end) - target * p.length

        span = p.length / _vg(rabi0, G) + ramp_time + T
        lo, hi = t_c - 2 * span, t_c + 2 * span
        if miss(lo) * miss(hi) > 0:
            raise FeasibilityError("cannot place the stored excitation at the requested position")
        t_r = brentq(miss, lo, hi, xtol=1e-12 * span, rtol=1e-15)
        schedule = DriveSchedule.ramp(rabi0, 0.0, t_r, ramp_time, power=power)
    if schedule.rabi[-1] != 0:
        raise ValueError("a storage schedule must end with the drive off")

    t_state = schedule.start
    x_start, dx, psi = _entry_state(pulse, p, schedule, t_state, grid_size)
    state = PolaritonState(
        psi=psi,
        theta=float(_theta(p, schedule.rabi[0])),
        medium=p,
        clock=t_state,
        x_start=x_start,
        dx=dx,
        pulse_ref=pulse,
        entry_time=pulse.origin_time - pulse.centroid() / C,
        log={"store_schedule": schedule, "norm_in": None},
    )
    state.log["norm_in"] = state.norm()
    dt = max(schedule.end - t_state, 0.0) / steps if schedule.end > t_state else 1.0
    state = evolve_polariton(state, schedule, dt)
    # whatever is not inside the medium when the drive is off has been lost
    inside = state.inside()
    before = state.norm()
    psi = np.where(inside, state.psi, 0.0)
    state = replace(state, psi=psi, theta=math.pi / 2)
    lost = before - state.norm()
    state.log["store_norm_drift"] = state.log.get("norm_drift", 0.0)
    return replace(state, lost_fraction=float(max(lost, 0.0)))


def hold(state: PolaritonState, dt: float) -> PolaritonState:
    """Keep the drive off for ``dt``: the spin wave decays as exp(-gamma_R dt)."""
    if dt < 0:
        raise ValueError("hold time must be non-negative")
    if state.theta < math.pi / 2 - 1e-12:
        raise ValueError("hold needs a stored (theta = pi/2) excitation")
    factor = math.exp(-state.medium.gamma_R * dt)
    return replace(state, psi=state.psi * factor, clock=state.clock + dt, log=dict(state.log))


def retrieve(state: PolaritonState, p: MediumParams | None = None, ramp: float | DriveSchedule | None = None, *,
             steps: int = 2000, power: int = 3, output: PulseEnvelope | None = None) -> PulseEnvelope:
    """Switch the drive back on and read the pulse out at ``z = L``.

    The result is a free-space envelope on the grid of ``output`` (default:
    the stored pulse's grid) whose ``origin_time`` is chosen so that a
    perfectly reconstructed pulse coincides sample by sample with the input.
    Its norm is the retrieval efficiency.
    """
    p = state.medium if p is None else p
    G = p.collective_coupling_sq
    rabi0 = abs(p.rabi_d)
    if isinstance(ramp, DriveSchedule):
        schedule = ramp
    else:
        ramp_time = 10.0 / transparency_width(p) if ramp is None else float(ramp)
        schedule = DriveSchedule.ramp(0.0, rabi0, state.clock, ramp_time, power=power)
    if schedule.start < state.clock - 1e-15 * max(1.0, abs(state.clock)):
        raise ValueError("retrieval schedule starts before the stored state")
    start = hold(state, schedule.start - state.clock) if schedule.start > state.clock else state
    dt = (schedule.end - start.clock) / steps if schedule.end > start.clock else 1.0
    end = evolve_polariton(start, schedule, dt)
    template = output or state.pulse_ref
    if template is None:
        raise ValueError("no output grid: pass output= or store a pulse first")
    if state.pulse_ref is not None and state.entry_time is not None:
        x_c = float(np.sum(np.abs(state.psi) ** 2 * state.grid) / np.sum(np.abs(state.psi) ** 2))
        t_exit = _exit_time(schedule, G, state.clock, p.length - x_c)
        t0_out = state.pulse_ref.origin_time + (t_exit - state.entry_time - p.length / C)
    else:
        t0_out = end.clock
    return _exit_pulse(end, schedule, template, t0_out)


def _exit_time(schedule, G, t_from, distance):
    """First time after ``t_from`` at which the polariton has moved ``distance``."""
    vmax = _vg(float(np.max(schedule.rabi)), G)
    if vmax == 0:
        raise ValueError("the drive never turns on")
    horizon = max(schedule.end, t_from)
    v_last = _vg(schedule.rabi[-1], G)
    if v_last > 0:
        horizon += 2 * abs(distance) / v_last
    t = float(schedule.invert_displacement(schedule.displacement(t_from, G) + distance, G, t_from, horizon))
    if not math.isfinite(t):
        raise ValueError("the polariton never covers the requested distance under this schedule")
    return t


def _exit_pulse(end: PolaritonState, schedule: DriveSchedule, template: PulseEnvelope, t0_out: float):
    """Exit characteristic: E(L, t) = cos(theta(t)) Psi_end(L - (D(t) - D(t_end)))."""
    p = end.medium
    G = p.collective_coupling_sq
    L = p.length
    u = template.z
    t_u = t0_out + (L - u) / C
    x = L - (schedule.displacement(t_u, G) - schedule.displacement(end.clock, G))
    cos_t = np.cos(_theta(p, schedule.rabi_at(t_u)))
    g = cos_t * spectral_eval(end.psi, end.x_start, end.dx, x, periodic=False)
    return PulseEnvelope(g, template.domain_length, t0_out, template.z_start)


def transmit(pulse: PulseEnvelope, p: MediumParams, schedule: DriveSchedule | None = None, *,
             grid_size: int = 4096, steps: int = 1000) -> PulseEnvelope:
    """Send a pulse through the medium under ``schedule`` (default: constant ``p.rabi_d``).

    The polariton is built when the pulse centre is a quarter of the way in,
    evolved for the time it takes to reach three quarters, and then read out.
    """
    G = p.collective_coupling_sq
    schedule = DriveSchedule.constant(abs(p.rabi_d), pulse.origin_time) if schedule is None else schedule
    t_c = pulse.origin_time - pulse.centroid() / C
    t_state = _exit_time(schedule, G, t_c, 0.25 * p.length)
    x_start, dx, psi = _entry_state(pulse, p, schedule, t_state, grid_size)
    state = PolaritonState(psi, float(_theta(p, schedule.rabi_at(t_state))), p, t_state, x_start, dx, pulse, t_c)
    t_mid = _exit_time(schedule, G, t_state, 0.5 * p.length)
    end = evolve_polariton(state, schedule, (t_mid - t_state) / steps, until=t_mid, check_adiabatic=False)
    t_exit = _exit_time(schedule, G, t_c, p.length)
    return _exit_pulse(end, schedule, pulse, pulse.origin_time + t_exit - t_c - p.length / C)


@dataclass(frozen=True)
class RoundTrip:
    fidelity: float
    efficiency: float
    delay: float
    predicted_delay: float
    norm_drift: float
    lost_fraction: float
    output: PulseEnvelope


def measured_delay(reference: PulseEnvelope, output: PulseEnvelope, length: float) -> float:
    """Transit time through a medium of the given length, from envelope centroids."""
    shift = output.centroid() - reference.centroid()
    return output.origin_time - reference.origin_time - shift / C + length / C


def round_trip(pulse: PulseEnvelope, p: MediumParams, hold_time: float = 0.0, ramp=None, **kw) -> RoundTrip:
    state = store(pulse, p, ramp, **kw)
    drift = state.log.get("norm_drift", 0.0)
    state = hold(state, hold_time)
    out = retrieve(state, p, ramp if not isinstance(ramp, DriveSchedule) else None)
    fid = abs(pulse.overlap(out)) ** 2
    return RoundTrip(
        fidelity=fid,
        efficiency=out.norm(),
        delay=measured_delay(pulse, out, p.length),
        predicted_delay=out.origin_time - pulse.origin_time + p.length / C,
        norm_drift=drift,
        lost_fraction=state.lost_fraction,
        output=out,
    )


# ---------------------------------------------------------------------------
# small-N Hamiltonian oracle


def dark_state_coefficients(n: int, theta: float) -> np.ndarray:
    """Amplitudes of |n-m photons>|s^(m)> for m = 0..n in the n-excitation dark state."""
    if n < 0:
        raise ValueError("photon number must be non-negative")
    s, c = -math.sin(theta), math.cos(theta)
    return np.array([math.sqrt(math.comb(n, m)) * s**m * c ** (n - m) for m in range(n + 1)])


_G, _S, _E = 0, 1, 2


def _site_op(op, j, n_atoms):
    mats = [np.eye(3)] * n_atoms
    mats[j] = op
    out = np.eye(1)
    for m in mats:
        out = np.kron(out, m)
    return out


def _ket(i, j):
    m = np.zeros((3, 3))
    m[i, j] = 1.0
    return m


def lambda_hamiltonian(n_atoms, max_photons, g, rabi, positions, k=1.0, q=0.0, k_d=0.0, delta=0.0, delta_R=0.0):
    """Dense single-mode Lambda Hamiltonian (units of hbar) on Fock x (g, s, e)^N."""
    nf = max_photons + 1
    a = np.diag(np.sqrt(np.arange(1, nf)), 1)
    i_f = np.eye(nf)
    dim_at = 3**n_atoms
    H = np.zeros((nf * dim_at, nf * dim_at), dtype=complex)
    for j, z in enumerate(positions):
        ee = _site_op(_ket(_E, _E), j, n_atoms)
        ss = _site_op(_ket(_S, _S), j, n_atoms)
        eg = _site_op(_ket(_E, _G), j, n_atoms)
        es = _site_op(_ket(_E, _S), j, n_atoms)
        h = delta * np.kron(i_f, ee) + delta_R * np.kron(i_f, ss)
        probe = -g * np.exp(1j * (k + q) * z) * np.kron(a, eg)
        drive = -rabi * np.exp(1j * k_d * z) * np.kron(i_f, es)
        H += h + probe + probe.conj().T + drive + drive.conj().T
    return H


def dicke_state(n_atoms, m, phase_k, positions):
    """Symmetric state with m atoms in |s>, phases exp(i phase_k sum z)."""
    if m > n_atoms:
        raise ValueError("more spin excitations than atoms")
    vec = np.zeros(3**n_atoms, dtype=complex)
    for subset in combinations(range(n_atoms), m):
        idx = 0
        for j in range(n_atoms):
            idx = idx * 3 + (_S if j in subset else _G)
        vec[idx] += np.exp(1j * phase_k * sum(positions[j] for j in subset))
    return vec / math.sqrt(math.comb(n_atoms, m))


def hamiltonian_dark_oracle(n_atoms: int, n_photons: int, theta: float, *, delta: float = 0.7,
                            delta_R: float = 0.0, coupling_theta: float | None = None, k: float = 1.3,
                            q: float = 0.21, k_d: float = 0.4, seed: int = 7, max_dim: int = 4096) -> float:
    """Relative residual ||H D|| / ||D|| of the dark state built from ``dark_state_coefficients``.

    Couplings are set from ``coupling_theta`` (default ``theta``): Omega_d = 1 and
    g sqrt(N) = tan(theta), or Omega_d = 0, g = 1 at theta = pi/2.  Atom positions are drawn
    from a seeded generator.  A mismatch between the two angles, or delta_R != 0, breaks darkness.
    """
    if n_atoms < 1 or n_photons < 0:
        raise ValueError("need at least one atom and a non-negative photon number")
    nf = n_photons + 1
    dim = nf * 3**n_atoms
    if dim > max_dim:
        raise BasisOverflow(f"basis dimension {dim} exceeds cap {max_dim}")
    ct = theta if coupling_theta is None else coupling_theta
    if abs(ct - math.pi / 2) < 1e-12:
        rabi, g = 0.0, 1.0
    else:
        rabi, g = 1.0, math.tan(ct) / math.sqrt(n_atoms)
    rng = np.random.default_rng(seed)
    z = rng.uniform(0.0, 20.0, n_atoms)
    H = lambda_hamiltonian(n_atoms, n_photons, g, rabi, z, k, q, k_d, delta, delta_R)
    coefs = dark_state_coefficients(n_photons, theta)
    state = np.zeros(dim, dtype=complex)
    for m, cm in enumerate(coefs):
        fock = np.zeros(nf)
        fock[n_photons - m] = 1.0
        state += cm * np.kron(fock, dicke_state(n_atoms, m, k + q - k_d, z))
    return float(np.linalg.norm(H @ state) / np.linalg.norm(state))
