"""Dipole-blockade single-photon source built from Rydberg Stark states.

A weak pulse Omega_r1 drives the ensemble from |g...g> to one symmetric
Rydberg excitation; double excitations are suppressed by the dipole-dipole
shift Delta(R).  The leftover double-excitation probability

    P_double = (1/N) sum_{i,j} Omega^2 / Delta_ij^2 = N <Omega^2 / Delta(R)^2>_pairs

is estimated by Monte Carlo over pair separations, and dephasing by gamma_r T.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import constants as const

from .checks import Report, less
from .medium import C, MediumParams, eit_validity
from . import polariton

HBAR = const.hbar
E_CHARGE = const.e
A0 = const.physical_constants["Bohr radius"][0]
EPS0 = const.epsilon_0

CHUNK = 1 << 16
MIN_SAMPLES = 10_000
GEOMETRIES = ("1d", "cylinder", "fixed")


@dataclass(frozen=True)
class RydbergStark:
    n: int
    q_par: int
    m: int = 0
    e_static: float = 0.0

    def __post_init__(self):
        n, q, m = self.n, self.q_par, self.m
        if n < 1 or abs(m) > n - 1:
            raise ValueError(f"need |m| <= n-1, got n={n}, m={m}")
        top = n - 1 - abs(m)
        if abs(q) > top or (top - q) % 2:
            raise ValueError(f"q must be one of {top}, {top - 2}, ..., {-top}; got {q}")

    @property
    def dipole(self) -> float:
        """Permanent dipole moment (3/2) n q e a0 along the field (C m)."""
        return 1.5 * self.n * self.q_par * E_CHARGE * A0


def stark_shift(s: RydbergStark) -> float:
    """Linear Stark shift (3/2) n q e a0 E / hbar in rad/s."""
    return s.dipole * s.e_static / HBAR


def dd_potential(d1, d2, r) -> float:
    """(d1.d2 - 3 (d1.e)(d2.e)) / (4 pi eps0 R^3 hbar) in rad/s."""
    d1, d2, r = (np.asarray(v, dtype=float) for v in (d1, d2, r))
    R = float(np.linalg.norm(r))
    if R == 0:
        raise ValueError("dipole-dipole potential needs a nonzero separation")
    e = r / R
    return float((d1 @ d2 - 3 * (d1 @ e) * (d2 @ e)) / (4 * math.pi * EPS0 * R**3 * HBAR))


def dd_shift(n: int, r) -> float:
    """Pair shift estimate -n^4 e^2 a0^2 / (pi hbar eps0 R^3) in rad/s."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("separation must be positive")
    out = -(n**4) * E_CHARGE**2 * A0**2 / (math.pi * HBAR * EPS0 * r**3)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class TrapConfig:
    length: float
    area: float
    density: float
    n_atoms: float
    rabi_r1: float
    rabi_r2: float
    gamma_r: float
    rydberg_n: int
    rng_seed: int = 0
    geometry: str = "1d"
    dd_shift_at_length: float | None = None  # overrides the n^4 estimate at R = L
    preparation_time: float | None = None  # overrides pi / (2 sqrt(N) Omega_r1)
    min_distance: float | None = None  # defaults to rho^(-1/3) / 2

    def __post_init__(self):
        for name in ("length", "area", "density", "n_atoms", "rydberg_n"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("rabi_r1", "rabi_r2", "gamma_r"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        expected = self.density * self.area * self.length
        if abs(self.n_atoms - expected) > 0.01 * expected:
            raise ValueError(f"n_atoms={self.n_atoms:g} differs from density*area*length={expected:g} by > 1%")
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"geometry must be one of {GEOMETRIES}")

    @property
    def delta_at_length(self) -> float:
        if self.dd_shift_at_length is not None:
            return -abs(self.dd_shift_at_length)
        return float(dd_shift(self.rydberg_n, self.length))

    @property
    def cutoff(self) -> float:
        if self.min_distance is not None:
            return self.min_distance
        return 0.5 * self.density ** (-1.0 / 3.0)

    @property
    def pi_pulse_time(self) -> float:
        """Duration of the collective pi pulse, sqrt(N) Omega_r1 T = pi/2."""
        return math.pi / (2 * math.sqrt(self.n_atoms) * self.rabi_r1) if self.rabi_r1 > 0 else math.inf

    @property
    def pulse_time(self) -> float:
        return self.preparation_time if self.preparation_time is not None else self.pi_pulse_time


@dataclass(frozen=True)
class FidelityReport:
    p_double: float
    p_dephase: float
    fidelity: float
    pulse_time: float
    samples: int
    std_err: float
    delta_eff: float = math.inf
    pi_pulse_time: float = math.nan
    checks: Report = field(default_factory=Report)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["checks"] = self.checks.to_dict()
        return d


def _pair_separations(cfg: TrapConfig, rng, size):
    L = cfg.length
    if cfg.geometry == "fixed":
        return np.full(size, L)
    z = rng.uniform(0.0, L, (2, size))
    if cfg.geometry == "1d":
        return np.abs(z[0] - z[1])
    radius = math.sqrt(cfg.area / math.pi)
    rr = radius * np.sqrt(rng.uniform(0.0, 1.0, (2, size)))
    ph = rng.uniform(0.0, 2 * math.pi, (2, size))
    dx = rr[0] * np.cos(ph[0]) - rr[1] * np.cos(ph[1])
    dy = rr[0] * np.sin(ph[0]) - rr[1] * np.sin(ph[1])
    return np.sqrt(dx**2 + dy**2 + (z[0] - z[1]) ** 2)


def _chunk_sums(cfg: TrapConfig, seed, size):
    rng = np.random.default_rng(seed)
    R = np.maximum(_pair_separations(cfg, rng, size), cfg.cutoff)
    # Delta(R) = Delta(L) (L/R)^3
    x = cfg.n_atoms * (cfg.rabi_r1 / cfg.delta_at_length) ** 2 * (R / cfg.length) ** 6
    return float(np.sum(x)), float(np.sum(x * x))


def p_double_mc(cfg: TrapConfig, samples: int = 1_000_000, workers: int = 1):
    """Mean and standard error of N <Omega^2 / Delta(R)^2> over sampled pairs.

    Samples are drawn in fixed-size chunks from spawned seed sequences and
    summed in chunk order, so the result does not depend on ``workers``.
    """
    if samples < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples")
    n_chunks = -(-samples // CHUNK)
    sizes = [CHUNK] * (n_chunks - 1) + [samples - CHUNK * (n_chunks - 1)]
    seeds = np.random.SeedSequence(cfg.rng_seed).spawn(n_chunks)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda a: _chunk_sums(cfg, *a), zip(seeds, sizes)))
    else:
        parts = [_chunk_sums(cfg, s, n) for s, n in zip(seeds, sizes)]
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0) * samples / (samples - 1)
    return mean, math.sqrt(var / samples)


def p_double_uniform_1d(cfg: TrapConfig) -> float:
    """Closed form for the 1-d uniform trap: E[(u - v)^6] = 1/28 for u, v uniform on [0, 1]."""
    return cfg.n_atoms * (cfg.rabi_r1 / cfg.delta_at_length) ** 2 / 28.0


def p_dephase(cfg: TrapConfig) -> float:
    return cfg.gamma_r * cfg.pulse_time


def _delta_eff(cfg: TrapConfig, p_double: float) -> float:
    return math.sqrt(cfg.n_atoms * cfg.rabi_r1**2 / p_double) if p_double > 0 else math.inf


def blockade_checks(cfg: TrapConfig, p_double: float | None = None) -> Report:
    """Blockade inequalities; without ``p_double`` the 1-d closed form sets Delta_eff."""
    pd = p_double_uniform_1d(cfg) if p_double is None else p_double
    rep = Report()
    collective = math.sqrt(cfg.n_atoms) * cfg.rabi_r1
    rep.add(less("collective_rabi_vs_shift", collective, _delta_eff(cfg, pd), "sqrt(N) Omega_r1 < Delta_eff"))
    d_l = abs(cfg.delta_at_length)
    rep.add(less("shift_vs_rabi", cfg.rabi_r1, d_l, "|Delta(L)| > Omega_r1"))
    rep.add(less("shift_vs_linewidth", cfg.gamma_r, d_l, "|Delta(L)| > gamma_r"))
    return rep


def source_fidelity(cfg: TrapConfig, samples: int = 1_000_000, workers: int = 1) -> FidelityReport:
    pd, err = p_double_mc(cfg, samples, workers)
    pdeph = p_dephase(cfg)
    fid = min(max(1.0 - pd - pdeph, 0.0), 1.0)
    delta_eff = _delta_eff(cfg, pd)
    rep = blockade_checks(cfg, pd)
    return FidelityReport(
        p_double=pd,
        p_dephase=pdeph,
        fidelity=fid,
        pulse_time=cfg.pulse_time,
        samples=samples,
        std_err=err,
        delta_eff=delta_eff,
        pi_pulse_time=cfg.pi_pulse_time,
        checks=rep,
    )


def rb_trap(**overrides) -> TrapConfig:
    """Cold Rb numbers: L = 10 um, A = 10 um^2, rho = 1e14 cm^-3, n = 50, Omega_r1 = 2 pi x 100 kHz."""
    two_pi = 2 * math.pi
    kw = dict(
        length=10e-6,
        area=10e-12,
        density=1e20,
        n_atoms=1e4,
        rabi_r1=two_pi * 100e3,
        rabi_r2=two_pi * 100e3,
        gamma_r=two_pi * 1.6e3,
        rydberg_n=50,
        rng_seed=2002,
        dd_shift_at_length=two_pi * 20e6,
        preparation_time=0.1e-6,
    )
    kw.update(overrides)
    return TrapConfig(**kw)


def _flat_top(x, length, edge):
    return 0.5 * (np.tanh(x / edge) - np.tanh((x - length) / edge))


def generate_photon(cfg: TrapConfig, medium: MediumParams, drive: polariton.DriveSchedule, *,
                    samples: int = 1_000_000, grid_size: int = 4096, edge_fraction: float = 0.02):
    """Read out a uniform spin wave over the medium under ``drive``.

    Returns the emitted free-space envelope (norm = emission efficiency of the
    lossless readout) and the preparation fidelity report.
    """
    if len(drive.times) < 2:
        raise ValueError("the drive schedule needs at least two knots")
    if not eit_validity(medium)["optical_depth"].passed:
        raise ValueError("medium is not optically dense enough to emit into a single mode")
    report = source_fidelity(cfg, samples)
    L = medium.length
    x_start, dx = polariton.medium_grid(medium, grid_size)
    x = x_start + dx * np.arange(grid_size)
    spin = _flat_top(x, L, edge_fraction * L).astype(complex)
    spin *= (x >= 0) & (x < L)
    spin /= math.sqrt(np.sum(np.abs(spin) ** 2) * dx)
    state = polariton.PolaritonState(-spin, math.pi / 2, medium, drive.start, x_start, dx)
    G = medium.collective_coupling_sq
    v_max = polariton._vg(float(np.max(drive.rabi)), G)
    if v_max == 0:
        raise ValueError("the drive never turns on")
    span = (drive.end - drive.start) + L / v_max
    box = 4 * C * span
    template = polariton.PulseEnvelope(np.zeros(grid_size, complex), box, 0.0, -box / 2)
    end = polariton.evolve_polariton(state, drive, (drive.end - drive.start) / 400)
    # origin time mid-emission puts the wavepacket near the centre of the output window
    out = polariton._exit_pulse(end, drive, template, drive.start + 0.5 * span)
    return out, report
