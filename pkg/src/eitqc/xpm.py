"""Cross-phase modulation between two single photons in a tripod medium.

Two circularly polarized fields E1, E2 share one excited level; a weak
magnetic field splits the ground sublevels by +-Delta.  After eliminating the
atoms each field picks up a phase proportional to the photon number of the
other one.  Field operators carry a finite quantization bandwidth delta_q, so
the interaction is local on the scale 1/delta_q:

    [E_i(z), E_j^+(z')] = delta_ij (L delta_q / 2 pi) sinc(delta_q (z - z') / 2)

The two-photon amplitude xi^{qq'} is kept on a periodic mode grid.  The
operator solution acts, for each position z of photon 1, as the rank-one
unitary 1 + (e^{i phi} - 1) |d_z><d_z| on photon 2, where d_z is the
band-limited delta at z.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy import constants as const

from .checks import Report, much_less
from .medium import C, HBAR, MediumParams, transparency_width

MU_B = const.physical_constants["Bohr magneton"][0]
ABSORPTION_MARGIN = 0.1  # kappa L at most this for "negligible absorption"
NORM_TOL = 1e-9
PHASE_TOL = 1e-3


class AbsorptionRegimeError(ValueError):
    pass


@dataclass(frozen=True, kw_only=True)
class TripodParams(MediumParams):
    """Tripod medium: EIT constants plus Zeeman splitting and mode bandwidth."""

    zeeman: float
    delta_q: float
    zeeman_s: float = 0.0
    b_field: float | None = None
    g_factor: float | None = None
    m_F: int = 1
    modes: int = 64
    mean_velocity: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        if self.coupling_g is None:
            raise ValueError("the cross-phase coefficient needs the single-atom coupling coupling_g")
        if not self.delta_q > 0:
            raise ValueError("delta_q must be positive")
        if self.modes < 2:
            raise ValueError("need at least two modes per field")
        if self.mean_velocity < 0:
            raise ValueError("mean_velocity must be non-negative")
        if self.b_field is not None:
            if self.g_factor is None:
                raise ValueError("b_field given without g_factor")
            expected = MU_B * self.m_F * self.g_factor * self.b_field / HBAR
            if abs(self.zeeman - expected) > 1e-6 * abs(expected):
                raise ValueError(f"zeeman={self.zeeman:g} rad/s disagrees with mu_B m_F g_F B / hbar = {expected:g}")
        limit = transparency_width(self) / C
        if self.delta_q > limit * (1 + 1e-12):
            raise ValueError(f"delta_q={self.delta_q:g} 1/m exceeds the EIT window delta_w_tw / c = {limit:g} 1/m")

    @property
    def tan2_theta(self) -> float:
        # half of the atoms sit in each of g1, g2
        return self.collective_coupling_sq / (2 * self.rabi_sq) if self.rabi_sq > 0 else math.inf

    @property
    def group_velocity(self) -> float:
        return C / (1 + self.tan2_theta)

    @property
    def modes_per_length(self) -> float:
        """L delta_q / 2 pi, the commutator at zero separation."""
        return self.length * self.delta_q / (2 * math.pi)


@dataclass(frozen=True)
class XPMCoefficients:
    v_g: float
    kappa1: float
    kappa2: float
    s1: float
    s2: float
    eta1: complex
    eta2: complex
    eta: float  # real gamma_R << Delta limit g^2 / (v_g |Omega_d|^2)
    checks: Report

    @property
    def residual_absorption(self) -> float:
        """Largest |Im eta_j| / |eta_j|, the part dropped by using the real eta."""
        vals = [abs(e.imag) / abs(e) for e in (self.eta1, self.eta2) if e != 0]
        return max(vals, default=0.0)


def xpm_coefficients(p: TripodParams) -> XPMCoefficients:
    t2 = p.tan2_theta
    W = p.rabi_sq
    D, Dd = p.zeeman, p.delta_d
    g2 = p.coupling_g**2
    kv = p.k * p.mean_velocity
    kappa = [t2 / C * (p.gamma_R + p.gamma_ge * (D + s * Dd) ** 2 / W) for s in (1, -1)]
    s_lin = [t2 / C * (1 + D * (D + s * Dd) / W) for s in (1, -1)]
    eta = [g2 * 2 * D * t2 / (C * W * (2 * D - s * 1j * p.gamma_R)) for s in (1, -1)]
    vg = p.group_velocity
    rep = Report()
    for name, s in (("drive_vs_zeeman_1", 1), ("drive_vs_zeeman_2", -1)):
        rep.add(much_less(name, abs((D + kv) * (D + s * Dd)), W, note="|Omega_d|^2 >> (Delta + k v)(Delta +- Delta_d)"))
    rep.add(much_less("drive_vs_raman", p.gamma_R * (p.gamma_ge + kv), W, note="|Omega_d|^2 >> gamma_R (gamma_ge + k v)"))
    if not rep.ok:
        names = ", ".join(c.name for c in rep.failed())
        warnings.warn(f"tripod EIT conditions not satisfied: {names}", RuntimeWarning, stacklevel=2)
    return XPMCoefficients(vg, kappa[0], kappa[1], s_lin[0], s_lin[1], eta[0], eta[1], g2 / (vg * W), rep)


def conditional_phase(p: TripodParams) -> float:
    """phi = eta Delta_d L^2 delta_q / 2 pi with eta = g^2 / (v_g |Omega_d|^2)."""
    eta = p.coupling_g**2 / (p.group_velocity * p.rabi_sq)
    return eta * p.delta_d * p.length**2 * p.delta_q / (2 * math.pi)


@dataclass(frozen=True)
class PiCondition:
    holds: bool
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs


def pi_condition(p: TripodParams) -> PiCondition:
    """(delta_q L / 2 pi)^2 > (v_g / c)(|Omega_d|^2 / g^2)."""
    lhs = p.modes_per_length**2
    rhs = (p.group_velocity / C) * p.rabi_sq / p.coupling_g**2
    return PiCondition(bool(lhs > rhs), lhs, rhs)


def tune_to_pi(p: TripodParams, target: float = math.pi) -> TripodParams:
    """Same medium with Delta_d chosen so that conditional_phase equals ``target``."""
    unit = conditional_phase(replace(p, delta_d=1.0))
    return replace(p, delta_d=target / unit)


def absorption_regime(p: TripodParams, distance: float | None = None) -> Report:
    z = p.length if distance is None else distance
    co = xpm_coefficients(p)
    rep = Report()
    rep.add(much_less("kappa1_L", co.kappa1 * z, 1.0, margin=1 / ABSORPTION_MARGIN, note="kappa_1 L << 1"))
    rep.add(much_less("kappa2_L", co.kappa2 * z, 1.0, margin=1 / ABSORPTION_MARGIN, note="kappa_2 L << 1"))
    return rep


# --- mode grid --------------------------------------------------------------


def _modes(n, box):
    return 2 * math.pi * np.fft.fftfreq(n, box / n)


def _band(q, delta_q):
    return np.abs(q) <= 0.5 * delta_q * (1 + 1e-12)


def dirichlet_kernel(x, box: float, delta_q: float):
    """Periodic version of sinc(delta_q x / 2): mean of e^{iqx} over the in-band modes 2 pi k / box."""
    K = int(math.floor(0.5 * delta_q * box / (2 * math.pi) * (1 + 1e-12)))
    x = np.asarray(x, dtype=float)
    k = np.arange(1, K + 1)
    out = (1 + 2 * np.cos(np.multiply.outer(x, 2 * math.pi * k / box)).sum(axis=-1)) / (2 * K + 1)
    return out


def sinc_kernel(x, delta_q: float):
    return np.sinc(np.asarray(x) * delta_q / (2 * math.pi))


def _dft(n, box, z_start):
    z = z_start + box / n * np.arange(n)
    return np.exp(1j * np.outer(z, _modes(n, box)))


@dataclass(frozen=True)
class TwoPhotonState:
    """xi^{qq'} over the periodic mode grid q = 2 pi k / box of both fields.

    Psi(z, z') = sum xi^{qq'} e^{iqz} e^{iq'z'}; input envelopes occupy the band
    |q| <= delta_q / 2.  ``z_start`` is the left edge of the sampling window.
    """

    xi: np.ndarray
    box: float
    delta_q: float
    t: float = 0.0
    z_start: float | None = None

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=complex)
        object.__setattr__(self, "xi", xi)
        if xi.ndim != 2 or xi.shape[0] != xi.shape[1]:
            raise ValueError("xi must be a square matrix")
        if self.z_start is None:
            object.__setattr__(self, "z_start", -0.5 * self.box)
        n = xi.shape[0]
        in_band = int(_band(_modes(n, self.box), self.delta_q).sum())
        if in_band >= n - 1:
            raise ValueError("band must stay inside the grid's Nyquist limit")
        if abs(self.norm() - 1) > NORM_TOL:
            raise ValueError(f"two-photon state not normalized: {self.norm()!r}")

    @property
    def n(self) -> int:
        return self.xi.shape[0]

    @property
    def dz(self) -> float:
        return self.box / self.n

    @property
    def z(self) -> np.ndarray:
        return self.z_start + self.dz * np.arange(self.n)

    @property
    def q(self) -> np.ndarray:
        return _modes(self.n, self.box)

    @property
    def band(self) -> np.ndarray:
        return _band(self.q, self.delta_q)

    @property
    def modes_in_band(self) -> int:
        return int(self.band.sum())

    def norm(self) -> float:
        return float(np.sum(np.abs(self.xi) ** 2))

    def psi(self) -> np.ndarray:
        return wavefunction_grid(self.xi, self.box, self.z_start)

    def kernel(self, x):
        return dirichlet_kernel(x, self.box, self.delta_q)

    def fidelity(self, other: "TwoPhotonState") -> float:
        return float(abs(np.vdot(self.xi, other.xi)) ** 2)

    def overlap(self, other: "TwoPhotonState") -> complex:
        return complex(np.vdot(self.xi, other.xi))


def wavefunction_grid(xi, box: float, z_start: float) -> np.ndarray:
    F = _dft(len(xi), box, z_start)
    return F @ xi @ F.T


def fourier_amplitudes(psi, box: float, z_start: float) -> np.ndarray:
    """xi^{qq'} = (1/box^2) sum Psi(z, z') e^{-iqz} e^{-iq'z'} dz dz' over the grid."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 2 or psi.shape[0] != psi.shape[1]:
        raise ValueError("Psi grid must be square")
    n = psi.shape[0]
    F = _dft(n, box, z_start)
    return F.conj().T @ psi @ F.conj() / n**2


def envelope_modes(samples, box: float, delta_q: float, z_start: float | None = None) -> np.ndarray:
    """Band-limited, unit-norm mode amplitudes xi_j^q of an envelope sampled on the grid."""
    samples = np.asarray(samples, dtype=complex)
    n = len(samples)
    z0 = -0.5 * box if z_start is None else z_start
    F = _dft(n, box, z0)
    c = F.conj().T @ samples / n
    c[~_band(_modes(n, box), delta_q)] = 0
    s = np.linalg.norm(c)
    if s <= 1e-12 * np.linalg.norm(samples) / math.sqrt(n):
        raise ValueError("envelope has no in-band content")
    return c / s


def envelope_values(modes, box: float, z) -> np.ndarray:
    """f(z) = sum xi^q e^{iqz}, evaluated anywhere (periodic)."""
    q = _modes(len(modes), box)
    return np.exp(1j * np.multiply.outer(np.asarray(z, dtype=float), q)) @ modes


def product_state(f1, f2, box: float, delta_q: float, z_start: float | None = None) -> TwoPhotonState:
    """|1_1> x |1_2> from envelope samples (projected onto the band and normalized)."""
    if len(f1) != len(f2):
        raise ValueError("envelopes must share the grid")
    a = envelope_modes(f1, box, delta_q, z_start)
    b = envelope_modes(f2, box, delta_q, z_start)
    return TwoPhotonState(np.outer(a, b), box, delta_q, 0.0, z_start)


# --- evolution ----------------------------------------------------------------


def apply_conditional_phase(state: TwoPhotonState, phi: float) -> TwoPhotonState:
    """Rank-one kick e^{i phi |d_z><d_z|} on photon 2 for every grid position z of photon 1."""
    if phi == 0:
        return state
    n = state.n
    F = _dft(n, state.box, state.z_start)
    A = F @ state.xi  # photon 1 on the position grid, photon 2 in modes
    band = state.band
    V = F.conj() * band / math.sqrt(band.sum())  # row a: normalized band-limited delta at z_a
    s = np.sum(V.conj() * A, axis=1)
    A = A + (np.exp(1j * phi) - 1) * s[:, None] * V
    return replace(state, xi=F.conj().T @ A / n)


def translate(state: TwoPhotonState, distance: float, dt: float = 0.0) -> TwoPhotonState:
    """Move both photons (and the sampling window) by ``distance``."""
    q = state.q
    ph = np.exp(-1j * distance * q)
    return replace(state, xi=state.xi * np.outer(ph, ph), t=state.t + dt, z_start=state.z_start + distance)


def free_propagate(state: TwoPhotonState, dt: float) -> TwoPhotonState:
    return translate(state, C * dt, dt)


def evolve_two_photon(state: TwoPhotonState, p: TripodParams, distance: float | None = None) -> TwoPhotonState:
    """Propagate both photons ``distance`` (default L) through the medium.

    The pair picks up the conditional phase phi distance / L through the
    band-limited contact kernel, moves by ``distance`` and ages by distance / v_g.
    """
    z = p.length if distance is None else distance
    if not 0 <= z <= p.length * (1 + 1e-12):
        raise ValueError("distance must lie within the medium")
    if abs(state.delta_q - p.delta_q) > 1e-9 * p.delta_q:
        raise ValueError("state and medium disagree on delta_q")
    regime = absorption_regime(p, z)
    if not regime.ok:
        raise AbsorptionRegimeError("absorption not negligible:\n" + regime.table())
    out = apply_conditional_phase(state, conditional_phase(p) * z / p.length)
    return translate(out, z, z / p.group_velocity)


def two_photon_wavefunction(p: TripodParams, z, zp, t: float, f1, f2, kernel=None):
    """Closed-form equal-time Psi(z, z', t) behind the medium.

    f1, f2 are the input envelopes (callables, localized near z = 0 at t = 0);
    ``kernel`` defaults to sinc(delta_q x / 2).
    """
    z = np.asarray(z, dtype=float)
    zp = np.asarray(zp, dtype=float)
    L = p.length
    if np.any(z < L) or np.any(zp < L):
        raise ValueError("closed form holds only behind the medium (z, z' >= L)")
    shift = L * (C / p.group_velocity - 1) - C * t
    u, up = z + shift, zp + shift
    K = sinc_kernel(up - u, p.delta_q) if kernel is None else kernel(up - u)
    f1u = f1(u)
    return f1u * f2(up) + f1u * f2(u) * K * (np.exp(1j * conditional_phase(p)) - 1)


def second_order_correlation(psi) -> np.ndarray:
    return np.abs(np.asarray(psi)) ** 2


def cz_phase(p: TripodParams, tol: float = PHASE_TOL) -> float:
    """Conditional phase of the medium, checked to be a usable pi phase."""
    cond = pi_condition(p)
    if not cond.holds:
        raise ValueError(f"pi condition fails (ratio {cond.ratio:.3g})")
    phi = conditional_phase(p)
    if abs(phi - math.pi) >= tol:
        raise ValueError(f"conditional phase {phi:.6g} is not within {tol:g} of pi")
    return phi


def cz_outcome(p: TripodParams, state: TwoPhotonState, tol: float = PHASE_TOL) -> TwoPhotonState:
    """Both photons through the medium with phi tuned to pi: |Phi_out> = e^{i phi} |Phi_in>."""
    return replace(state, xi=state.xi * np.exp(1j * cz_phase(p, tol)))


# --- presets and dumps --------------------------------------------------------


def tripod_example(**overrides) -> TripodParams:
    """Cold-atom tripod with a wide window (2 kappa0 L = 4, Omega_d = 150 gamma), v_g = 1e4 m/s, phi tuned to pi.

    The single-atom coupling is g = 5 |Omega_d|, so N follows from
    tan^2(theta) = g^2 N / (2 |Omega_d|^2) = c / v_g - 1, and delta_q sits at
    its upper limit delta_w_tw / c.
    """
    gamma = 2 * math.pi * 3e6
    L = 1e-2
    rabi = 150 * gamma
    tan2 = C / 1e4 - 1
    kw = dict(
        gamma_ge=gamma,
        Gamma_e=gamma,
        gamma_R=1e2,
        omega=2 * math.pi * C / 780e-9,
        rabi_d=rabi,
        kappa0=2.0 / L,
        length=L,
        delta_d=1e5,
        zeeman=1e4,
        coupling_g=5 * rabi,
    )
    kw.update(overrides)
    if "n_atoms" not in kw:
        kw["n_atoms"] = 2 * abs(kw["rabi_d"]) ** 2 * tan2 / kw["coupling_g"] ** 2
    if "delta_q" not in kw:
        probe = MediumParams(**{k: v for k, v in kw.items() if k in MediumParams.__dataclass_fields__})
        kw["delta_q"] = transparency_width(probe) / C
    p = TripodParams(**kw)
    return p if "delta_d" in overrides else tune_to_pi(p)


def dump_psi(state: TwoPhotonState, path, params=None) -> None:
    """CSV: a ``n_z,dz,t`` header row, its values, then the complex Psi matrix; JSON parameter echo alongside."""
    psi = state.psi()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n_z", "dz", "t"])
        w.writerow([state.n, repr(state.dz), repr(state.t)])
        for row in psi:
            w.writerow([repr(complex(v)).strip("()") for v in row])
    meta = {"box": state.box, "delta_q": state.delta_q, "z_start": state.z_start}
    if params is not None:
        meta["params"] = {k: (repr(v) if isinstance(v, complex) else v) for k, v in asdict(params).items()}
    with open(f"{path}.json", "w") as fh:
        json.dump(meta, fh, indent=2)


def load_psi(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    n, dz, t = int(rows[1][0]), float(rows[1][1]), float(rows[1][2])
    psi = np.array([[complex(v) for v in r] for r in rows[2 : 2 + n]])
    return psi, dz, t
