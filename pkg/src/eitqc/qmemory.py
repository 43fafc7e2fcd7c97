"""Polarization-qubit memory in an M-type ensemble, at amplitude level.

A quarter-wave plate at 45 degrees turns |V>, |H> into |R>, |L>; the two
circular components are stored on two collective spin waves s1, s2, held with
a common Raman decay rate and read out by reversing the map.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

NORM_TOL = 1e-9

# columns are the images of |V> and |H> in the (V, H) basis
QWP45 = np.array([[1, 1], [1j, -1j]]) / math.sqrt(2)


def _pair(z):
    return [float(np.real(z)), float(np.imag(z))]


def _unpair(v):
    return complex(v[0], v[1])


@dataclass(frozen=True)
class PolarizationQubit:
    """alpha |V> + beta |H>."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        n = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(n - 1) > NORM_TOL:
            raise ValueError(f"qubit not normalized: |alpha|^2 + |beta|^2 = {n!r}")

    @classmethod
    def from_vector(cls, v):
        v = np.asarray(v, dtype=complex)
        return cls(complex(v[0]), complex(v[1]))

    @classmethod
    def random(cls, rng):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        return cls.from_vector(v / np.linalg.norm(v))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)

    def fidelity(self, other: "PolarizationQubit") -> float:
        return abs(np.vdot(self.vector, other.vector)) ** 2

    def to_json(self) -> str:
        return json.dumps({"alpha": _pair(self.alpha), "beta": _pair(self.beta)})

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(_unpair(d["alpha"]), _unpair(d["beta"]))


@dataclass(frozen=True)
class StoredQubit:
    amp_s1: complex
    amp_s2: complex
    stored_at: float
    gamma_R: float
    norm_remaining: float = 1.0

    def __post_init__(self):
        n = abs(self.amp_s1) ** 2 + abs(self.amp_s2) ** 2
        if abs(n - self.norm_remaining) > NORM_TOL:
            raise ValueError("spin-wave amplitudes disagree with norm_remaining")

    def to_json(self) -> str:
        d = asdict(self)
        d["amp_s1"] = _pair(self.amp_s1)
        d["amp_s2"] = _pair(self.amp_s2)
        return json.dumps(d)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        d["amp_s1"] = _unpair(d["amp_s1"])
        d["amp_s2"] = _unpair(d["amp_s2"])
        return cls(**d)


def quarter_wave_45(q: PolarizationQubit, inverse: bool = False) -> PolarizationQubit:
    """|V> -> |R> = (|V> + i|H>)/sqrt2, |H> -> |L> = (|V> - i|H>)/sqrt2; components stay in the (V, H) basis."""
    U = QWP45.conj().T if inverse else QWP45
    return PolarizationQubit.from_vector(U @ q.vector)


def store_qubit(q: PolarizationQubit, t: float = 0.0, gamma_R: float = 0.0) -> StoredQubit:
    """alpha |L> + beta |R>  ->  alpha |s1> + beta |s2>, with (alpha, beta) the qubit amplitudes."""
    if gamma_R < 0:
        raise ValueError("gamma_R must be non-negative")
    return StoredQubit(q.alpha, q.beta, t, gamma_R, 1.0)


def hold(sq: StoredQubit, dt: float) -> StoredQubit:
    """Common-mode decay exp(-gamma_R dt) of both spin-wave amplitudes."""
    if dt < 0:
        raise ValueError("hold time must be non-negative")
    f = math.exp(-sq.gamma_R * dt)
    return StoredQubit(sq.amp_s1 * f, sq.amp_s2 * f, sq.stored_at, sq.gamma_R, sq.norm_remaining * f * f)


def retrieve_qubit(sq: StoredQubit) -> tuple[PolarizationQubit, float]:
    """Reverse the storage map; returns the renormalized qubit and the retrieval probability."""
    if sq.norm_remaining < 1e-12:
        raise ValueError(f"nothing left to retrieve (norm {sq.norm_remaining:.3g})")
    s = math.sqrt(abs(sq.amp_s1) ** 2 + abs(sq.amp_s2) ** 2)
    return PolarizationQubit(sq.amp_s1 / s, sq.amp_s2 / s), sq.norm_remaining


def success_probability(gamma_R: float, t: float) -> float:
    return math.exp(-2 * gamma_R * t)
