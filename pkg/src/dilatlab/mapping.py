"""Electron-gas <-> ion-trap mapping arithmetic.

Everything here works in Hartree atomic units (hbar = m_e = e = 1). The
dilatation parameter ``r`` is fixed by asking the transformed ion mass to
equal the electron mass, which gives

    exp(r) = Q**2 * mu,        mu = m_ion / m_e
    lam    = exp(r) * Q**2     (energy scale; also t / t_sim)

Masses of the reference species are ion masses (atomic mass minus one
electron) in units of m_e, taken from the 2018 CODATA value of
m_u / m_e = 1822.888486 and standard isotope masses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional

import numpy as np
from scipy import constants as _const

__all__ = [
    "ION_MASS_RATIOS",
    "UnitSystem",
    "ATOMIC",
    "SI",
    "DilatationMap",
    "derive_dilatation",
    "map_for_species",
    "scale_time",
    "PotentialSpec",
    "scale_external_potential",
]

# m_ion / m_e for singly ionized species, rounded to the nearest integer.
# Ca40+: 39.9626 u * 1822.888 m_e/u - 1 m_e = 72846
ION_MASS_RATIOS: Dict[str, float] = {
    "Be9+": 16427.0,
    "Ca40+": 72846.0,
    "Cd111+": 202165.0,
}


@dataclass(frozen=True)
class UnitSystem:
    """Conversion factors from a unit system to Hartree atomic units.

    Each field is the size of one unit of this system expressed in atomic
    units, e.g. for SI ``time = 1 s / (hbar / E_h)``.
    """

    length: float
    energy: float
    time: float
    mass: float
    name: str = "custom"

    def __post_init__(self):
        for key in ("length", "energy", "time", "mass"):
            value = getattr(self, key)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"UnitSystem.{key} must be positive and finite, got {value!r}")

    def to_atomic(self, value, kind: str):
        return value * getattr(self, kind)

    def from_atomic(self, value, kind: str):
        return value / getattr(self, kind)


ATOMIC = UnitSystem(1.0, 1.0, 1.0, 1.0, name="atomic")

_au = _const.physical_constants
SI = UnitSystem(
    length=1.0 / _au["Bohr radius"][0],
    energy=1.0 / _au["Hartree energy"][0],
    time=1.0 / _au["atomic unit of time"][0],
    mass=1.0 / _const.m_e,
    name="SI",
)


@dataclass(frozen=True)
class DilatationMap:
    """Parameters connecting the electron gas to the ion-trap simulator.

    ``lam`` multiplies electron-gas energies to give simulator energies and
    divides electron-gas times to give simulator run times.
    """

    r: float
    Q: float
    mass_ratio: float
    lam: float
    m_eff: float

    @property
    def scale(self) -> float:
        """Coordinate scale factor exp(r); simulator lengths are exp(-r) times smaller."""
        return math.exp(self.r)

    @property
    def time_factor(self) -> float:
        """t_sim / t = 1 / lam."""
        return 1.0 / self.lam

    def as_dict(self) -> dict:
        return {
            "r": self.r,
            "Q": self.Q,
            "mass_ratio": self.mass_ratio,
            "lambda": self.lam,
            "m_eff": self.m_eff,
            "time_factor": self.time_factor,
        }


def derive_dilatation(mass_ratio: float, Q: float = 1.0) -> DilatationMap:
    """Fix r so that exp(-r) Q**2 m_ion = m_e.

    >>> derive_dilatation(10.0, 2.0).lam
    160.0
    """
    if not mass_ratio > 0:
        raise ValueError(f"mass_ratio must be > 0, got {mass_ratio!r}")
    if not Q > 0:
        raise ValueError(f"Q must be > 0, got {Q!r}")
    exp_r = Q * Q * mass_ratio
    r = math.log(exp_r)
    lam = exp_r * Q * Q
    m_eff = math.exp(-r) * Q * Q * mass_ratio
    return DilatationMap(r=r, Q=float(Q), mass_ratio=float(mass_ratio), lam=lam, m_eff=m_eff)


def map_for_species(species: str, Q: float = 1.0) -> DilatationMap:
    try:
        mu = ION_MASS_RATIOS[species]
    except KeyError:
        known = ", ".join(sorted(ION_MASS_RATIOS))
        raise KeyError(f"unknown ion species {species!r}; known species: {known}") from None
    return derive_dilatation(mu, Q)


def scale_time(t, dmap: DilatationMap):
    """Simulator run time reproducing electron-gas time ``t`` (any time unit)."""
    if np.any(np.asarray(t) < 0):
        raise ValueError(f"time must be >= 0, got {t!r}")
    return t / dmap.lam


@dataclass(frozen=True)
class PotentialSpec:
    """One-body external potential acting on every particle coordinate.

    ``kind`` is one of ``"none"``, ``"harmonic"``, ``"hard_wall"``,
    ``"tabulated"`` or ``"callable"``. Scaling information is carried in
    ``prefactor`` and ``arg_scale`` so that

        V(q) = prefactor * V_base(arg_scale * q)

    where ``V_base`` is the unscaled form built from the remaining fields.
    Hard walls are the exception: their width and height are rescaled
    directly so that ``width`` always reads as the physical wall width.
    """

    kind: str = "none"
    omega: float = 0.0
    mass: float = 1.0
    width: float = 0.0
    height: float = 1.0e4
    table_x: Optional[tuple] = None
    table_v: Optional[tuple] = None
    func: Optional[Callable] = field(default=None, compare=False)
    prefactor: float = 1.0
    arg_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("none", "harmonic", "hard_wall", "tabulated", "callable"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "hard_wall" and not self.width > 0:
            raise ValueError("hard wall width must be > 0")
        if self.kind == "tabulated":
            if self.table_x is None or self.table_v is None or len(self.table_x) != len(self.table_v):
                raise ValueError("tabulated potential needs equal-length table_x and table_v")
            if len(self.table_x) < 2 or np.any(np.diff(self.table_x) <= 0):
                raise ValueError("tabulated positions must be strictly increasing (>= 2 rows)")
        if self.kind == "callable" and self.func is None:
            raise ValueError("callable potential needs func")

    @classmethod
    def harmonic(cls, omega: float, mass: float = 1.0) -> "PotentialSpec":
        return cls(kind="harmonic", omega=omega, mass=mass)

    @classmethod
    def hard_wall(cls, width: float, height: float = 1.0e4) -> "PotentialSpec":
        return cls(kind="hard_wall", width=width, height=height)

    @classmethod
    def tabulated(cls, x, v) -> "PotentialSpec":
        return cls(kind="tabulated", table_x=tuple(map(float, x)), table_v=tuple(map(float, v)))

    @classmethod
    def from_text(cls, path) -> "PotentialSpec":
        """Read a two-column whitespace-separated table (position, value)."""
        data = np.loadtxt(path, comments="#", ndmin=2)
        if data.shape[1] != 2:
            raise ValueError(f"{path}: expected two columns, got {data.shape[1]}")
        return cls.tabulated(data[:, 0], data[:, 1])

    def _base(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "none":
            return np.zeros_like(x, dtype=float)
        if self.kind == "harmonic":
            return 0.5 * self.mass * self.omega**2 * x**2
        if self.kind == "hard_wall":
            # wall occupies |x| >= width / 2
            return np.where(np.abs(x) >= 0.5 * self.width, self.height, 0.0)
        if self.kind == "tabulated":
            tx = np.asarray(self.table_x)
            tv = np.asarray(self.table_v)
            return np.interp(x, tx, tv)
        return np.asarray(self.func(x), dtype=float)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "hard_wall":
            return self._base(x)
        return self.prefactor * self._base(self.arg_scale * x)


def scale_external_potential(v_ext: PotentialSpec, dmap: DilatationMap) -> PotentialSpec:
    """Simulator potential V_s(q) = Q**2 exp(r) V_ext(exp(r) q).

    A hard wall of width ``w`` becomes a wall of width exp(-r) w whose
    height is multiplied by lam.
    """
    s = math.exp(dmap.r)
    if v_ext.kind == "hard_wall":
        return replace(v_ext, width=v_ext.width / s, height=v_ext.height * dmap.lam)
    return replace(v_ext, prefactor=v_ext.prefactor * dmap.lam, arg_scale=v_ext.arg_scale * s)
