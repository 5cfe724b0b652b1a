"""Hamiltonian systems H = p·p/(2m) + V(q) with a constant diagonal mass matrix."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigurationError


@dataclass(frozen=True)
class Harmonic:
    """V = sum omega_i^2 q_i^2 / 2 (omega_i is the angular frequency at unit mass)."""
    omegas: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "omegas", tuple(float(w) for w in self.omegas))
        if not all(np.isfinite(w) and w > 0 for w in self.omegas):
            raise ConfigurationError("harmonic omegas must be finite and > 0",
                                     field="system.omegas")


@dataclass(frozen=True)
class AnharmonicChain:
    """Fixed-end chain, V = sum over bonds of k2 d^2/2 + k4 d^4/4."""
    k2: float = 1.0
    k4: float = 0.0

    def __post_init__(self):
        for name in ("k2", "k4"):
            v = float(getattr(self, name))
            if not (np.isfinite(v) and v >= 0):
                raise ConfigurationError(f"{name} must be finite and >= 0",
                                         field=f"system.{name}")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class HenonHeiles:
    pass


@dataclass(frozen=True)
class DiagonalQuadratic:
    """V = sum k_i q_i^2 / 2 with stiffnesses of any sign.

    Not part of the experiment catalog; used for free particles (k = 0) and
    inverted oscillators (k < 0) in tests.
    """
    stiffness: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "stiffness",
                           tuple(float(k) for k in self.stiffness))
        if not all(np.isfinite(k) for k in self.stiffness):
            raise ConfigurationError("stiffness must be finite",
                                     field="system.stiffness")


PotentialKind = Harmonic | AnharmonicChain | HenonHeiles | DiagonalQuadratic


@dataclass(frozen=True, eq=False)
class SystemSpec:
    n_dof: int
    masses: np.ndarray
    potential: PotentialKind
    kind_code: int = field(init=False, repr=False)
    params: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.n_dof, (int, np.integer)) or self.n_dof < 1:
            raise ConfigurationError("n_dof must be a positive integer",
                                     field="system.n_dof")
        masses = np.array(self.masses, dtype=float).reshape(-1)
        if masses.shape != (self.n_dof,):
            raise ConfigurationError(
                f"expected {self.n_dof} masses, got {masses.size}",
                field="system.masses")
        if not np.all(np.isfinite(masses)) or np.any(masses <= 0):
            raise ConfigurationError("masses must be finite and > 0",
                                     field="system.masses")
        object.__setattr__(self, "masses", masses)

        pot = self.potential
        if isinstance(pot, Harmonic):
            if len(pot.omegas) != self.n_dof:
                raise ConfigurationError(
                    f"harmonic needs {self.n_dof} omegas, got {len(pot.omegas)}",
                    field="system.omegas")
            code, params = _kernels.QUADRATIC, np.square(pot.omegas)
        elif isinstance(pot, DiagonalQuadratic):
            if len(pot.stiffness) != self.n_dof:
                raise ConfigurationError(
                    f"expected {self.n_dof} stiffnesses", field="system.stiffness")
            code, params = _kernels.QUADRATIC, np.array(pot.stiffness)
        elif isinstance(pot, AnharmonicChain):
            code, params = _kernels.CHAIN, np.array([pot.k2, pot.k4])
        elif isinstance(pot, HenonHeiles):
            if self.n_dof != 2:
                raise ConfigurationError(
                    "henon_heiles requires n_dof = 2", field="system.n_dof")
            code, params = _kernels.HENON_HEILES, np.zeros(1)
        else:
            raise ConfigurationError(f"unknown potential {pot!r}",
                                     field="system.potential")
        params = np.asarray(params, dtype=float)
        object.__setattr__(self, "kind_code", code)
        object.__setattr__(self, "params", params)

    def _check(self, q):
        q = np.asarray(q, dtype=float)
        if q.shape != (self.n_dof,):
            raise ConfigurationError(
                f"expected a vector of length {self.n_dof}, got shape {q.shape}")
        return q


@dataclass(frozen=True, eq=False)
class PhaseState:
    t: float
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(-1)
        p = np.array(self.p, dtype=float).reshape(-1)
        if q.shape != p.shape:
            raise ConfigurationError("q and p must have the same length")
        if not (np.isfinite(self.t) and np.all(np.isfinite(q))
                and np.all(np.isfinite(p))):
            raise ConfigurationError("phase state must be finite")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)


def harmonic(omegas, masses=None) -> SystemSpec:
    omegas = tuple(np.atleast_1d(np.asarray(omegas, dtype=float)))
    masses = np.ones(len(omegas)) if masses is None else masses
    return SystemSpec(len(omegas), masses, Harmonic(omegas))


def henon_heiles() -> SystemSpec:
    return SystemSpec(2, np.ones(2), HenonHeiles())


def anharmonic_chain(n_dof, k2=1.0, k4=1.0, masses=None) -> SystemSpec:
    masses = np.ones(n_dof) if masses is None else masses
    return SystemSpec(n_dof, masses, AnharmonicChain(k2, k4))


def potential_value(spec: SystemSpec, q) -> float:
    q = spec._check(q)
    return float(_kernels.potential(spec.kind_code, spec.params, q))


def potential_gradient(spec: SystemSpec, q) -> np.ndarray:
    q = spec._check(q)
    return _kernels.gradient(spec.kind_code, spec.params, q)


def potential_hessian(spec: SystemSpec, q) -> np.ndarray:
    q = spec._check(q)
    return _kernels.hessian(spec.kind_code, spec.params, q)


def velocities(spec: SystemSpec, state: PhaseState) -> np.ndarray:
    return spec._check(state.p) / spec.masses


def hamilton_rhs(spec: SystemSpec, state: PhaseState):
    """Return (qdot, pdot)."""
    spec._check(state.q)
    return velocities(spec, state), -potential_gradient(spec, state.q)


def kinetic_energy(spec: SystemSpec, state: PhaseState) -> float:
    p = spec._check(state.p)
    return float(_kernels.kinetic(spec.masses, p))


def total_energy(spec: SystemSpec, state: PhaseState) -> float:
    return kinetic_energy(spec, state) + potential_value(spec, state.q)


def state_at_energy(spec: SystemSpec, q, energy, direction=None, t=0.0):
    """Phase state at ``q`` whose momentum (along ``direction`` in velocity
    space, default the last axis) puts the total energy at ``energy``."""
    q = spec._check(q)
    kin = energy - potential_value(spec, q)
    if kin < 0:
        raise ConfigurationError("energy below the potential at q")
    if direction is None:
        direction = np.zeros(spec.n_dof)
        direction[-1] = 1.0
    u = np.asarray(direction, dtype=float)
    u = u / np.sqrt(np.sum(spec.masses * u * u))
    return PhaseState(t, q, spec.masses * u * np.sqrt(2.0 * kin))
