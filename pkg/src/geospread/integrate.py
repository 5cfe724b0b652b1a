"""Fixed-step integration of the base flow plus arc-length bookkeeping.

Two integrators are provided: velocity Verlet for plain trajectories and
classical RK4 for augmented (base + variational) systems. Arc lengths are
carried as trapezoid-rule accumulators on the step grid:

* Jacobi arc length, ds/dt = 2T;
* Eisenhart arc length, s = kappa * t, together with the extra coordinate
  q_extra(t) = kappa^2 t / 2 - int_0^t L dt'  (integration constant 0).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._csv import write_columns
from .errors import (ConfigurationError, InvariantViolation, NumericalBlowup,
                     PreconditionError)
from .systems import PhaseState, SystemSpec, hamilton_rhs, potential_gradient

log = logging.getLogger(__name__)

NORM_KINDS = ("euclidean", "metric")
GUARD_ACTIONS = ("stop", "flag")


@dataclass(frozen=True)
class RunConfig:
    dt: float = 1e-3
    t_max: float = 10.0
    record_stride: int = 10
    renorm_interval: int = 100
    dtau: float = 1e-6
    # None resolves to 1e-6 * E at run time
    t_min_guard: float | None = None
    kappa: float = 1.0
    norm_kind: str = "euclidean"
    energy_drift_tol: float = 1e-6
    guard_action: str = "stop"
    seed: int = 0

    def __post_init__(self):
        def bad(name, why):
            raise ConfigurationError(f"run.{name}: {why}", field=f"run.{name}")

        if not (np.isfinite(self.dt) and self.dt > 0):
            bad("dt", "must be finite and > 0")
        if not (np.isfinite(self.t_max) and self.t_max >= 0):
            bad("t_max", "must be finite and >= 0")
        if not np.isfinite(self.t_max / self.dt):
            bad("t_max", "t_max / dt must be finite")
        for name in ("record_stride", "renorm_interval"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                bad(name, "must be a positive integer")
        if not (np.isfinite(self.dtau) and self.dtau > 0):
            bad("dtau", "must be finite and > 0")
        if self.t_min_guard is not None and not (
                np.isfinite(self.t_min_guard) and self.t_min_guard >= 0):
            bad("t_min_guard", "must be finite and >= 0")
        if not (np.isfinite(self.kappa) and self.kappa > 0):
            bad("kappa", "must be finite and > 0")
        if self.norm_kind not in NORM_KINDS:
            bad("norm_kind", f"must be one of {NORM_KINDS}")
        if not (self.energy_drift_tol > 0):
            bad("energy_drift_tol", "must be > 0")
        if self.guard_action not in GUARD_ACTIONS:
            bad("guard_action", f"must be one of {GUARD_ACTIONS}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))

    def guard_for(self, energy: float) -> float:
        if self.t_min_guard is not None:
            return self.t_min_guard
        return 1e-6 * abs(energy)


@dataclass(frozen=True)
class ArcAccumulator:
    s_jacobi: float = 0.0
    s_eisenhart: float = 0.0
    q_extra: float = 0.0


@dataclass(eq=False)
class TrajectoryRecord:
    spec: SystemSpec
    kappa: float
    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    kinetic: np.ndarray
    potential: np.ndarray
    s_jacobi: np.ndarray
    q_extra: np.ndarray
    energy_drift: float = 0.0
    drift_flag: bool = False
    integrator: str = "verlet"
    dt: float = field(default=np.nan)

    @property
    def energy(self) -> np.ndarray:
        return self.kinetic + self.potential

    @property
    def s_eisenhart(self) -> np.ndarray:
        return self.kappa * self.t

    @property
    def qdot(self) -> np.ndarray:
        return self.p / self.spec.masses

    def __len__(self):
        return len(self.t)

    def sample(self, i):
        """(PhaseState, T, V, E, ArcAccumulator) for sample ``i``."""
        acc = ArcAccumulator(self.s_jacobi[i], self.kappa * self.t[i],
                             self.q_extra[i])
        return (PhaseState(self.t[i], self.q[i], self.p[i]), self.kinetic[i],
                self.potential[i], self.kinetic[i] + self.potential[i], acc)


def verlet_step(spec: SystemSpec, state: PhaseState, dt: float) -> PhaseState:
    m = spec.masses
    g = potential_gradient(spec, state.q)
    p_half = state.p - 0.5 * dt * g
    q = state.q + dt * p_half / m
    g = potential_gradient(spec, q)
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(q))):
        raise NumericalBlowup("non-finite force in Verlet step", state.t + dt)
    return PhaseState(state.t + dt, q, p_half - 0.5 * dt * g)


def rk4_augmented_step(spec: SystemSpec, state: PhaseState, aux, aux_rhs, dt):
    """One classical RK4 step of the joint system (q, p, aux).

    ``aux_rhs(state, aux)`` returns d(aux)/dt; it sees the intermediate stage
    states, so it may depend on the base flow.
    """
    aux = np.asarray(aux, dtype=float)
    y = np.concatenate([state.q, state.p, aux.ravel()])
    n = spec.n_dof

    def f(t, y):
        st = PhaseState(t, y[:n], y[n:2 * n])
        qd, pd = hamilton_rhs(spec, st)
        a = y[2 * n:].reshape(aux.shape)
        da = np.asarray(aux_rhs(st, a), dtype=float).reshape(-1) if aux.size else np.empty(0)
        out = np.concatenate([qd, pd, da])
        if not np.all(np.isfinite(out)):
            raise NumericalBlowup("non-finite derivative in RK4 step", t)
        return out

    t = state.t
    k1 = f(t, y)
    k2 = f(t + dt / 2, y + dt / 2 * k1)
    k3 = f(t + dt / 2, y + dt / 2 * k2)
    k4 = f(t + dt, y + dt * k3)
    y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return PhaseState(t + dt, y[:n], y[n:2 * n]), y[2 * n:].reshape(aux.shape)


def accumulate_arc(acc: ArcAccumulator, T_prev, T_next, L_prev, L_next, dt,
                   kappa) -> ArcAccumulator:
    if T_prev < 0 or T_next < 0:
        raise InvariantViolation(
            f"negative kinetic energy ({T_prev}, {T_next})")
    return ArcAccumulator(
        s_jacobi=acc.s_jacobi + dt * (T_prev + T_next),
        s_eisenhart=acc.s_eisenhart + kappa * dt,
        q_extra=acc.q_extra + 0.5 * kappa * kappa * dt - 0.5 * dt * (L_prev + L_next),
    )


def _check_initial(spec, initial):
    if initial.q.shape != (spec.n_dof,):
        raise ConfigurationError(
            f"initial state has {initial.q.size} coordinates, system has {spec.n_dof}",
            field="initial.q")


def run_trajectory(spec: SystemSpec, initial: PhaseState, config: RunConfig,
                   integrator: str = "verlet") -> TrajectoryRecord:
    """Integrate the base flow from ``initial`` for ``config.t_max``.

    Energy drift beyond ``config.energy_drift_tol`` only sets ``drift_flag``.
    """
    _check_initial(spec, initial)
    n_steps = config.n_steps
    args = (spec.kind_code, spec.params, spec.masses, initial.q, initial.p,
            initial.t)
    if integrator == "verlet":
        t, q, p, kin, pot, s, qx, drift, status, status_t = _kernels.verlet_run(
            *args, config.dt, n_steps, config.record_stride, config.kappa)
    elif integrator == "rk4":
        empty = np.zeros((0, spec.n_dof))
        out = _kernels.rk4_run(*args, empty, empty, config.dt, n_steps,
                               config.record_stride, _kernels.MODE_BASE, 0,
                               False, 0.0, 0.0, False, config.kappa)
        t, q, p, kin, pot, s, qx = out[:7]
        status, status_t = out[-2:]
        e = kin + pot
        scale = abs(e[0]) if e[0] != 0 else 1.0
        drift = float(np.max(np.abs(e - e[0])) / scale)
    else:
        raise ConfigurationError(f"unknown integrator {integrator!r}")
    if status == _kernels.STATUS_BLOWUP:
        raise NumericalBlowup("trajectory left the finite range", status_t)
    flag = bool(drift > config.energy_drift_tol)
    if flag:
        log.warning("relative energy drift %.3e exceeds tolerance %.1e",
                    drift, config.energy_drift_tol)
    return TrajectoryRecord(spec, config.kappa, t, q, p, kin, pot, s, qx,
                            energy_drift=float(drift), drift_flag=flag,
                            integrator=integrator, dt=config.dt)


def trajectory_columns(record: TrajectoryRecord):
    n = record.spec.n_dof
    header = (["t"] + [f"q_{i + 1}" for i in range(n)]
              + [f"p_{i + 1}" for i in range(n)]
              + ["T", "V", "E", "s_jacobi", "q_extra"])
    cols = ([record.t] + [record.q[:, i] for i in range(n)]
            + [record.p[:, i] for i in range(n)]
            + [record.kinetic, record.potential, record.energy,
               record.s_jacobi, record.q_extra])
    return header, cols


def write_trajectory_csv(record: TrajectoryRecord, path):
    header, cols = trajectory_columns(record)
    write_columns(path, header, cols)


def with_offset(state: PhaseState, direction, amount) -> PhaseState:
    """Shift a phase state by ``amount`` along a 2N direction in (q, p)."""
    d = np.asarray(direction, dtype=float)
    n = state.q.size
    if d.shape != (2 * n,):
        raise ConfigurationError(f"direction must have length {2 * n}",
                                 field="experiment.direction")
    return PhaseState(state.t, state.q + amount * d[:n], state.p + amount * d[n:])


def unit_direction(direction) -> np.ndarray:
    d = np.asarray(direction, dtype=float)
    nrm = np.linalg.norm(d)
    if not np.isfinite(nrm) or abs(nrm - 1.0) > 1e-12:
        raise PreconditionError(f"direction must be a unit vector (norm {nrm})")
    return d



_FLOW_MODES = {"base": _kernels.MODE_BASE, "tangent": _kernels.MODE_TANGENT,
               "jacobi": _kernels.MODE_JACOBI}


@dataclass(eq=False)
class VariationalRun:
    """Raw output of a joint RK4 run with K variational vectors."""
    record: TrajectoryRecord
    log_sum: np.ndarray       # (samples, K)
    ln_norm: np.ndarray       # (samples, K), log of the current norm
    renorm_count: np.ndarray  # (samples,)
    xi: np.ndarray            # (samples, K, N)
    xi_dot: np.ndarray        # (samples, K, N)
    guard_hits: np.ndarray    # (samples,)
    status: int
    status_t: float
    guard: float


def run_variational(spec: SystemSpec, initial: PhaseState, xi0, xi_dot0,
                    config: RunConfig, flow: str, renormalize: bool = True,
                    record_stride: int | None = None,
                    t_max: float | None = None) -> VariationalRun:
    """Integrate the base flow jointly with K variational vectors.

    ``flow`` selects the variational dynamics: "tangent" (linearized
    Hamilton equations) or "jacobi" (Jacobi-metric geodesic spread in time
    parameterization). Blowups raise; guard hits are reported in ``status``.
    """
    _check_initial(spec, initial)
    xs = np.array(xi0, dtype=float, ndmin=2)
    vs = np.array(xi_dot0, dtype=float, ndmin=2)
    if xs.shape != vs.shape or xs.shape[1] != spec.n_dof:
        raise ConfigurationError("variational vectors must have shape (K, N)")
    mode = _FLOW_MODES[flow]
    stride = config.record_stride if record_stride is None else record_stride
    horizon = config.t_max if t_max is None else t_max
    n_steps = int(round(horizon / config.dt))
    energy = float(_kernels.kinetic(spec.masses, initial.p)
                   + _kernels.potential(spec.kind_code, spec.params, initial.q))
    guard = config.guard_for(energy)
    out = _kernels.rk4_run(
        spec.kind_code, spec.params, spec.masses, initial.q, initial.p,
        initial.t, xs, vs, config.dt, n_steps, stride, mode,
        config.renorm_interval if renormalize else 0,
        config.norm_kind == "metric", energy, guard,
        config.guard_action == "stop", config.kappa)
    (t, q, p, kin, pot, s, qx, logs, lnn, cnt, xr, vr, hits,
     status, status_t) = out
    if status == _kernels.STATUS_BLOWUP:
        raise NumericalBlowup("variational run left the finite range", status_t)
    e = kin + pot
    drift = float(np.max(np.abs(e - e[0])) / (abs(e[0]) or 1.0))
    record = TrajectoryRecord(spec, config.kappa, t, q, p, kin, pot, s, qx,
                              energy_drift=drift,
                              drift_flag=bool(drift > config.energy_drift_tol),
                              integrator="rk4", dt=config.dt)
    return VariationalRun(record, logs, lnn, cnt, xr, vr, hits, int(status),
                          float(status_t), guard)
