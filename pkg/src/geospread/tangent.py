"""Tangent dynamics and time-normalized Lyapunov exponents."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from ._csv import write_columns
from .errors import ConfigurationError, PreconditionError
from .integrate import (RunConfig, VariationalRun, run_trajectory,
                        run_variational, unit_direction, with_offset)
from .systems import PhaseState, SystemSpec, potential_hessian


@dataclass(eq=False)
class TangentState:
    xi: np.ndarray
    xi_dot: np.ndarray
    log_sum: float = 0.0
    renorm_count: int = 0

    def __post_init__(self):
        self.xi = np.array(self.xi, dtype=float).reshape(-1)
        self.xi_dot = np.array(self.xi_dot, dtype=float).reshape(-1)
        if self.xi.shape != self.xi_dot.shape:
            raise ConfigurationError("xi and xi_dot differ in length")

    def norm(self, weights=None) -> float:
        w = 1.0 if weights is None else weights
        return float(np.sqrt(np.sum(w * (self.xi ** 2 + self.xi_dot ** 2))))


@dataclass(eq=False)
class LyapunovSeries:
    """Finite-time exponents per unit time and per unit Jacobi arc length."""
    t: np.ndarray
    s_jacobi: np.ndarray
    lambda_t: np.ndarray
    lambda_s: np.ndarray
    renorm_count: np.ndarray
    measure: str = "tangent"
    norm_kind: str = "euclidean"
    t_guard_hits: np.ndarray | None = None
    singular_flag: bool = False
    singular_t: float = float("nan")
    log_growth: np.ndarray | None = field(default=None, repr=False)
    final: object = field(default=None, repr=False)

    def __len__(self):
        return len(self.t)

    def at(self, t) -> int:
        """Index of the sample closest to time ``t``."""
        return int(np.argmin(np.abs(self.t - t)))


def tangent_rhs(spec: SystemSpec, state: PhaseState, ts: TangentState):
    """(xi_dot, xi_ddot) with xi_ddot^n = -(1/m_n) V_{,nl} xi^l."""
    if ts.xi.shape != (spec.n_dof,):
        raise ConfigurationError("tangent vector length does not match n_dof")
    h = potential_hessian(spec, state.q)
    return ts.xi_dot.copy(), _kernels.tangent_accel(h, spec.masses, ts.xi)


def random_unit_state(n_dof, seed=0, cls=TangentState):
    """Deterministic pseudo-random unit (xi, xi_dot) pair."""
    v = np.random.default_rng(seed).standard_normal(2 * n_dof)
    v /= np.linalg.norm(v)
    return cls(v[:n_dof], v[n_dof:])


def _norm_weights(spec, initial, config, flow):
    if config.norm_kind == "euclidean":
        return np.ones(spec.n_dof)
    if flow == "jacobi":
        e = float(_kernels.kinetic(spec.masses, initial.p)
                  + _kernels.potential(spec.kind_code, spec.params, initial.q))
        return 2.0 * (e - _kernels.potential(spec.kind_code, spec.params,
                                             initial.q)) * spec.masses
    return spec.masses


def _check_normalized(ts, weights):
    nrm = ts.norm(weights)
    if not abs(nrm - 1.0) < 1e-10:
        raise PreconditionError(f"initial variational vector has norm {nrm}, expected 1")


def series_from_run(run: VariationalRun, measure: str, norm_kind: str) -> LyapunovSeries:
    rec = run.record
    elapsed = rec.t - rec.t[0]
    keep = elapsed > 0
    growth = run.log_sum[:, 0] + run.ln_norm[:, 0] - run.ln_norm[0, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        lam_t = growth[keep] / elapsed[keep]
        lam_s = growth[keep] / rec.s_jacobi[keep]
    return LyapunovSeries(
        t=rec.t[keep], s_jacobi=rec.s_jacobi[keep], lambda_t=lam_t,
        lambda_s=lam_s, renorm_count=run.renorm_count[keep], measure=measure,
        norm_kind=norm_kind, log_growth=growth[keep])


def benettin_exponent(spec: SystemSpec, initial: PhaseState, ts0: TangentState,
                      config: RunConfig) -> LyapunovSeries:
    """Largest Lyapunov exponent from the renormalized tangent flow."""
    _check_normalized(ts0, _norm_weights(spec, initial, config, "tangent"))
    run = run_variational(spec, initial, ts0.xi, ts0.xi_dot, config, "tangent")
    series = series_from_run(run, "tangent", config.norm_kind)
    series.final = TangentState(run.xi[-1, 0], run.xi_dot[-1, 0],
                                float(run.log_sum[-1, 0]), int(run.renorm_count[-1]))
    return series


def tangent_flow(spec: SystemSpec, initial: PhaseState, xi0, xi_dot0,
                 config: RunConfig, record_stride: int | None = None):
    """Un-renormalized tangent vectors along the RK4 base orbit.

    Returns (record, xi, xi_dot) with xi of shape (samples, N) for a single
    vector, or (samples, K, N) when K vectors are passed.
    """
    xi0 = np.asarray(xi0, dtype=float)
    run = run_variational(spec, initial, xi0, xi_dot0, config, "tangent",
                          renormalize=False, record_stride=record_stride)
    if xi0.ndim == 1:
        return run.record, run.xi[:, 0], run.xi_dot[:, 0]
    return run.record, run.xi, run.xi_dot


def two_trajectory_exponent(spec: SystemSpec, tau1_state: PhaseState,
                            tau2_state: PhaseState, config: RunConfig) -> LyapunovSeries:
    """Naive exponent from the coordinate distance of two nearby trajectories.

    Saturates once the separation reaches the size of a bounded system.
    """
    d0 = np.linalg.norm(tau2_state.q - tau1_state.q)
    if d0 == 0:
        raise PreconditionError("initial coordinate separation is zero")
    r1 = run_trajectory(spec, tau1_state, config)
    r2 = run_trajectory(spec, tau2_state, config)
    elapsed = r1.t - r1.t[0]
    keep = elapsed > 0
    with np.errstate(divide="ignore"):
        growth = np.log(np.linalg.norm(r2.q - r1.q, axis=1) / d0)
    growth = growth[keep]
    return LyapunovSeries(
        t=r1.t[keep], s_jacobi=r1.s_jacobi[keep],
        lambda_t=growth / elapsed[keep], lambda_s=growth / r1.s_jacobi[keep],
        renorm_count=np.zeros(int(keep.sum()), dtype=np.int64),
        measure="two_trajectory", norm_kind="euclidean", log_growth=growth)


def fd_tangent_oracle(spec: SystemSpec, initial: PhaseState, direction,
                      config: RunConfig, scheme: str = "forward",
                      record_stride: int | None = None):
    """Finite-difference tangent vector (dq/dtau at fixed t).

    ``direction`` is a unit 2N vector in (q, p). Both trajectories use the
    same RK4 grid as the integrated tangent flow, so the difference converges
    to it at order one (forward) or two (central) in ``config.dtau``.
    Returns (t, xi_fd) with xi_fd of shape (samples, N).
    """
    d = unit_direction(direction)
    h = config.dtau

    def coords(amount):
        st = with_offset(initial, d, amount)
        return run_trajectory(spec, st, _stride(config, record_stride),
                              integrator="rk4")

    plus = coords(h)
    if scheme == "forward":
        base = coords(0.0)
        xi = (plus.q - base.q) / h
    elif scheme == "central":
        minus = coords(-h)
        xi = (plus.q - minus.q) / (2 * h)
    else:
        raise ConfigurationError(f"unknown scheme {scheme!r}")
    return plus.t, xi


def _stride(config, record_stride):
    if record_stride is None:
        return config
    return replace(config, record_stride=record_stride)


def exponent_columns(series: LyapunovSeries):
    header = ["t", "s_jacobi", "lambda_t", "lambda_s", "renorm_count"]
    cols = [series.t, series.s_jacobi, series.lambda_t, series.lambda_s,
            series.renorm_count]
    if series.measure == "jacobi":
        header += ["t_guard_hits", "singular_flag"]
        hits = (series.t_guard_hits if series.t_guard_hits is not None
                else np.zeros(len(series.t), dtype=np.int64))
        flag = np.zeros(len(series.t), dtype=np.int64)
        if series.singular_flag and len(flag):
            flag[-1] = 1
        cols += [hits, flag]
    return header, cols


def write_exponent_csv(series: LyapunovSeries, path):
    header, cols = exponent_columns(series)
    write_columns(path, header, cols)
