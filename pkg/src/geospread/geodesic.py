"""Geodesic-spread dynamics for the Jacobi and Eisenhart metrics.

Everything is integrated in physical time t; arc lengths are carried as
accumulators. For the Jacobi metric g = 2(E - V) a the spread field obeys,
in Cartesian coordinates with a = diag(m),

    xi''^n = -a^{nk} V_kl xi^l
             - (1/T) ( a^{nm} V_m {a_ij qd^i xi'^j + V_l xi^l}
                       - qd^n {V_il qd^i xi^l + V_j xi'^j + V_i qd^i V_l xi^l / T} )

whose extra 1/T and 1/T^2 terms are what distinguish it from the tangent
dynamics. For the Eisenhart metric the spatial Jacobi equation collapses to
the tangent dynamics exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import PreconditionError, SingularityError
from .integrate import RunConfig, TrajectoryRecord, run_variational
from .systems import (PhaseState, SystemSpec, potential_gradient,
                      potential_hessian, potential_value)
from .tangent import LyapunovSeries, _check_normalized, _norm_weights, series_from_run


@dataclass(eq=False)
class JacobiVariationalState:
    xi: np.ndarray
    xi_dot: np.ndarray
    log_sum: float = 0.0
    renorm_count: int = 0
    t_guard_hits: int = 0

    def __post_init__(self):
        self.xi = np.array(self.xi, dtype=float).reshape(-1)
        self.xi_dot = np.array(self.xi_dot, dtype=float).reshape(-1)

    def norm(self, weights=None) -> float:
        w = 1.0 if weights is None else weights
        return float(np.sqrt(np.sum(w * (self.xi ** 2 + self.xi_dot ** 2))))


@dataclass(eq=False)
class JacobiMetricValue:
    g: np.ndarray
    energy: float

    @property
    def positive_definite(self) -> bool:
        return bool(np.all(np.diag(self.g) > 0))

    @property
    def singular(self) -> bool:
        return bool(np.any(np.diag(self.g) == 0))


@dataclass(eq=False)
class FloquetResult:
    period: float
    monodromy: np.ndarray
    exponents: np.ndarray
    multipliers: np.ndarray
    flow: str = "jacobi"

    @property
    def max_exponent(self) -> float:
        return float(self.exponents[0])


def jacobi_metric(spec: SystemSpec, q, energy) -> JacobiMetricValue:
    factor = 2.0 * (energy - potential_value(spec, q))
    return JacobiMetricValue(factor * np.diag(spec.masses), float(energy))


def jacobi_xi_rhs(spec: SystemSpec, state: PhaseState, jv: JacobiVariationalState,
                  energy, t_min_guard=None):
    """(xi_dot, xi_ddot) of the Jacobi spread field.

    Raises SingularityError when the kinetic energy is not above the guard
    (default 1e-6 * |E|); the caller decides whether that ends a run.
    """
    guard = 1e-6 * abs(energy) if t_min_guard is None else t_min_guard
    kin = float(_kernels.kinetic(spec.masses, spec._check(state.p)))
    if kin <= 0 or kin < guard:
        raise SingularityError(state.t, kin, guard)
    g = potential_gradient(spec, state.q)
    h = potential_hessian(spec, state.q)
    qd = state.p / spec.masses
    return jv.xi_dot.copy(), _kernels.jacobi_accel(g, h, spec.masses, qd, kin,
                                                   jv.xi, jv.xi_dot)


def jacobi_exponent(spec: SystemSpec, initial: PhaseState,
                    jv0: JacobiVariationalState, config: RunConfig) -> LyapunovSeries:
    """Renormalized Jacobi spread growth per unit arc length and per unit time.

    A guard hit ends the run (``guard_action="stop"``) and the partial series
    carries ``singular_flag`` and the time of the hit.
    """
    _check_normalized(jv0, _norm_weights(spec, initial, config, "jacobi"))
    run = run_variational(spec, initial, jv0.xi, jv0.xi_dot, config, "jacobi")
    series = series_from_run(run, "jacobi", config.norm_kind)
    keep = run.record.t > run.record.t[0]
    series.t_guard_hits = run.guard_hits[keep]
    if run.status in (_kernels.STATUS_GUARD, _kernels.STATUS_SINGULAR):
        series.singular_flag = True
        series.singular_t = run.status_t
    series.final = JacobiVariationalState(
        run.xi[-1, 0], run.xi_dot[-1, 0], float(run.log_sum[-1, 0]),
        int(run.renorm_count[-1]), int(run.guard_hits[-1]))
    return series


def monodromy(spec: SystemSpec, initial: PhaseState, period: float,
              config: RunConfig, flow: str = "jacobi",
              periodicity_tol: float = 1e-6):
    """Fundamental matrix of the variational flow over ``period``.

    Returns (M, end_state). The step is adjusted so that an integer number
    of steps spans the period exactly.
    """
    n = spec.n_dof
    steps = max(1, int(round(period / config.dt)))
    cfg = replace(config, dt=period / steps, t_max=period, guard_action="stop")
    eye = np.eye(2 * n)
    run = run_variational(spec, initial, eye[:, :n], eye[:, n:], cfg, flow,
                          renormalize=False, record_stride=steps)
    if run.status != _kernels.STATUS_OK:
        raise SingularityError(run.status_t, float(run.record.kinetic[-1]), run.guard)
    start = np.concatenate([initial.q, initial.p])
    end = np.concatenate([run.record.q[-1], run.record.p[-1]])
    miss = np.linalg.norm(end - start)
    if miss > periodicity_tol * max(1.0, np.linalg.norm(start)):
        raise PreconditionError(
            f"base orbit is not periodic with period {period}: mismatch {miss:.3e}")
    m = np.concatenate([run.xi[-1], run.xi_dot[-1]], axis=1).T
    return m, PhaseState(initial.t + period, end[:n], end[n:])


def floquet_oracle(spec: SystemSpec, initial: PhaseState, period: float,
                   config: RunConfig, flow: str = "jacobi",
                   periodicity_tol: float = 1e-6) -> FloquetResult:
    """Floquet exponents ln|mu| / period of the variational flow on a
    periodic base orbit, sorted descending."""
    m, _ = monodromy(spec, initial, period, config, flow, periodicity_tol)
    mu = np.linalg.eigvals(m)
    exps = np.log(np.abs(mu)) / period
    order = np.argsort(-exps, kind="stable")
    return FloquetResult(period, m, exps[order], mu[order], flow)


def eisenhart_christoffel(spec: SystemSpec, q):
    """Christoffel symbols of the Eisenhart metric and their derivatives.

    Coordinates are ordered (t, q^1..q^N, q^{N+1}). Returns ``gamma`` with
    gamma[k, l, m] = Gamma^k_{lm} and ``dgamma`` with
    dgamma[k, l, m, j] = d Gamma^k_{lm} / d x^j.
    """
    n = spec.n_dof
    d = n + 2
    grad = potential_gradient(spec, q)
    hess = potential_hessian(spec, q)
    inv_m = 1.0 / spec.masses
    gamma = np.zeros((d, d, d))
    dgamma = np.zeros((d, d, d, d))
    for i in range(n):
        gamma[1 + i, 0, 0] = inv_m[i] * grad[i]
        gamma[n + 1, 0, 1 + i] = -grad[i]
        gamma[n + 1, 1 + i, 0] = -grad[i]
        for j in range(n):
            dgamma[1 + i, 0, 0, 1 + j] = inv_m[i] * hess[i, j]
            dgamma[n + 1, 0, 1 + i, 1 + j] = -hess[i, j]
            dgamma[n + 1, 1 + i, 0, 1 + j] = -hess[i, j]
    return gamma, dgamma


def eisenhart_metric(spec: SystemSpec, q) -> np.ndarray:
    n = spec.n_dof
    g = np.zeros((n + 2, n + 2))
    g[0, 0] = -2.0 * potential_value(spec, q)
    g[1:n + 1, 1:n + 1] = np.diag(spec.masses)
    g[0, n + 1] = g[n + 1, 0] = 1.0
    return g


def eisenhart_jlc_rhs(spec: SystemSpec, state: PhaseState, xi, xi_dot,
                      kappa: float = 1.0) -> np.ndarray:
    """Spatial spread acceleration from the opened Jacobi equation

        d2 xi^k/ds2 + 2 Gamma^k_{lj} u^l dxi^j/ds + Gamma^k_{lm,j} u^l u^m xi^j = 0

    along an Eisenhart geodesic with affine parameter s = kappa t, converted
    back to time derivatives. Variations are taken at fixed t (xi^0 = 0).
    """
    n = spec.n_dof
    q = spec._check(state.q)
    gamma, dgamma = eisenhart_christoffel(spec, q)
    qd = state.p / spec.masses
    lagrangian = 0.5 * float(np.sum(spec.masses * qd * qd)) - potential_value(spec, q)
    u = np.concatenate([[1.0], qd, [0.5 * kappa ** 2 - lagrangian]]) / kappa
    x = np.concatenate([[0.0], np.asarray(xi, dtype=float), [0.0]])
    w = np.concatenate([[0.0], np.asarray(xi_dot, dtype=float), [0.0]]) / kappa
    acc_s = (-2.0 * np.einsum("klj,l,j->k", gamma, u, w)
             - np.einsum("klmj,l,m,j->k", dgamma, u, u, x))
    return kappa ** 2 * acc_s[1:n + 1]


def eisenhart_affine_check(record: TrajectoryRecord, kappa: float = 1.0) -> float:
    """max |ds^2/dt^2 / kappa^2 - 1| over the record, with
    ds^2/dt^2 = -2V + m qd.qd + 2 qd^{N+1} and qd^{N+1} = kappa^2/2 - L."""
    m = record.spec.masses
    qd = record.p / m
    mv2 = np.sum(m * qd * qd, axis=1)
    lagrangian = 0.5 * mv2 - record.potential
    qd_extra = 0.5 * kappa ** 2 - lagrangian
    ds2 = -2.0 * record.potential + mv2 + 2.0 * qd_extra
    return float(np.max(np.abs(ds2 / kappa ** 2 - 1.0)))
