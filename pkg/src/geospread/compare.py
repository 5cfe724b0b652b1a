"""Numerical certification of the geodesic-spread / tangent-dynamics relation.

For any parameterization s(t, tau) of the physical trajectories,

    xi_G = xi_T - qd * (ds/dtau)_t / (ds/dt)_tau,

where xi_G differentiates at fixed s and xi_T at fixed t. The correction
vanishes iff (ds/dtau)_t = 0, i.e. for an affine parameterization such as
the Eisenhart arc length s = kappa t. For the Jacobi arc length
(ds/dt = 2T) it does not.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._csv import write_columns
from .errors import ConfigurationError, PreconditionError
from .integrate import (RunConfig, TrajectoryRecord, run_trajectory,
                        unit_direction, with_offset)
from .systems import PhaseState, SystemSpec, total_energy
from .tangent import tangent_flow

METRICS = ("jacobi", "eisenhart")
EPS_FLOOR = 1e-12


@dataclass(eq=False)
class SpreadComparison:
    times: np.ndarray
    s_jacobi: np.ndarray
    xi_t: np.ndarray
    xi_g_fd: np.ndarray
    ds_dtau: np.ndarray
    correction: np.ndarray
    residuals: np.ndarray
    metric: str = "jacobi"
    identity: str = "exact"
    direction: np.ndarray | None = None

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals))

    @property
    def correction_norm(self) -> np.ndarray:
        return np.linalg.norm(self.correction, axis=1)


@dataclass(eq=False)
class SpectrumReport:
    frequencies: np.ndarray
    amplitudes: np.ndarray
    peak_frequency: float
    dc_only: bool = False

    @property
    def bin_width(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])


def _rk4_record(spec, state, config):
    return run_trajectory(spec, state, replace(config, record_stride=1),
                          integrator="rk4")


def _arc(record: TrajectoryRecord, metric: str) -> np.ndarray:
    if metric == "jacobi":
        return record.s_jacobi
    if metric == "eisenhart":
        return record.s_eisenhart - record.kappa * record.t[0]
    raise ConfigurationError(f"unknown metric {metric!r}", field="experiment.metric")


def _arc_rate(record: TrajectoryRecord, metric: str) -> np.ndarray:
    if metric == "jacobi":
        return 2.0 * record.kinetic
    return np.full(len(record.t), record.kappa)


def ds_dtau_fixed_t(spec: SystemSpec, initial: PhaseState, direction,
                    config: RunConfig, metric: str = "jacobi"):
    """Central difference of the arc length across trajectories at equal t.

    Returns (t, ds_dtau) on the RK4 step grid.
    """
    d = unit_direction(direction)
    h = config.dtau
    plus = _rk4_record(spec, with_offset(initial, d, h), config)
    minus = _rk4_record(spec, with_offset(initial, d, -h), config)
    return plus.t, (_arc(plus, metric) - _arc(minus, metric)) / (2 * h)


def _hermite(y0, y1, d0, d1, h, u):
    u2 = u * u
    u3 = u2 * u
    return ((2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * h * d0
            + (-2 * u3 + 3 * u2) * y1 + (u3 - u2) * h * d1)


def _hermite_du(y0, y1, d0, d1, h, u):
    u2 = u * u
    return ((6 * u2 - 6 * u) * y0 + (3 * u2 - 4 * u + 1) * h * d0
            + (-6 * u2 + 6 * u) * y1 + (3 * u2 - 2 * u) * h * d1)


def resample_at_arc(record: TrajectoryRecord, arc, rate, targets):
    """Coordinates of ``record`` where its arc length equals ``targets``.

    Both s(t) and q(t) are cubic Hermite interpolants built from the exact
    derivatives on the step grid (ds/dt = ``rate``, dq/dt = p/m); the
    crossing time is found by Newton iteration inside each interval.
    """
    t = record.t
    last = len(t) - 2
    j = np.clip(np.searchsorted(arc, targets, side="right") - 1, 0, last)
    h = t[j + 1] - t[j]
    s0, s1, r0, r1 = arc[j], arc[j + 1], rate[j], rate[j + 1]
    u = (targets - s0) / np.where(s1 > s0, s1 - s0, 1.0)
    for _ in range(30):
        f = _hermite(s0, s1, r0, r1, h, u) - targets
        du = f / _hermite_du(s0, s1, r0, r1, h, u)
        u = u - du
        if np.max(np.abs(du)) < 1e-15:
            break
    qd = record.qdot
    q = _hermite(record.q[j], record.q[j + 1], qd[j], qd[j + 1],
                 h[:, None], u[:, None])
    return t[j] + u * h, q


def fd_geodesic_spread(spec: SystemSpec, initial: PhaseState, direction,
                       config: RunConfig, metric: str = "jacobi",
                       scheme: str = "forward"):
    """Finite-difference spread field at fixed arc length.

    The perturbed trajectories are resampled at the arc-length values of the
    base trajectory's step grid. Returns (t, s, xi_g) with t and s those of
    the base grid and xi_g of shape (samples, N).
    """
    d = unit_direction(direction)
    h = config.dtau
    guard = config.guard_for(total_energy(spec, initial))
    base = _rk4_record(spec, initial, config)
    s_base = _arc(base, metric)

    def shifted(amount):
        rec = _rk4_record(spec, with_offset(initial, d, amount), config)
        if metric == "jacobi" and np.min(rec.kinetic) < guard:
            raise PreconditionError(
                "kinetic energy falls below the guard; arc length is not invertible")
        return resample_at_arc(rec, _arc(rec, metric), _arc_rate(rec, metric),
                               s_base)[1]

    if metric == "jacobi" and np.min(base.kinetic) < guard:
        raise PreconditionError(
            "kinetic energy falls below the guard; arc length is not invertible")
    if scheme == "forward":
        xi = (shifted(h) - base.q) / h
    elif scheme == "central":
        xi = (shifted(h) - shifted(-h)) / (2 * h)
    else:
        raise ConfigurationError(f"unknown scheme {scheme!r}")
    return base.t, s_base, xi


def relation_residual(spec: SystemSpec, initial: PhaseState, direction,
                      config: RunConfig, metric: str = "jacobi",
                      identity: str = "exact",
                      scheme: str = "central") -> SpreadComparison:
    """Residual of the spread relation on one base orbit and direction.

    ``identity="wrong"`` substitutes the fixed-s spread for xi_T on the
    right-hand side (negative control). ``scheme`` selects the difference
    used for the fixed-s spread; (ds/dtau)_t is always central. Samples are
    thinned to ``config.record_stride``.
    """
    if metric not in METRICS:
        raise ConfigurationError(f"unknown metric {metric!r}", field="experiment.metric")
    d = unit_direction(direction)
    n = spec.n_dof
    t, s_g, xi_g = fd_geodesic_spread(spec, initial, d, config, metric, scheme)
    t_ds, ds = ds_dtau_fixed_t(spec, initial, d, config, metric)
    record, xi_t, _ = tangent_flow(spec, initial, d[:n], d[n:] / spec.masses,
                                   config, record_stride=1)
    if not (len(t) == len(t_ds) == len(record.t)) or np.any(t != record.t):
        raise ConfigurationError("mismatched sample grids")
    correction = record.qdot * (ds / _arc_rate(record, metric))[:, None]
    if identity == "exact":
        predicted = xi_t - correction
    elif identity == "wrong":
        predicted = xi_g - correction
    else:
        raise ConfigurationError(f"unknown identity {identity!r}")
    scale = np.maximum(np.linalg.norm(xi_t, axis=1), EPS_FLOOR)
    residuals = np.linalg.norm(xi_g - predicted, axis=1) / scale
    keep = slice(None, None, config.record_stride)
    last = len(t) - 1
    idx = np.unique(np.r_[np.arange(len(t))[keep], last])
    return SpreadComparison(
        times=t[idx], s_jacobi=record.s_jacobi[idx], xi_t=xi_t[idx],
        xi_g_fd=xi_g[idx], ds_dtau=ds[idx], correction=correction[idx],
        residuals=residuals[idx], metric=metric, identity=identity, direction=d)


def spectrum_peak(signal, dt: float, window: str = "none") -> SpectrumReport:
    """Magnitude spectrum over angular frequency 2 pi k / (N dt)."""
    x = np.asarray(signal, dtype=float)
    if x.size < 1024:
        raise PreconditionError(f"need at least 1024 samples, got {x.size}")
    if window == "hann":
        w = np.hanning(x.size)
    elif window == "none":
        w = np.ones(x.size)
    else:
        raise ConfigurationError(f"unknown window {window!r}", field="experiment.window")
    amp = np.abs(np.fft.rfft(x * w)) / np.sum(w)
    freqs = 2 * np.pi * np.fft.rfftfreq(x.size, dt)
    positive = amp[1:]
    floor = 1e-10 * max(amp[0], np.finfo(float).tiny)
    if positive.size == 0 or np.max(positive) <= floor:
        return SpectrumReport(freqs, amp, float("nan"), dc_only=True)
    return SpectrumReport(freqs, amp, float(freqs[1 + int(np.argmax(positive))]))


def comparison_columns(comp: SpreadComparison):
    header = ["t", "s_jacobi", "residual", "ds_dtau", "correction_norm",
              "xi_t_norm", "xi_g_fd_norm"]
    cols = [comp.times, comp.s_jacobi, comp.residuals, comp.ds_dtau,
            comp.correction_norm, np.linalg.norm(comp.xi_t, axis=1),
            np.linalg.norm(comp.xi_g_fd, axis=1)]
    return header, cols


def write_comparison_csv(comp: SpreadComparison, path):
    write_columns(path, *comparison_columns(comp))


def write_spectrum_csv(report: SpectrumReport, path):
    write_columns(path, ["angular_frequency", "amplitude"],
                  [report.frequencies, report.amplitudes])
