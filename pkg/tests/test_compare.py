import numpy as np
import pytest

from geospread._csv import read_columns
from geospread.acceptance import A4_DIRECTION, harmonic_orbit, hh_chaotic_state
from geospread.compare import (ds_dtau_fixed_t, fd_geodesic_spread, relation_residual,
                               spectrum_peak, write_comparison_csv, write_spectrum_csv)
from geospread.errors import PreconditionError
from geospread.integrate import RunConfig, run_trajectory
from geospread.systems import PhaseState, harmonic, henon_heiles
from geospread.tangent import fd_tangent_oracle

OSC = harmonic([1.0])
ENERGY_PRESERVING = np.array([0.0, 1.0, -1.0, 0.0]) / np.sqrt(2)


def test_ds_dtau_amplitude_direction_one_dof():
    # q = A cos t gives s_J = A^2 (t / 2 - sin 2t / 4)
    amp = 1.0
    t, ds = ds_dtau_fixed_t(OSC, PhaseState(0, [amp], [0.0]), [1.0, 0.0],
                            RunConfig(dt=1e-3, t_max=20.0, dtau=1e-5))
    exact = 2 * amp * (t / 2 - np.sin(2 * t) / 4)
    assert np.max(np.abs(ds - exact)) < 1e-4
    fit = np.polyfit(t, ds, 1)
    resid = ds - np.polyval(fit, t)
    assert 1 - np.var(resid) / np.var(ds) > 0.99


def test_ds_dtau_along_the_flow_is_bounded():
    # shifting along the orbit gives s(t + tau) - s(tau)
    t, ds = ds_dtau_fixed_t(OSC, PhaseState(0, [0.0], [1.0]), [1.0, 0.0],
                            RunConfig(dt=1e-3, t_max=20.0, dtau=1e-5))
    assert abs(ds[0]) < 1e-12
    np.testing.assert_allclose(ds, np.cos(t) ** 2 - 1.0, atol=1e-6)


def test_ds_dtau_eisenhart_vanishes():
    spec, x0 = harmonic_orbit(2.0)
    _, ds = ds_dtau_fixed_t(spec, x0, A4_DIRECTION, RunConfig(dt=1e-3, t_max=10.0),
                            metric="eisenhart")
    assert np.max(np.abs(ds)) == 0.0


def test_eisenhart_fixed_s_spread_is_tangent_fd():
    spec, x0 = harmonic_orbit(2.0)
    cfg = RunConfig(dt=1e-3, t_max=10.0, dtau=1e-6)
    t, _, xi_g = fd_geodesic_spread(spec, x0, A4_DIRECTION, cfg, metric="eisenhart")
    t2, xi_fd = fd_tangent_oracle(spec, x0, A4_DIRECTION, cfg, record_stride=1)
    np.testing.assert_array_equal(t, t2)
    assert np.max(np.abs(xi_g - xi_fd)) < 1e-8


@pytest.mark.parametrize("scheme,order", [("forward", 1.0), ("central", 2.0)])
def test_fixed_s_spread_convergence_order(scheme, order):
    spec, x0 = henon_heiles(), hh_chaotic_state()
    d = np.array([1.0, 1.0, 1.0, 1.0]) / 2
    base = RunConfig(dt=1e-3, t_max=5.0)
    ref = fd_geodesic_spread(spec, x0, d, RunConfig(dt=1e-3, t_max=5.0, dtau=1e-5),
                             scheme="central")[2]
    errs = []
    for h in (2e-3, 1e-3):
        xi = fd_geodesic_spread(spec, x0, d, RunConfig(dt=base.dt, t_max=base.t_max, dtau=h),
                                scheme=scheme)[2]
        errs.append(np.max(np.abs(xi - ref)))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(order, abs=0.2)


def test_fixed_s_spread_needs_invertible_arc():
    with pytest.raises(PreconditionError):
        fd_geodesic_spread(OSC, PhaseState(0, [0.0], [1.0]), [1.0, 0.0],
                           RunConfig(dt=1e-3, t_max=5.0))


def test_relation_eisenhart_trivial():
    spec, x0 = harmonic_orbit(2.0)
    comp = relation_residual(spec, x0, A4_DIRECTION, RunConfig(dt=1e-3, t_max=20.0),
                             metric="eisenhart")
    assert comp.max_residual < 1e-6
    assert np.max(comp.correction_norm) == 0.0


def test_relation_jacobi_holds_and_converges():
    spec, x0 = harmonic_orbit(2.0)
    res = {}
    for h in (1e-5, 1e-6):
        comp = relation_residual(spec, x0, A4_DIRECTION,
                                 RunConfig(dt=1e-3, t_max=20.0, dtau=h))
        res[h] = comp.max_residual
    assert res[1e-5] < 1e-3 and res[1e-6] < 1e-4
    assert res[1e-5] / res[1e-6] == pytest.approx(10.0, rel=0.2)
    assert np.max(comp.correction_norm) > 0.1  # correction is not negligible


def test_relation_wrong_identity_fails():
    spec, x0 = harmonic_orbit(2.0)
    comp = relation_residual(spec, x0, A4_DIRECTION, RunConfig(dt=1e-3, t_max=20.0,
                                                               dtau=1e-5),
                             identity="wrong")
    assert comp.max_residual > 0.1


def test_relation_energy_preserving_direction():
    spec, x0 = harmonic_orbit(np.sqrt(2))
    comp = relation_residual(spec, x0, ENERGY_PRESERVING,
                             RunConfig(dt=1e-3, t_max=15.0, dtau=1e-6))
    assert comp.max_residual < 1e-3


def test_comparison_csv(tmp_path):
    spec, x0 = harmonic_orbit(2.0)
    comp = relation_residual(spec, x0, A4_DIRECTION,
                             RunConfig(dt=1e-3, t_max=2.0, dtau=1e-5, record_stride=100))
    assert comp.times[-1] == pytest.approx(2.0)
    write_comparison_csv(comp, tmp_path / "c.csv")
    header, cols = read_columns(tmp_path / "c.csv")
    assert header[:3] == ["t", "s_jacobi", "residual"]
    assert len(cols["t"]) == len(comp.times)


def test_spectrum_single_tone():
    dt = 0.01
    t = np.arange(2 ** 14) * dt
    rep = spectrum_peak(np.cos(t), dt)
    assert abs(rep.peak_frequency - 1.0) <= rep.bin_width
    rep = spectrum_peak(np.cos(t), dt, window="hann")
    assert abs(rep.peak_frequency - 1.0) <= rep.bin_width


def test_spectrum_constant_is_dc_only():
    rep = spectrum_peak(np.full(2048, 3.0), 0.1)
    assert rep.dc_only and np.isnan(rep.peak_frequency)


def test_spectrum_two_dof_kinetic_lines():
    # T = sin^2 t / 2 + cos^2 2t / 2 has lines at 2 and 4
    spec, x0 = harmonic_orbit(2.0)
    rec = run_trajectory(spec, x0, RunConfig(dt=1e-2, t_max=400.0, record_stride=1,
                                               energy_drift_tol=1e-4))
    rep = spectrum_peak(rec.kinetic, 1e-2, window="hann")
    amp = np.where(rep.frequencies > 0.5, rep.amplitudes, 0.0)  # skip window leakage at dc
    top = rep.frequencies[np.argsort(amp)[::-1]]
    lines = []
    for f in top:
        if all(abs(f - g) > 0.5 for g in lines):
            lines.append(f)
        if len(lines) == 2:
            break
    np.testing.assert_allclose(sorted(lines), [2.0, 4.0], atol=rep.bin_width)


def test_spectrum_needs_enough_samples():
    with pytest.raises(PreconditionError):
        spectrum_peak(np.ones(1023), 0.1)


def test_spectrum_csv(tmp_path):
    rep = spectrum_peak(np.cos(np.arange(2048) * 0.1), 0.1)
    write_spectrum_csv(rep, tmp_path / "s.csv")
    header, cols = read_columns(tmp_path / "s.csv")
    assert header == ["angular_frequency", "amplitude"]
    assert len(cols["amplitude"]) == 1025
