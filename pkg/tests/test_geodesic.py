import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geospread._csv import read_columns
from geospread.acceptance import harmonic_orbit, hh_chaotic_state
from geospread.errors import PreconditionError, SingularityError
from geospread.geodesic import (JacobiVariationalState, eisenhart_affine_check,
                                eisenhart_christoffel, eisenhart_jlc_rhs,
                                eisenhart_metric, floquet_oracle, jacobi_exponent,
                                jacobi_metric, jacobi_xi_rhs, monodromy)
from geospread.integrate import (RunConfig, TrajectoryRecord, rk4_augmented_step,
                                 run_trajectory, run_variational)
from geospread.systems import (PhaseState, anharmonic_chain, harmonic, henon_heiles,
                               potential_value, total_energy)
from geospread.tangent import TangentState, random_unit_state, tangent_rhs, write_exponent_csv

OSC = harmonic([1.0])
small = st.floats(-1.0, 1.0)


def test_jacobi_metric_examples():
    spec = henon_heiles()
    q = np.array([0.1, 0.2])
    g = jacobi_metric(spec, q, potential_value(spec, q))
    assert np.all(g.g == 0) and g.singular and not g.positive_definite
    np.testing.assert_array_equal(jacobi_metric(OSC, [0.0], 0.5).g, [[1.0]])
    spec = harmonic([1.0, 1.0], masses=[2.0, 2.0])
    g = jacobi_metric(spec, [0.0, 0.0], 3.0)
    np.testing.assert_array_equal(g.g, 12.0 * np.eye(2))  # 2 (E - V) m
    assert g.positive_definite
    assert not jacobi_metric(OSC, [2.0], 0.5).positive_definite


def test_jacobi_rhs_hand_examples():
    xd, xdd = jacobi_xi_rhs(OSC, PhaseState(0, [0.0], [1.0]),
                            JacobiVariationalState([1.0], [0.3]), 0.5)
    assert xd.tolist() == [0.3]
    assert xdd[0] == pytest.approx(1.0, abs=1e-15)  # +xi at q = 0, opposite to tangent
    _, xdd = jacobi_xi_rhs(henon_heiles(), PhaseState(0, [0.1, 0.1], [0.2, 0.3]),
                           JacobiVariationalState([0.0, 0.0], [0.0, 0.0]), 0.2)
    assert xdd.tolist() == [0.0, 0.0]
    # minimum of omega = (1, 2), qdot = (1, 1), xi = (1, 0): (-1, 0) + (1, 1) * 1 / T
    _, xdd = jacobi_xi_rhs(harmonic([1.0, 2.0]), PhaseState(0, [0.0, 0.0], [1.0, 1.0]),
                           JacobiVariationalState([1.0, 0.0], [0.0, 0.0]), 1.0)
    np.testing.assert_allclose(xdd, [0.0, 1.0], atol=1e-15)


@given(st.floats(0.0, 2 * np.pi), st.floats(0.2, 3.0), small, small)
def test_one_dof_reduction(phase, amp, xi, xi_dot):
    q, p = amp * np.cos(phase), -amp * np.sin(phase)
    kin = 0.5 * p * p
    energy = 0.5 * amp * amp
    if kin < 1e-3 * energy:
        return
    _, xdd = jacobi_xi_rhs(OSC, PhaseState(0, [q], [p]),
                           JacobiVariationalState([xi], [xi_dot]), energy)
    expected = (2 * energy / kin - 1) * xi
    assert xdd[0] == pytest.approx(expected, rel=1e-10, abs=1e-10 * (2 * energy / kin))


def test_growth_rate_scales_as_inverse_kinetic_energy():
    energy = 0.5
    ratios, kins = [], np.geomspace(1e-4, 1e-2, 9) * energy
    for kin in kins:
        p = np.sqrt(2 * kin)
        q = np.sqrt(2 * (energy - kin))
        _, xdd = jacobi_xi_rhs(OSC, PhaseState(0, [q], [p]),
                               JacobiVariationalState([1.0], [0.0]), energy,
                               t_min_guard=0.0)
        ratios.append(abs(xdd[0]))
    slope = np.polyfit(np.log(kins), np.log(ratios), 1)[0]
    assert abs(slope + 1.0) < 0.05


def test_guard_signals():
    jv = JacobiVariationalState([1.0], [0.0])
    with pytest.raises(SingularityError):
        jacobi_xi_rhs(OSC, PhaseState(0, [1.0], [0.0]), jv, 0.5, t_min_guard=0.0)
    with pytest.raises(SingularityError) as exc:
        jacobi_xi_rhs(OSC, PhaseState(1.0, [1.0], [1e-4]), jv, 0.5)
    assert exc.value.guard == pytest.approx(5e-7)
    jacobi_xi_rhs(OSC, PhaseState(1.0, [1.0], [1e-4]), jv, 0.5, t_min_guard=1e-9)


def test_jacobi_kernel_matches_python_rk4():
    spec, x0 = henon_heiles(), hh_chaotic_state()
    energy = total_energy(spec, x0)
    jv0 = random_unit_state(2, 5, JacobiVariationalState)
    run = run_variational(spec, x0, jv0.xi, jv0.xi_dot,
                          RunConfig(dt=1e-2, t_max=2.0, record_stride=200), "jacobi",
                          renormalize=False)

    def aux_rhs(st_, a):
        xd, xdd = jacobi_xi_rhs(spec, st_, JacobiVariationalState(a[:2], a[2:]), energy)
        return np.concatenate([xd, xdd])

    state, aux = x0, np.concatenate([jv0.xi, jv0.xi_dot])
    for _ in range(200):
        state, aux = rk4_augmented_step(spec, state, aux, aux_rhs, 1e-2)
    np.testing.assert_allclose(run.xi[-1, 0], aux[:2], rtol=1e-11, atol=1e-12)
    np.testing.assert_allclose(run.xi_dot[-1, 0], aux[2:], rtol=1e-11, atol=1e-12)


@pytest.mark.parametrize("alpha", [2.0, -1.0, 1e-3])
def test_jacobi_flow_is_linear(alpha):
    spec, x0 = harmonic_orbit(np.sqrt(2))
    jv = random_unit_state(2, 2)
    cfg = RunConfig(dt=1e-2, t_max=30.0)
    a = run_variational(spec, x0, jv.xi, jv.xi_dot, cfg, "jacobi", renormalize=False)
    b = run_variational(spec, x0, alpha * jv.xi, alpha * jv.xi_dot, cfg, "jacobi",
                        renormalize=False)
    scale = np.max(np.abs(a.xi))
    assert np.max(np.abs(b.xi - alpha * a.xi)) <= 1e-12 * abs(alpha) * scale


def test_jacobi_exponent_flags_turning_point():
    dt = 1e-3
    cfg = RunConfig(dt=dt, t_max=5.0, record_stride=1)
    series = jacobi_exponent(OSC, PhaseState(0, [0.0], [1.0]),
                             JacobiVariationalState([1.0], [0.0]), cfg)
    assert series.singular_flag
    assert abs(series.singular_t - np.pi / 2) <= dt
    assert series.t[-1] <= series.singular_t
    assert np.all(np.isfinite(series.lambda_t))


def test_jacobi_exponent_flags_start_at_rest():
    # (q, p) = (1, 0) sits on the turning point already
    series = jacobi_exponent(OSC, PhaseState(0, [1.0], [0.0]),
                             JacobiVariationalState([1.0], [0.0]), RunConfig(t_max=5.0))
    assert series.singular_flag and series.singular_t == 0.0
    assert len(series) == 0


def test_jacobi_guard_flag_mode_keeps_running():
    spec, x0 = harmonic_orbit(np.sqrt(2))
    jv = random_unit_state(2, 0, JacobiVariationalState)
    stop = jacobi_exponent(spec, x0, jv, RunConfig(dt=1e-3, t_max=700.0, record_stride=1000))
    assert stop.singular_flag and 640 < stop.singular_t < 642
    flag = jacobi_exponent(spec, x0, jv, RunConfig(dt=1e-3, t_max=700.0, record_stride=1000,
                                                   guard_action="flag"))
    assert not flag.singular_flag
    assert flag.t[-1] == pytest.approx(700.0)
    assert flag.t_guard_hits[-1] >= 1
    assert np.all(np.diff(flag.t_guard_hits) >= 0)


def test_jacobi_exponent_positive_on_stable_orbit():
    spec, x0 = harmonic_orbit(np.sqrt(2))
    cfg = RunConfig(dt=1e-3, t_max=300.0, record_stride=1000, t_min_guard=1e-9)
    series = jacobi_exponent(spec, x0, random_unit_state(2, 0, JacobiVariationalState), cfg)
    assert series.lambda_s[-1] > 0
    assert series.lambda_t[-1] > 0.05


def test_jacobi_exponent_csv(tmp_path):
    cfg = RunConfig(dt=1e-3, t_max=5.0, record_stride=10)
    series = jacobi_exponent(OSC, PhaseState(0, [0.0], [1.0]),
                             JacobiVariationalState([1.0], [0.0]), cfg)
    write_exponent_csv(series, tmp_path / "j.csv")
    header, cols = read_columns(tmp_path / "j.csv")
    assert header[-2:] == ["t_guard_hits", "singular_flag"]
    assert cols["singular_flag"][-1] == 1 and np.all(cols["singular_flag"][:-1] == 0)


def test_floquet_tangent_is_neutral():
    spec, x0 = harmonic_orbit(2.0)
    res = floquet_oracle(spec, x0, 2 * np.pi, RunConfig(dt=1e-3), flow="tangent")
    assert np.max(np.abs(res.exponents)) < 1e-6


def test_floquet_jacobi_reference_value():
    spec, x0 = harmonic_orbit(2.0)
    res = floquet_oracle(spec, x0, 2 * np.pi, RunConfig(dt=1e-3), flow="jacobi")
    assert res.max_exponent > 0
    # reference value of this configuration
    assert res.max_exponent == pytest.approx(6.36e-6, rel=5e-3)
    assert np.abs(np.sum(res.exponents)) < 1e-6
    assert abs(np.linalg.det(res.monodromy) - 1.0) < 1e-8
    np.testing.assert_allclose(res.exponents, -res.exponents[::-1], atol=1e-6)


def test_floquet_jacobi_exponent_vanishes_with_dt():
    spec, x0 = harmonic_orbit(2.0)
    exps = [floquet_oracle(spec, x0, 2 * np.pi, RunConfig(dt=dt), flow="jacobi").max_exponent
            for dt in (1e-3, 5e-4)]
    assert exps[1] < exps[0]
    assert exps[0] / exps[1] == pytest.approx(4.0, rel=0.1)


@pytest.mark.parametrize("flow", ["tangent", "jacobi"])
def test_monodromy_semigroup(flow):
    spec, x0 = harmonic_orbit(2.0)
    cfg = RunConfig(dt=1e-3)
    m1, _ = monodromy(spec, x0, 2 * np.pi, cfg, flow)
    m2, _ = monodromy(spec, x0, 4 * np.pi, cfg, flow)
    assert np.max(np.abs(m2 - m1 @ m1)) < 1e-8


def test_floquet_preconditions():
    spec, x0 = harmonic_orbit(2.0)
    with pytest.raises(PreconditionError):
        floquet_oracle(spec, x0, np.pi, RunConfig(dt=1e-3))
    with pytest.raises(SingularityError):
        floquet_oracle(OSC, PhaseState(0, [0.0], [1.0]), 2 * np.pi, RunConfig(dt=1e-3))


def _numeric_christoffel(spec, q, h=1e-6):
    n = spec.n_dof
    d = n + 2
    g = eisenhart_metric(spec, q)
    ginv = np.linalg.inv(g)
    dg = np.zeros((d, d, d))  # dg[a, b, c] = d g_ab / d x^c
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        dg[:, :, 1 + i] = (eisenhart_metric(spec, q + e) - eisenhart_metric(spec, q - e)) / (2 * h)
    # lower[a, l, m] = (d_l g_am + d_m g_al - d_a g_lm) / 2
    lower = 0.5 * (dg.transpose(0, 2, 1) + dg - dg.transpose(2, 0, 1))
    return np.einsum("ka,alm->klm", ginv, lower)


@given(st.lists(small, min_size=2, max_size=2))
def test_christoffel_against_metric_derivatives(q):
    spec = henon_heiles()
    q = np.array(q)
    gamma, dgamma = eisenhart_christoffel(spec, q)
    np.testing.assert_allclose(gamma, _numeric_christoffel(spec, q), atol=1e-8)
    np.testing.assert_array_equal(gamma, gamma.transpose(0, 2, 1))
    for j in range(2):
        e = np.zeros(2)
        e[j] = 1e-6
        fd = (eisenhart_christoffel(spec, q + e)[0] - eisenhart_christoffel(spec, q - e)[0]) / 2e-6
        np.testing.assert_allclose(dgamma[..., 1 + j], fd, atol=1e-8)


def test_eisenhart_rhs_examples():
    st_ = PhaseState(0, [0.4], [0.2])
    np.testing.assert_array_equal(eisenhart_jlc_rhs(OSC, st_, [1.0], [0.0]), [-1.0])
    np.testing.assert_array_equal(eisenhart_jlc_rhs(OSC, st_, [0.0], [0.0]), [0.0])


@given(st.lists(small, min_size=8, max_size=8), st.floats(0.3, 3.0))
def test_eisenhart_equals_tangent(v, kappa):
    spec = henon_heiles()
    q, p, xi, xd = np.array(v).reshape(4, 2)
    st_ = PhaseState(0, q, p)
    a = eisenhart_jlc_rhs(spec, st_, xi, xd, kappa=kappa)
    b = tangent_rhs(spec, st_, TangentState(xi, xd))[1]
    assert np.max(np.abs(a - b)) <= 4 * np.finfo(float).eps * max(1.0, np.max(np.abs(b)))


def test_eisenhart_equals_tangent_on_chain():
    spec = anharmonic_chain(4, 1.0, 0.7, masses=[1.0, 2.0, 0.5, 1.5])
    rng = np.random.default_rng(0)
    for _ in range(20):
        q, p, xi, xd = rng.uniform(-1, 1, (4, 4))
        a = eisenhart_jlc_rhs(spec, PhaseState(0, q, p), xi, xd)
        b = tangent_rhs(spec, PhaseState(0, q, p), TangentState(xi, xd))[1]
        np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-14)


@pytest.mark.parametrize("kappa", [1.0, 2.0])
def test_affine_check_on_numeric_run(kappa):
    rec = run_trajectory(harmonic([1.0, np.sqrt(2)]), PhaseState(0, [1.0, 0.3], [0.0, 1.0]),
                         RunConfig(dt=1e-3, t_max=100.0, kappa=kappa))
    assert eisenhart_affine_check(rec, kappa) < 1e-8


def test_affine_check_on_exact_trajectory():
    t = np.linspace(0, 10, 101)
    q, p = np.cos(t)[:, None], -np.sin(t)[:, None]
    kin, pot = 0.5 * p[:, 0] ** 2, 0.5 * q[:, 0] ** 2
    rec = TrajectoryRecord(OSC, 1.0, t, q, p, kin, pot, np.zeros_like(t), np.zeros_like(t))
    assert eisenhart_affine_check(rec) < 1e-15
