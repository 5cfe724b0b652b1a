import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geospread.errors import ConfigurationError
from geospread.systems import (AnharmonicChain, Harmonic, HenonHeiles, PhaseState,
                               SystemSpec, anharmonic_chain, hamilton_rhs, harmonic,
                               henon_heiles, kinetic_energy, potential_gradient,
                               potential_hessian, potential_value, state_at_energy,
                               total_energy)

coord = st.floats(-2.0, 2.0, allow_nan=False)
omega = st.floats(0.1, 5.0)


def hh_reference(q):
    x, y = q
    return 0.5 * (x * x + y * y) + x * x * y - y ** 3 / 3.0


def chain_reference(q, k2, k4):
    ext = np.concatenate([[0.0], q, [0.0]])
    d = np.diff(ext)
    return float(np.sum(0.5 * k2 * d ** 2 + 0.25 * k4 * d ** 4))


def fd_gradient(f, q, h=1e-5):
    g = np.zeros_like(q)
    for i in range(q.size):
        e = np.zeros_like(q)
        e[i] = h
        g[i] = (f(q + e) - f(q - e)) / (2 * h)
    return g


@pytest.mark.parametrize("spec, q, expected", [
    (harmonic([1.0]), [0.0], 0.0),
    (harmonic([1.0]), [1.0], 0.5),
    (henon_heiles(), [0.0, 1.0], 1.0 / 6.0),
])
def test_potential_examples(spec, q, expected):
    assert potential_value(spec, q) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("spec, q, expected", [
    (harmonic([1.0]), [2.0], [2.0]),
    (harmonic([1.0, 3.0]), [1.0, 1.0], [1.0, 9.0]),
    (henon_heiles(), [1.0, 1.0], [3.0, 1.0]),
])
def test_gradient_examples(spec, q, expected):
    np.testing.assert_allclose(potential_gradient(spec, q), expected, atol=1e-15)


@pytest.mark.parametrize("spec, q, expected", [
    (harmonic([1.0, 2.0]), [0.3, -7.0], np.diag([1.0, 4.0])),
    (henon_heiles(), [0.0, 0.0], np.eye(2)),
    (henon_heiles(), [1.0, 1.0], [[3.0, 2.0], [2.0, -1.0]]),
])
def test_hessian_examples(spec, q, expected):
    np.testing.assert_allclose(potential_hessian(spec, q), expected, atol=1e-15)


def test_hamilton_rhs_examples():
    qd, pd = hamilton_rhs(harmonic([1.0]), PhaseState(0, [1.0], [0.0]))
    assert qd.tolist() == [0.0] and pd.tolist() == [-1.0]
    qd, pd = hamilton_rhs(harmonic([1.0], masses=[2.0]), PhaseState(0, [0.0], [2.0]))
    assert qd.tolist() == [1.0] and pd.tolist() == [0.0]
    qd, pd = hamilton_rhs(henon_heiles(), PhaseState(0, [1.0, 1.0], [0.0, 0.0]))
    assert qd.tolist() == [0.0, 0.0] and pd.tolist() == [-3.0, -1.0]


def test_kinetic_examples():
    assert kinetic_energy(harmonic([1.0, 1.0, 1.0]), PhaseState(0, [0, 0, 0], [0, 0, 0])) == 0
    assert kinetic_energy(harmonic([1.0]), PhaseState(0, [0.0], [2.0])) == 2.0
    spec = harmonic([1.0, 1.0], masses=[2.0, 2.0])
    assert kinetic_energy(spec, PhaseState(0, [0, 0], [2.0, 2.0])) == 2.0


def test_chain_value_by_hand():
    # bonds 1, -1, 0 with k2 = k4 = 1: 2 * (1/2 + 1/4)
    assert potential_value(anharmonic_chain(2, 1.0, 1.0), [1.0, 0.0]) == 1.5


def test_dimension_mismatch():
    with pytest.raises(ConfigurationError):
        potential_value(harmonic([1.0, 2.0]), [1.0])
    with pytest.raises(ConfigurationError):
        potential_gradient(henon_heiles(), [1.0, 2.0, 3.0])
    with pytest.raises(ConfigurationError):
        hamilton_rhs(harmonic([1.0]), PhaseState(0, [1.0, 2.0], [0.0, 0.0]))


def test_spec_validation():
    with pytest.raises(ConfigurationError) as exc:
        SystemSpec(3, np.ones(3), HenonHeiles())
    assert exc.value.field == "system.n_dof"
    with pytest.raises(ConfigurationError) as exc:
        SystemSpec(2, [1.0, 0.0], Harmonic((1.0, 1.0)))
    assert exc.value.field == "system.masses"
    with pytest.raises(ConfigurationError) as exc:
        SystemSpec(2, [1.0, 1.0], Harmonic((1.0,)))
    assert exc.value.field == "system.omegas"
    with pytest.raises(ConfigurationError):
        Harmonic((1.0, -1.0))
    with pytest.raises(ConfigurationError):
        AnharmonicChain(k2=-1.0)
    with pytest.raises(ConfigurationError):
        SystemSpec(0, [], Harmonic(()))


def test_phase_state_must_be_finite():
    with pytest.raises(ConfigurationError):
        PhaseState(0.0, [np.nan], [0.0])
    with pytest.raises(ConfigurationError):
        PhaseState(0.0, [0.0], [0.0, 1.0])


@given(st.lists(coord, min_size=2, max_size=2))
def test_henon_heiles_matches_reference(q):
    q = np.array(q)
    assert potential_value(henon_heiles(), q) == pytest.approx(hh_reference(q), abs=1e-12)


@given(st.lists(coord, min_size=1, max_size=5), st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_chain_matches_reference(q, k2, k4):
    q = np.array(q)
    spec = anharmonic_chain(q.size, k2, k4)
    assert potential_value(spec, q) == pytest.approx(chain_reference(q, k2, k4),
                                                     rel=1e-12, abs=1e-12)


families = st.sampled_from(["harmonic", "chain", "henon_heiles"])


@st.composite
def spec_and_point(draw):
    family = draw(families)
    n = 2 if family == "henon_heiles" else draw(st.integers(1, 4))
    if family == "harmonic":
        spec = harmonic(draw(st.lists(omega, min_size=n, max_size=n)))
    elif family == "chain":
        spec = anharmonic_chain(n, draw(st.floats(0.1, 3.0)), draw(st.floats(0.0, 3.0)))
    else:
        spec = henon_heiles()
    q = np.array(draw(st.lists(coord, min_size=n, max_size=n)))
    return spec, q


@given(spec_and_point())
def test_gradient_matches_finite_differences(sq):
    spec, q = sq
    g = potential_gradient(spec, q)
    fd = fd_gradient(lambda x: potential_value(spec, x), q)
    assert np.linalg.norm(g - fd) <= 1e-6 * max(np.linalg.norm(g), 1.0)


@given(spec_and_point())
def test_hessian_matches_finite_differences(sq):
    spec, q = sq
    h = potential_hessian(spec, q)
    np.testing.assert_array_equal(h, h.T)
    fd = np.column_stack([fd_gradient(lambda x: potential_gradient(spec, x)[i], q)
                          for i in range(q.size)])
    assert np.linalg.norm(h - fd) <= 1e-5 * max(np.linalg.norm(h), 1.0)


@given(st.lists(omega, min_size=1, max_size=4).flatmap(
    lambda w: st.tuples(st.just(w), st.lists(coord, min_size=len(w), max_size=len(w)))))
def test_harmonic_is_even(wq):
    w, q = wq
    spec = harmonic(w)
    q = np.array(q)
    assert potential_value(spec, -q) == potential_value(spec, q)


@given(spec_and_point(), st.floats(0.1, 2.0))
def test_total_energy_and_state_at_energy(sq, extra):
    spec, q = sq
    e = potential_value(spec, q) + extra
    state = state_at_energy(spec, q, e)
    assert total_energy(spec, state) == pytest.approx(e, rel=1e-12)
    assert total_energy(spec, state) == (kinetic_energy(spec, state)
                                         + potential_value(spec, state.q))
