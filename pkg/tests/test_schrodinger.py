import time
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lifinv.errors import BoxContaminationWarning, TooFewBoundStatesError
from lifinv.morse import MorseParams, morse_curve
from lifinv.numgrid import PotentialCurve, RadialGrid, integrate
from lifinv.schrodinger import (
    EffectivePotentialSpec,
    central_difference_coefficients,
    count_nodes,
    expectation_energy,
    read_states,
    solve_bound_states,
    write_states,
)
from lifinv.units import HARTREE_TO_INVCM, amu_to_me
from lifinv.twin import GROUND_MORSE

MASS = amu_to_me(6.48)


def harmonic(grid, k, r0=8.0):
    return PotentialCurve(grid, 0.5 * k * (grid.r - r0) ** 2)


def test_stencil_coefficients_second_order():
    assert central_difference_coefficients(2) == pytest.approx((-2.0, 1.0))


def test_stencil_exact_for_polynomials():
    c = central_difference_coefficients(10)
    x = np.arange(-5, 6, dtype=float)
    weights = np.concatenate([c[:0:-1], c])
    for p in range(0, 11):
        expected = 2.0 if p == 2 else 0.0
        assert weights @ x**p == pytest.approx(expected, abs=1e-9)


def test_morse_levels_match_analytic(grid):
    t0 = time.perf_counter()
    states = solve_bound_states(EffectivePotentialSpec(morse_curve(GROUND_MORSE, grid), MASS), 20)
    assert time.perf_counter() - t0 < 5
    analytic = GROUND_MORSE.levels(MASS, np.arange(21))
    got = np.array([s.energy_invcm for s in states])
    assert np.max(np.abs(got - analytic)) < 1e-4


def test_harmonic_levels():
    g = RadialGrid(4.0, 12.0, 2001)
    k = 0.05
    omega = np.sqrt(k / MASS)
    states = solve_bound_states(EffectivePotentialSpec(harmonic(g, k), MASS), 10)
    expected = omega * (np.arange(11) + 0.5)
    np.testing.assert_allclose([s.energy for s in states], expected, rtol=1e-6)


def test_second_order_stencil_is_worse(grid):
    spec = EffectivePotentialSpec(morse_curve(GROUND_MORSE, grid), MASS)
    analytic = GROUND_MORSE.levels(MASS, np.arange(11))
    e2 = [s.energy_invcm for s in solve_bound_states(spec, 10, fd_order=2)]
    e10 = [s.energy_invcm for s in solve_bound_states(spec, 10, fd_order=10)]
    assert np.max(np.abs(np.array(e10) - analytic)) < 1e-2 * np.max(np.abs(np.array(e2) - analytic))


def test_node_count_and_orthonormality(grid):
    states = solve_bound_states(EffectivePotentialSpec(morse_curve(GROUND_MORSE, grid), MASS), 15)
    for s in states:
        assert count_nodes(s) == s.v
    S = np.array([[integrate(grid, a.wavefunction * b.wavefunction) for b in states] for a in states])
    np.testing.assert_allclose(S, np.eye(len(states)), atol=1e-10)


def test_sign_convention_inner_lobe_positive(grid):
    for s in solve_bound_states(EffectivePotentialSpec(morse_curve(GROUND_MORSE, grid), MASS), 8):
        psi = s.wavefunction
        first = int(np.argmax(np.abs(psi) > 0.01 * np.abs(psi).max()))
        assert psi[first] > 0


def test_variational_consistency(grid):
    spec = EffectivePotentialSpec(morse_curve(GROUND_MORSE, grid), MASS, J=5)
    for s in solve_bound_states(spec, 5):
        assert expectation_energy(spec, s) == pytest.approx(s.energy, abs=1e-9)


def test_double_well_ordering_and_nodes():
    g = RadialGrid(4.0, 12.0, 1601)
    x = g.r - 8.0
    curve = PotentialCurve(g, 0.002 * (x**2 - 1.0) ** 2)
    states = solve_bound_states(EffectivePotentialSpec(curve, MASS), 5)
    e = [s.energy for s in states]
    assert all(b > a for a, b in zip(e, e[1:]))
    assert [count_nodes(s) for s in states] == list(range(6))


def test_grid_convergence(grid):
    coarse = RadialGrid(grid.r_min, grid.r_max, 801)
    p = MorseParams(20000.0, 4000.0, 0.34, 7.6)
    analytic = p.levels(MASS, np.arange(6))
    err_c = max(abs(s.energy_invcm - a) for s, a in zip(
        solve_bound_states(EffectivePotentialSpec(morse_curve(p, coarse), MASS), 5), analytic))
    err_f = max(abs(s.energy_invcm - a) for s, a in zip(
        solve_bound_states(EffectivePotentialSpec(morse_curve(p, grid), MASS), 5), analytic))
    assert err_f < err_c


def test_centrifugal_term_raises_levels(grid):
    curve = morse_curve(GROUND_MORSE, grid)
    e0 = solve_bound_states(EffectivePotentialSpec(curve, MASS, 0), 0)[0].energy
    e10 = solve_bound_states(EffectivePotentialSpec(curve, MASS, 10), 0)[0].energy
    B = 1.0 / (2 * MASS * GROUND_MORSE.R_e**2)
    assert e10 - e0 == pytest.approx(110 * B, rel=0.02)


@settings(max_examples=15, deadline=None)
@given(J=st.integers(0, 30))
def test_effective_potential_monotone_in_J(J):
    g = RadialGrid(4.0, 20.0, 401)
    curve = morse_curve(GROUND_MORSE, g)
    lo = EffectivePotentialSpec(curve, MASS, J).values()
    hi = EffectivePotentialSpec(curve, MASS, J + 1).values()
    assert np.all(hi > lo)


def test_too_few_bound_states(grid):
    spec = EffectivePotentialSpec(morse_curve(GROUND_MORSE, grid), MASS)
    n = GROUND_MORSE.n_bound(MASS)
    with pytest.raises(TooFewBoundStatesError) as info:
        solve_bound_states(spec, n + 5)
    assert info.value.found <= n + 1
    assert info.value.requested == n + 6


def test_box_contamination_warning():
    g = RadialGrid(7.0, 9.0, 401)
    with pytest.warns(BoxContaminationWarning):
        states = solve_bound_states(EffectivePotentialSpec(harmonic(g, 400.0 / MASS), MASS), 3)
    assert states[3].box_contaminated


def test_clean_solve_emits_no_warning(grid):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        solve_bound_states(EffectivePotentialSpec(morse_curve(GROUND_MORSE, grid), MASS), 5)


def test_determinism(grid):
    spec = EffectivePotentialSpec(morse_curve(GROUND_MORSE, grid), MASS, 4)
    a = solve_bound_states(spec, 6)
    b = solve_bound_states(spec, 6)
    for x, y in zip(a, b):
        assert x.energy == y.energy
        np.testing.assert_array_equal(x.wavefunction, y.wavefunction)


def test_state_dump_round_trip(tmp_path, grid):
    states = solve_bound_states(EffectivePotentialSpec(morse_curve(GROUND_MORSE, grid), MASS, 3), 2)
    write_states(tmp_path / "s.txt", states)
    back = read_states(tmp_path / "s.txt", grid)
    assert [s.v for s in back] == [0, 1, 2] and all(s.J == 3 for s in back)
    for a, b in zip(states, back):
        assert b.energy * HARTREE_TO_INVCM == pytest.approx(a.energy_invcm, abs=1e-9)
        np.testing.assert_allclose(b.wavefunction, a.wavefunction, rtol=1e-11, atol=1e-15)


def test_negative_vmax_rejected(grid):
    with pytest.raises(ValueError):
        solve_bound_states(EffectivePotentialSpec(morse_curve(GROUND_MORSE, grid), MASS), -1)
