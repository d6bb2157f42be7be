import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lifinv.errors import BoundaryHitError, FitInfeasibleError, InsufficientDataError
from lifinv.morse import (
    MorseParams,
    band_origins,
    fit_morse_energies,
    fit_morse_Re,
    fit_summary,
    golden_section,
    ground_states_for,
    intensity_misfit,
    morse_curve,
    morse_eval,
    morse_grid_levels,
)
from lifinv.schrodinger import EffectivePotentialSpec, solve_bound_states
from lifinv.spectrum import apply_threshold, synthesize_spectrum
from lifinv.twin import EXCITED_MORSE, GROUND_MORSE

params = st.builds(
    MorseParams,
    T_e=st.floats(1000, 30000),
    D_e=st.floats(500, 10000),
    beta=st.floats(0.2, 1.5),
    R_e=st.floats(3.0, 10.0),
)


@settings(max_examples=50)
@given(p=params)
def test_morse_eval_oracles(p):
    assert morse_eval(p, p.R_e) == pytest.approx(p.T_e - p.D_e, rel=1e-12)
    assert morse_eval(p, p.R_e + math.log(2) / p.beta) == pytest.approx(p.T_e - 0.75 * p.D_e, rel=1e-12)
    assert morse_eval(p, p.R_e + 60 / p.beta) == pytest.approx(p.T_e, rel=1e-12)


def test_morse_eval_vectorized():
    r = np.array([6.0, 7.0, 8.0])
    v = morse_eval(EXCITED_MORSE, r)
    assert v.shape == (3,)
    assert v[1] == morse_eval(EXCITED_MORSE, 7.0)


def test_params_validation():
    with pytest.raises(ValueError):
        MorseParams(0.0, -1.0, 0.3, 7.0)


@settings(max_examples=50)
@given(p=params, mass=st.floats(1000, 50000))
def test_analytic_fit_recovers_generator(p, mass):
    if p.n_bound(mass) < 3:
        return
    e = p.levels(mass, [0, 1, 2])
    fit = fit_morse_energies(list(zip([0, 1, 2], e)), mass)
    assert fit.T_e == pytest.approx(p.T_e, rel=1e-6)
    assert fit.D_e == pytest.approx(p.D_e, rel=1e-6)
    assert fit.beta == pytest.approx(p.beta, rel=1e-6)


def test_harmonic_levels_infeasible(twin):
    with pytest.raises(FitInfeasibleError):
        fit_morse_energies([(0, 100.0), (1, 300.0), (2, 500.0)], twin.mass)


def test_inverted_levels_infeasible(twin):
    with pytest.raises(FitInfeasibleError):
        fit_morse_energies([(0, 100.0), (1, 300.0), (2, 520.0)], twin.mass)


def test_too_few_levels(twin):
    with pytest.raises(InsufficientDataError):
        fit_morse_energies([(0, 100.0), (1, 300.0)], twin.mass)
    with pytest.raises(InsufficientDataError):
        fit_morse_energies([(0, 100.0), (0, 101.0), (1, 300.0)], twin.mass)


def test_grid_levels_match_analytic(twin, grid):
    analytic = EXCITED_MORSE.levels(twin.mass, np.arange(11))
    got = morse_grid_levels(EXCITED_MORSE, twin.mass, grid, [(v, 0) for v in range(11)])
    assert np.max(np.abs(got - analytic)) < 1e-4


def test_grid_fit_reproduces_rotating_levels(twin, grid):
    rows = [(0, 4), (1, 5), (2, 8)]
    targets = morse_grid_levels(EXCITED_MORSE, twin.mass, grid, rows)
    fit = fit_morse_energies([(v, J, e) for (v, J), e in zip(rows, targets)], twin.mass, grid=grid, r_e=EXCITED_MORSE.R_e)
    assert max(abs(r) for r in fit.residuals) < 1e-5
    assert fit.D_e == pytest.approx(EXCITED_MORSE.D_e, rel=1e-5)
    assert fit.beta == pytest.approx(EXCITED_MORSE.beta, rel=1e-5)


def test_non_morse_truth_deviates_at_v10(twin, grid):
    targets = []
    for v, J in [(0, 0), (1, 0), (2, 0)]:
        targets.append((v, J, solve_bound_states(EffectivePotentialSpec(twin.excited, twin.mass, J), v)[v].energy_invcm))
    fit = fit_morse_energies(targets, twin.mass, grid=grid, r_e=7.58)
    assert max(abs(r) for r in fit.residuals) < 0.01
    truth10 = solve_bound_states(EffectivePotentialSpec(twin.excited, twin.mass, 0), 10)[10].energy_invcm
    model10 = fit.params(7.58).levels(twin.mass, 10)
    assert abs(model10 - truth10) > 0.1
    summary = fit_summary(fit, None, twin.mass, grid)
    assert "10 " in summary


def _morse_spectrum(twin, p, n_lower=31):
    full = synthesize_spectrum(twin.ground, morse_curve(p, twin.grid), twin.mass, twin.bands, n_lower)
    return apply_threshold(full, 0.025)


def test_Re_recovery_on_morse_truth(twin):
    spec = _morse_spectrum(twin, EXCITED_MORSE)
    fit = fit_morse_Re((EXCITED_MORSE.T_e, EXCITED_MORSE.D_e, EXCITED_MORSE.beta), spec, twin.ground, twin.mass,
                       (6.6, 8.6, 41))
    assert fit.R_e == pytest.approx(EXCITED_MORSE.R_e, abs=1e-3)
    assert fit.misfit < 1e-6


def test_mirror_moves_minimizer_across_ground_Re(twin):
    r_g = GROUND_MORSE.R_e
    found = []
    for shift in (+0.4, -0.4):
        p = MorseParams(EXCITED_MORSE.T_e, EXCITED_MORSE.D_e, EXCITED_MORSE.beta, r_g + shift)
        spec = _morse_spectrum(twin, p)
        fit = fit_morse_Re((p.T_e, p.D_e, p.beta), spec, twin.ground, twin.mass, (r_g - 1.0, r_g + 1.0, 41))
        found.append(fit.R_e)
    assert found[0] > r_g > found[1]


def test_Re_on_twin_matches_fine_scan(twin, measured, extraction):
    fit = extraction.energy_fit
    gs = extraction.ground_states
    best = extraction.re_fit.R_e
    scan = np.linspace(best - 0.1, best + 0.1, 201)
    m = [intensity_misfit(fit.params(r), measured, gs, twin.mass) for r in scan]
    assert best == pytest.approx(scan[int(np.argmin(m))], abs=0.05)
    truth_min = twin.excited.minimum()[0]
    assert best == pytest.approx(truth_min, abs=0.05)


@pytest.mark.parametrize("factor", [0.01, 3.0, 1e4])
def test_misfit_scale_invariant(twin, measured, extraction, factor):
    gs = extraction.ground_states
    a = intensity_misfit(extraction.morse, measured, gs, twin.mass)
    b = intensity_misfit(extraction.morse, measured.with_intensities(measured.intensities * factor), gs, twin.mass)
    assert b == pytest.approx(a, rel=1e-12, abs=1e-15)


def test_boundary_hit(twin, measured, extraction):
    with pytest.raises(BoundaryHitError, match="widen"):
        fit_morse_Re(extraction.energy_fit, measured, twin.ground, twin.mass, (7.1, 7.45, 8),
                     ground_states=extraction.ground_states)


def test_band_origins_use_lower_energies(measured, extraction):
    origins = band_origins(measured, extraction.ground_states)
    assert [o[:2] for o in origins] == [(0, 4), (1, 5), (2, 8)]
    e = [o[2] for o in origins]
    assert e[0] < e[1] < e[2]


def test_ground_states_cover_lines(twin, measured):
    gs = ground_states_for(measured, twin.ground, twin.mass, 5)
    top = max(ln.v_lower for ln in measured.lines)
    assert all(len(v) >= top + 1 for v in gs.values())
    assert gs[(0, 4)][0].J == 4


def test_golden_section_quadratic():
    x, f = golden_section(lambda t: (t - 0.3) ** 2 + 1.0, -1.0, 2.0, 1e-8)
    assert x == pytest.approx(0.3, abs=1e-7)
    assert f == pytest.approx(1.0)


def test_fit_summary_contents(twin, extraction):
    s = fit_summary(extraction.energy_fit, extraction.re_fit, twin.mass, twin.grid)
    for key in ("T_e_cm-1", "D_e_cm-1", "beta_bohr-1", "R_e_bohr", "# R_e_bohr misfit", "residual_cm-1"):
        assert key in s
