import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lifinv.analysis import RegionSpec, regions_from_reference, score_regions
from lifinv.errors import CompletenessWarning, ConfigError, NoSupportError, SignAmbiguityWarning
from lifinv.inversion import (
    ExtractedPotential,
    OverlapEntry,
    SignedOverlapSet,
    _morse_branch,
    completeness_report,
    exact_overlaps,
    extrapolate_tail,
    invert_potential,
    regenerate_weak_lines,
)
from lifinv.morse import morse_curve, morse_eval
from lifinv.numgrid import PotentialCurve
from lifinv.schrodinger import EffectivePotentialSpec, solve_bound_states
from lifinv.spectrum import SpectrumDataset, apply_threshold, synthesize_spectrum
from lifinv.twin import EXCITED_MORSE
from lifinv.units import HARTREE_TO_INVCM


@pytest.fixture(scope="module")
def gs(extraction):
    return extraction.ground_states


@pytest.fixture(scope="module")
def exact(twin, gs):
    return exact_overlaps(twin.excited, gs, twin.bands, twin.mass, 31)


def _allowed_mask(curve, mass, v):
    e = solve_bound_states(EffectivePotentialSpec(curve, mass, 0), v)[v].energy
    return curve.values <= e


def test_shifted_identity_limit(twin, gs):
    delta = 1234.5
    band = (0, 4)
    entries = {band: tuple(OverlapEntry(i, 1.0 if i == 0 else 0.0, delta, "measured") for i in range(31))}
    ov = SignedOverlapSet((band,), entries)
    ext = invert_potential(ov, {band: gs[band]}, twin.ground, extrapolation=None)
    sl = ext.valid_slice
    np.testing.assert_allclose(ext.curve.invcm[sl], twin.ground.invcm[sl] + delta, atol=1e-6)


def test_round_trip_exact_overlaps(twin, gs, exact):
    ext = invert_potential(exact, gs, twin.ground, extrapolation=None)
    mask = _allowed_mask(twin.excited, twin.mass, 2)
    sl = np.zeros_like(mask)
    sl[ext.valid_slice] = True
    assert np.all(mask <= sl)
    err = ext.curve.invcm[mask] - twin.excited.invcm[mask]
    assert np.sqrt(np.mean(err**2)) < 0.05


def test_density_positive_inside_range(twin, gs, exact):
    ext = invert_potential(exact, gs, twin.ground, density_cutoff=1e-3, extrapolation=None)
    d = ext.density[ext.valid_slice]
    assert np.all(d >= 1e-3 * ext.density.max())


@settings(max_examples=10, deadline=None)
@given(c=st.floats(-5000, 5000))
def test_gauge_shift(twin, gs, exact, c):
    base = invert_potential(exact, gs, twin.ground, extrapolation=None)
    moved = invert_potential(exact.shifted(c), gs, twin.ground, extrapolation=None)
    sl = base.valid_slice
    np.testing.assert_allclose(moved.curve.invcm[sl], base.curve.invcm[sl] + c, rtol=0, atol=1e-8)


@settings(max_examples=10, deadline=None)
@given(k=st.sampled_from([1e-3, 0.37, -1.0, 2.0, 1e3]))
def test_dipole_scale_invariance(twin, gs, exact, k):
    base = invert_potential(exact, gs, twin.ground, extrapolation=None)
    scaled = invert_potential(exact.scaled(k), gs, twin.ground, extrapolation=None)
    sl = base.valid_slice
    np.testing.assert_allclose(scaled.curve.values[sl], base.curve.values[sl], rtol=1e-10, atol=0)


def test_inversion_is_deterministic(extraction):
    a = extraction.invert(extraction.overlaps)
    b = extraction.invert(extraction.overlaps)
    np.testing.assert_array_equal(a.curve.values, b.curve.values)


def test_no_support(twin, gs):
    band = (0, 4)
    ov = SignedOverlapSet((band,), {band: tuple(OverlapEntry(i, 0.0, 0.0, "measured") for i in range(5))})
    with pytest.raises(NoSupportError):
        invert_potential(ov, {band: gs[band]}, twin.ground)


def _truncated(curve, lo_r, hi_r):
    r = curve.r
    lo, hi = int(np.searchsorted(r, lo_r)), int(np.searchsorted(r, hi_r))
    values = curve.values.copy()
    values[:lo] = values[lo]
    values[hi + 1:] = values[hi]
    return ExtractedPotential(PotentialCurve(curve.grid, values), (r[lo], r[hi]), slice(lo, hi + 1),
                              np.ones(r.size), curve.values.copy())


def test_extrapolation_identity_when_range_is_whole_grid(twin):
    p = ExtractedPotential(twin.excited, (twin.grid.r_min, twin.grid.r_max), slice(0, twin.grid.n_points),
                           np.ones(twin.grid.n_points), twin.excited.values.copy())
    out = extrapolate_tail(p, "morse-continuation", EXCITED_MORSE)
    np.testing.assert_array_equal(out.curve.values, twin.excited.values)


def test_linear_slope_definition(twin):
    curve = morse_curve(EXCITED_MORSE, twin.grid)
    out = extrapolate_tail(_truncated(curve, 6.8, 9.0), "linear-slope")
    r = twin.grid.r
    for side, (r0, v0, g, method) in out.junctions.items():
        assert method == "linear-slope"
        tail = r < r0 if side == "inner" else r > r0
        np.testing.assert_allclose(out.curve.values[tail], v0 + g * (r[tail] - r0), rtol=1e-14)


def test_morse_truncate_and_continue(twin):
    curve = morse_curve(EXCITED_MORSE, twin.grid)
    out = extrapolate_tail(_truncated(curve, 6.8, 9.0), "morse-continuation", EXCITED_MORSE)
    r = twin.grid.r
    lo, hi = out.valid_range
    for sel in ((r >= lo - 1.0) & (r < lo), (r > hi) & (r <= hi + 1.0)):
        assert np.max(np.abs(out.curve.invcm[sel] - morse_eval(EXCITED_MORSE, r[sel]))) < 0.5


def test_junction_is_c1(extraction):
    m = extraction.morse
    for side, (r0, v0, g, method) in extraction.extracted.junctions.items():
        assert method == "morse-continuation"
        branch = _morse_branch(r0, v0, g, m.T_e / HARTREE_TO_INVCM, m.beta, side)
        h = 1e-6
        slope = (branch(r0 + h) - branch(r0 - h)) / (2 * h)
        assert slope == pytest.approx(g, rel=1e-6)
        assert branch(r0) == pytest.approx(v0, rel=1e-12)


def test_extrapolation_config_errors(twin):
    p = _truncated(morse_curve(EXCITED_MORSE, twin.grid), 6.8, 9.0)
    with pytest.raises(ConfigError):
        extrapolate_tail(p, "spline")
    with pytest.raises(ConfigError):
        extrapolate_tail(p, "morse-continuation", None)


def test_regenerated_line_bookkeeping(twin, gs, measured, extraction):
    ov = extraction.overlaps
    n_meas = sum(ov.counts("measured").values())
    n_reg = sum(ov.counts("regenerated").values())
    assert n_meas == len(measured) == 31
    assert n_meas + n_reg == 93
    # dropping one line leaves 30 measured and 63 regenerated
    fewer = SpectrumDataset(measured.lines[1:], measured.bands, measured.threshold_fraction)
    ov30 = extraction.overlaps_for(fewer)
    assert sum(ov30.counts("measured").values()) == 30
    assert sum(ov30.counts("regenerated").values()) == 63


def test_measured_signs_from_model_and_magnitudes_from_data(twin, gs):
    full = synthesize_spectrum(twin.ground, morse_curve(EXCITED_MORSE, twin.grid), twin.mass, twin.bands, 31)
    # the highest lower states barely overlap the upper state, so a few signs are flagged as ambiguous
    with pytest.warns(SignAmbiguityWarning):
        ov = regenerate_weak_lines(EXCITED_MORSE, gs, full, twin.mass, 31, scale="none")
    assert ov.flags
    truth = {ln.key: ln.amplitude for ln in full.lines}
    for band in ov.bands:
        for e in ov.entries[band]:
            assert e.provenance == "measured"
            assert e.d == pytest.approx(truth[(band[0], band[1], e.i)], abs=1e-12)


def test_empty_measured_is_pure_model(twin, gs):
    empty = SpectrumDataset((), twin.bands)
    ov = regenerate_weak_lines(EXCITED_MORSE, gs, empty, twin.mass, 31)
    assert any("pure Morse" in f for f in ov.flags)
    assert sum(ov.counts("regenerated").values()) == 93
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CompletenessWarning)
        c = completeness_report(ov)
    assert all(v > 0.999 for v in c.values())


def test_completeness_identity(twin, gs):
    ov = exact_overlaps(twin.ground, gs, twin.bands, twin.mass, 31)
    c = completeness_report(ov)
    for v in c.values():
        assert v == pytest.approx(1.0, abs=1e-8)


def test_completeness_rises_with_regeneration(extraction):
    with pytest.warns(CompletenessWarning):
        before = completeness_report(extraction.overlaps.only("measured"))
    after = completeness_report(extraction.overlaps)
    for band in extraction.overlaps.bands:
        assert before[band] < after[band]
        assert after[band] >= 0.999


def test_regeneration_does_not_hurt(twin, extraction):
    regions = regions_from_reference(twin.excited, twin.mass)
    aug = score_regions(extraction.extracted.curve, twin.excited, regions)
    mo = score_regions(extraction.measured_only().curve, twin.excited, regions)
    for r in regions:
        assert aug[r.label] <= mo[r.label]


def test_duplicate_entries_rejected():
    band = (0, 0)
    with pytest.raises(ValueError):
        SignedOverlapSet((band,), {band: (OverlapEntry(1, 0.1, 1.0, "measured"), OverlapEntry(1, 0.2, 1.0, "measured"))})


def test_unknown_scale_mode(twin, gs, measured):
    with pytest.raises(ConfigError):
        regenerate_weak_lines(EXCITED_MORSE, gs, measured, twin.mass, 31, scale="max")


@pytest.mark.parametrize("scale", ["least-squares", "none"])
def test_alternative_scale_modes_run(extraction, measured, scale):
    ov = regenerate_weak_lines(extraction.morse, extraction.ground_states, measured, extraction.mass, 31,
                               scale=scale, upper_states=extraction.upper_states)
    assert ov.scales and all(v > 0 for v in ov.scales.values())
