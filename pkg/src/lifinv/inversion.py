"""Weak-line regeneration, sign assignment, and pointwise reconstruction of the excited potential.

For every band s the excited eigenstate is expanded over ground eigenstates,
phi_s(R) = sum_i d_is chi_i(R). With transition energies omega_is = E_s - E_i
the excited potential follows pointwise as

    V_ex(R) = V_g(R) + sum_s A_s(R) B_s(R) / sum_s B_s(R)^2,
    A_s = sum_i d_is omega_is chi_i(R),   B_s = sum_i d_is chi_i(R).

Measured lines contribute only |d|; signs come from the Morse model, and
lines lost below the detection threshold are filled in from the model.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray

from lifinv.errors import (
    CompletenessWarning,
    ConfigError,
    NoSupportError,
    NumericalFailureError,
    SignAmbiguityWarning,
)
from lifinv.morse import MorseParams, morse_curve
from lifinv.numgrid import PotentialCurve
from lifinv.schrodinger import EffectivePotentialSpec, RovibState, solve_bound_states
from lifinv.spectrum import SpectrumDataset, overlap_matrix
from lifinv.units import HARTREE_TO_INVCM

COMPLETENESS_FLOOR = 0.999
DEFAULT_DENSITY_CUTOFF = 1e-3
DEFAULT_N_LOWER = 31
SIGN_AMBIGUITY = 1e-10
EXTRAPOLATION_METHODS = ("morse-continuation", "linear-slope")
SCALE_MODES = ("completeness", "least-squares", "none")


@dataclass(frozen=True)
class OverlapEntry:
    i: int
    d: float
    omega: float  # cm-1
    provenance: str


@dataclass(frozen=True)
class SignedOverlapSet:
    bands: tuple[tuple[int, int], ...]
    entries: dict = field(repr=False)  # band -> tuple[OverlapEntry, ...]
    scales: dict = field(default_factory=dict)  # band -> factor applied to measured intensities
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        for band, rows in self.entries.items():
            idx = [e.i for e in rows]
            if len(idx) != len(set(idx)):
                raise ValueError(f"duplicate lower-state index in band {band}")

    def completeness(self) -> dict:
        return completeness_report(self)

    def counts(self, provenance: str | None = None) -> dict:
        return {
            b: sum(1 for e in self.entries.get(b, ()) if provenance is None or e.provenance == provenance)
            for b in self.bands
        }

    def arrays(self, band) -> tuple[NDArray[np.int_], NDArray[np.float64], NDArray[np.float64]]:
        rows = self.entries.get(band, ())
        return (
            np.array([e.i for e in rows], dtype=int),
            np.array([e.d for e in rows], dtype=float),
            np.array([e.omega for e in rows], dtype=float),
        )

    def only(self, provenance: str) -> SignedOverlapSet:
        entries = {b: tuple(e for e in rows if e.provenance == provenance) for b, rows in self.entries.items()}
        return replace(self, entries=entries)

    def scaled(self, factor: float) -> SignedOverlapSet:
        entries = {b: tuple(replace(e, d=e.d * factor) for e in rows) for b, rows in self.entries.items()}
        return replace(self, entries=entries)

    def shifted(self, delta_invcm: float) -> SignedOverlapSet:
        entries = {b: tuple(replace(e, omega=e.omega + delta_invcm) for e in rows) for b, rows in self.entries.items()}
        return replace(self, entries=entries)


def completeness_report(overlaps: SignedOverlapSet, floor: float = COMPLETENESS_FLOOR) -> dict:
    """Sum of d_is**2 over lower states, per band; warns for bands under ``floor``."""
    out = {}
    for band in overlaps.bands:
        _, d, _ = overlaps.arrays(band)
        out[band] = float(np.sum(d * d))
    low = [b for b, c in out.items() if c < floor]
    if low:
        warnings.warn(
            "completeness below {:.3f} for bands {}".format(floor, ", ".join(f"{b}={out[b]:.5f}" for b in low)),
            CompletenessWarning,
            stacklevel=2,
        )
    return out


def model_upper_states(p: MorseParams, bands, mass: float, grid) -> dict:
    curve = morse_curve(p, grid)
    out = {}
    for v, J in bands:
        out[(v, J)] = solve_bound_states(EffectivePotentialSpec(curve, mass, J), v)[v]
    return out


def regenerate_weak_lines(
    p: MorseParams,
    ground_states: dict,
    measured: SpectrumDataset,
    mass: float,
    n_lower: int = DEFAULT_N_LOWER,
    *,
    scale: str = "completeness",
    upper_states: dict | None = None,
) -> SignedOverlapSet:
    """Merge measured magnitudes with Morse-model signs, and fill absent lines from the model.

    Measured intensities carry an arbitrary per-band scale; ``scale`` picks how
    they are put on the model's absolute scale before merging:
    ``"completeness"`` makes each band's total sum to one, ``"least-squares"``
    matches measured to model amplitudes over the measured lines, ``"none``"
    uses them as given.
    """
    if scale not in SCALE_MODES:
        raise ConfigError(f"unknown scale mode {scale!r}; choose from {SCALE_MODES}")
    grid = next(iter(ground_states.values()))[0].grid
    if upper_states is None:
        upper_states = model_upper_states(p, measured.bands, mass, grid)
    entries, scales, flags = {}, {}, []
    for band in measured.bands:
        lower = ground_states[band][:n_lower]
        if len(lower) < n_lower:
            raise ValueError(f"band {band}: {len(lower)} ground states supplied, {n_lower} needed")
        upper = upper_states[band]
        f = overlap_matrix(lower, [upper])[:, 0]
        e_upper = upper.energy_invcm
        meas = {ln.v_lower: ln for ln in measured.band_lines(band) if ln.provenance == "measured"}
        meas = {i: ln for i, ln in meas.items() if i < n_lower}
        m_idx = np.array(sorted(meas), dtype=int)
        m_int = np.array([meas[i].intensity for i in m_idx], dtype=float)
        r_idx = np.array([i for i in range(n_lower) if i not in meas], dtype=int)

        c = 1.0
        if m_idx.size and scale == "completeness":
            rest = float(np.sum(f[r_idx] ** 2))
            total = float(np.sum(m_int))
            c = (1.0 - rest) / total if total > 0 and rest < 1 else 1.0
        elif m_idx.size and scale == "least-squares":
            a = np.sqrt(m_int)
            denom = float(a @ a)
            c = (float(a @ np.abs(f[m_idx])) / denom) ** 2 if denom > 0 else 1.0
        scales[band] = c

        rows = []
        for i in range(n_lower):
            if i in meas:
                if abs(f[i]) < SIGN_AMBIGUITY:
                    msg = f"band {band} line v''={i}: model overlap {f[i]:.1e} too small to fix the sign"
                    warnings.warn(msg, SignAmbiguityWarning, stacklevel=2)
                    flags.append(msg)
                sign = 1.0 if f[i] >= 0 else -1.0
                rows.append(OverlapEntry(i, sign * math.sqrt(c * meas[i].intensity), meas[i].omega, "measured"))
            else:
                rows.append(OverlapEntry(i, float(f[i]), e_upper - lower[i].energy_invcm, "regenerated"))
        entries[band] = tuple(rows)
    if not any(ln.provenance == "measured" for ln in measured.lines):
        flags.append("no measured lines: overlaps are the pure Morse prediction")
    return SignedOverlapSet(tuple(measured.bands), entries, scales, tuple(flags))


def exact_overlaps(
    excited: PotentialCurve, ground_states: dict, bands, mass: float, n_lower: int
) -> SignedOverlapSet:
    """Complete signed overlaps from a known excited curve (forward-model oracle)."""
    entries = {}
    for band in bands:
        v, J = band
        upper = solve_bound_states(EffectivePotentialSpec(excited, mass, J), v)[v]
        lower = ground_states[band][:n_lower]
        f = overlap_matrix(lower, [upper])[:, 0]
        entries[band] = tuple(
            OverlapEntry(i, float(f[i]), upper.energy_invcm - lower[i].energy_invcm, "measured")
            for i in range(len(lower))
        )
    return SignedOverlapSet(tuple(tuple(b) for b in bands), entries)


@dataclass(frozen=True, eq=False)
class ExtractedPotential:
    curve: PotentialCurve
    valid_range: tuple[float, float]
    valid_slice: slice
    density: NDArray[np.float64] = field(repr=False)
    raw: NDArray[np.float64] = field(repr=False)  # pointwise reconstruction (hartree), NaN where density is 0
    extrapolation_spec: str = "none"
    density_cutoff: float = DEFAULT_DENSITY_CUTOFF
    completeness: dict = field(default_factory=dict)
    junctions: dict = field(default_factory=dict)  # side -> (R, V hartree, slope hartree/bohr, method)

    @property
    def grid(self):
        return self.curve.grid


def invert_potential(
    overlaps: SignedOverlapSet,
    ground_states: dict,
    V_g: PotentialCurve,
    density_cutoff: float = DEFAULT_DENSITY_CUTOFF,
    *,
    extrapolation: str | None = "morse-continuation",
    morse: MorseParams | None = None,
) -> ExtractedPotential:
    """Pointwise reconstruction of the excited potential, with tails continued outside the supported range.

    The supported range is the contiguous block around the density maximum where
    the density stays at or above ``density_cutoff`` times its maximum.
    """
    grid = V_g.grid
    n = grid.n_points
    num = np.zeros(n)
    den = np.zeros(n)
    # Fixed band order keeps the reduction bit-reproducible.
    for band in overlaps.bands:
        idx, d, omega = overlaps.arrays(band)
        if idx.size == 0:
            continue
        lower = ground_states[band]
        chi = np.array([lower[i].wavefunction for i in idx])
        if chi.shape[1] != n:
            raise ValueError("ground states and V_g live on different grids")
        b = d @ chi
        a = (d * omega / HARTREE_TO_INVCM) @ chi
        num += a * b
        den += b * b
    peak = float(den.max())
    if not peak > 0:
        raise NoSupportError("reconstructed density vanishes everywhere")
    above = den >= density_cutoff * peak
    k = int(np.argmax(den))
    lo = k
    while lo > 0 and above[lo - 1]:
        lo -= 1
    hi = k
    while hi < n - 1 and above[hi + 1]:
        hi += 1
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = np.where(den > 0, num / den, np.nan) + V_g.values
    inside = raw[lo : hi + 1]
    if not np.all(np.isfinite(inside)):
        bad = lo + int(np.flatnonzero(~np.isfinite(inside))[0])
        raise NumericalFailureError(float(grid.r[bad]))
    values = raw.copy()
    values[:lo] = values[lo]
    values[hi + 1 :] = values[hi]
    partial = ExtractedPotential(
        curve=PotentialCurve(grid, values),
        valid_range=(float(grid.r[lo]), float(grid.r[hi])),
        valid_slice=slice(lo, hi + 1),
        density=den,
        raw=raw,
        extrapolation_spec="none",
        density_cutoff=density_cutoff,
        completeness={b: float(np.sum(overlaps.arrays(b)[1] ** 2)) for b in overlaps.bands},
    )
    if extrapolation is None:
        return partial
    return extrapolate_tail(partial, extrapolation, morse)


EDGE_FIT_POINTS = 9
EDGE_FIT_DEGREE = 3
MAX_TRIM_FRACTION = 0.25


def _edge_slope(values, k: int, h: float, side: str, lo: int, hi: int) -> float:
    """Slope at node k from a cubic least-squares fit to points on the supported side of k."""
    m = min(EDGE_FIT_POINTS, hi - lo + 1)
    idx = np.arange(k, k + m) if side == "inner" else np.arange(k - m + 1, k + 1)
    x = (idx - k) * h
    if m < 3:
        return float((values[idx[-1]] - values[idx[0]]) / (x[-1] - x[0]))
    coef = np.polyfit(x, values[idx], min(EDGE_FIT_DEGREE, m - 1))
    return float(coef[-2])


def _morse_branch(r0: float, v0: float, g0: float, T: float, beta: float, side: str):
    """Morse form through (r0, v0) with slope g0, fixed asymptote T and range beta; None if infeasible."""
    if g0 == 0:
        return None
    q = -2.0 * beta * (v0 - T) / g0
    if q == 1:
        return None
    u = (q - 2.0) / (q - 1.0)
    if not u > 0 or (side == "inner" and not u > 1) or (side == "outer" and not u < 1):
        return None
    D = (v0 - T) / (u * u - 2.0 * u)
    if not D > 0:
        return None
    r_e = r0 + math.log(u) / beta
    return lambda r: T + D * (np.exp(-2 * beta * (r - r_e)) - 2 * np.exp(-beta * (r - r_e)))


def extrapolate_tail(
    partial: ExtractedPotential, method: str = "morse-continuation", morse: MorseParams | None = None
) -> ExtractedPotential:
    """Continue the curve beyond both ends of the supported range with a C1 junction.

    ``morse-continuation`` joins a Morse branch with the fitted beta and
    asymptote T_e, matching value and slope at each edge (the inner edge lands on
    the repulsive side); where no such branch exists it falls back to
    ``linear-slope``, which continues with the edge gradient.
    """
    if method not in EXTRAPOLATION_METHODS:
        raise ConfigError(f"unknown extrapolation method {method!r}; choose from {EXTRAPOLATION_METHODS}")
    if method == "morse-continuation" and morse is None:
        raise ConfigError("morse-continuation needs fitted Morse parameters")
    grid = partial.grid
    r, h = grid.r, grid.spacing
    values = partial.curve.values.copy()
    lo, hi = partial.valid_slice.start, partial.valid_slice.stop - 1
    max_trim = int(MAX_TRIM_FRACTION * (hi - lo))
    notes, junctions = [], {}
    new_lo, new_hi = lo, hi
    for side in ("inner", "outer"):
        edge = lo if side == "inner" else hi
        at_grid_edge = edge == 0 if side == "inner" else edge == grid.n_points - 1
        if at_grid_edge:
            notes.append(f"{side}: none (range reaches grid edge)")
            continue
        step = 1 if side == "inner" else -1
        # Walk inward from the density edge to the first node where a physical continuation
        # exists: the wall must rise going outward from the supported range.
        chosen = None
        for trim in range(max_trim + 1):
            k = edge + step * trim
            g = _edge_slope(values, k, h, side, lo, hi)
            if (side == "inner" and g >= 0) or (side == "outer" and g <= 0):
                continue
            branch = None
            if method == "morse-continuation":
                branch = _morse_branch(r[k], values[k], g, morse.T_e / HARTREE_TO_INVCM, morse.beta, side)
                if branch is None:
                    continue
            chosen = (k, g, branch)
            break
        if chosen is None:
            k = edge
            g = _edge_slope(values, k, h, side, lo, hi)
            chosen = (k, g, None)
            fallback = " (no physical junction found)"
        else:
            fallback = ""
        k, g, branch = chosen
        tail = slice(0, k) if side == "inner" else slice(k + 1, grid.n_points)
        v0, r0 = values[k], r[k]
        if branch is not None:
            values[tail] = branch(r[tail])
            used = "morse-continuation"
            notes.append(f"{side}: morse-continuation beta={morse.beta:.6f} T_e={morse.T_e:.4f} at R={r0:.4f}")
        else:
            values[tail] = v0 + g * (r[tail] - r0)
            used = "linear-slope"
            notes.append(f"{side}: linear-slope g={g * HARTREE_TO_INVCM:.4f} cm-1/bohr at R={r0:.4f}{fallback}")
        junctions[side] = (float(r0), float(v0), float(g), used)
        if side == "inner":
            new_lo = k
        else:
            new_hi = k
    return replace(
        partial,
        curve=PotentialCurve(grid, values),
        valid_range=(float(r[new_lo]), float(r[new_hi])),
        valid_slice=slice(new_lo, new_hi + 1),
        junctions=junctions,
        extrapolation_spec="; ".join(notes),
    )
