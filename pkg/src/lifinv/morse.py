"""Morse model of the excited state: evaluation, level fit, and equilibrium-distance fit.

V_M(R) = T_e + D_e (exp(-2 beta (R - R_e)) - 2 exp(-beta (R - R_e)))

with T_e the asymptote, so the well bottom sits at T_e - D_e. Levels follow
E_v = T_e - D_e + w_e (v + 1/2) - w_e x_e (v + 1/2)^2 with
w_e = beta sqrt(2 D_e / mu) and w_e x_e = beta^2 / (2 mu) (atomic units).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from lifinv.errors import BoundaryHitError, BoxContaminationWarning, FitInfeasibleError, InsufficientDataError
from lifinv.numgrid import PotentialCurve, RadialGrid
from lifinv.schrodinger import EffectivePotentialSpec, RovibState, solve_bound_states
from lifinv.spectrum import SpectrumDataset, overlap_matrix
from lifinv.units import HARTREE_TO_INVCM

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class MorseParams:
    T_e: float  # cm-1, asymptote
    D_e: float  # cm-1
    beta: float  # 1/bohr
    R_e: float  # bohr

    def __post_init__(self):
        if not (self.D_e > 0 and self.beta > 0 and self.R_e > 0):
            raise ValueError(f"Morse parameters need D_e, beta, R_e > 0: {self}")

    def omega_e(self, mass: float) -> float:
        """Harmonic frequency in cm-1 for reduced mass ``mass`` (electron masses)."""
        d = self.D_e / HARTREE_TO_INVCM
        return self.beta * math.sqrt(2.0 * d / mass) * HARTREE_TO_INVCM

    def omega_e_x_e(self, mass: float) -> float:
        return self.beta**2 / (2.0 * mass) * HARTREE_TO_INVCM

    def levels(self, mass: float, v) -> NDArray[np.float64]:
        """Analytic J=0 level energies in cm-1."""
        x = np.asarray(v, dtype=float) + 0.5
        return self.T_e - self.D_e + self.omega_e(mass) * x - self.omega_e_x_e(mass) * x**2

    def n_bound(self, mass: float) -> int:
        return int(math.floor(self.omega_e(mass) / (2.0 * self.omega_e_x_e(mass)) - 0.5)) + 1


def morse_eval(p: MorseParams, r):
    """Morse potential in cm-1 at ``r`` bohr."""
    e = np.exp(-p.beta * (np.asarray(r, dtype=float) - p.R_e))
    out = p.T_e + p.D_e * (e * e - 2.0 * e)
    return float(out) if np.ndim(out) == 0 else out


def morse_curve(p: MorseParams, grid: RadialGrid) -> PotentialCurve:
    return PotentialCurve.from_invcm(grid, morse_eval(p, grid.r))


@dataclass(frozen=True)
class MorseEnergyFit:
    """Result of fitting (T_e, D_e, beta) to upper-state level energies."""

    T_e: float
    D_e: float
    beta: float
    levels: tuple[tuple[int, int, float], ...]  # (v, J, target cm-1)
    residuals: tuple[float, ...]  # model - target, cm-1
    iterations: int
    r_e: float | None = None

    def params(self, R_e: float) -> MorseParams:
        return MorseParams(self.T_e, self.D_e, self.beta, R_e)


def _solve_level_system(v, energies, mass):
    x = np.asarray(v, dtype=float) + 0.5
    A = np.column_stack([np.ones_like(x), x, -(x**2)])
    if len(x) == 3:
        offset, we, wexe = np.linalg.solve(A, energies)
    else:
        (offset, we, wexe), *_ = np.linalg.lstsq(A, energies, rcond=None)
    if not wexe > 1e-12 * max(1.0, abs(we)):
        raise FitInfeasibleError(
            f"inferred anharmonicity w_e x_e = {wexe:.6g} cm-1 is not positive; levels are not Morse-like"
        )
    if not we > 0:
        raise FitInfeasibleError(f"inferred w_e = {we:.6g} cm-1 is not positive")
    d_e = we * we / (4.0 * wexe)
    beta = math.sqrt(2.0 * mass * wexe / HARTREE_TO_INVCM)
    return offset + d_e, d_e, beta


def fit_morse_energies(
    levels,
    mass: float,
    *,
    grid: RadialGrid | None = None,
    r_e: float | None = None,
    tol: float = 1e-5,
    max_iter: int = 30,
) -> MorseEnergyFit:
    """Fit T_e, D_e and beta to upper-state levels ``[(v, energy_cm)]`` or ``[(v, J, energy_cm)]``.

    Without a grid the analytic level formula is inverted directly. With a
    ``grid`` and trial ``r_e`` the targets are corrected iteratively for the
    difference between grid eigenvalues (including the centrifugal term at each
    level's J) and the analytic J=0 formula, until the re-solved levels match the
    inputs within ``tol`` cm-1.
    """
    rows = [(int(t[0]), 0, float(t[1])) if len(t) == 2 else (int(t[0]), int(t[1]), float(t[2])) for t in levels]
    if len(rows) < 3:
        raise InsufficientDataError(f"need at least three levels to fit a Morse model, got {len(rows)}")
    vs = np.array([r[0] for r in rows])
    if len(set(vs.tolist())) < 3:
        raise InsufficientDataError("need at least three distinct vibrational levels")
    targets = np.array([r[2] for r in rows])
    if grid is None:
        T_e, D_e, beta = _solve_level_system(vs, targets, mass)
        p = MorseParams(T_e, D_e, beta, r_e if r_e is not None else 1.0)
        res = p.levels(mass, vs) - targets
        return MorseEnergyFit(T_e, D_e, beta, tuple(rows), tuple(res.tolist()), 0, r_e)
    if r_e is None:
        raise ValueError("a trial r_e is required for the grid re-solve")

    # Start from rigid-rotor estimates of the rotational energy at r_e.
    js = np.array([r[1] for r in rows], dtype=float)
    corrected = targets - js * (js + 1) / (2.0 * mass * r_e**2) * HARTREE_TO_INVCM
    T_e, D_e, beta = _solve_level_system(vs, corrected, mass)
    res = np.full_like(targets, np.inf)
    it = 0
    for it in range(1, max_iter + 1):
        p = MorseParams(T_e, D_e, beta, r_e)
        grid_levels = morse_grid_levels(p, mass, grid, rows)
        res = grid_levels - targets
        if np.max(np.abs(res)) < tol:
            break
        corrected = corrected - res
        T_e, D_e, beta = _solve_level_system(vs, corrected, mass)
    return MorseEnergyFit(T_e, D_e, beta, tuple(rows), tuple(res.tolist()), it, r_e)


def morse_grid_levels(p: MorseParams, mass: float, grid: RadialGrid, rows) -> NDArray[np.float64]:
    """Grid eigenvalues (cm-1) of the Morse model for each ``(v, J, ...)`` row."""
    curve = morse_curve(p, grid)
    out = np.empty(len(rows))
    by_j: dict[int, list[int]] = {}
    for k, row in enumerate(rows):
        by_j.setdefault(int(row[1]), []).append(k)
    for J, idx in by_j.items():
        v_top = max(int(rows[k][0]) for k in idx)
        states = solve_bound_states(EffectivePotentialSpec(curve, mass, J), v_top)
        for k in idx:
            out[k] = states[int(rows[k][0])].energy * HARTREE_TO_INVCM
    return out


def band_origins(spectrum: SpectrumDataset, ground_states: dict) -> list[tuple[int, int, float]]:
    """Upper-level energies (v', J', cm-1) from measured line positions: E_s = omega + E_i, band-averaged."""
    out = []
    for band in spectrum.bands:
        lines = spectrum.band_lines(band)
        if not lines:
            continue
        lower = ground_states[band]
        e = [ln.omega + lower[ln.v_lower].energy_invcm for ln in lines]
        out.append((band[0], band[1], float(np.mean(e))))
    return out


@dataclass(frozen=True)
class EquilibriumFit:
    R_e: float
    scan_r: NDArray[np.float64] = field(repr=False)
    scan_misfit: NDArray[np.float64] = field(repr=False)
    misfit: float


def intensity_misfit(
    p: MorseParams,
    spectrum: SpectrumDataset,
    ground_states: dict,
    mass: float,
) -> float:
    """Sum of squared differences of max-normalized model and measured intensities over measured lines."""
    grid = next(iter(ground_states.values()))[0].grid
    curve = morse_curve(p, grid)
    model, meas = [], []
    for band in spectrum.bands:
        lines = [ln for ln in spectrum.band_lines(band) if ln.provenance == "measured"]
        if not lines:
            continue
        v_up, J = band
        # trial R_e values far inside the scan window push the model against the wall; that is the scan's business
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoxContaminationWarning)
            upper = solve_bound_states(EffectivePotentialSpec(curve, mass, J), v_up)[v_up]
        lower = ground_states[band]
        f = overlap_matrix([lower[ln.v_lower] for ln in lines], [upper])[:, 0]
        model.extend((f * f).tolist())
        meas.extend(ln.intensity for ln in lines)
    model_a, meas_a = np.array(model), np.array(meas)
    if model_a.size == 0:
        raise InsufficientDataError("no measured lines to match")
    model_a /= model_a.max()
    meas_a = meas_a / meas_a.max()
    return float(np.sum((model_a - meas_a) ** 2))


def ground_states_for(spectrum: SpectrumDataset, ground: PotentialCurve, mass: float, n_lower: int | None = None) -> dict:
    """Ground-state eigenstates per band at the band's J."""
    top = max((ln.v_lower for ln in spectrum.lines), default=0)
    n = max(n_lower or 0, top + 1)
    out = {}
    cache: dict[int, list[RovibState]] = {}
    for band in spectrum.bands:
        J = band[1]
        if J not in cache:
            cache[J] = solve_bound_states(EffectivePotentialSpec(ground, mass, J), n - 1)
        out[band] = cache[J]
    return out


def fit_morse_Re(
    partial: MorseEnergyFit | tuple[float, float, float],
    spectrum: SpectrumDataset,
    ground: PotentialCurve,
    mass: float,
    search: tuple[float, float, int],
    *,
    ground_states: dict | None = None,
    xtol: float = 1e-4,
    jobs: int = 1,
) -> EquilibriumFit:
    """Scan R_e over ``search = (lo, hi, steps)`` and refine the best point by golden section."""
    if isinstance(partial, MorseEnergyFit):
        T_e, D_e, beta = partial.T_e, partial.D_e, partial.beta
    else:
        T_e, D_e, beta = partial
    lo, hi, steps = search
    if steps < 3 or not hi > lo:
        raise ValueError(f"invalid R_e search window {search}")
    if ground_states is None:
        ground_states = ground_states_for(spectrum, ground, mass)

    def misfit(r_e: float) -> float:
        return intensity_misfit(MorseParams(T_e, D_e, beta, float(r_e)), spectrum, ground_states, mass)

    scan_r = np.linspace(lo, hi, steps)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            scan_m = np.array(list(pool.map(misfit, scan_r)))
    else:
        scan_m = np.array([misfit(r) for r in scan_r])
    # argmin returns the first minimum, so ties go to the smaller R_e.
    k = int(np.argmin(scan_m))
    if k == 0 or k == steps - 1:
        raise BoundaryHitError(float(scan_r[k]), (lo, hi))
    r_best, m_best = golden_section(misfit, scan_r[k - 1], scan_r[k + 1], xtol)
    if m_best > scan_m[k]:
        r_best, m_best = float(scan_r[k]), float(scan_m[k])
    return EquilibriumFit(r_best, scan_r, scan_m, m_best)


def golden_section(func, a: float, b: float, xtol: float) -> tuple[float, float]:
    """Minimize a unimodal ``func`` on [a, b] to interval width ``xtol``."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = func(c), func(d)
    while b - a > xtol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = func(d)
    x = 0.5 * (a + b)
    return x, func(x)


def fit_summary(
    energy_fit: MorseEnergyFit,
    re_fit: EquilibriumFit | None,
    mass: float,
    grid: RadialGrid | None = None,
    v_report: int = 10,
) -> str:
    """Plain-text report: parameters, per-level residuals, predicted levels, misfit-vs-R_e table."""
    lines = ["# Morse fit summary"]
    R_e = re_fit.R_e if re_fit else energy_fit.r_e
    lines.append(f"T_e_cm-1 {energy_fit.T_e:.6f}")
    lines.append(f"D_e_cm-1 {energy_fit.D_e:.6f}")
    lines.append(f"beta_bohr-1 {energy_fit.beta:.8f}")
    if R_e is not None:
        lines.append(f"R_e_bohr {R_e:.6f}")
    p = MorseParams(energy_fit.T_e, energy_fit.D_e, energy_fit.beta, R_e or 1.0)
    lines.append(f"omega_e_cm-1 {p.omega_e(mass):.6f}")
    lines.append(f"omega_e_x_e_cm-1 {p.omega_e_x_e(mass):.6f}")
    lines.append(f"grid_iterations {energy_fit.iterations}")
    lines.append("")
    lines.append("# v J target_cm-1 residual_cm-1")
    for (v, J, e), r in zip(energy_fit.levels, energy_fit.residuals):
        lines.append(f"{v} {J} {e:.6f} {r:.3e}")
    lines.append("")
    lines.append("# predicted J=0 levels: v analytic_cm-1" + (" grid_cm-1" if grid is not None and R_e else ""))
    vs = np.arange(min(v_report, p.n_bound(mass) - 1) + 1)
    analytic = p.levels(mass, vs)
    grid_e = None
    if grid is not None and R_e is not None:
        grid_e = morse_grid_levels(p, mass, grid, [(int(v), 0) for v in vs])
    for k, v in enumerate(vs):
        row = f"{v} {analytic[k]:.6f}"
        if grid_e is not None:
            row += f" {grid_e[k]:.6f}"
        lines.append(row)
    if re_fit is not None:
        lines.append("")
        lines.append("# R_e_bohr misfit")
        for r, m in zip(re_fit.scan_r, re_fit.scan_misfit):
            lines.append(f"{r:.6f} {m:.10e}")
    return "\n".join(lines) + "\n"
