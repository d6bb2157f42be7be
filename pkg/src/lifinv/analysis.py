"""Region-wise RMS scoring against a reference curve, and the seeded intensity-noise study."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from lifinv.errors import EmptyRegionError, LifinvError
from lifinv.numgrid import PotentialCurve
from lifinv.schrodinger import EffectivePotentialSpec, solve_bound_states
from lifinv.spectrum import SpectrumDataset
from lifinv.units import HARTREE_TO_INVCM

DEFAULT_REGION_LEVELS = (2, 5, 10, 20)
DEFAULT_NOISE_LEVELS = (0.02, 0.05, 0.10)


@dataclass(frozen=True)
class RegionSpec:
    label: str
    energy_cutoff: float  # cm-1


def validate_regions(regions) -> None:
    cuts = [r.energy_cutoff for r in regions]
    if any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise ValueError("region cutoffs must be strictly increasing")


def regions_from_reference(reference: PotentialCurve, mass: float, levels=DEFAULT_REGION_LEVELS, J: int = 0) -> list[RegionSpec]:
    """Regions V(R) < E(v') for the requested levels of the reference curve at rotational level J."""
    levels = sorted(levels)
    states = solve_bound_states(EffectivePotentialSpec(reference, mass, J), levels[-1])
    regions = [RegionSpec(f"V<E({k})", states[k].energy_invcm) for k in levels]
    validate_regions(regions)
    return regions


@dataclass(frozen=True)
class RegionScore:
    label: str
    rms: float  # cm-1
    n_points: int
    mask: NDArray[np.bool_] = field(repr=False)

    def __float__(self) -> float:
        return self.rms


def rms_error(test: PotentialCurve, reference: PotentialCurve, region: RegionSpec, align: bool = True) -> RegionScore:
    """RMS of test - reference (cm-1) over reference grid points with reference(R) < the region cutoff.

    With ``align`` the test curve is first shifted so that it agrees with the
    reference at the reference's minimum.
    """
    test = test.resampled(reference.grid)
    ref = reference.invcm
    t = test.invcm
    if align:
        k = int(np.argmin(ref))
        t = t - t[k] + ref[k]
    mask = ref < region.energy_cutoff
    n = int(mask.sum())
    if n == 0:
        raise EmptyRegionError(f"region {region.label} contains no grid points")
    diff = t[mask] - ref[mask]
    return RegionScore(region.label, float(np.sqrt(np.mean(diff * diff))), n, mask)


def score_regions(test: PotentialCurve, reference: PotentialCurve, regions, align: bool = True) -> dict[str, float]:
    return {r.label: rms_error(test, reference, r, align).rms for r in regions}


@dataclass(frozen=True)
class NoiseStudyConfig:
    rel_rms_levels: tuple[float, ...] = DEFAULT_NOISE_LEVELS
    n_trials: int = 100
    seed: int = 20240
    distribution: str = "gaussian"
    n_bootstrap: int = 200

    def __post_init__(self):
        object.__setattr__(self, "rel_rms_levels", tuple(float(x) for x in self.rel_rms_levels))
        if any(not 0 <= x < 1 for x in self.rel_rms_levels):
            raise ValueError("noise levels must lie in [0, 1)")
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.distribution not in ("gaussian", "uniform"):
            raise ValueError(f"unknown noise distribution {self.distribution!r}")


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream per trial; identical for every noise level (common random numbers)."""
    return np.random.default_rng([seed, trial])


def perturb_with_count(
    spectrum: SpectrumDataset, rel_rms: float, rng: np.random.Generator, distribution: str = "gaussian"
) -> tuple[SpectrumDataset, int]:
    measured = np.array([ln.provenance == "measured" for ln in spectrum.lines], dtype=bool)
    values = spectrum.intensities.copy()
    if not measured.any():
        return spectrum, 0
    sigma = rel_rms * float(values[measured].mean())
    if distribution == "gaussian":
        unit = rng.standard_normal(int(measured.sum()))
    elif distribution == "uniform":
        unit = rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), int(measured.sum()))
    else:
        raise ValueError(f"unknown noise distribution {distribution!r}")
    if rel_rms == 0:
        return spectrum, 0
    noisy = values[measured] + sigma * unit
    clamped = int(np.count_nonzero(noisy < 0))
    values[measured] = np.maximum(noisy, 0.0)
    return spectrum.with_intensities(values), clamped


def perturb_intensities(spectrum: SpectrumDataset, rel_rms: float, seed: int, distribution: str = "gaussian") -> SpectrumDataset:
    """Add zero-mean noise of std ``rel_rms`` x mean measured intensity to each measured line.

    Regenerated lines are left untouched; negative results are clamped to zero.
    """
    return perturb_with_count(spectrum, rel_rms, np.random.default_rng(seed), distribution)[0]


@dataclass
class NoiseLevelResult:
    level: float
    average_curve: PotentialCurve | None
    average_rms: dict[str, float]
    bootstrap_se: dict[str, float]
    trial_mean: dict[str, float]
    trial_std: dict[str, float]
    n_ok: int
    n_failed: int
    n_clamped: int


@dataclass
class NoiseStudyResult:
    config: NoiseStudyConfig
    regions: list[RegionSpec]
    levels: list[NoiseLevelResult]

    def table(self) -> str:
        return format_noise_table(self)

    def rows(self) -> list[tuple]:
        out = []
        for lv in self.levels:
            for r in self.regions:
                nan = float("nan")
                out.append((lv.level, r.label, lv.average_rms.get(r.label, nan), lv.bootstrap_se.get(r.label, nan),
                            lv.trial_mean.get(r.label, nan), lv.trial_std.get(r.label, nan), lv.n_ok, lv.n_failed))
        return out


def run_noise_study(base, reference: PotentialCurve, regions, config: NoiseStudyConfig = NoiseStudyConfig(),
                    jobs: int = 1, align: bool = True) -> NoiseStudyResult:
    """Repeat the regeneration merge and inversion on noisy copies of the measured intensities.

    ``base`` is a finished extraction (lifinv.pipeline.ExtractionResult); its Morse
    model and regenerated lines stay fixed. Trial potentials are averaged
    pointwise and the average is scored per region; per-trial scores give the
    dispersion and a trial bootstrap gives the standard error of the average's score.
    """
    validate_regions(regions)
    measured = base.measured
    ref_grid = reference.grid
    levels = []
    for level in config.rel_rms_levels:
        n_run = 1 if level == 0 else config.n_trials

        def trial(t: int, level=level):
            noisy, clamped = perturb_with_count(measured, level, trial_rng(config.seed, t), config.distribution)
            try:
                ext = base.reinvert(noisy)
            except LifinvError:
                return None, clamped
            return ext.curve.resampled(ref_grid).values, clamped

        if jobs > 1 and n_run > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                outcomes = list(pool.map(trial, range(n_run)))
        else:
            outcomes = [trial(t) for t in range(n_run)]
        curves = [c for c, _ in outcomes if c is not None]
        n_clamped = sum(k for _, k in outcomes)
        n_failed = n_run - len(curves)
        if not curves:
            levels.append(NoiseLevelResult(level, None, {}, {}, {}, {}, 0, n_failed, n_clamped))
            continue
        stack = np.array(curves)
        avg = PotentialCurve(ref_grid, stack[0] if len(curves) == 1 else stack.mean(axis=0))
        avg_rms = score_regions(avg, reference, regions, align)
        per_trial = np.array([[rms_error(PotentialCurve(ref_grid, c), reference, r, align).rms for r in regions] for c in stack])
        boot_rng = np.random.default_rng([config.seed, 0xB007])
        boot = []
        if len(curves) > 1:
            for _ in range(config.n_bootstrap):
                pick = boot_rng.integers(0, len(curves), len(curves))
                boot.append(list(score_regions(PotentialCurve(ref_grid, stack[pick].mean(axis=0)), reference, regions, align).values()))
        boot_a = np.array(boot) if boot else np.zeros((1, len(regions)))
        labels = [r.label for r in regions]
        levels.append(
            NoiseLevelResult(
                level, avg, avg_rms,
                dict(zip(labels, boot_a.std(axis=0, ddof=1) if len(boot) > 1 else np.zeros(len(labels)))),
                dict(zip(labels, per_trial.mean(axis=0))),
                dict(zip(labels, per_trial.std(axis=0, ddof=1) if len(curves) > 1 else np.zeros(len(labels)))),
                len(curves), n_failed, n_clamped,
            )
        )
    return NoiseStudyResult(config, list(regions), levels)


def format_noise_table(result: NoiseStudyResult) -> str:
    labels = [r.label for r in result.regions]
    head = ["region"] + [f"{lv.level * 100:g}%" for lv in result.levels]
    rows = [head]
    for lab in labels:
        row = [lab]
        for lv in result.levels:
            if lab in lv.average_rms:
                row.append(f"{lv.average_rms[lab]:.3f} +/- {lv.bootstrap_se[lab]:.3f}")
            else:
                row.append("failed")
        rows.append(row)
    widths = [max(len(r[k]) for r in rows) for k in range(len(head))]
    out = ["# RMS error (cm-1) of the trial-averaged potential, bootstrap standard error"]
    out += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows]
    out.append("")
    out.append("# mean_rms: RMS of the trial-averaged potential; std: per-trial RMS dispersion;")
    out.append("# se: bootstrap standard error of mean_rms; trial_mean: mean of per-trial RMS")
    out.append("# level region mean_rms_cm-1 std_cm-1 n_ok n_failed se_cm-1 trial_mean_cm-1")
    for level, lab, m, se, tm, ts, ok, bad in result.rows():
        out.append(f"{level:g} {lab} {m:.6f} {ts:.6f} {ok} {bad} {se:.6f} {tm:.6f}")
    return "\n".join(out) + "\n"


def format_region_table(scores: dict[str, float], regions) -> str:
    out = ["# region cutoff_cm-1 rms_cm-1"]
    for r in regions:
        out.append(f"{r.label} {r.energy_cutoff:.4f} {scores[r.label]:.6f}")
    return "\n".join(out) + "\n"
