"""End-to-end extraction: Morse fit, weak-line regeneration, inversion, tail extrapolation."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

from lifinv.inversion import (
    DEFAULT_DENSITY_CUTOFF,
    DEFAULT_N_LOWER,
    ExtractedPotential,
    SignedOverlapSet,
    invert_potential,
    model_upper_states,
    regenerate_weak_lines,
)
from lifinv.morse import (
    EquilibriumFit,
    MorseEnergyFit,
    MorseParams,
    band_origins,
    fit_morse_energies,
    fit_morse_Re,
    ground_states_for,
)
from lifinv.numgrid import PotentialCurve
from lifinv.spectrum import SpectrumDataset

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    n_lower: int = DEFAULT_N_LOWER
    density_cutoff: float = DEFAULT_DENSITY_CUTOFF
    extrapolation: str = "morse-continuation"
    scale: str = "completeness"
    re_window: float = 1.5  # bohr, half-width of the first R_e scan around the ground minimum
    re_steps: int = 61
    refine_window: float = 0.25
    refine_steps: int = 26
    max_alternations: int = 5
    re_tol: float = 1e-4

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class ExtractionResult:
    measured: SpectrumDataset
    ground: PotentialCurve
    mass: float
    config: PipelineConfig
    energy_fit: MorseEnergyFit
    re_fit: EquilibriumFit
    morse: MorseParams
    ground_states: dict = field(repr=False)
    upper_states: dict = field(repr=False)
    overlaps: SignedOverlapSet = field(repr=False)
    extracted: ExtractedPotential = field(repr=False)

    def overlaps_for(self, spectrum: SpectrumDataset) -> SignedOverlapSet:
        """Re-run sign assignment and regeneration for new measured intensities, Morse model held fixed."""
        return regenerate_weak_lines(
            self.morse, self.ground_states, spectrum, self.mass, self.config.n_lower,
            scale=self.config.scale, upper_states=self.upper_states,
        )

    def reinvert(self, spectrum: SpectrumDataset) -> ExtractedPotential:
        return self.invert(self.overlaps_for(spectrum))

    def invert(self, overlaps: SignedOverlapSet) -> ExtractedPotential:
        return invert_potential(
            overlaps, self.ground_states, self.ground, self.config.density_cutoff,
            extrapolation=self.config.extrapolation, morse=self.morse,
        )

    def measured_only(self) -> ExtractedPotential:
        return self.invert(self.overlaps.only("measured"))


def fit_morse_model(
    measured: SpectrumDataset,
    ground: PotentialCurve,
    mass: float,
    ground_states: dict,
    config: PipelineConfig = PipelineConfig(),
    jobs: int = 1,
) -> tuple[MorseEnergyFit, EquilibriumFit]:
    """Alternate the level fit (at fixed R_e) and the intensity-profile R_e scan until R_e settles."""
    origins = band_origins(measured, ground_states)
    r_e = ground.minimum()[0]
    window, steps = config.re_window, config.re_steps
    energy_fit = re_fit = None
    for k in range(config.max_alternations):
        energy_fit = fit_morse_energies(origins, mass, grid=ground.grid, r_e=r_e)
        re_fit = fit_morse_Re(
            energy_fit, measured, ground, mass, (r_e - window, r_e + window, steps),
            ground_states=ground_states, xtol=config.re_tol, jobs=jobs,
        )
        shift = abs(re_fit.R_e - r_e)
        log.info("alternation %d: R_e=%.6f bohr (shift %.2e)", k, re_fit.R_e, shift)
        r_e = re_fit.R_e
        window, steps = config.refine_window, config.refine_steps
        if shift < config.re_tol and k > 0:
            break
    energy_fit = fit_morse_energies(origins, mass, grid=ground.grid, r_e=r_e)
    return energy_fit, re_fit


def extract(
    measured: SpectrumDataset,
    ground: PotentialCurve,
    mass: float,
    config: PipelineConfig = PipelineConfig(),
    jobs: int = 1,
) -> ExtractionResult:
    """Extract the excited potential from a thresholded measured spectrum and a known ground curve."""
    ground_states = ground_states_for(measured, ground, mass, config.n_lower)
    energy_fit, re_fit = fit_morse_model(measured, ground, mass, ground_states, config, jobs)
    morse = energy_fit.params(re_fit.R_e)
    upper = model_upper_states(morse, measured.bands, mass, ground.grid)
    overlaps = regenerate_weak_lines(
        morse, ground_states, measured, mass, config.n_lower, scale=config.scale, upper_states=upper
    )
    extracted = invert_potential(
        overlaps, ground_states, ground, config.density_cutoff,
        extrapolation=config.extrapolation, morse=morse,
    )
    return ExtractionResult(
        measured, ground, mass, config, energy_fit, re_fit, morse, ground_states, upper, overlaps, extracted
    )
