"""Synthetic twin: a fully known LiRb-scale ground/excited pair for end-to-end checks.

The ground curve is a Morse well (depth 5927 cm-1, R_e 6.6 bohr, w_e ~ 195 cm-1).
The excited truth is a Morse well plus a smooth 30 cm-1 step,
``A tanh((R - R_e) / w)``, so no Morse model reproduces it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lifinv.morse import MorseParams, morse_curve, morse_eval
from lifinv.numgrid import PotentialCurve, RadialGrid
from lifinv.units import LIRB_REDUCED_MASS_AMU, amu_to_me

GROUND_MORSE = MorseParams(T_e=5927.0, D_e=5927.0, beta=0.4155, R_e=6.6)
EXCITED_MORSE = MorseParams(T_e=20000.0, D_e=4000.0, beta=0.337, R_e=7.6)
PERTURBATION_AMPLITUDE = 30.0  # cm-1
PERTURBATION_WIDTH = 1.5  # bohr
DEFAULT_BANDS = ((0, 4), (1, 5), (2, 8))


@dataclass(frozen=True)
class TwinSystem:
    grid: RadialGrid
    ground: PotentialCurve
    excited: PotentialCurve
    mass_amu: float
    bands: tuple[tuple[int, int], ...]
    excited_morse: MorseParams
    amplitude: float
    width: float

    @property
    def mass(self) -> float:
        return amu_to_me(self.mass_amu)


def excited_truth_invcm(r, base: MorseParams = EXCITED_MORSE, amplitude: float = PERTURBATION_AMPLITUDE,
                        width: float = PERTURBATION_WIDTH):
    r = np.asarray(r, dtype=float)
    return morse_eval(base, r) + amplitude * np.tanh((r - base.R_e) / width)


def build_twin(
    grid: RadialGrid | None = None,
    amplitude: float = PERTURBATION_AMPLITUDE,
    width: float = PERTURBATION_WIDTH,
    bands=DEFAULT_BANDS,
) -> TwinSystem:
    grid = grid or RadialGrid()
    ground = morse_curve(GROUND_MORSE, grid)
    excited = PotentialCurve.from_invcm(grid, excited_truth_invcm(grid.r, EXCITED_MORSE, amplitude, width))
    return TwinSystem(grid, ground, excited, LIRB_REDUCED_MASS_AMU, tuple(bands), EXCITED_MORSE, amplitude, width)
