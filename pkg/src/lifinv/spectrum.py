"""Q-branch emission spectra under the Franck-Condon approximation, and detection thresholds."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Literal

import numpy as np

from lifinv.errors import InputShapeError
from lifinv.numgrid import PotentialCurve, integrate
from lifinv.schrodinger import EffectivePotentialSpec, RovibState, solve_bound_states
from lifinv.units import HARTREE_TO_INVCM

Provenance = Literal["measured", "regenerated"]

SPECTRUM_HEADER = "# v_upper J_upper v_lower J_lower omega_cm-1 intensity [amplitude] provenance"


@dataclass(frozen=True)
class EmissionLine:
    v_upper: int
    J_upper: int
    v_lower: int
    J_lower: int
    omega: float  # cm-1
    intensity: float
    amplitude: float | None = None
    provenance: Provenance = "measured"

    def __post_init__(self):
        if self.J_lower != self.J_upper:
            raise ValueError(f"Q-branch line needs J_lower == J_upper, got {self.J_lower} != {self.J_upper}")
        if self.intensity < 0:
            raise ValueError(f"negative intensity {self.intensity}")
        if self.amplitude is not None and not np.isclose(self.amplitude**2, self.intensity, rtol=1e-12, atol=0):
            raise ValueError("amplitude**2 must equal intensity")
        if self.provenance not in ("measured", "regenerated"):
            raise ValueError(f"unknown provenance {self.provenance!r}")

    @property
    def band(self) -> tuple[int, int]:
        return (self.v_upper, self.J_upper)

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.v_upper, self.J_upper, self.v_lower)


@dataclass(frozen=True)
class SpectrumDataset:
    lines: tuple[EmissionLine, ...]
    bands: tuple[tuple[int, int], ...]
    threshold_fraction: float | None = None
    threshold_mode: str = "global"

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(self.lines))
        object.__setattr__(self, "bands", tuple(tuple(b) for b in self.bands))
        keys = [ln.key for ln in self.lines]
        if len(keys) != len(set(keys)):
            raise ValueError("duplicate (v_upper, J_upper, v_lower) line")

    def __len__(self) -> int:
        return len(self.lines)

    def band_lines(self, band: tuple[int, int]) -> list[EmissionLine]:
        return [ln for ln in self.lines if ln.band == tuple(band)]

    def counts(self) -> dict[tuple[int, int], int]:
        return {b: len(self.band_lines(b)) for b in self.bands}

    @property
    def intensities(self) -> np.ndarray:
        return np.array([ln.intensity for ln in self.lines])

    def with_intensities(self, values) -> SpectrumDataset:
        values = np.asarray(values, dtype=float)
        lines = tuple(replace(ln, intensity=float(x), amplitude=None) for ln, x in zip(self.lines, values))
        return replace(self, lines=lines)


def franck_condon_amplitude(lower: RovibState, upper: RovibState) -> float:
    """Signed vibrational overlap integral of two states on a shared grid (unit electronic dipole)."""
    if lower.grid != upper.grid or lower.wavefunction.shape != upper.wavefunction.shape:
        raise InputShapeError("states live on different grids")
    return integrate(lower.grid, lower.wavefunction * upper.wavefunction)


def overlap_matrix(lower: list[RovibState], upper: list[RovibState]) -> np.ndarray:
    """f[i, s] for every lower i and upper s."""
    grid = lower[0].grid
    for st in (*lower, *upper):
        if st.grid != grid:
            raise InputShapeError("states live on different grids")
    chi = np.array([st.wavefunction for st in lower])
    phi = np.array([st.wavefunction for st in upper])
    return (chi * grid.weights) @ phi.T


def synthesize_spectrum(
    ground: PotentialCurve,
    excited: PotentialCurve,
    mass: float,
    bands,
    n_lower: int,
) -> SpectrumDataset:
    """Forward-model Q-branch lines from each upper band (v', J') to lower v = 0..n_lower-1 at the same J.

    ``mass`` is the reduced mass in electron masses. Intensities are raw f**2.
    """
    lines = []
    bands = [tuple(b) for b in bands]
    for v_up, J in bands:
        upper = solve_bound_states(EffectivePotentialSpec(excited, mass, J), v_up)[v_up]
        lower = solve_bound_states(EffectivePotentialSpec(ground, mass, J), n_lower - 1)
        for chi in lower:
            f = franck_condon_amplitude(chi, upper)
            lines.append(
                EmissionLine(
                    v_up, J, chi.v, J,
                    omega=(upper.energy - chi.energy) * HARTREE_TO_INVCM,
                    intensity=f * f,
                    amplitude=f,
                    provenance="measured",
                )
            )
    return SpectrumDataset(tuple(lines), tuple(bands))


def apply_threshold(spectrum: SpectrumDataset, fraction: float, mode: str = "global") -> SpectrumDataset:
    """Keep lines at or above ``fraction`` of the maximum intensity, normalized to max = 1, signs stripped.

    ``mode="band"`` compares each line with the strongest line of its own band instead.
    """
    if not 0 <= fraction < 1:
        raise ValueError(f"threshold fraction must lie in [0, 1), got {fraction}")
    if mode not in ("global", "band"):
        raise ValueError(f"unknown threshold mode {mode!r}")
    if not spectrum.lines:
        return replace(spectrum, threshold_fraction=fraction, threshold_mode=mode)
    global_max = max(ln.intensity for ln in spectrum.lines)
    band_max = {}
    for ln in spectrum.lines:
        band_max[ln.band] = max(band_max.get(ln.band, 0.0), ln.intensity)
    kept = []
    for ln in spectrum.lines:
        ref = global_max if mode == "global" else band_max[ln.band]
        if ln.intensity >= fraction * ref:
            kept.append(replace(ln, intensity=ln.intensity / global_max, amplitude=None))
    return replace(spectrum, lines=tuple(kept), threshold_fraction=fraction, threshold_mode=mode)


def write_spectrum(path: str | Path, spectrum: SpectrumDataset, comments: list[str] | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = [f"# {c}" for c in comments or []]
    if spectrum.threshold_fraction is not None:
        out.append(f"# threshold: {spectrum.threshold_fraction!r} {spectrum.threshold_mode}")
    out.append("# bands: " + " ".join(f"{v},{J}" for v, J in spectrum.bands))
    out.append(SPECTRUM_HEADER)
    for ln in spectrum.lines:
        cols = [str(ln.v_upper), str(ln.J_upper), str(ln.v_lower), str(ln.J_lower),
                f"{ln.omega:.8f}", f"{ln.intensity:.12e}"]
        if ln.amplitude is not None:
            cols.append(f"{ln.amplitude:.12e}")
        cols.append(ln.provenance)
        out.append(" ".join(cols))
    path.write_text("\n".join(out) + "\n", encoding="utf-8")


def read_spectrum(path: str | Path) -> SpectrumDataset:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"spectrum file not found: {path}")
    lines = []
    bands: list[tuple[int, int]] = []
    threshold, mode = None, "global"
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        text = raw.strip()
        if not text:
            continue
        if text.startswith("#"):
            body = text.lstrip("#").strip()
            if body.startswith("threshold:"):
                parts = body.split(":", 1)[1].split()
                threshold = float(parts[0])
                mode = parts[1] if len(parts) > 1 else "global"
            elif body.startswith("bands:"):
                bands = [tuple(int(x) for x in b.split(",")) for b in body.split(":", 1)[1].split()]
            continue
        parts = text.split()
        try:
            if len(parts) == 8:
                amp = float(parts[6])
            elif len(parts) == 7:
                amp = None
            else:
                raise ValueError(f"expected 7 or 8 columns, got {len(parts)}")
            lines.append(
                EmissionLine(int(parts[0]), int(parts[1]), int(parts[2]), int(parts[3]),
                             float(parts[4]), float(parts[5]), amp, parts[-1])
            )
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not bands:
        bands = list(dict.fromkeys(ln.band for ln in lines))
    return SpectrumDataset(tuple(lines), tuple(bands), threshold, mode)


def stick_table(spectrum: SpectrumDataset) -> np.ndarray:
    """Two columns (omega cm-1, intensity), sorted by omega."""
    data = np.array([(ln.omega, ln.intensity) for ln in spectrum.lines]).reshape(-1, 2)
    return data[np.argsort(data[:, 0])]
