"""Uniform radial grid, tabulated potential curves, quadrature, and the potential file format.

Potential files are UTF-8 text with one ``R value`` pair per line and a header
line ``# units: <R-unit> <E-unit>`` where R-unit is ``bohr`` or ``angstrom``
and E-unit is ``cm-1`` or ``hartree``. Other ``#`` lines are comments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from scipy.interpolate import CubicSpline

from lifinv.errors import InputShapeError, OutOfRangeError
from lifinv.units import ANGSTROM_TO_BOHR, HARTREE_TO_INVCM

DEFAULT_R_MIN = 4.0
DEFAULT_R_MAX = 20.0
DEFAULT_N_POINTS = 2001

_R_UNITS = {"bohr": 1.0, "angstrom": ANGSTROM_TO_BOHR, "a0": 1.0, "au": 1.0}
_E_UNITS = {"cm-1": 1.0 / HARTREE_TO_INVCM, "hartree": 1.0, "au": 1.0}


@dataclass(frozen=True)
class RadialGrid:
    r_min: float = DEFAULT_R_MIN
    r_max: float = DEFAULT_R_MAX
    n_points: int = DEFAULT_N_POINTS

    def __post_init__(self):
        if not self.r_min > 0:
            raise ValueError(f"r_min must be positive, got {self.r_min}")
        if not self.r_max > self.r_min:
            raise ValueError(f"r_max ({self.r_max}) must exceed r_min ({self.r_min})")
        if self.n_points < 3:
            raise ValueError(f"need at least 3 grid points, got {self.n_points}")

    @property
    def spacing(self) -> float:
        return (self.r_max - self.r_min) / (self.n_points - 1)

    @cached_property
    def r(self) -> NDArray[np.float64]:
        r = np.linspace(self.r_min, self.r_max, self.n_points)
        r.flags.writeable = False
        return r

    @cached_property
    def weights(self) -> NDArray[np.float64]:
        """Quadrature weights: composite Simpson for odd point counts, trapezoid otherwise."""
        n, h = self.n_points, self.spacing
        if n % 2 == 1:
            w = np.full(n, 2.0)
            w[1::2] = 4.0
            w[0] = w[-1] = 1.0
            w *= h / 3.0
        else:
            w = np.full(n, h)
            w[0] = w[-1] = h / 2.0
        w.flags.writeable = False
        return w

    def refined(self, factor: int = 2) -> RadialGrid:
        """Same interval with the spacing divided by ``factor``."""
        return RadialGrid(self.r_min, self.r_max, (self.n_points - 1) * factor + 1)


def integrate(grid: RadialGrid, f) -> float:
    """Definite integral over the grid interval of samples ``f`` taken at every node."""
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.n_points,):
        raise InputShapeError(f"expected {grid.n_points} samples, got shape {f.shape}")
    return float(grid.weights @ f)


@dataclass(frozen=True, eq=False)
class PotentialCurve:
    """Potential energy V(R) sampled on a uniform grid, in hartree."""

    grid: RadialGrid
    values: NDArray[np.float64] = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n_points,):
            raise InputShapeError(f"expected {self.grid.n_points} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise ValueError(f"non-finite potential value at R={self.grid.r[bad]:.6f} bohr")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: RadialGrid, func) -> PotentialCurve:
        return cls(grid, func(grid.r))

    @classmethod
    def from_invcm(cls, grid: RadialGrid, values_invcm) -> PotentialCurve:
        return cls(grid, np.asarray(values_invcm, dtype=float) / HARTREE_TO_INVCM)

    @property
    def r(self) -> NDArray[np.float64]:
        return self.grid.r

    @property
    def invcm(self) -> NDArray[np.float64]:
        return self.values * HARTREE_TO_INVCM

    @cached_property
    def spline(self) -> CubicSpline:
        return CubicSpline(self.grid.r, self.values, bc_type="natural")

    def __call__(self, r):
        return interpolate(self, r)

    def shifted(self, delta: float) -> PotentialCurve:
        return PotentialCurve(self.grid, self.values + delta)

    def minimum(self) -> tuple[float, float]:
        """(R, V) at the lowest node."""
        k = int(np.argmin(self.values))
        return float(self.grid.r[k]), float(self.values[k])

    def resampled(self, grid: RadialGrid) -> PotentialCurve:
        if grid == self.grid:
            return self
        return PotentialCurve(grid, interpolate(self, grid.r))


def interpolate(curve: PotentialCurve, r):
    """Natural cubic-spline value of ``curve`` at ``r`` (scalar or array); nodes are returned exactly."""
    g = curve.grid
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < g.r_min) or np.any(r_arr > g.r_max):
        raise OutOfRangeError(f"R outside grid [{g.r_min}, {g.r_max}] bohr")
    out = np.asarray(curve.spline(r_arr), dtype=float)
    # Snap exact node hits to the stored value.
    k = np.rint((r_arr - g.r_min) / g.spacing).astype(int)
    k = np.clip(k, 0, g.n_points - 1)
    hit = g.r[k] == r_arr
    out = np.where(hit, curve.values[k], out)
    return float(out) if out.ndim == 0 else out


def read_potential(path: str | Path, grid: RadialGrid | None = None, r_unit: str | None = None) -> PotentialCurve:
    """Load a potential file and place it on ``grid`` (spline resampling if needed).

    ``r_unit`` overrides the R unit declared in the header. Without a ``grid``
    the file's own points must be uniformly spaced.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"potential file not found: {path}")
    units = None
    rows = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if body.lower().startswith("units:"):
                parts = body.split(":", 1)[1].split()
                if len(parts) != 2:
                    raise ValueError(f"{path}:{lineno}: malformed units header {raw!r}")
                units = (parts[0].lower(), parts[1].lower())
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ValueError(f"{path}:{lineno}: expected 'R value', got {raw!r}")
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    if units is None:
        raise ValueError(f"{path}: missing '# units: <R-unit> <E-unit>' header")
    ru = r_unit.lower() if r_unit else units[0]
    if ru not in _R_UNITS or units[1] not in _E_UNITS:
        raise ValueError(f"{path}: unsupported units {ru!r} {units[1]!r}")
    if len(rows) < 3:
        raise ValueError(f"{path}: need at least 3 data rows, got {len(rows)}")
    data = np.array(sorted(rows))
    r = data[:, 0] * _R_UNITS[ru]
    v = data[:, 1] * _E_UNITS[units[1]]
    if np.any(np.diff(r) <= 0):
        raise ValueError(f"{path}: duplicate R values")
    if grid is None:
        steps = np.diff(r)
        if not np.allclose(steps, steps[0], rtol=1e-6, atol=1e-12):
            raise ValueError(f"{path}: non-uniform grid; pass an explicit target grid")
        return PotentialCurve(RadialGrid(float(r[0]), float(r[-1]), len(r)), v)
    if grid.r_min < r[0] - 1e-9 or grid.r_max > r[-1] + 1e-9:
        raise OutOfRangeError(
            f"{path}: data span [{r[0]:.4f}, {r[-1]:.4f}] bohr does not cover grid "
            f"[{grid.r_min}, {grid.r_max}]"
        )
    spline = CubicSpline(r, v, bc_type="natural")
    return PotentialCurve(grid, spline(np.clip(grid.r, r[0], r[-1])))


def write_potential(path: str | Path, curve: PotentialCurve, comments: list[str] | None = None) -> None:
    """Write ``curve`` in bohr / cm-1."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# units: bohr cm-1"]
    lines += [f"# {c}" for c in comments or []]
    lines += [f"{r:.10f} {v:.10f}" for r, v in zip(curve.grid.r, curve.invcm)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
