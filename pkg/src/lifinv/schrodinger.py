"""Bound rovibrational eigenstates of a 1D effective potential.

The Hamiltonian is discretized on the uniform grid with a symmetric central
finite-difference stencil for the kinetic term (Dirichlet walls at the grid
ends) and diagonalized for its lowest eigenpairs by shift-invert Lanczos.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray
from scipy.sparse.linalg import eigsh

from lifinv.errors import BoxContaminationWarning, TooFewBoundStatesError
from lifinv.numgrid import PotentialCurve, RadialGrid, integrate
from lifinv.units import HARTREE_TO_INVCM

DEFAULT_FD_ORDER = 10
EDGE_TOLERANCE = 1e-6
NODE_THRESHOLD = 1e-8


@dataclass(frozen=True, eq=False)
class RovibState:
    v: int
    J: int
    energy: float  # hartree
    wavefunction: NDArray[np.float64] = field(repr=False)
    grid: RadialGrid = field(repr=False)
    box_contaminated: bool = False

    @property
    def energy_invcm(self) -> float:
        return self.energy * HARTREE_TO_INVCM


@dataclass(frozen=True)
class EffectivePotentialSpec:
    electronic: PotentialCurve
    reduced_mass: float  # electron masses
    J: int = 0

    def __post_init__(self):
        if not self.reduced_mass > 0:
            raise ValueError(f"reduced mass must be positive, got {self.reduced_mass}")
        if self.J < 0:
            raise ValueError(f"J must be non-negative, got {self.J}")

    @property
    def grid(self) -> RadialGrid:
        return self.electronic.grid

    def values(self) -> NDArray[np.float64]:
        r = self.grid.r
        return self.electronic.values + self.J * (self.J + 1) / (2.0 * self.reduced_mass * r**2)


@lru_cache(maxsize=None)
def central_difference_coefficients(order: int) -> tuple[float, ...]:
    """Weights c_0..c_p of the symmetric stencil for d^2/dx^2 (unit spacing) of the given even order."""
    if order < 2 or order % 2:
        raise ValueError(f"stencil order must be an even integer >= 2, got {order}")
    p = order // 2
    offsets = np.arange(-p, p + 1)
    moments = np.vander(offsets, 2 * p + 1, increasing=True).T.astype(float)
    rhs = np.zeros(2 * p + 1)
    rhs[2] = 2.0
    c = np.linalg.solve(moments, rhs)
    return tuple(float(x) for x in c[p:])


def hamiltonian_matrix(spec: EffectivePotentialSpec, fd_order: int = DEFAULT_FD_ORDER) -> sp.csc_matrix:
    grid = spec.grid
    n, h = grid.n_points, grid.spacing
    c = central_difference_coefficients(fd_order)
    scale = -1.0 / (2.0 * spec.reduced_mass * h * h)
    diagonals = [spec.values() + scale * c[0]]
    offsets = [0]
    for k in range(1, len(c)):
        band = np.full(n - k, scale * c[k])
        diagonals += [band, band]
        offsets += [k, -k]
    return sp.diags(diagonals, offsets, shape=(n, n), format="csc")


def solve_bound_states(
    spec: EffectivePotentialSpec, v_max: int, fd_order: int = DEFAULT_FD_ORDER
) -> list[RovibState]:
    """Lowest ``v_max + 1`` bound states, normalized, positive on the inner lobe.

    Raises TooFewBoundStatesError when fewer than ``v_max + 1`` eigenvalues lie
    below the lower of the two grid-edge values of the effective potential.
    """
    if v_max < 0:
        raise ValueError(f"v_max must be >= 0, got {v_max}")
    grid = spec.grid
    n_states = v_max + 1
    if n_states >= grid.n_points - 1:
        raise ValueError("more states requested than the grid can represent")
    veff = spec.values()
    asymptote = min(veff[0], veff[-1])
    H = hamiltonian_matrix(spec, fd_order)
    # Shift below the potential floor so the wanted states are the largest of (H - sigma)^-1;
    # a fixed start vector keeps the result bit-reproducible.
    sigma = float(veff.min()) - 1e-3 * max(1.0, abs(float(veff.min())))
    energies, vecs = eigsh(H, k=n_states, sigma=sigma, which="LM", v0=np.ones(grid.n_points), tol=0)
    order = np.argsort(energies)
    energies, vecs = energies[order], vecs[:, order]

    found = int(np.count_nonzero(energies < asymptote))
    if found < n_states:
        raise TooFewBoundStatesError(n_states, found)

    states = []
    for v in range(n_states):
        psi = vecs[:, v]
        psi = psi / np.sqrt(integrate(grid, psi * psi))
        psi = _fix_sign(psi)
        psi.flags.writeable = False
        contaminated = bool(max(abs(psi[0]), abs(psi[-1])) >= EDGE_TOLERANCE)
        if contaminated:
            warnings.warn(
                f"state v={v} J={spec.J} does not decay at the grid edges "
                f"(|psi| = {abs(psi[0]):.2e}, {abs(psi[-1]):.2e}); enlarge the grid",
                BoxContaminationWarning,
                stacklevel=2,
            )
        states.append(RovibState(v, spec.J, float(energies[v]), psi, grid, contaminated))
    return states


def _fix_sign(psi: NDArray[np.float64]) -> NDArray[np.float64]:
    # Inner lobe = first sample exceeding 1% of the peak amplitude.
    first = int(np.argmax(np.abs(psi) > 0.01 * np.max(np.abs(psi))))
    return -psi if psi[first] < 0 else psi.copy()


def count_nodes(state: RovibState | NDArray[np.float64], threshold: float = NODE_THRESHOLD) -> int:
    """Strict sign changes between consecutive samples whose magnitude exceeds ``threshold``."""
    psi = state.wavefunction if isinstance(state, RovibState) else np.asarray(state, dtype=float)
    significant = psi[np.abs(psi) > threshold]
    if significant.size < 2:
        return 0
    return int(np.count_nonzero(np.signbit(significant[1:]) != np.signbit(significant[:-1])))


def expectation_energy(spec: EffectivePotentialSpec, state: RovibState, fd_order: int = DEFAULT_FD_ORDER) -> float:
    """Rayleigh quotient <psi|H|psi>/<psi|psi> with the discrete Hamiltonian."""
    psi = state.wavefunction
    H = hamiltonian_matrix(spec, fd_order)
    return float(psi @ (H @ psi) / (psi @ psi))


def write_states(path: str | Path, states: list[RovibState]) -> None:
    """Eigenstate dump: per state a ``# v J energy_cm-1`` header followed by one amplitude per grid line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = []
    for s in states:
        out.append("# v J energy_cm-1")
        out.append(f"# {s.v} {s.J} {s.energy_invcm:.10f}")
        out.extend(f"{x:.12e}" for x in s.wavefunction)
    path.write_text("\n".join(out) + "\n", encoding="utf-8")


def read_states(path: str | Path, grid: RadialGrid) -> list[RovibState]:
    states: list[RovibState] = []
    header = None
    amps: list[float] = []

    def flush():
        if header is not None:
            v, J, e = header
            psi = np.array(amps)
            if psi.shape != (grid.n_points,):
                raise ValueError(f"{path}: state v={v} has {psi.size} amplitudes, grid has {grid.n_points}")
            states.append(RovibState(v, J, e / HARTREE_TO_INVCM, psi, grid))

    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line.lstrip("#").split()
            if parts and parts[0] == "v":
                continue
            flush()
            header = (int(parts[0]), int(parts[1]), float(parts[2]))
            amps = []
        else:
            amps.append(float(line))
    flush()
    return states
