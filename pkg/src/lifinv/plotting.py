"""Figure rendering for CLI reports. Needs matplotlib (``pip install artifact[plot]``)."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def available() -> bool:
    try:
        import matplotlib  # noqa: F401
    except ImportError:
        return False
    return True


def new_figure(width: float = 6.0, height: float | None = None, nrows: int = 1):
    plt = _pyplot()
    golden = (math.sqrt(5) - 1.0) / 2.0
    height = height or width * golden * (1.0 if nrows == 1 else 0.8 * nrows)
    fig, axes = plt.subplots(nrows, 1, figsize=(width, height), sharex=nrows > 1, squeeze=False)
    return fig, axes[:, 0]


def save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    _pyplot().close(fig)
    return path


def plot_stick_spectrum(spectrum, path: Path, threshold: float | None = None) -> Path:
    fig, (ax,) = new_figure()
    by_band: dict = {}
    for ln in spectrum.lines:
        by_band.setdefault(ln.band, []).append((ln.omega, ln.intensity))
    for band, rows in by_band.items():
        w, i = np.array(rows).T
        ax.vlines(w, 0, i, label=f"v'={band[0]}, J'={band[1]}", lw=1.2)
    if threshold:
        ax.axhline(threshold, color="0.5", ls=":", lw=0.8)
    ax.set_xlabel(r"$\omega$ (cm$^{-1}$)")
    ax.set_ylabel(r"$|d|^2$ (relative)")
    ax.legend(frameon=False, fontsize=8)
    return save(fig, path)


def plot_misfit(scan_r, scan_misfit, r_best: float, path: Path) -> Path:
    fig, (ax,) = new_figure()
    ax.semilogy(scan_r, scan_misfit, "o-", ms=3)
    ax.axvline(r_best, color="C3", ls="--", lw=0.8)
    ax.set_xlabel(r"$R_e$ (bohr)")
    ax.set_ylabel("intensity misfit")
    return save(fig, path)


def plot_extraction(r, extracted_cm, morse_cm, reference_cm, valid_range, path: Path, window=None) -> Path:
    """Two panels: curves, and their deviation from the reference (when given)."""
    nrows = 2 if reference_cm is not None else 1
    fig, axes = new_figure(nrows=nrows)
    ax = axes[0]
    if reference_cm is not None:
        ax.plot(r, reference_cm, "C3--", lw=1.2, label="reference")
    ax.plot(r, morse_cm, "C2-.", lw=1.0, label="Morse model")
    ax.plot(r, extracted_cm, "k-", lw=1.0, label="extracted")
    ax.axvspan(*valid_range, color="0.9", zorder=0)
    ax.set_ylabel(r"$V$ (cm$^{-1}$)")
    ax.legend(frameon=False, fontsize=8)
    if window is not None:
        ax.set_xlim(*window[:2])
        ax.set_ylim(*window[2:])
    if reference_cm is not None:
        ax2 = axes[1]
        ax2.plot(r, extracted_cm - reference_cm, "k-", lw=1.0)
        ax2.plot(r, morse_cm - reference_cm, "C2-.", lw=1.0)
        ax2.axhline(0, color="0.5", lw=0.5)
        ax2.set_ylabel(r"$\Delta V$ (cm$^{-1}$)")
        if window is not None:
            lim = np.nanmax(np.abs((extracted_cm - reference_cm)[(r >= window[0]) & (r <= window[1])]))
            ax2.set_ylim(-1.1 * lim, 1.1 * lim)
    axes[-1].set_xlabel(r"$R$ (bohr)")
    return save(fig, path)


def plot_noise_study(r, curves: dict, reference_cm, path: Path, window=None) -> Path:
    fig, (ax, ax2) = new_figure(nrows=2)
    ax.plot(r, reference_cm, "C3--", lw=1.2, label="reference")
    for k, (label, cm) in enumerate(curves.items()):
        ax.plot(r, cm, lw=1.0, color=f"C{k}", label=label)
        ax2.plot(r, cm - reference_cm, lw=1.0, color=f"C{k}")
    ax2.axhline(0, color="0.5", lw=0.5)
    ax.set_ylabel(r"$V$ (cm$^{-1}$)")
    ax2.set_ylabel(r"$\Delta V$ (cm$^{-1}$)")
    ax2.set_xlabel(r"$R$ (bohr)")
    ax.legend(frameon=False, fontsize=8)
    if window is not None:
        ax.set_xlim(*window[:2])
        ax.set_ylim(*window[2:])
        sel = (r >= window[0]) & (r <= window[1])
        lim = max(np.nanmax(np.abs(cm - reference_cm)[sel]) for cm in curves.values()) if curves else 1.0
        ax2.set_ylim(-1.1 * lim, 1.1 * lim)
    return save(fig, path)


def plot_states(r, potential_cm, states, path: Path, scale: float | None = None) -> Path:
    fig, (ax,) = new_figure()
    ax.plot(r, potential_cm, "k-", lw=1.0)
    if states:
        spacing = np.diff([s.energy_invcm for s in states]).mean() if len(states) > 1 else 100.0
        scale = scale or 0.4 * spacing
        for s in states:
            ax.plot(r, s.energy_invcm + scale * s.wavefunction / np.abs(s.wavefunction).max(), lw=0.7)
        top = states[-1].energy_invcm + spacing
        ax.set_ylim(potential_cm.min() - 0.05 * (top - potential_cm.min()), top)
        inside = potential_cm < top
        ax.set_xlim(r[inside].min() - 0.3, r[inside].max() + 0.3)
    ax.set_xlabel(r"$R$ (bohr)")
    ax.set_ylabel(r"$E$ (cm$^{-1}$)")
    return save(fig, path)
