"""Run configuration: a ``key = value`` file, command-line overrides, and the run manifest.

Schema (every key optional; defaults on ``RunConfig``)::

    ground = path            # ground-state potential file
    excited = path           # excited-state potential used to synthesize spectra
    reference = path         # reference excited curve for scoring
    spectrum = path          # measured spectrum file (skips synthesis)
    r_unit = bohr            # override for the R unit of all potential files (bohr | angstrom)
    grid = 4.0, 20.0, 2001   # r_min, r_max (bohr), n_points
    atoms = 7Li, 85Rb        # reduced mass from isotope labels ...
    mass_amu =               # ... or given directly (wins over atoms)
    bands = 0:4, 1:5, 2:8    # upper bands v':J'
    threshold = 0.025
    threshold_mode = global  # global | band
    n_lower = 31
    density_cutoff = 0.001
    extrapolation = morse-continuation   # morse-continuation | linear-slope
    scale = completeness     # completeness | least-squares | none
    re_window = 1.5          # bohr, half-width of the first R_e scan
    re_steps = 61
    regions = 2, 5, 10, 20   # V < E(v') cutoffs of the reference curve
    region_J = 0
    align = true
    noise_levels = 0.02, 0.05, 0.10
    n_trials = 100
    noise_distribution = gaussian  # gaussian | uniform
    seed = 20240
    out = lifinv_out
    jobs = 1
    figures = true
    potential = ground       # solve: ground | excited | reference | a path
    v_max = 20               # solve
    J = 0                    # solve
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
import platform
from dataclasses import dataclass, field, fields
from pathlib import Path

from lifinv import __version__
from lifinv.errors import ConfigError
from lifinv.numgrid import RadialGrid
from lifinv.units import ATOMIC_MASSES, AMU_TO_ELECTRON_MASS, reduced_mass_amu

OUT_ENV_VAR = "LIFINV_OUT"
MANIFEST_SCHEMA = 1


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(",", " ").split())


def _bands(text: str) -> tuple[tuple[int, int], ...]:
    out = []
    for item in text.replace(",", " ").split():
        v, _, j = item.partition(":")
        if not j:
            raise ValueError(f"band {item!r} must be written v:J")
        out.append((int(v), int(j)))
    return tuple(out)


def _grid(text: str) -> tuple:
    vals = _floats(text)
    if len(vals) == 3 and vals[2].is_integer():
        return (vals[0], vals[1], int(vals[2]))
    return vals


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_path(text: str) -> Path | None:
    return Path(text) if text.strip() else None


def _optional_float(text: str) -> float | None:
    return float(text) if text.strip() else None


_PARSERS = {
    "ground": _optional_path,
    "excited": _optional_path,
    "reference": _optional_path,
    "spectrum": _optional_path,
    "r_unit": str,
    "grid": _grid,
    "atoms": lambda t: tuple(x.strip() for x in t.split(",") if x.strip()),
    "mass_amu": _optional_float,
    "bands": _bands,
    "threshold": float,
    "threshold_mode": str,
    "n_lower": int,
    "density_cutoff": float,
    "extrapolation": str,
    "scale": str,
    "re_window": float,
    "re_steps": int,
    "regions": _ints,
    "region_J": int,
    "align": _bool,
    "noise_levels": _floats,
    "n_trials": int,
    "noise_distribution": str,
    "seed": int,
    "out": Path,
    "jobs": int,
    "figures": _bool,
    "potential": str,
    "v_max": int,
    "J": int,
}


@dataclass
class RunConfig:
    ground: Path | None = None
    excited: Path | None = None
    reference: Path | None = None
    spectrum: Path | None = None
    r_unit: str = "bohr"
    grid: tuple[float, ...] = (4.0, 20.0, 2001)
    atoms: tuple[str, ...] = ("7Li", "85Rb")
    mass_amu: float | None = None
    bands: tuple[tuple[int, int], ...] = ((0, 4), (1, 5), (2, 8))
    threshold: float = 0.025
    threshold_mode: str = "global"
    n_lower: int = 31
    density_cutoff: float = 1e-3
    extrapolation: str = "morse-continuation"
    scale: str = "completeness"
    re_window: float = 1.5
    re_steps: int = 61
    regions: tuple[int, ...] = (2, 5, 10, 20)
    region_J: int = 0
    align: bool = True
    noise_levels: tuple[float, ...] = (0.02, 0.05, 0.10)
    n_trials: int = 100
    noise_distribution: str = "gaussian"
    seed: int = 20240
    out: Path = Path("lifinv_out")
    jobs: int = 1
    figures: bool = True
    potential: str = "ground"
    v_max: int = 20
    J: int = 0
    sources: dict = field(default_factory=dict, repr=False)

    @property
    def radial_grid(self) -> RadialGrid:
        if len(self.grid) != 3:
            raise ConfigError(f"grid needs r_min, r_max, n_points; got {self.grid}")
        return RadialGrid(float(self.grid[0]), float(self.grid[1]), int(self.grid[2]))

    @property
    def reduced_mass_amu(self) -> float:
        if self.mass_amu is not None:
            return float(self.mass_amu)
        if len(self.atoms) != 2:
            raise ConfigError(f"atoms needs two isotope labels, got {self.atoms}")
        for a in self.atoms:
            if a not in ATOMIC_MASSES:
                raise ConfigError(f"unknown isotope {a!r}; known: {', '.join(sorted(ATOMIC_MASSES))}")
        return reduced_mass_amu(*self.atoms)

    @property
    def reduced_mass(self) -> float:
        return self.reduced_mass_amu * AMU_TO_ELECTRON_MASS

    def validate(self) -> None:
        if not 0 <= self.threshold < 1:
            raise ConfigError(f"threshold must lie in [0, 1), got {self.threshold}")
        if self.threshold_mode not in ("global", "band"):
            raise ConfigError(f"threshold_mode must be global or band, got {self.threshold_mode!r}")
        if self.extrapolation not in ("morse-continuation", "linear-slope"):
            raise ConfigError(f"unknown extrapolation method {self.extrapolation!r}")
        if self.scale not in ("completeness", "least-squares", "none"):
            raise ConfigError(f"unknown scale mode {self.scale!r}")
        if self.noise_distribution not in ("gaussian", "uniform"):
            raise ConfigError(f"unknown noise distribution {self.noise_distribution!r}")
        if self.r_unit not in ("bohr", "angstrom"):
            raise ConfigError(f"r_unit must be bohr or angstrom, got {self.r_unit!r}")
        if self.n_lower < 1 or self.n_trials < 1 or self.jobs < 1:
            raise ConfigError("n_lower, n_trials and jobs must be positive")
        if not 0 < self.density_cutoff < 1:
            raise ConfigError(f"density_cutoff must lie in (0, 1), got {self.density_cutoff}")
        self.radial_grid
        self.reduced_mass_amu

    def require_files(self, *names: str) -> None:
        """Fail fast if any named path is unset or missing."""
        for name in names:
            p = getattr(self, name)
            if p is None:
                raise ConfigError(f"'{name}' is required for this command (set it in the config or by flag)")
            if not Path(p).is_file():
                raise FileNotFoundError(f"{name} file not found: {p}")

    def resolved(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name == "sources":
                continue
            v = getattr(self, f.name)
            out[f.name] = str(v) if isinstance(v, Path) else (list(v) if isinstance(v, tuple) else v)
        out["bands"] = [list(b) for b in self.bands]
        return out

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.resolved(), sort_keys=True).encode()).hexdigest()


def parse_config_text(text: str, origin: str = "<config>") -> dict:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"{origin}: {exc}") from None
    raw = dict(parser["run"])
    out = {}
    for key, value in raw.items():
        if key not in _PARSERS:
            raise ConfigError(f"{origin}: unknown key {key!r}")
        try:
            out[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{origin}: bad value for {key!r}: {exc}") from None
    return out


def load_config(path: str | Path | None = None, overrides: dict | None = None, env=None) -> RunConfig:
    """Defaults < config file < environment (output dir only) < flag overrides."""
    env = os.environ if env is None else env
    cfg = RunConfig()
    sources = {f.name: "default" for f in fields(RunConfig) if f.name != "sources"}
    base = Path(".")
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        base = path.parent
        for key, value in parse_config_text(path.read_text(encoding="utf-8"), str(path)).items():
            if isinstance(value, Path) and not value.is_absolute():
                value = base / value
            setattr(cfg, key, value)
            sources[key] = "config"
    if env.get(OUT_ENV_VAR):
        cfg.out = Path(env[OUT_ENV_VAR])
        sources["out"] = "env"
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        setattr(cfg, key, value)
        sources[key] = "flag"
    cfg.sources = sources
    cfg.validate()
    return cfg


def build_manifest(cfg: RunConfig, command: str, argv: list[str], outputs: list[str], extra: dict | None = None) -> dict:
    import numpy
    import scipy

    return {
        "schema_version": MANIFEST_SCHEMA,
        "tool": "lifinv",
        "tool_version": __version__,
        "command": command,
        "argv": list(argv),
        "config": cfg.resolved(),
        "config_sources": dict(cfg.sources),
        "config_sha256": cfg.digest(),
        "seed": cfg.seed,
        "derived": {
            "reduced_mass_amu": cfg.reduced_mass_amu,
            "reduced_mass_me": cfg.reduced_mass,
            "rotation_treatment": "effective potential V(R) + J(J+1)/(2 mu R^2) at each band J",
            "energy_zero": "ground-state potential minimum",
        },
        "versions": {"python": platform.python_version(), "numpy": numpy.__version__, "scipy": scipy.__version__},
        "outputs": sorted(outputs),
        **(extra or {}),
    }


def write_manifest(path: Path, manifest: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")


def dump_config(cfg: RunConfig) -> str:
    """Config in the file format, suitable for re-running."""
    lines = []
    for key, value in cfg.resolved().items():
        if value is None:
            value = ""
        elif key == "bands":
            value = ", ".join(f"{v}:{j}" for v, j in value)
        elif isinstance(value, list):
            value = ", ".join(str(x) for x in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


