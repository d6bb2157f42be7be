"""Command-line front end: ``lifinv <command> [--config FILE] [flags]``.

Every command writes its artifacts and a ``manifest.json`` into the output
directory (``--out``, else ``$LIFINV_OUT``, else the config's ``out``).
Figures are rendered next to the plot-ready text files when matplotlib is
importable and ``--no-figures`` is not given.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from lifinv import __version__
from lifinv.analysis import (
    NoiseStudyConfig,
    format_region_table,
    regions_from_reference,
    run_noise_study,
    score_regions,
)
from lifinv.config import RunConfig, build_manifest, dump_config, load_config, write_manifest
from lifinv.errors import LifinvError, TooFewBoundStatesError
from lifinv.inversion import COMPLETENESS_FLOOR
from lifinv.morse import fit_summary, ground_states_for
from lifinv.numgrid import PotentialCurve, read_potential, write_potential
from lifinv.pipeline import PipelineConfig, extract, fit_morse_model
from lifinv.schrodinger import EffectivePotentialSpec, solve_bound_states, write_states
from lifinv.spectrum import (
    SpectrumDataset,
    apply_threshold,
    read_spectrum,
    stick_table,
    synthesize_spectrum,
    write_spectrum,
)
from lifinv.units import HARTREE_TO_INVCM

log = logging.getLogger("lifinv")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


class Run:
    """Collects artifacts and warnings for one command invocation."""

    def __init__(self, cfg: RunConfig, command: str, argv: list[str]):
        self.cfg = cfg
        self.command = command
        self.argv = argv
        self.out = Path(cfg.out)
        self.outputs: list[str] = []
        self.notes: dict = {}
        self.figures = cfg.figures
        if self.figures:
            from lifinv import plotting

            if not plotting.available():
                self.figures = False
                self.notes["figures"] = "skipped: matplotlib not installed"

    def path(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        return self.out / name

    def wrote(self, path: Path) -> Path:
        self.outputs.append(path.name)
        return path

    def text(self, name: str, body: str) -> Path:
        p = self.path(name)
        p.write_text(body, encoding="utf-8")
        return self.wrote(p)

    def columns(self, name: str, header: str, data) -> Path:
        p = self.path(name)
        np.savetxt(p, np.asarray(data), header=header, fmt="%.10g")
        return self.wrote(p)

    def figure(self, name: str, draw) -> None:
        if not self.figures:
            return
        self.wrote(draw(self.path(name)))

    def finish(self, extra: dict | None = None) -> None:
        manifest = build_manifest(self.cfg, self.command, self.argv, self.outputs + ["manifest.json"],
                                  {**self.notes, **(extra or {})})
        write_manifest(self.path("manifest.json"), manifest)
        log.info("wrote %d artifacts to %s", len(self.outputs) + 1, self.out)


# ---- input helpers


def _potential(cfg: RunConfig, name_or_path) -> PotentialCurve:
    path = getattr(cfg, name_or_path) if name_or_path in ("ground", "excited", "reference") else Path(name_or_path)
    if path is None:
        raise FileNotFoundError(f"no {name_or_path} potential configured")
    r_unit = cfg.r_unit if cfg.sources.get("r_unit", "default") != "default" else None
    return read_potential(path, cfg.radial_grid, r_unit)


def _measured_spectrum(cfg: RunConfig, ground: PotentialCurve) -> tuple[SpectrumDataset, str]:
    """Thresholded measured lines, from the spectrum file or synthesized from the excited curve."""
    if cfg.spectrum is not None:
        spec = read_spectrum(cfg.spectrum)
        if spec.threshold_fraction is None:
            spec = apply_threshold(spec, cfg.threshold, cfg.threshold_mode)
            return spec, f"file {cfg.spectrum}, thresholded at {cfg.threshold}"
        return spec, f"file {cfg.spectrum} (threshold {spec.threshold_fraction} from header)"
    if cfg.excited is None:
        raise FileNotFoundError("need either 'spectrum' or 'excited' to obtain measured lines")
    excited = _potential(cfg, "excited")
    full = synthesize_spectrum(ground, excited, cfg.reduced_mass, cfg.bands, cfg.n_lower)
    return apply_threshold(full, cfg.threshold, cfg.threshold_mode), f"synthesized from {cfg.excited}"


def _pipeline_config(cfg: RunConfig) -> PipelineConfig:
    return PipelineConfig(
        n_lower=cfg.n_lower, density_cutoff=cfg.density_cutoff, extrapolation=cfg.extrapolation,
        scale=cfg.scale, re_window=cfg.re_window, re_steps=cfg.re_steps,
    )


def _fmt_band(b) -> str:
    return f"({b[0]},{b[1]})"


# ---- commands


def cmd_solve(run: Run) -> None:
    cfg = run.cfg
    name = cfg.potential
    curve = _potential(cfg, name)
    states = solve_bound_states(EffectivePotentialSpec(curve, cfg.reduced_mass, cfg.J), cfg.v_max)
    label = Path(name).stem if name not in ("ground", "excited", "reference") else name
    write_states(run.path(f"states_{label}_J{cfg.J}.txt"), states)
    run.wrote(run.path(f"states_{label}_J{cfg.J}.txt"))
    rows = [(s.v, s.J, s.energy_invcm, int(s.box_contaminated)) for s in states]
    run.columns(f"levels_{label}_J{cfg.J}.txt", "v J energy_cm-1 box_contaminated", rows)
    if run.figures:
        from lifinv import plotting

        veff = EffectivePotentialSpec(curve, cfg.reduced_mass, cfg.J).values() * HARTREE_TO_INVCM
        run.figure(f"states_{label}_J{cfg.J}.png", lambda p: plotting.plot_states(curve.r, veff, states, p))
    run.notes["levels_cm-1"] = [s.energy_invcm for s in states]


def cmd_synth(run: Run) -> None:
    cfg = run.cfg
    cfg.require_files("ground", "excited")
    ground = _potential(cfg, "ground")
    excited = _potential(cfg, "excited")
    full = synthesize_spectrum(ground, excited, cfg.reduced_mass, cfg.bands, cfg.n_lower)
    kept = apply_threshold(full, cfg.threshold, cfg.threshold_mode)
    head = [f"reduced_mass_amu: {cfg.reduced_mass_amu!r}", f"n_lower: {cfg.n_lower}"]
    write_spectrum(run.path("spectrum_full.txt"), full, head + ["unthresholded forward model, raw f^2"])
    run.wrote(run.path("spectrum_full.txt"))
    write_spectrum(run.path("spectrum.txt"), kept, head)
    run.wrote(run.path("spectrum.txt"))
    run.columns(
        "stick.txt",
        f"threshold: {cfg.threshold!r} {cfg.threshold_mode}\nomega_cm-1 intensity",
        stick_table(kept),
    )
    if run.figures:
        from lifinv import plotting

        run.figure("stick.png", lambda p: plotting.plot_stick_spectrum(kept, p, cfg.threshold))
    run.notes["line_counts"] = {_fmt_band(b): n for b, n in kept.counts().items()}


def _fit(run: Run):
    cfg = run.cfg
    cfg.require_files("ground")
    ground = _potential(cfg, "ground")
    measured, origin = _measured_spectrum(cfg, ground)
    run.notes["spectrum_source"] = origin
    return ground, measured


def _write_morse(run: Run, energy_fit, re_fit, grid) -> None:
    cfg = run.cfg
    run.text("morse_fit.txt", fit_summary(energy_fit, re_fit, cfg.reduced_mass, grid))
    run.columns("misfit.txt", "R_e_bohr misfit", np.column_stack([re_fit.scan_r, re_fit.scan_misfit]))
    if run.figures:
        from lifinv import plotting

        run.figure("misfit.png", lambda p: plotting.plot_misfit(re_fit.scan_r, re_fit.scan_misfit, re_fit.R_e, p))


def cmd_fit_morse(run: Run) -> None:
    cfg = run.cfg
    ground, measured = _fit(run)
    gs = ground_states_for(measured, ground, cfg.reduced_mass, cfg.n_lower)
    energy_fit, re_fit = fit_morse_model(measured, ground, cfg.reduced_mass, gs, _pipeline_config(cfg), cfg.jobs)
    _write_morse(run, energy_fit, re_fit, ground.grid)
    p = energy_fit.params(re_fit.R_e)
    run.notes["morse"] = {"T_e": p.T_e, "D_e": p.D_e, "beta": p.beta, "R_e": p.R_e}


def _overlap_table(overlaps) -> str:
    out = ["# scale per band: " + " ".join(f"{_fmt_band(b)}={s:.10g}" for b, s in overlaps.scales.items()),
           "# v_upper J_upper v_lower d omega_cm-1 provenance"]
    for band in overlaps.bands:
        for e in overlaps.entries[band]:
            out.append(f"{band[0]} {band[1]} {e.i} {e.d:.12e} {e.omega:.8f} {e.provenance}")
    return "\n".join(out) + "\n"


def _diagnostics(ext) -> np.ndarray:
    r = ext.grid.r
    inside = np.zeros(r.size, dtype=int)
    inside[ext.valid_slice] = 1
    peak = ext.density.max()
    return np.column_stack([r, ext.density / peak, ext.raw * HARTREE_TO_INVCM, inside])


def cmd_invert(run: Run) -> None:
    cfg = run.cfg
    ground, measured = _fit(run)
    reference = None
    if cfg.reference is not None:
        cfg.require_files("reference")
        reference = _potential(cfg, "reference")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = extract(measured, ground, cfg.reduced_mass, _pipeline_config(cfg), cfg.jobs)
        measured_only = result.measured_only()
        thresholded = result.overlaps.only("measured").completeness()
    ext = result.extracted
    run.notes["warnings"] = [str(w.message) for w in caught]

    write_spectrum(run.path("spectrum_measured.txt"), measured)
    run.wrote(run.path("spectrum_measured.txt"))
    write_potential(run.path("extracted_potential.txt"), ext.curve, [
        f"valid_range_bohr: {ext.valid_range[0]:.6f} {ext.valid_range[1]:.6f}",
        f"extrapolation: {ext.extrapolation_spec}",
        f"density_cutoff: {ext.density_cutoff!r}",
    ])
    run.wrote(run.path("extracted_potential.txt"))
    write_potential(run.path("extracted_measured_only.txt"), measured_only.curve, ["measured lines only"])
    run.wrote(run.path("extracted_measured_only.txt"))
    write_potential(run.path("morse_model.txt"), PotentialCurve.from_invcm(ground.grid, _morse_invcm(result, ground)))
    run.wrote(run.path("morse_model.txt"))
    head = [
        f"valid_range_bohr: {ext.valid_range[0]:.6f} {ext.valid_range[1]:.6f}",
        f"density_cutoff: {ext.density_cutoff!r}",
        f"extrapolation: {ext.extrapolation_spec}",
        "completeness: " + " ".join(f"{_fmt_band(b)}={c:.8f}" for b, c in ext.completeness.items()),
        f"config_sha256: {cfg.digest()}",
        *(f"config: {line}" for line in dump_config(cfg).splitlines()),
        "R_bohr relative_density raw_V_cm-1 in_valid_range",
    ]
    run.columns("extraction_diagnostics.txt", "\n".join(head), _diagnostics(ext))
    run.text("overlaps.txt", _overlap_table(result.overlaps))
    _write_morse(run, result.energy_fit, result.re_fit, ground.grid)

    regions, scores, scores_mo = None, None, None
    if reference is not None:
        regions = regions_from_reference(reference, cfg.reduced_mass, cfg.regions, cfg.region_J)
        scores = score_regions(ext.curve, reference, regions, cfg.align)
        scores_mo = score_regions(measured_only.curve, reference, regions, cfg.align)
    run.text("report.txt", _invert_report(cfg, result, measured_only, thresholded, regions, scores, scores_mo))

    ref_cm = reference.invcm if reference is not None else np.full(ground.grid.n_points, np.nan)
    table = np.column_stack([ground.r, ext.curve.invcm, measured_only.curve.invcm, _morse_invcm(result, ground), ref_cm])
    run.columns("potentials.txt", "R_bohr extracted_cm-1 measured_only_cm-1 morse_cm-1 reference_cm-1", table)
    if run.figures:
        from lifinv import plotting

        window = _plot_window(ext, result)
        run.figure("extraction.png", lambda p: plotting.plot_extraction(
            ground.r, ext.curve.invcm, _morse_invcm(result, ground),
            None if reference is None else reference.invcm, ext.valid_range, p, window))
        run.figure("stick.png", lambda p: plotting.plot_stick_spectrum(measured, p, cfg.threshold))
    run.notes["region_rms_cm-1"] = scores
    run.notes["completeness"] = {_fmt_band(b): c for b, c in ext.completeness.items()}


def _morse_invcm(result, ground) -> np.ndarray:
    from lifinv.morse import morse_eval

    return morse_eval(result.morse, ground.r)


def _plot_window(ext, result):
    lo, hi = ext.valid_range
    span = hi - lo
    floor = result.morse.T_e - result.morse.D_e
    return (lo - 0.3 * span, hi + 0.3 * span, floor - 0.05 * result.morse.D_e, floor + 0.6 * result.morse.D_e)


def _invert_report(cfg, result, measured_only, thresholded, regions, scores, scores_mo) -> str:
    ext = result.extracted
    m = result.morse
    out = ["# extraction report", f"lifinv {__version__}", ""]
    out.append("[settings]")
    out.append(f"threshold {cfg.threshold} ({cfg.threshold_mode})")
    out.append(f"n_lower {cfg.n_lower}")
    out.append(f"density_cutoff {cfg.density_cutoff}")
    out.append(f"extrapolation {ext.extrapolation_spec}")
    out.append(f"intensity_scale {cfg.scale}")
    out.append("rotation effective potential V(R) + J(J+1)/(2 mu R^2), same J on both states")
    out.append("")
    out.append("[lines]")
    out.append("# band measured regenerated")
    for band in result.overlaps.bands:
        out.append(f"{_fmt_band(band)} {result.overlaps.counts('measured').get(band, 0)} "
                   f"{result.overlaps.counts('regenerated').get(band, 0)}")
    out.append("")
    out.append("[morse]")
    out.append(f"T_e_cm-1 {m.T_e:.6f}")
    out.append(f"D_e_cm-1 {m.D_e:.6f}")
    out.append(f"beta_bohr-1 {m.beta:.8f}")
    out.append(f"R_e_bohr {m.R_e:.6f}")
    out.append("")
    out.append("[completeness]")
    out.append("# band measured_only after_regeneration")
    low = []
    for band in result.overlaps.bands:
        c = ext.completeness[band]
        out.append(f"{_fmt_band(band)} {thresholded.get(band, 0.0):.6f} {c:.6f}")
        if c < COMPLETENESS_FLOOR:
            low.append(band)
    if low:
        out.append(f"WARNING completeness below {COMPLETENESS_FLOOR} for bands "
                   + ", ".join(_fmt_band(b) for b in low))
    out.append("")
    out.append("[inversion]")
    out.append(f"valid_range_bohr {ext.valid_range[0]:.6f} {ext.valid_range[1]:.6f}")
    for side, (r, v, g, how) in sorted(ext.junctions.items()):
        out.append(f"junction_{side} R={r:.6f} V_cm-1={v * HARTREE_TO_INVCM:.4f} "
                   f"slope_cm-1/bohr={g * HARTREE_TO_INVCM:.4f} {how}")
    out.append("")
    out.append("[scores]")
    if scores is None:
        out.append("absent: no reference potential given")
    else:
        out.append("# region cutoff_cm-1 rms_cm-1 rms_measured_only_cm-1")
        for r in regions:
            out.append(f"{r.label} {r.energy_cutoff:.4f} {scores[r.label]:.6f} {scores_mo[r.label]:.6f}")
    return "\n".join(out) + "\n"


def cmd_noise_study(run: Run) -> None:
    cfg = run.cfg
    ground, measured = _fit(run)
    cfg.require_files("reference")
    reference = _potential(cfg, "reference")
    base = extract(measured, ground, cfg.reduced_mass, _pipeline_config(cfg), cfg.jobs)
    regions = regions_from_reference(reference, cfg.reduced_mass, cfg.regions, cfg.region_J)
    study_cfg = NoiseStudyConfig(cfg.noise_levels, cfg.n_trials, cfg.seed, cfg.noise_distribution)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = run_noise_study(base, reference, regions, study_cfg, cfg.jobs, cfg.align)
    run.notes["warnings"] = sorted({str(w.message) for w in caught})
    run.text("noise_table.txt", result.table())
    curves = {}
    for lv in result.levels:
        if lv.average_curve is None:
            continue
        name = f"average_potential_{lv.level * 100:g}pct.txt"
        write_potential(run.path(name), lv.average_curve, [f"average over {lv.n_ok} trials at {lv.level:g} relative rms"])
        run.wrote(run.path(name))
        curves[f"{lv.level * 100:g}%"] = lv.average_curve.invcm
    if run.figures and curves:
        from lifinv import plotting

        window = _plot_window(base.extracted, base)
        run.figure("noise_study.png", lambda p: plotting.plot_noise_study(reference.r, curves, reference.invcm, p, window))
    run.notes["noise_failed"] = {f"{lv.level:g}": lv.n_failed for lv in result.levels}
    run.notes["noise_clamped"] = {f"{lv.level:g}": lv.n_clamped for lv in result.levels}


def cmd_rms(run: Run, test_path: Path | None) -> None:
    cfg = run.cfg
    if test_path is None:
        raise FileNotFoundError("rms needs --test (a potential file)")
    cfg.require_files("reference")
    test = _potential(cfg, test_path)
    reference = _potential(cfg, "reference")
    regions = regions_from_reference(reference, cfg.reduced_mass, cfg.regions, cfg.region_J)
    scores = score_regions(test, reference, regions, cfg.align)
    run.text("rms.txt", format_region_table(scores, regions))
    run.notes["region_rms_cm-1"] = scores


def cmd_twin(run: Run) -> None:
    """Write the synthetic twin potentials and a ready-to-run config."""
    from lifinv.twin import build_twin

    twin = build_twin(run.cfg.radial_grid)
    write_potential(run.path("ground.txt"), twin.ground, ["synthetic twin ground curve (Morse)"])
    run.wrote(run.path("ground.txt"))
    write_potential(run.path("excited.txt"), twin.excited, ["synthetic twin excited truth (Morse + tanh step)"])
    run.wrote(run.path("excited.txt"))
    cfg = RunConfig(ground=Path("ground.txt"), excited=Path("excited.txt"), reference=Path("excited.txt"),
                    grid=run.cfg.grid, mass_amu=twin.mass_amu, bands=twin.bands, out=Path("run"))
    run.text("twin.cfg", "# synthetic twin; paths are relative to this file\n" + dump_config(cfg))


COMMANDS = {
    "solve": (cmd_solve, "solve for bound states of a potential"),
    "synth": (cmd_synth, "forward-model and threshold an emission spectrum"),
    "fit-morse": (cmd_fit_morse, "fit the Morse model to band origins and intensities"),
    "invert": (cmd_invert, "extract the excited potential"),
    "noise-study": (cmd_noise_study, "repeat the extraction under intensity noise"),
    "rms": (cmd_rms, "score a potential against the reference"),
    "twin": (cmd_twin, "write the synthetic twin fixtures and config"),
}

# flag dest -> RunConfig field
_FLAG_FIELDS = {
    "seed": "seed", "out": "out", "threshold": "threshold", "density_cutoff": "density_cutoff",
    "extrapolation": "extrapolation", "jobs": "jobs", "potential": "potential", "v_max": "v_max",
    "J": "J", "reference": "reference", "ground": "ground", "excited": "excited", "spectrum": "spectrum",
    "n_trials": "n_trials", "r_unit": "r_unit",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value run configuration file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", type=Path, help="output directory (overrides $LIFINV_OUT)")
    common.add_argument("--threshold", type=float, help="fraction of the strongest line kept as measured")
    common.add_argument("--density-cutoff", type=float)
    common.add_argument("--extrapolation", choices=("morse-continuation", "linear-slope"))
    common.add_argument("--jobs", type=int)
    common.add_argument("--ground", type=Path)
    common.add_argument("--excited", type=Path)
    common.add_argument("--reference", type=Path)
    common.add_argument("--spectrum", type=Path)
    common.add_argument("--angstrom", dest="r_unit", action="store_const", const="angstrom",
                        help="read R columns of potential files in angstrom")
    common.add_argument("--no-figures", action="store_true", help="skip matplotlib figures")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="lifinv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"lifinv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "solve":
            p.add_argument("--potential", help="ground | excited | reference | a path")
            p.add_argument("--v-max", type=int)
            p.add_argument("--J", type=int)
        elif name == "rms":
            p.add_argument("--test", type=Path, required=True, help="potential file to score")
        elif name == "noise-study":
            p.add_argument("--n-trials", type=int)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    overrides = {f: getattr(args, d, None) for d, f in _FLAG_FIELDS.items()}
    if args.no_figures:
        overrides["figures"] = False
    func = COMMANDS[args.command][0]
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config, overrides)
        run = Run(cfg, args.command, argv)
        if args.command == "rms":
            func(run, args.test)
        else:
            func(run)
        run.finish({"elapsed_s": round(time.perf_counter() - t0, 3)})
    except TooFewBoundStatesError as exc:
        print(f"lifinv: error: {exc} (bound states found: {exc.found})", file=sys.stderr)
        return EXIT_FAILED
    except FileNotFoundError as exc:
        print(f"lifinv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LifinvError, ValueError, OSError) as exc:
        print(f"lifinv: error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    print(f"{args.command}: wrote {len(run.outputs) + 1} files to {run.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
