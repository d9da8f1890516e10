"""
Command-line surface: ``python -m src.cli <command> [flags]``.

Commands: simulate, sweep, fit, extract-g, crossing, classify. JSON reports go
to stdout and into ``--out``; logs go to stderr. Exit codes: 0 success,
2 input/parse/validation, 3 fit rank or degenerate mixing, 4 infeasible
g-factor solve, 1 anything else.
"""

import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Sequence

from src.utils.config import RunConfig
from src.utils.errors import FineStructureError, InfeasibleError
from src.utils.extraction import (
    GConvention,
    SplittingKind,
    SplittingSeries,
    average_series,
    classify_dot,
    classify_population,
    crossing_field,
    extrapolate_d0,
    fit_eq1,
    fit_zeeman,
    gfactors_from_zeeman,
    population_trends,
    series_from_spectra,
    solve_g_eq2,
    solve_g_equal_magnitude,
)
from src.utils.file_loader import FileLoader
from src.utils.model_core import k_eq2, perturbative_coefficients, sweep_field
from src.utils.spectra import DEFAULT_MARGIN, GridSpec, add_noise, derive_seed, synthesize

logger = logging.getLogger("src.cli")

EXIT_OK = 0
EXIT_UNEXPECTED = 1


def _strip_sigmas(series: SplittingSeries) -> SplittingSeries:
    return SplittingSeries.from_arrays(series.kind, series.fields, series.values)


def _emit(report: Dict[str, Any], config: RunConfig, name: str) -> None:
    FileLoader.save_json(report, os.path.join(config.out_dir, name))
    sys.stdout.write(FileLoader.to_json_string(report))


def _fit_report(fit, config: RunConfig, n_samples: int) -> Dict[str, Any]:
    return {
        "s0": fit.s0_hat,
        "K": fit.k_hat,
        "K_prime": fit.k_prime_hat,
        "r_percent": fit.r_percent,
        "crossing_field_T": crossing_field(fit, config.crossing_limit),
        "classification": classify_dot(fit, config.thresholds),
        "include_quartic": fit.include_quartic,
        "n_samples": n_samples,
    }


def cmd_sweep(config: RunConfig) -> int:
    """Sweep table and exact S / D_H / D_V series from the model."""
    params = config.dot_parameters()
    rows = sweep_field(params, config.b_start, config.b_end, config.steps)
    out = config.out_dir
    FileLoader.save_sweep_csv(rows, os.path.join(out, "sweep.csv"))
    ok = [r for r in rows if r.ok]
    fields = [r.b_x for r in ok if r.b_x >= 0]
    by_field = {r.b_x: r.fine_structure for r in ok}
    for kind, attr in ((SplittingKind.S, "s"), (SplittingKind.D_H, "d_h"), (SplittingKind.D_V, "d_v")):
        series = SplittingSeries.from_arrays(kind, fields, [getattr(by_field[b], attr) for b in fields])
        FileLoader.save_series_csv(series, os.path.join(out, f"series_{kind.value}.csv"))
    try:
        coefficients = perturbative_coefficients(params)
        k, k_prime = coefficients.k, coefficients.k_prime
    except FineStructureError as e:
        logger.warning("Perturbative coefficients unavailable: %s", e)
        k = k_prime = None
    report = {
        "K_eq2": k_eq2(params),
        "K": k,
        "K_prime": k_prime,
        "crossing_field_T": crossing_field(params, config.crossing_limit),
        "classification": classify_dot(params, config.thresholds),
        "flagged_rows": [r.index for r in rows if not r.ok],
        "n_rows": len(rows),
    }
    _emit(report, config, "sweep_report.json")
    return EXIT_OK


def cmd_simulate(config: RunConfig) -> int:
    """Per-field H/V spectra, the sweep table, and S / D_H / D_V read back from the spectra."""
    params = config.dot_parameters()
    out = config.out_dir
    spectra_dir = os.path.join(out, "spectra")
    rows = sweep_field(params, config.b_start, config.b_end, config.steps)
    FileLoader.save_sweep_csv(rows, os.path.join(out, "sweep.csv"))

    default_grid = GridSpec.default_for(params, config.include_biexciton)
    grid_spec = GridSpec(center=default_grid.center, span=default_grid.span, step=config.grid_step)
    seed = config.effective_seed
    x_window = (params.e0 - DEFAULT_MARGIN, params.e0 + DEFAULT_MARGIN)
    xx_center = params.e0 - params.xx_binding
    xx_window = (xx_center - DEFAULT_MARGIN, xx_center + DEFAULT_MARGIN)

    sweep = []
    files: List[str] = []
    for row in rows:
        if not row.ok:
            continue
        spectra = synthesize(
            params, row.b_x, config.power, grid_spec, include_biexciton=config.include_biexciton
        )
        noisy = []
        for channel, spectrum in enumerate(spectra):
            if config.sigma_rel > 0:
                spectrum = add_noise(spectrum, config.sigma_rel, derive_seed(seed, row.index, channel))
            stem = os.path.join(spectra_dir, f"B{row.index:03d}_{row.b_x:.4f}T_{spectrum.polarization.value}")
            files.append(FileLoader.save_spectrum_csv(spectrum, stem + ".csv"))
            if config.json_spectra:
                files.append(FileLoader.save_spectrum_json(spectrum, stem + ".json"))
            noisy.append(spectrum)
        sweep.append((row.b_x, noisy[0], noisy[1]))

    measured = series_from_spectra(sweep, window=x_window)
    for series in measured:
        FileLoader.save_series_csv(series, os.path.join(out, f"measured_{series.kind.value}.csv"))
    if config.include_biexciton:
        xx = series_from_spectra(sweep, window=xx_window)
        FileLoader.save_series_csv(xx.s, os.path.join(out, "measured_S_XX.csv"))
        FileLoader.save_series_csv(average_series(measured.s, xx.s), os.path.join(out, "measured_S_avg.csv"))

    report = {
        "n_fields": len(sweep),
        "n_spectrum_files": len(files),
        "seed": seed if config.sigma_rel > 0 else None,
        "omitted_fields_T": [o.b_x for o in measured.omitted],
        "flagged_rows": [r.index for r in rows if not r.ok],
    }
    _emit(report, config, "simulate_report.json")
    return EXIT_OK


def cmd_fit(config: RunConfig, series_path: str) -> int:
    series = FileLoader.load_series_csv(series_path, SplittingKind.S)
    if not config.weighted:
        series = _strip_sigmas(series)
    fit = fit_eq1(series, include_quartic=config.include_quartic)
    _emit(_fit_report(fit, config, len(series)), config, "fit_report.json")
    return EXIT_OK


def cmd_extract_g(config: RunConfig, d_h_path: str, d_v_path: str, s_path: str) -> int:
    d_h = FileLoader.load_series_csv(d_h_path, SplittingKind.D_H)
    d_v = FileLoader.load_series_csv(d_v_path, SplittingKind.D_V)
    s = FileLoader.load_series_csv(s_path, SplittingKind.S)
    if not config.weighted:
        d_h, d_v, s = _strip_sigmas(d_h), _strip_sigmas(d_v), _strip_sigmas(s)

    fit_h = fit_zeeman(d_h)
    fit_v = fit_zeeman(d_v)
    d0 = extrapolate_d0(fit_h, fit_v)
    # sigma0 is taken as zero, so the H/V intercept difference is S0
    s0 = fit_h.d_x0_hat - fit_v.d_x0_hat
    eq1 = fit_eq1(s, include_quartic=config.include_quartic)
    g_e_abs, g_h_abs = gfactors_from_zeeman(fit_h, fit_v)
    g_diff = config.g_diff if config.g_diff is not None else fit_v.g_hat
    convention = GConvention(config.g_convention)

    report: Dict[str, Any] = {
        "d0": d0,
        "d_h0": fit_h.d_x0_hat,
        "d_v0": fit_v.d_x0_hat,
        "s0": s0,
        "s0_eq1": eq1.s0_hat,
        "K": eq1.k_hat,
        "K_prime": eq1.k_prime_hat,
        "r_percent": eq1.r_percent,
        "g_H": fit_h.g_hat,
        "g_V": fit_v.g_hat,
        "g_H_r_percent": fit_h.r_percent,
        "g_V_r_percent": fit_v.r_percent,
        "g_e_abs": g_e_abs,
        "g_h_abs": g_h_abs,
        "equal_magnitude": list(solve_g_equal_magnitude(fit_h.g_hat)),
        "convention": convention.value,
        "g_diff": g_diff,
        "branches": [],
        "heuristic_pick": None,
        "picked": None,
        "discriminant": None,
        "error": None,
    }
    try:
        solution = solve_g_eq2(eq1.k_hat, s0, d0, g_diff, convention)
    except InfeasibleError as e:
        report["discriminant"] = e.discriminant
        report["error"] = str(e)
        _emit(report, config, "extract_g_report.json")
        return e.exit_code
    report.update(
        branches=[list(b) for b in solution.branches],
        heuristic_pick=solution.heuristic_pick,
        picked=None if solution.picked is None else list(solution.picked),
        discriminant=solution.discriminant,
    )
    _emit(report, config, "extract_g_report.json")
    return EXIT_OK


def cmd_crossing(config: RunConfig, series_path: Optional[str] = None) -> int:
    if series_path:
        series = FileLoader.load_series_csv(series_path, SplittingKind.S)
        model = fit_eq1(series if config.weighted else _strip_sigmas(series), include_quartic=config.include_quartic)
        source = "fit"
    else:
        model = config.dot_parameters()
        source = "model"
    report = {
        "crossing_field_T": crossing_field(model, config.crossing_limit),
        "b_max_T": config.crossing_limit,
        "source": source,
    }
    _emit(report, config, "crossing_report.json")
    return EXIT_OK


def cmd_classify(config: RunConfig, population_path: Optional[str] = None) -> int:
    if population_path:
        dots = FileLoader.load_population_csv(population_path)
        results = classify_population(dots, config.thresholds)
        trends = population_trends(dots)
        report: Dict[str, Any] = {
            "dots": [
                {"index": r.index, "classification": r.label, "crossing_field_T": r.crossing_field}
                for r in results
            ],
            "trends": {
                name: None if t is None else {"slope": t.slope, "intercept": t.intercept, "r_percent": t.r_percent}
                for name, t in trends.items()
            },
        }
    else:
        params = config.dot_parameters()
        report = {
            "classification": classify_dot(params, config.thresholds),
            "crossing_field_T": crossing_field(params, max(config.thresholds)),
        }
    _emit(report, config, "classify_report.json")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--seed", type=int, help="noise seed (falls back to $FINESTRUCT_SEED)")
    common.add_argument("--out", dest="out_dir", help="output directory")
    common.add_argument("--quartic", dest="include_quartic", action=argparse.BooleanOptionalAction, default=None,
                        help="include the B^4 term in S(B) fits")
    common.add_argument("--weights", dest="weighted", action=argparse.BooleanOptionalAction, default=None,
                        help="use inverse-variance weights when sigma_ueV is present")
    common.add_argument("--g-convention", choices=[c.value for c in GConvention])
    common.add_argument("--g-diff", type=float, help="g_e - g_h (or |g_e| - |g_h|) for the K solve")
    common.add_argument("--log-level", default="WARNING", help="logging level for stderr")
    dot = common.add_argument_group("dot parameters")
    for name, help_text in (
        ("s0", "zero-field bright splitting, ueV"),
        ("d0", "bright-dark exchange splitting, ueV"),
        ("sigma0", "dark-state splitting, ueV"),
        ("g-e", "in-plane electron g-factor"),
        ("g-h", "in-plane hole g-factor"),
        ("e0", "exciton emission energy, ueV"),
        ("gamma", "homogeneous linewidth FWHM, ueV"),
        ("xx-binding", "biexciton binding energy, ueV"),
        ("e-c", "confinement energy, meV"),
    ):
        dot.add_argument(f"--{name}", type=float, help=help_text)
    grid = common.add_argument_group("field grid and spectra")
    grid.add_argument("--b-start", type=float, help="first field, T")
    grid.add_argument("--b-end", type=float, help="last field, T")
    grid.add_argument("--steps", type=int, help="number of fields")
    grid.add_argument("--b-max", type=float, help="upper field for crossing searches, T")
    grid.add_argument("--thresholds", type=float, nargs="+", help="classification fields, T")
    grid.add_argument("--power", type=float, help="excitation power, arbitrary units")
    grid.add_argument("--grid-step", type=float, help="spectrum sample step, ueV")
    grid.add_argument("--sigma-rel", type=float, help="relative Gaussian noise level")
    grid.add_argument("--biexciton", dest="include_biexciton", action=argparse.BooleanOptionalAction, default=None)
    grid.add_argument("--json-spectra", dest="json_spectra", action=argparse.BooleanOptionalAction, default=None)

    parser = argparse.ArgumentParser(prog="finestruct", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="synthesize spectra over a field sweep")
    sub.add_parser("sweep", parents=[common], help="fine structure over a field sweep")
    p_fit = sub.add_parser("fit", parents=[common], help="fit S(B) from a splitting CSV")
    p_fit.add_argument("series", help="CSV with b_T,value_ueV[,sigma_ueV]")
    p_g = sub.add_parser("extract-g", parents=[common], help="D0 and g-factors from D_H, D_V and S CSVs")
    p_g.add_argument("d_h", help="D_H series CSV")
    p_g.add_argument("d_v", help="D_V series CSV")
    p_g.add_argument("s", help="S series CSV")
    p_cross = sub.add_parser("crossing", parents=[common], help="field where S crosses zero")
    p_cross.add_argument("--series", help="S series CSV; the fitted polynomial is searched instead of the model")
    p_cls = sub.add_parser("classify", parents=[common], help="crossing class of a dot or population")
    p_cls.add_argument("--population", help="CSV with s0_ueV,d0_ueV,g_e,g_h[,e_c_meV]")
    return parser


OVERRIDE_KEYS = (
    "seed", "out_dir", "include_quartic", "weighted", "g_convention", "g_diff",
    "s0", "d0", "sigma0", "g_e", "g_h", "e0", "gamma", "xx_binding", "e_c",
    "b_start", "b_end", "steps", "b_max", "thresholds", "power", "grid_step", "sigma_rel",
    "include_biexciton", "json_spectra",
)


def run(args: argparse.Namespace) -> int:
    overrides = {key: getattr(args, key, None) for key in OVERRIDE_KEYS}
    config = RunConfig.load(args.config, overrides)
    if args.command == "simulate":
        return cmd_simulate(config)
    if args.command == "sweep":
        return cmd_sweep(config)
    if args.command == "fit":
        return cmd_fit(config, args.series)
    if args.command == "extract-g":
        return cmd_extract_g(config, args.d_h, args.d_v, args.s)
    if args.command == "crossing":
        return cmd_crossing(config, args.series)
    if args.command == "classify":
        return cmd_classify(config, args.population)
    raise ValueError(f"unknown command {args.command}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return run(args)
    except FineStructureError as e:
        logger.error("%s", e)
        sys.stderr.write(f"error: {e}\n")
        return e.exit_code
    except Exception as e:
        logger.exception("Unexpected failure")
        sys.stderr.write(f"error: {e}\n")
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
