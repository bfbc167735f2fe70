"""Command line entry point: ``robustdoa solve`` and the ``sweep-*`` benchmarks."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .admm import AdmmConfig, DivergenceError
from .array_model import AngleGrid, ArrayGeometry, ArrayScenario, synthesize
from .bench import ExperimentSpec, estimate_doas, results_to_csv, run_sweep
from .prox import MlcParams

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2
FULL_SCALE_TRIALS = 1000

SCENARIO_KEYS = {
    "num_elements",
    "element_spacing_over_wavelength",
    "true_doas_deg",
    "num_snapshots",
    "snr_db",
    "sor_db",
    "outlier_prob",
    "coherent",
    "rng_seed",
}
SOLVER_KEYS = {"lambda1", "lambda2", "rho", "beta", "tol", "max_iters", "reweight_steps", "init", "mlc"}
MLC_KEYS = {"lam", "gamma", "eta"}
OTHER_KEYS = {"grid_spacing_deg"}

# axis -> (subcommand, default sweep values)
SWEEPS = {
    "snr": ("sweep-snr", (0, 5, 10, 15, 20)),
    "snapshots": ("sweep-snapshots", (10, 20, 30, 50, 100)),
    "outlier_prob": ("sweep-outlier-prob", (0.02, 0.05, 0.1, 0.15, 0.2)),
    "separation": ("sweep-separation", (0.5, 1, 2, 4, 6, 8, 10)),
    "coherent_snr": ("sweep-coherent", (0, 5, 10, 15, 20)),
}


class ConfigError(ValueError):
    pass


def load_config(source):
    """Parse a JSON scenario/solver config into ``(scenario, cfg, grid)``.

    ``source`` is a path or an already-decoded mapping. Solver keys are
    optional; missing ones follow the SNR preset. Unknown keys raise
    ``ConfigError``.
    """
    if isinstance(source, dict):
        raw = dict(source)
    else:
        try:
            with open(source) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {source}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")

    unknown = set(raw) - SCENARIO_KEYS - SOLVER_KEYS - OTHER_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    mlc = raw.get("mlc", {})
    if not isinstance(mlc, dict) or set(mlc) - MLC_KEYS:
        raise ConfigError(f"mlc must be an object with keys among {sorted(MLC_KEYS)}")

    try:
        geometry = ArrayGeometry(
            int(raw.get("num_elements", 10)),
            float(raw.get("element_spacing_over_wavelength", 0.5)),
        )
        scenario = ArrayScenario(
            geometry=geometry,
            true_doas_deg=tuple(raw["true_doas_deg"]),
            num_snapshots=int(raw.get("num_snapshots", 30)),
            snr_db=float(raw.get("snr_db", 10.0)),
            sor_db=float(raw.get("sor_db", -20.0)),
            outlier_prob=float(raw.get("outlier_prob", 0.1)),
            coherent=bool(raw.get("coherent", False)),
            rng_seed=int(raw.get("rng_seed", 0)),
        )
        overrides = {k: raw[k] for k in SOLVER_KEYS - {"mlc"} if k in raw}
        if mlc:
            overrides["mlc"] = MlcParams(**{k: float(v) for k, v in mlc.items()})
        cfg = AdmmConfig.for_snr(scenario.snr_db, **overrides)
        grid = AngleGrid.uniform(float(raw.get("grid_spacing_deg", 2.0)))
        grid.check_sources(scenario.num_sources)
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return scenario, cfg, grid


def _cmd_solve(args) -> int:
    scenario, cfg, grid = load_config(args.config)
    data = synthesize(scenario)
    try:
        out = estimate_doas(data.observations, scenario.geometry, grid, scenario.num_sources, cfg)
    except DivergenceError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_NUMERICAL
    support = np.argwhere(np.abs(out.admm.O) > args.support_threshold)
    report = {
        "doas_deg": [float(x) for x in out.doas_deg],
        "ongrid_doas_deg": [float(x) for x in out.picks.angles_deg],
        "true_doas_deg": list(scenario.true_doas_deg),
        "refined": out.refined,
        "admm_iterations": out.admm.iterations,
        "admm_converged": out.admm.converged,
        "outlier_support": support.tolist(),
    }
    print(json.dumps(report, indent=2))
    return EXIT_OK


def _base_scenario(args) -> ArrayScenario:
    return ArrayScenario(
        geometry=ArrayGeometry(args.elements),
        true_doas_deg=(-5.0, 25.0),
        num_snapshots=args.snapshots,
        snr_db=args.snr,
        sor_db=args.sor,
        outlier_prob=args.outlier_prob,
    )


def _cmd_sweep(args) -> int:
    axis = args.axis
    values = tuple(sorted(args.values)) if args.values else SWEEPS[axis][1]
    trials = FULL_SCALE_TRIALS if args.full_scale else args.trials
    methods = ("proposed", "music") if args.baseline == "music" else ("proposed",)
    try:
        spec = ExperimentSpec(
            sweep_axis=axis,
            sweep_values=values,
            scenario_template=_base_scenario(args),
            num_trials=trials,
            grid_spacing_deg=args.grid_spacing,
            master_seed=args.seed,
            methods=methods,
        )
        AngleGrid.uniform(args.grid_spacing)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    results = run_sweep(spec, workers=args.workers)
    text = results_to_csv(results, axis, args.seed, timing=args.timing)
    if args.out and args.out != "-":
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if any(r.failures == r.trials for r in results):
        return EXIT_NUMERICAL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustdoa", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="estimate DOAs for one configured scenario, print JSON")
    p.add_argument("--config", required=True, help="JSON file with scenario and solver keys")
    p.add_argument("--support-threshold", type=float, default=0.0,
                   help="report outlier entries with modulus above this value")
    p.set_defaults(func=_cmd_solve)

    for axis, (name, _) in SWEEPS.items():
        p = sub.add_parser(name, help=f"Monte Carlo sweep over {axis}, CSV output")
        p.add_argument("--trials", type=int, default=100)
        p.add_argument("--full-scale", action="store_true", help=f"{FULL_SCALE_TRIALS} trials per point")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--grid-spacing", type=float, default=2.0)
        p.add_argument("--out", default="-", help="CSV path, '-' for stdout")
        p.add_argument("--baseline", choices=["music"], help="add a comparator method")
        p.add_argument("--values", type=float, nargs="+", help="override the swept values")
        p.add_argument("--elements", type=int, default=10)
        p.add_argument("--snapshots", type=int, default=30)
        p.add_argument("--snr", type=float, default=10.0)
        p.add_argument("--sor", type=float, default=-20.0)
        p.add_argument("--outlier-prob", type=float, default=0.1)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--timing", action="store_true", help="fill mean_runtime_ms (breaks byte-identical output)")
        p.set_defaults(func=_cmd_sweep, axis=axis)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"robustdoa: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
