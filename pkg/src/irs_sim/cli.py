"""Command-line interface: run experiments, validate configs, list the catalog.

Exit codes: 0 success, 2 validation failure (bad config document, unknown
experiment, invalid parameter), 3 I/O failure (unreadable config, unwritable
output path).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .config import SystemConfig
from .experiments import (
    ExperimentSpec,
    SweepAxis,
    default_spec,
    describe_experiments,
    experiment_axis,
    experiment_names,
    run_experiment,
)
from .power_energy import EnergyConfig, PowerScalingConfig
from .report import emit

_TOP_KEYS = {"experiment", "system", "sweep", "trials", "seed", "energy", "scaling"}
_SWEEP_KEYS = {"variable", "values"}
_ENERGY_KEYS = {"rho", "zeta", "tau_pilot"}
_SCALING_KEYS = {"E_u", "k", "csi_mode", "alpha"}


def _check_keys(given: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(given) - allowed)
    if unknown:
        raise ValueError(
            f"unknown {where} key(s): {', '.join(unknown)}; "
            f"allowed: {', '.join(sorted(allowed))}"
        )


def load_overrides(path: str) -> dict:
    """Read and structurally validate a JSON config document (fail-closed)."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("config document must be a JSON object")
    _check_keys(doc, _TOP_KEYS, "config")
    if "system" in doc:
        if not isinstance(doc["system"], dict):
            raise ValueError("'system' must be an object of SystemConfig fields")
        _check_keys(doc["system"], set(SystemConfig.field_names()), "system")
    if "sweep" in doc:
        if not isinstance(doc["sweep"], dict):
            raise ValueError("'sweep' must be an object with variable/values")
        _check_keys(doc["sweep"], _SWEEP_KEYS, "sweep")
        if "values" not in doc["sweep"]:
            raise ValueError("'sweep' requires a 'values' list")
    if "energy" in doc:
        _check_keys(doc["energy"], _ENERGY_KEYS, "energy")
    if "scaling" in doc:
        _check_keys(doc["scaling"], _SCALING_KEYS, "scaling")
    if "trials" in doc and (not isinstance(doc["trials"], int) or doc["trials"] < 1):
        raise ValueError("'trials' must be a positive integer")
    if "seed" in doc and (not isinstance(doc["seed"], int) or doc["seed"] < 0):
        raise ValueError("'seed' must be a nonnegative integer")
    return doc


def build_spec(
    name: str,
    overrides: dict | None = None,
    seed: int | None = None,
    trials: int | None = None,
) -> ExperimentSpec:
    """Merge the catalog defaults, config document, and CLI flags into a spec."""
    spec = default_spec(name)
    doc = overrides or {}
    if "experiment" in doc and doc["experiment"] != name:
        raise ValueError(
            f"config document is for {doc['experiment']!r}, not {name!r}"
        )
    if "system" in doc:
        spec = replace(spec, config=spec.config.with_updates(**doc["system"]))
    if "sweep" in doc:
        variable = doc["sweep"].get("variable", experiment_axis(name))
        spec = replace(
            spec, sweep=SweepAxis(variable, tuple(doc["sweep"]["values"]))
        )
    if "energy" in doc:
        spec = replace(spec, energy=EnergyConfig(**doc["energy"]))
    if "scaling" in doc:
        spec = replace(spec, scaling=PowerScalingConfig(**doc["scaling"]))
    if "trials" in doc:
        spec = replace(spec, trials=doc["trials"])
    if "seed" in doc:
        spec = replace(spec, seed=doc["seed"])
    if trials is not None:
        spec = replace(spec, trials=trials)
    if seed is not None:
        spec = replace(spec, seed=seed)
    return spec


def _cmd_run(args) -> int:
    overrides = load_overrides(args.config) if args.config else None
    spec = build_spec(args.experiment, overrides, args.seed, args.trials)
    table = run_experiment(spec, workers=args.workers)
    emit(table, "csv", args.out)
    if args.plot:
        emit(table, "svg", args.plot)
    print(
        f"wrote {args.out}: {table.n_rows} rows, "
        f"trials={spec.trials}, seed={spec.seed}"
    )
    return 0


def _cmd_validate(args) -> int:
    doc = load_overrides(args.config)
    if "experiment" in doc:
        name = doc["experiment"]
        if name not in experiment_names():
            raise ValueError(
                f"unknown experiment {name!r}; known: {', '.join(experiment_names())}"
            )
        spec = build_spec(name, doc)
        print(f"ok: {args.config} (experiment {spec.name}, {len(spec.sweep.values)} sweep points)")
    else:
        # no experiment named: structural check plus SystemConfig field validation
        if "system" in doc:
            SystemConfig().with_updates(**doc["system"])
        print(f"ok: {args.config} (no experiment named; structure valid)")
    return 0


def _cmd_list(_args) -> int:
    for name, description in describe_experiments():
        print(f"{name:22s} {description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irs-sim",
        description="Deterministic Monte Carlo experiments for an IRS-assisted "
        "MISO link with transceiver distortion and phase noise.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment and write CSV (and optional SVG)")
    p_run.add_argument("--experiment", required=True, choices=experiment_names())
    p_run.add_argument("--config", help="JSON config document overriding the defaults")
    p_run.add_argument("--seed", type=int, help="master seed (64-bit unsigned)")
    p_run.add_argument("--trials", type=int, help="Monte Carlo trials per sweep cell")
    p_run.add_argument("--out", required=True, help="output CSV path")
    p_run.add_argument("--plot", help="optional SVG plot path")
    p_run.add_argument(
        "--workers", type=int, default=None,
        help="worker threads (results are identical at any count)",
    )
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="validate a JSON config document")
    p_val.add_argument("--config", required=True)
    p_val.set_defaults(func=_cmd_validate)

    p_list = sub.add_parser("list", help="print the experiment catalog")
    p_list.set_defaults(func=_cmd_list)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
