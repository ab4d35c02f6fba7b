"""Command line entry point: ``mlmc-clt {plan,simulate,diagnose,regime}``.

Exit codes: 0 success, 1 runtime failure, 2 configuration or rate-admissibility rejection.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, validate
from .diagnostics import diagnose
from .engine import run_experiment
from .normality import normality_report, qq_points, write_qq_csv
from .rates import InadmissibleRatesError, classify_regime, variance_ratio

log = logging.getLogger("mlmc_clt")


def _dump(document: dict, schema: str, path: Path) -> None:
    validate(document, schema)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document, indent=2, allow_nan=False) + "\n")


def _plan_dict(plan) -> dict:
    return {**plan.as_dict(), "variance_ratio": variance_ratio(plan)}


def cmd_plan(cfg: ExperimentConfig, out: Path) -> dict:
    family = cfg.build_family()
    rates = cfg.build_rates(family)
    doc = {
        "family": family.describe(),
        "rates": rates.as_dict(),
        "regime": classify_regime(rates, family.tail_descriptor()).as_dict(),
    }
    if cfg.sweep:
        doc["sweep"] = [_plan_dict(family.plan(e, rates)) for e in cfg.epsilons]
    else:
        if cfg.epsilon is None:
            raise ConfigError("plan needs 'epsilon' (or --sweep with 'epsilons')")
        doc.update(_plan_dict(family.plan(cfg.epsilon, rates)))
    _dump(doc, "plan", out / "plan.json")
    return doc


def cmd_simulate(cfg: ExperimentConfig, out: Path) -> dict:
    if cfg.epsilon is None:
        raise ConfigError("simulate needs 'epsilon'")
    if cfg.replications < 100:
        log.warning("only %d replications; normality statistics will be noisy", cfg.replications)
    family = cfg.build_family()
    rates = cfg.build_rates(family)
    plan = family.plan(cfg.epsilon, rates)
    result = run_experiment(family, plan, cfg.replications, cfg.seed, threads=cfg.threads)

    out.mkdir(parents=True, exist_ok=True)
    values = [] if result.degenerate else result.normalized.tolist()
    with open(out / "samples.csv", "w") as fh:
        fh.writelines(f"{v:.17g}\n" for v in values)
    if len(values) >= 2:
        write_qq_csv(out / "qq.csv", qq_points(values))

    doc = {
        **normality_report(values).as_dict(),
        "degenerate": result.degenerate,
        "seed": cfg.seed,
        "replications": cfg.replications,
        "epsilon": plan.epsilon,
        "L": plan.L,
        "fine_mean": result.fine_mean,
        "predicted_variance": plan.predicted_variance,
        "total_cost": plan.total_cost,
        "family": family.describe(),
        "notes": result.notes,
    }
    _dump(doc, "normality", out / "normality.json")
    return doc


def cmd_diagnose(cfg: ExperimentConfig, out: Path) -> dict:
    family = cfg.build_family()
    rates = cfg.build_rates(family)
    report = diagnose(
        family,
        cfg.epsilons,
        nus=cfg.nu,
        rates=rates,
        ui_x=cfg.ui_x,
        max_level=cfg.max_level,
        witness_levels=cfg.witness_levels,
    )
    doc = report.as_dict()
    _dump(doc, "diagnostics", out / "diagnostics.json")
    return doc


def cmd_regime(cfg: ExperimentConfig, out: Path) -> dict:
    family = cfg.build_family()
    raw = cfg.raw_rates(family)
    tail = family.tail_descriptor()
    doc = {
        "family": family.describe(),
        "rates": dict(zip(("alpha", "beta", "gamma", "c_alpha"), raw)),
        "regime": classify_regime(raw, tail).as_dict(),
        "tail": tail.as_dict(),
    }
    _dump(doc, "regime", out / "regime.json")
    return doc


COMMANDS = {"plan": cmd_plan, "simulate": cmd_simulate, "diagnose": cmd_diagnose, "regime": cmd_regime}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlmc-clt", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--out", help="output directory (overrides output_dir)")
    parser.add_argument("--threads", type=int, help="worker threads for replications")
    parser.add_argument("--seed", type=int, help="64-bit seed (overrides config)")
    parser.add_argument("--sweep", action="store_true", help="expand the epsilon grid")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg.seed = args.seed
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads must be at least 1")
            cfg.threads = args.threads
        cfg.sweep = cfg.sweep or args.sweep
        out = Path(args.out or cfg.output_dir)
        doc = COMMANDS[args.command](cfg, out)
    except (ConfigError, InadmissibleRatesError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.exception("runtime failure: %s", exc)
        return 1
    if args.command == "regime":
        print(json.dumps(doc["regime"]))
    else:
        print(f"wrote {args.command} output to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
