"""Command-line entry point: ``bnnlp run | simulate | shocks``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path


from .config import RunConfig, load_config
from .exceptions import ConfigError, DataError, InvalidInputError, NumericError
from .pipeline import StageError, compute_shock, run_pipeline
from .synth import KINDS, DgpSpec, export_csv, generate

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

logger = logging.getLogger("bnnlp")


def _common(p: argparse.ArgumentParser, config_required: bool) -> None:
    p.add_argument("--config", required=config_required, help="YAML/JSON run configuration")
    p.add_argument("--seed", type=int, help="override the chain seed")
    p.add_argument("--threads", type=int, default=1, help="target variables estimated concurrently")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bnnlp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    _common(sub.add_parser("run", help="full pipeline: shocks, sequential BNN-LPs, impulse responses"), True)
    _common(sub.add_parser("shocks", help="recursive structural shock only"), True)

    sim = sub.add_parser("simulate", help="write a synthetic panel in the input CSV schema")
    _common(sim, False)
    sim.add_argument("--kind", choices=KINDS, default="linear")
    sim.add_argument("--T", type=int, default=500)
    sim.add_argument("--noise-sd", type=float, default=0.5)
    sim.add_argument("--horizons", type=int, default=24, help="horizons in the ground-truth table")
    return parser


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, chain=replace(cfg.chain, seed=args.seed))
    return cfg


def cmd_run(args) -> int:
    cfg = _load(args)
    paths = run_pipeline(cfg, threads=args.threads, out_dir=args.out)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return EXIT_OK


def cmd_shocks(args) -> int:
    from .data import load_and_transform

    cfg = _load(args)
    panel = load_and_transform(cfg.dataset, cfg.variable_order)
    shock = compute_shock(panel, cfg)
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "shocks.csv"
    with path.open("w") as fh:
        fh.write("date,zeta\n")
        for t, z in zip(shock.time_index, shock.zeta):
            fh.write(f"{t},{format(float(z), '.12g')}\n")
    print(f"shocks: {path}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    seed = 0 if args.seed is None else args.seed
    data = generate(DgpSpec(kind=args.kind, T=args.T, noise_sd=args.noise_sd, seed=seed))
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    export_csv(data, out / "panel.csv")
    with (out / "ground_truth.csv").open("w") as fh:
        fh.write("horizon,tau,nlp\n")
        for h in range(args.horizons + 1):
            for tau in (1.0, -1.0, 3.0):
                fh.write(f"{h},{tau:g},{format(data.ground_truth_nlp(h, tau), '.12g')}\n")
    print(f"panel: {out / 'panel.csv'}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "shocks": cmd_shocks, "simulate": cmd_simulate}[args.command]
    try:
        return handler(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _code(exc.error)
    except (ConfigError, DataError, InvalidInputError, NumericError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _code(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def _code(exc: Exception) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, NumericError):
        return EXIT_NUMERIC
    return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
