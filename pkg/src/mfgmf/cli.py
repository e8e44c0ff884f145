"""Command-line interface for the experiment harness.

Subcommands: ``banana``, ``l96``, ``sweep``, ``train-rom``, ``make-truth``.
Flags mirror the experiment-config fields in kebab-case; ``--config`` loads
the same fields from a JSON document, with explicit flags taking precedence.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .core import RngStream
from .errors import ConfigError, MfgmfError, RomFormatError
from .harness import (
    ExperimentConfig,
    emit_csv,
    make_lorenz96_truth,
    metadata_path,
    run_banana,
    run_lorenz96,
    run_sweep,
    save_truth,
    write_metadata,
)
from .models import lorenz96_model
from .rom import build_rom_surrogate, collect_training_data, save_rom, train_autoencoder

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

_CONFIG_FLAGS = [
    ("filter", str, "filter variant"),
    ("n-x", int, "theory ensemble size"),
    ("n-u", int, "surrogate ensemble size"),
    ("r-dim", int, "reduced dimension"),
    ("s-x", float, "theory bandwidth scaling"),
    ("s-u", float, "surrogate bandwidth scaling"),
    ("alpha-x", float, "theory inflation"),
    ("alpha-u", float, "surrogate inflation"),
    ("defensive", float, "defensive weight factor"),
    ("loc-radius", float, "localization radius (lorenz96)"),
    ("replicates", int, "Monte Carlo replicates"),
    ("steps", int, "assimilation cycles (lorenz96)"),
    ("spinup", int, "discarded leading cycles (lorenz96)"),
    ("seed", int, "base random seed"),
    ("rom-path", str, "surrogate model file"),
    ("truth-path", str, "precomputed truth file (lorenz96)"),
    ("out", str, "output CSV path"),
    ("workers", int, "parallel replicate workers (0 = auto)"),
    ("em-ascent-steps", int, "gradient-ascent steps per EM step"),
    ("em-step-size", float, "gradient-ascent step size"),
    ("em-fd-step", float, "finite-difference step for the EM gradient"),
    ("component-cap", int, "mixture component limit"),
    ("dump-density", str, "write panel densities to this JSON file (banana)"),
    ("dump-resolution", int, "dump grid nodes per axis"),
]

_GRID_FLAGS = [
    ("n-x-grid", int, "comma-separated theory ensemble sizes"),
    ("s-x-grid", float, "comma-separated s_x grid"),
    ("s-u-grid", float, "comma-separated s_u grid"),
    ("alpha-x-grid", float, "comma-separated alpha_x grid"),
    ("alpha-u-grid", float, "comma-separated alpha_u grid"),
]


def _add_experiment_flags(parser: argparse.ArgumentParser, grids: bool) -> None:
    parser.add_argument("--config", type=str, help="JSON config file")
    parser.add_argument("--paper-scale", action="store_true", default=None,
                        help="use the full publication-scale protocol")
    for name, kind, help_text in _CONFIG_FLAGS:
        parser.add_argument(f"--{name}", type=kind, help=help_text)
    if grids:
        for name, _, help_text in _GRID_FLAGS:
            parser.add_argument(f"--{name}", type=str, help=help_text)


def _parse_grid(text: str, kind):
    try:
        return [kind(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad grid value: {text!r}") from exc


def _build_config(args: argparse.Namespace, experiment: str) -> ExperimentConfig:
    data: dict = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as handle:
                data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    data["experiment"] = experiment
    for name, kind, _ in _CONFIG_FLAGS:
        attr = name.replace("-", "_")
        value = getattr(args, attr, None)
        if value is not None:
            data["out_path" if attr == "out" else attr] = value
    if getattr(args, "paper_scale", None):
        data["paper_scale"] = True
    for name, kind, _ in _GRID_FLAGS:
        attr = name.replace("-", "_")
        value = getattr(args, attr, None)
        if value is not None:
            data[attr] = _parse_grid(value, kind)
    return ExperimentConfig.from_dict(data)


def _finish(cfg: ExperimentConfig, rows, elapsed: float, extra: dict | None = None) -> None:
    if not cfg.out_path:
        raise ConfigError("an output CSV path is required (--out)")
    emit_csv(rows, cfg.out_path)
    write_metadata(metadata_path(cfg.out_path), cfg, elapsed, extra)
    print(f"wrote {len(rows)} rows to {cfg.out_path}")


def _cmd_banana(args) -> None:
    cfg = _build_config(args, "banana")
    start = time.perf_counter()
    rows = run_banana(cfg)
    _finish(cfg, rows, time.perf_counter() - start)


def _cmd_l96(args) -> None:
    cfg = _build_config(args, "lorenz96")
    start = time.perf_counter()
    rows = run_lorenz96(cfg)
    _finish(cfg, rows, time.perf_counter() - start)


def _cmd_sweep(args) -> None:
    cfg = _build_config(args, "lorenz96")
    start = time.perf_counter()
    rows, summary = run_sweep(cfg)
    _finish(cfg, rows, time.perf_counter() - start, extra=summary)


def _cmd_train_rom(args) -> None:
    if args.r_dim is None or args.out is None:
        raise ConfigError("train-rom requires --r-dim and --out")
    model = lorenz96_model()
    data = collect_training_data(model, args.data_count, RngStream(args.seed, 1))
    autoencoder = train_autoencoder(data, args.r_dim, args.epochs, RngStream(args.seed, 2))
    surrogate = build_rom_surrogate(autoencoder, model, data)
    save_rom(autoencoder, surrogate.residual_mean, surrogate.residual_cov, args.out)
    print(f"trained r={args.r_dim} surrogate on {args.data_count} snapshots -> {args.out}")


def _cmd_make_truth(args) -> None:
    if args.out is None:
        raise ConfigError("make-truth requires --out")
    truth, observations = make_lorenz96_truth(args.steps, RngStream(args.seed, 0))
    save_truth(args.out, truth, observations)
    print(f"wrote {args.steps}-step truth and observations to {args.out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfgmf",
                                     description="multifidelity mixture filtering experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    banana = sub.add_parser("banana", help="static 2-D experiment")
    _add_experiment_flags(banana, grids=False)
    banana.set_defaults(func=_cmd_banana)

    l96 = sub.add_parser("l96", help="Lorenz '96 twin experiment")
    _add_experiment_flags(l96, grids=False)
    l96.set_defaults(func=_cmd_l96)

    sweep = sub.add_parser("sweep", help="Lorenz '96 parameter sweep")
    _add_experiment_flags(sweep, grids=True)
    sweep.set_defaults(func=_cmd_sweep)

    train = sub.add_parser("train-rom", help="train the surrogate autoencoder")
    train.add_argument("--r-dim", type=int, required=True)
    train.add_argument("--epochs", type=int, default=5000)
    train.add_argument("--data-count", type=int, default=2000)
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--out", type=str, required=True)
    train.set_defaults(func=_cmd_train_rom)

    truth = sub.add_parser("make-truth", help="generate a truth/observation file")
    truth.add_argument("--steps", type=int, default=600)
    truth.add_argument("--seed", type=int, default=0)
    truth.add_argument("--out", type=str, required=True)
    truth.set_defaults(func=_cmd_make_truth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, RomFormatError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MfgmfError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
