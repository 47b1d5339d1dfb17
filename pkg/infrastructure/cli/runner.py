"""Command-line entry point: ``python -m infrastructure.cli <subcommand> ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Callable, Optional, Sequence

from core.config import get_settings
from core.errors import ConfigurationError, DataError, UsageError
from infrastructure.cli import commands
from infrastructure.io.report_writer import dumps

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):  # type: ignore[override]
        raise UsageError(message)


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------
def _config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("config overrides")
    group.add_argument("--config", help="flat key = value config file")
    for flag, kind in (
        ("--epochs", int), ("--lr", float), ("--batch-size", int), ("--l2-lambda", float),
        ("--seed", int), ("--patience", int), ("--hidden-dim", int), ("--graph-layers", int),
        ("--classifier-hidden", int), ("--classifier-layers", int), ("--protein-channels", int),
        ("--protein-kernel", int), ("--dropout-rate", float), ("--mc-samples", int),
        ("--rng-seed", int), ("--stub-dim", int), ("--stub-seed", int), ("--noise-seed", int),
    ):
        group.add_argument(flag, type=kind)
    group.add_argument("--conv-axis", choices=("feature", "residue"))
    group.add_argument("--sigmas", help="comma separated noise levels, e.g. 0,0.1,0.2")


def _data_flags(parser: argparse.ArgumentParser, presplit: bool = False) -> None:
    parser.add_argument("--data", help="tab-separated smiles/protein/label file")
    parser.add_argument("--embeddings", help="protein embedding file (#dim=d TSV or .npz)")
    if presplit:
        parser.add_argument("--train")
        parser.add_argument("--valid")
        parser.add_argument("--test")


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = _ArgumentParser(prog="python -m infrastructure.cli", description="Bayesian drug-protein interaction engine")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    def add(name: str, handler: Callable, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(handler=handler)
        p.add_argument("--out", default=settings.output_dir, help="output directory")
        return p

    p = add("train", commands.cmd_train, "train a model and write checkpoint + history")
    _data_flags(p, presplit=True)
    _config_flags(p)

    for name, handler, help_text in (
        ("evaluate", commands.cmd_evaluate, "metrics with seen/unseen breakdown"),
        ("predict", commands.cmd_predict, "per-pair predictions with uncertainties"),
        ("noise-sweep", commands.cmd_noise_sweep, "ROC-AUC under Gaussian embedding noise"),
        ("confidence-curve", commands.cmd_confidence_curve, "accuracy of the most confident test pairs"),
        ("screen", commands.cmd_screen, "split a dataset into confident and flagged pairs"),
    ):
        p = add(name, handler, help_text)
        p.add_argument("--checkpoint", default=settings.checkpoint_path, required=settings.checkpoint_path is None)
        _data_flags(p)
        _config_flags(p)
        if name == "evaluate":
            p.add_argument("--no-mc", action="store_true", help="single dropout-off pass instead of MC sampling")
        if name == "predict":
            p.add_argument("--smiles")
            p.add_argument("--protein")
        if name == "noise-sweep":
            p.add_argument("--baseline-checkpoint", help="dropout-free model compared under the same noise")
        if name in ("confidence-curve", "screen"):
            choices = [k.value for k in commands.UncertaintyKind]
            p.add_argument("--kind", choices=choices + (["all"] if name == "confidence-curve" else []),
                           default="all" if name == "confidence-curve" else "total")
        if name == "screen":
            p.add_argument("--keep-fraction", type=float, default=0.9)

    p = add("size-sweep", commands.cmd_size_sweep, "uncertainty vs training-set size (1, 1/2, 1/4)")
    _data_flags(p, presplit=True)
    _config_flags(p)

    p = add("parse-smiles", commands.cmd_parse_smiles, "parse one SMILES string and show its graph")
    p.add_argument("smiles")
    p.add_argument("--features", action="store_true", help="include node and edge feature matrices")

    p = add("gen-synthetic", commands.cmd_gen_synthetic, "write a planted-rule synthetic dataset")
    p.add_argument("--pairs", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rho", type=float, default=0.0, help="label flip probability")
    p.add_argument("--negative-ratio", type=int, default=1, help="negatives per positive (1 or 3)")
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--name", default="synthetic.tsv")

    return parser


def _needs_data(args: argparse.Namespace) -> None:
    if args.command in ("evaluate", "noise-sweep", "confidence-curve", "screen") and not args.data:
        raise UsageError(f"{args.command} needs --data")


# ----------------------------------------------------------------------
# Entry point
# ----------------------------------------------------------------------
def main(argv: Optional[Sequence[str]] = None) -> int:
    settings = get_settings()
    logging.basicConfig(
        level=settings.log_level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _needs_data(args)
        summary = args.handler(args)
    except (UsageError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        logger.error("Data error: %s", exc)
        return EXIT_DATA
    except (ValueError, RuntimeError) as exc:
        logger.error("Runtime failure: %s", exc)
        return EXIT_RUNTIME

    print(dumps(summary))
    return EXIT_OK
