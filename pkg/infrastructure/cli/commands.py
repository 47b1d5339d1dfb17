"""Subcommand handlers. Each returns the JSON-serialisable summary printed on stdout."""
from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import Any, Optional

from core.errors import UsageError
from infrastructure.io.config_file import load_run_config
from infrastructure.io.embedding_store import load_embeddings
from infrastructure.io.report_writer import to_frame, write_csv, write_json
from models.interaction_model import DatasetSplit, InteractionRecord
from models.prediction_model import UncertaintyKind
from models.settings_model import RunConfig, StubEmbedderConfig
from services.dataset_service import GraphCache, ProteinResolver, ingest, load_presplit, split, write_dataset
from services.experiment_service import (
    curve_from_predictions,
    evaluate,
    mc_predictions,
    noise_sweep,
    noise_target,
    prediction_table,
    screen_low_confidence,
    size_sweep,
)
from services.featurizer_service import feature_tables, featurize
from services.metrics_service import training_entities
from services.model_service import DPIModel, load_model, save_model
from services.smiles_service import describe_molecule, parse_smiles, write_smiles
from services.synthetic_service import SyntheticSpec, generate
from services.training_service import train

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.bin"

# command-line flag dest -> flat config key
OVERRIDES = (
    "epochs", "lr", "batch_size", "l2_lambda", "seed", "patience",
    "hidden_dim", "graph_layers", "classifier_hidden", "classifier_layers",
    "protein_channels", "protein_kernel", "conv_axis", "dropout_rate",
    "mc_samples", "rng_seed", "stub_dim", "stub_seed", "sigmas", "noise_seed",
)


# ----------------------------------------------------------------------
# Helpers
# ----------------------------------------------------------------------
def run_config(args: argparse.Namespace, base: Optional[dict[str, Any]] = None) -> RunConfig:
    """``base`` < config file < explicit flags."""
    overrides = {key: getattr(args, key, None) for key in OVERRIDES}
    return load_run_config(getattr(args, "config", None), overrides, defaults=base)


def out_dir(args: argparse.Namespace) -> Path:
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def resolver_for(args: argparse.Namespace, stub: StubEmbedderConfig) -> ProteinResolver:
    embeddings = load_embeddings(args.embeddings) if getattr(args, "embeddings", None) else None
    return ProteinResolver(embeddings, stub)


def dataset_split(args: argparse.Namespace, config: RunConfig, resolver: ProteinResolver) -> DatasetSplit:
    if args.data:
        if args.train or args.valid or args.test:
            raise UsageError("use either --data or --train/--valid/--test")
        return split(ingest(args.data, resolver), seed=config.train.seed)
    if not (args.train and args.valid and args.test):
        raise UsageError("--data or all of --train, --valid and --test are required")
    return load_presplit(args.train, args.valid, args.test, resolver)


def checkpoint_echo(config: RunConfig, model: DPIModel, train_records: list[InteractionRecord]) -> dict[str, Any]:
    proteins, drugs = training_entities(train_records)
    return {
        "model": model.config.model_dump(mode="json"),
        "run": config.flat(),
        "stub": config.stub.model_dump(mode="json"),
        "train_proteins": sorted(proteins),
        "train_drugs": sorted(drugs),
    }


def echo_run_values(echo: dict[str, Any]) -> dict[str, Any]:
    """Training-time values a loaded model must be sampled and fed with.

    Stub settings make raw sequences embed as they did in training; the
    dropout rate keeps MC sampling on the training-time Bernoulli rate.
    """
    stub = echo.get("stub", {})
    values = {key: stub[key] for key in ("stub_dim", "stub_seed") if key in stub}
    rate = echo.get("model", {}).get("dropout_rate")
    if rate is not None:
        values["dropout_rate"] = rate
    return values


def records_for(args: argparse.Namespace, resolver: ProteinResolver) -> list[InteractionRecord]:
    return ingest(args.data, resolver, GraphCache())


def _mc_config(args: argparse.Namespace, config: RunConfig):
    return None if getattr(args, "no_mc", False) else config.mc


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------
def cmd_train(args: argparse.Namespace) -> dict[str, Any]:
    config = run_config(args)
    out = out_dir(args)
    resolver = resolver_for(args, config.stub)
    data = dataset_split(args, config, resolver)

    result = train(data, config)
    model = result.model
    save_model(out / CHECKPOINT_NAME, model, checkpoint_echo(config, model, data.train))
    write_csv(out / "history.csv", to_frame(result.history))

    proteins, drugs = training_entities(data.train)
    metrics = evaluate(model, data.test, config.mc, proteins, drugs) if data.test else None
    summary = {
        "checkpoint": str(out / CHECKPOINT_NAME),
        "best_epoch": result.best_epoch,
        "best_valid_roc_auc": result.best_valid_roc_auc,
        "epochs_run": len(result.history),
        "split": dict(zip(("train", "valid", "test"), data.sizes())),
        "test_metrics": metrics.model_dump(mode="json") if metrics else None,
    }
    write_json(out / "metrics.json", summary)
    return summary


def cmd_evaluate(args: argparse.Namespace) -> dict[str, Any]:
    model, echo = load_model(args.checkpoint)
    config = run_config(args, echo_run_values(echo))
    records = records_for(args, resolver_for(args, config.stub))
    metrics = evaluate(
        model,
        records,
        _mc_config(args, config),
        set(echo.get("train_proteins", [])),
        set(echo.get("train_drugs", [])),
    )
    summary = {**metrics.model_dump(mode="json"), "dropout_rate": config.mc.dropout_rate}
    write_json(out_dir(args) / "metrics.json", summary)
    return summary


def cmd_predict(args: argparse.Namespace) -> dict[str, Any]:
    model, echo = load_model(args.checkpoint)
    config = run_config(args, echo_run_values(echo))
    resolver = resolver_for(args, config.stub)
    if args.data:
        records = records_for(args, resolver)
    elif args.smiles and args.protein:
        records = [
            InteractionRecord(
                smiles=args.smiles,
                protein_id=args.protein,
                label=0,
                graph=featurize(parse_smiles(args.smiles)),
                protein=resolver.resolve(args.protein),
            )
        ]
    else:
        raise UsageError("predict needs --data or both --smiles and --protein")

    table = prediction_table(records, mc_predictions(model, records, config.mc))
    path = write_csv(out_dir(args) / "predictions.csv", table)
    return {
        "predictions": str(path),
        "count": len(table),
        "mc_samples": config.mc.mc_samples,
        "dropout_rate": config.mc.dropout_rate,
    }


def cmd_noise_sweep(args: argparse.Namespace) -> dict[str, Any]:
    model, echo = load_model(args.checkpoint)
    baseline = load_model(args.baseline_checkpoint)[0] if args.baseline_checkpoint else None
    config = run_config(args, echo_run_values(echo))
    records = records_for(args, resolver_for(args, config.stub))

    rows = noise_sweep(model, records, config.noise, config.mc, baseline)
    columns = ["sigma", "roc_auc_mc", "roc_auc_plain"] + (["roc_auc_no_dropout"] if baseline else [])
    path = write_csv(out_dir(args) / "noise_sweep.csv", to_frame(rows, columns))
    return {
        "noise_sweep": str(path),
        "noise_target": noise_target(records),
        "rows": [row.model_dump(mode="json", include=set(columns)) for row in rows],
    }


def cmd_size_sweep(args: argparse.Namespace) -> dict[str, Any]:
    config = run_config(args)
    data = dataset_split(args, config, resolver_for(args, config.stub))
    rows = size_sweep(data, config)
    path = write_csv(out_dir(args) / "size_sweep.csv", to_frame(rows, ["fraction", "epistemic", "aleatoric"]))
    return {"size_sweep": str(path), "rows": [row.model_dump(mode="json") for row in rows]}


def cmd_confidence_curve(args: argparse.Namespace) -> dict[str, Any]:
    model, echo = load_model(args.checkpoint)
    config = run_config(args, echo_run_values(echo))
    records = records_for(args, resolver_for(args, config.stub))
    kinds = list(UncertaintyKind) if args.kind == "all" else [UncertaintyKind(args.kind)]

    predictions = mc_predictions(model, records, config.mc)
    labels = [r.label for r in records]
    points = [point for kind in kinds for point in curve_from_predictions(predictions, labels, kind)]
    path = write_csv(out_dir(args) / "confidence_curve.csv", to_frame(points, ["kind", "percentile", "accuracy"]))
    return {"confidence_curve": str(path), "points": [p.model_dump(mode="json") for p in points]}


def cmd_screen(args: argparse.Namespace) -> dict[str, Any]:
    model, echo = load_model(args.checkpoint)
    config = run_config(args, echo_run_values(echo))
    records = records_for(args, resolver_for(args, config.stub))
    kept, flagged = screen_low_confidence(records, mc_predictions(model, records, config.mc), args.kind, args.keep_fraction)
    out = out_dir(args)
    write_dataset(out / "kept.tsv", kept)
    write_dataset(out / "flagged.tsv", flagged)
    return {"kept": len(kept), "flagged": len(flagged), "kind": args.kind, "keep_fraction": args.keep_fraction}


def cmd_parse_smiles(args: argparse.Namespace) -> dict[str, Any]:
    molecule = parse_smiles(args.smiles)
    atoms, bonds = describe_molecule(molecule)
    summary: dict[str, Any] = {
        "smiles": args.smiles,
        "written": write_smiles(molecule),
        "atoms": atoms.to_dict(orient="records"),
        "bonds": bonds.to_dict(orient="records"),
        "rings": molecule.rings,
    }
    if args.features:
        nodes, edges = feature_tables(featurize(molecule))
        summary["node_features"] = {"columns": list(nodes.columns), "rows": nodes.values.tolist()}
        summary["edge_features"] = {"columns": list(edges.columns), "rows": edges.values.tolist()}
    return summary


def cmd_gen_synthetic(args: argparse.Namespace) -> dict[str, Any]:
    spec = SyntheticSpec(
        pairs=args.pairs,
        seed=args.seed,
        rho=args.rho,
        negative_ratio=args.negative_ratio,
        classes=args.classes,
    )
    records = generate(spec)
    path = write_dataset(out_dir(args) / args.name, records)
    positives = sum(r.label for r in records)
    return {"dataset": str(path), "pairs": len(records), "positives": positives, "negatives": len(records) - positives}
