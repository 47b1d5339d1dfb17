"""Synthetic interaction data with a planted rule.

A pair interacts iff the drug's scaffold class matches the protein's sequence
cluster; labels are then flipped with probability ``rho``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from core.errors import ConfigurationError
from core.seeding import stream
from models.interaction_model import InteractionRecord

logger = logging.getLogger(__name__)

AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"

# scaffold classes; ring SMILES that accept a prefix and a suffix chain
SCAFFOLD_CLASSES: tuple[tuple[str, ...], ...] = (
    ("c1ccccc1", "c1ccncc1", "c1ccc2ccccc2c1", "c1cncnc1"),
    ("C1CCCCC1", "C1CCNCC1", "C1CCOC1", "C1CCCC1"),
    ("c1ccsc1", "c1ccoc1", "c1cc[nH]c1", "c1cnc[nH]1"),
    ("C1CC1", "C1CCC1", "C1=CCCC1", "C1CCSCC1"),
)
PREFIXES = ("", "C", "CC", "OC", "NC", "FC", "ClC", "CCC", "OCC", "N#CC")
SUFFIXES = ("", "C", "O", "N", "F", "Cl", "CC", "CO", "OC", "C(=O)O", "C#N", "C(C)C")

_STREAM_DRUGS, _STREAM_PROTEINS, _STREAM_PAIRS = 0, 1, 2


@dataclass(frozen=True)
class SyntheticSpec:
    pairs: int = 2000
    seed: int = 0
    rho: float = 0.0
    negative_ratio: int = 1
    classes: int = 2
    drugs_per_class: int = 20
    proteins_per_class: int = 10
    protein_length: int = 80
    mutation_rate: float = 0.1

    def validate(self) -> None:
        if self.pairs < 1:
            raise ConfigurationError("pairs must be >= 1")
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigurationError(f"rho must lie in [0, 1], got {self.rho}")
        if self.negative_ratio < 1:
            raise ConfigurationError("negative_ratio must be >= 1")
        if not 2 <= self.classes <= len(SCAFFOLD_CLASSES):
            raise ConfigurationError(f"classes must lie in [2, {len(SCAFFOLD_CLASSES)}]")
        if not 0.0 <= self.mutation_rate < 1.0:
            raise ConfigurationError("mutation_rate must lie in [0, 1)")


def drug_library(spec: SyntheticSpec) -> list[list[str]]:
    rng = stream(spec.seed, _STREAM_DRUGS)
    library = []
    for scaffolds in SCAFFOLD_CLASSES[: spec.classes]:
        combos = [p + s + x for s in scaffolds for p in PREFIXES for x in SUFFIXES]
        picks = rng.choice(len(combos), size=min(spec.drugs_per_class, len(combos)), replace=False)
        library.append([combos[i] for i in sorted(picks)])
    return library


def protein_clusters(spec: SyntheticSpec) -> list[list[str]]:
    """Each cluster: point mutants of one random ancestor sequence."""
    rng = stream(spec.seed, _STREAM_PROTEINS)
    letters = np.array(list(AMINO_ACIDS))
    clusters = []
    for _ in range(spec.classes):
        ancestor = rng.choice(letters, size=spec.protein_length)
        members = []
        while len(members) < spec.proteins_per_class:
            mutant = ancestor.copy()
            sites = rng.random(spec.protein_length) < spec.mutation_rate
            mutant[sites] = rng.choice(letters, size=int(sites.sum()))
            sequence = "".join(mutant)
            if sequence not in members:
                members.append(sequence)
        clusters.append(members)
    return clusters


def generate(spec: SyntheticSpec) -> list[InteractionRecord]:
    """``spec.pairs`` records, about one positive per ``negative_ratio`` negatives before label noise."""
    spec.validate()
    drugs = drug_library(spec)
    proteins = protein_clusters(spec)
    rng = stream(spec.seed, _STREAM_PAIRS)

    records = []
    positive_share = 1.0 / (1 + spec.negative_ratio)
    for _ in range(spec.pairs):
        drug_class = int(rng.integers(spec.classes))
        interacts = rng.random() < positive_share
        if interacts:
            protein_class = drug_class
        else:
            protein_class = int((drug_class + rng.integers(1, spec.classes)) % spec.classes)
        smiles = drugs[drug_class][int(rng.integers(len(drugs[drug_class])))]
        protein = proteins[protein_class][int(rng.integers(len(proteins[protein_class])))]
        label = int(interacts)
        if rng.random() < spec.rho:
            label = 1 - label
        records.append(InteractionRecord(smiles=smiles, protein_id=protein, label=label))

    logger.info(
        "Generated %d synthetic pairs (seed=%d, rho=%.2f, negative_ratio=%d)",
        len(records), spec.seed, spec.rho, spec.negative_ratio,
    )
    return records
