"""Versioned model files.

A model is a single ``.npz``: a JSON metadata record plus stacked per-tree
arrays (all trees share a height, so attributes, thresholds and leaf tables
stack into 2-D arrays). Floats round-trip bit-exactly. Plain-mode files
carry the full leaf statistics; dp-mode files carry only the published
fractions — raw counts never touch disk — and are marked ``private`` unless
they were produced with the zero-noise debug hook.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .dataset import AttributeSchema
from .errors import ConfigError, Untrained
from .forest import DP, PLAIN, Forest
from .privacy import BudgetLedger
from .tree import LeafStats, TreeStructure

FORMAT = "rdtforest-model"
VERSION = 1


def schema_hash(schema: AttributeSchema) -> str:
    canon = json.dumps(schema.canonical(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def save_forest(forest: Forest, path: str | Path) -> None:
    if not forest.trained:
        raise Untrained("refusing to save an untrained forest")
    meta = {
        "format": FORMAT,
        "version": VERSION,
        "mode": forest.mode,
        "k": forest.k,
        "height": forest.height,
        "eta": forest.eta,
        "zero_noise": forest.zero_noise,
        "private": forest.mode == DP and not forest.zero_noise,
        "schema": forest.schema.canonical(),
        "schema_hash": schema_hash(forest.schema),
    }
    arrays = {
        "attrs": np.stack([t.attrs for t in forest.trees]),
        "thresholds": np.stack([t.thresholds for t in forest.trees]),
    }
    if forest.mode == PLAIN:
        arrays["n_plus"] = np.stack([ls.n_plus for ls in forest.leaves])
        arrays["n_minus"] = np.stack([ls.n_minus for ls in forest.leaves])
        arrays["theta"] = np.stack([ls.theta for ls in forest.leaves])
        arrays["theta_source"] = np.stack([ls.theta_source for ls in forest.leaves])
    else:
        arrays["theta_p"] = np.stack(forest.published_theta)
        arrays["theta_p_source"] = np.stack(forest.published_source)
        if forest.ledger is not None:
            meta["ledger"] = [
                [desc, str(eps.numerator), str(eps.denominator)]
                for desc, eps in forest.ledger.entries
            ]
    with Path(path).open("wb") as fh:
        np.savez(fh, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **arrays)


def load_forest(path: str | Path) -> Forest:
    with np.load(Path(path)) as data:
        meta = json.loads(bytes(data["meta"]))
        if meta.get("format") != FORMAT:
            raise ConfigError(f"{path}: not a {FORMAT} file")
        if meta.get("version") != VERSION:
            raise ConfigError(f"{path}: unsupported model version {meta.get('version')}")
        schema = AttributeSchema.from_canonical(meta["schema"])
        height, k = int(meta["height"]), int(meta["k"])
        trees = tuple(
            TreeStructure(height, _frozen(data["attrs"][i]), _frozen(data["thresholds"][i]))
            for i in range(k)
        )
        if meta["mode"] == PLAIN:
            leaves = tuple(
                LeafStats(
                    _frozen(data["n_plus"][i]),
                    _frozen(data["n_minus"][i]),
                    _frozen(data["theta"][i]),
                    _frozen(data["theta_source"][i]),
                )
                for i in range(k)
            )
            return Forest(schema=schema, height=height, k=k, trees=trees, leaves=leaves)
        ledger = None
        if "ledger" in meta:
            ledger = BudgetLedger(
                tuple((desc, Fraction(int(num), int(den))) for desc, num, den in meta["ledger"])
            )
        return Forest(
            schema=schema,
            height=height,
            k=k,
            trees=trees,
            mode=DP,
            published_theta=tuple(_frozen(data["theta_p"][i]) for i in range(k)),
            published_source=tuple(_frozen(data["theta_p_source"][i]) for i in range(k)),
            eta=meta["eta"],
            ledger=ledger,
            zero_noise=bool(meta.get("zero_noise", False)),
        )


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a
