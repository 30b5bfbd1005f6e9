"""Balanced-bootstrap bagging of GBDT classifiers.

Each member trains on its own with-replacement sample holding equal counts of
both classes, with shallow hyperparameters (tree count and depth) drawn
per member from small choice lists.  Scores aggregate by averaging the member
probabilities, where a score is P(removed) and values above the operating
threshold classify as Removed.  Member seeds derive from a stable 64-bit mix
of (master seed, member index), so results never depend on scheduling and
adding members never reshuffles earlier ones.
"""

from __future__ import annotations

import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional, TextIO, Union

import numpy as np

from . import gbdt
from .features import FeatureSchema
from .ingest import Label

FORMAT_VERSION = 1

DEPTH_CHOICES = (2, 3)
TREE_COUNT_CHOICES = (256, 512)


class ModelFormatError(Exception):
    """Model document cannot be loaded (bad version, corrupt, truncated)."""


@dataclass(frozen=True)
class BagConfig:
    n_classifiers: int
    subset_size: int
    depth_choices: tuple[int, ...] = DEPTH_CHOICES
    tree_count_choices: tuple[int, ...] = TREE_COUNT_CHOICES
    master_seed: int = 0
    variant: str = "developer"
    vote: str = "mean"  # "majority" classifies by member votes instead

    def validate(self) -> None:
        if self.n_classifiers < 1:
            raise ValueError("n_classifiers must be >= 1")
        if self.subset_size < 2 or self.subset_size % 2 != 0:
            raise ValueError("subset_size must be an even integer >= 2")
        if not self.depth_choices or not self.tree_count_choices:
            raise ValueError("hyperparameter choice lists must be non-empty")
        if self.vote not in ("mean", "majority"):
            raise ValueError("vote must be 'mean' or 'majority'")


@dataclass
class BagModel:
    config: BagConfig
    members: list[gbdt.GBDTModel]
    schema: Optional[FeatureSchema] = None
    threshold: Optional[float] = None
    created_at: str = ""
    format_version: int = FORMAT_VERSION

    @property
    def feature_count(self) -> int:
        return self.members[0].feature_count


_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def member_seed(master_seed: int, index: int) -> int:
    """Stable 64-bit mix of (master seed, member index)."""
    return _splitmix64((master_seed & _MASK64) ^ _splitmix64(index))


def sample_balanced(y: np.ndarray, subset_size: int, rng: np.random.Generator) -> np.ndarray:
    """Index multiset with exactly subset_size/2 draws (with replacement)
    from each class; positives first."""
    if subset_size < 2 or subset_size % 2 != 0:
        raise ValueError("subset_size must be an even integer >= 2")
    y = np.asarray(y)
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == 0)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("both classes must be present to draw a balanced sample")
    half = subset_size // 2
    take_pos = pos[rng.integers(0, pos.size, size=half)]
    take_neg = neg[rng.integers(0, neg.size, size=half)]
    return np.concatenate([take_pos, take_neg])


def _train_member(X: np.ndarray, y: np.ndarray, config: BagConfig, index: int) -> gbdt.GBDTModel:
    seed = member_seed(config.master_seed, index)
    rng = np.random.default_rng(seed)
    max_depth = config.depth_choices[int(rng.integers(0, len(config.depth_choices)))]
    n_trees = config.tree_count_choices[int(rng.integers(0, len(config.tree_count_choices)))]
    idx = sample_balanced(y, config.subset_size, rng)
    params = gbdt.TrainParams(n_trees=n_trees, max_depth=max_depth, seed=seed)
    return gbdt.train(X[idx], y[idx], params)


def train_bag(
    X: np.ndarray,
    y: np.ndarray,
    config: BagConfig,
    schema: Optional[FeatureSchema] = None,
    jobs: int = 1,
) -> BagModel:
    """Train all members; fully deterministic from the master seed regardless
    of the degree of parallelism."""
    config.validate()
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if schema is not None and X.shape[1] != schema.total_width:
        raise ValueError("matrix width does not match schema")
    if jobs <= 1:
        members = [_train_member(X, y, config, i) for i in range(config.n_classifiers)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            members = list(pool.map(lambda i: _train_member(X, y, config, i), range(config.n_classifiers)))
    return BagModel(
        config=config,
        members=members,
        schema=schema,
        created_at=datetime.now(timezone.utc).isoformat(),
    )


def _member_probs(bag: BagModel, X: np.ndarray) -> np.ndarray:
    return np.vstack([np.atleast_1d(gbdt.predict_proba(m, X)) for m in bag.members])


def predict_score(bag: BagModel, X: np.ndarray):
    """Mean of the member probabilities; the score is P(removed).

    The mean is computed with exact summation, so it is invariant to member
    ordering.
    """
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    probs = _member_probs(bag, X)
    scores = np.array([math.fsum(probs[:, j]) / len(bag.members) for j in range(probs.shape[1])])
    return float(scores[0]) if single else scores


def classify(bag: BagModel, X: np.ndarray, threshold: Optional[float] = None):
    """Removed iff score > threshold (strictly); defaults to the stored
    threshold, else 0.5.  With vote='majority' the decision is instead the
    majority of per-member votes at the threshold (ties -> Stable)."""
    thr = threshold if threshold is not None else (bag.threshold if bag.threshold is not None else 0.5)
    if not 0.0 <= thr <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if bag.config.vote == "majority":
        votes = (_member_probs(bag, X) > thr).sum(axis=0)
        removed = votes * 2 > len(bag.members)
    else:
        removed = np.atleast_1d(predict_score(bag, X)) > thr
    labels = [Label.REMOVED if r else Label.STABLE for r in removed]
    return labels[0] if single else labels


def aggregate_importance(bag: BagModel) -> list[tuple[str, float]]:
    """Per-member gain importance normalized to sum 1, averaged over the
    members that produced any gain, ranked descending.  All-zero members
    contribute nothing; an all-zero bag yields all zeros."""
    width = bag.feature_count
    total = np.zeros(width)
    contributing = 0
    for member in bag.members:
        imp = gbdt.feature_importance(member)
        s = imp.sum()
        if s > 0:
            total += imp / s
            contributing += 1
    averaged = total / contributing if contributing else total
    names = bag.schema.feature_names if bag.schema is not None else [f"f{i}" for i in range(width)]
    ranked = sorted(zip(names, averaged.tolist()), key=lambda kv: -kv[1])
    return ranked


# ---------------------------------------------------------------------------
# Serialization.  One JSON document; floats printed with 17 significant
# digits so that load(save(bag)) reproduces predictions bit for bit.


def _emit(value, out: list[str], indent: int) -> None:
    pad = "  " * indent
    if isinstance(value, dict):
        if not value:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(value.items()):
            out.append(f'{pad}  "{k}": ')
            _emit(v, out, indent + 1)
            out.append(",\n" if i < len(value) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(value, (list, tuple)):
        if not value:
            out.append("[]")
            return
        out.append("[\n")
        for i, v in enumerate(value):
            out.append(pad + "  ")
            _emit(v, out, indent + 1)
            out.append(",\n" if i < len(value) - 1 else "\n")
        out.append(pad + "]")
    elif isinstance(value, bool):
        out.append("true" if value else "false")
    elif isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            raise ValueError("model document cannot contain NaN or infinity")
        out.append(format(value + 0.0, ".17g"))  # folds -0.0 into 0
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=False))
    elif value is None:
        out.append("null")
    else:
        raise TypeError(f"cannot serialize {type(value)!r}")


def _document(bag: BagModel) -> dict:
    if bag.schema is None:
        raise ValueError("cannot save a bag without a fitted feature schema")
    return {
        "format_version": bag.format_version,
        "variant": bag.config.variant,
        "created_at": bag.created_at,
        "config": {
            "n_classifiers": bag.config.n_classifiers,
            "subset_size": bag.config.subset_size,
            "depth_choices": list(bag.config.depth_choices),
            "tree_count_choices": list(bag.config.tree_count_choices),
            "master_seed": bag.config.master_seed,
            "variant": bag.config.variant,
            "vote": bag.config.vote,
        },
        "schema": bag.schema.to_dict(),
        "threshold": bag.threshold,
        "members": [
            {
                "max_depth": m.params.max_depth,
                "n_trees": m.params.n_trees,
                "learning_rate": m.params.learning_rate,
                "l2_lambda": m.params.l2_lambda,
                "gamma_min_gain": m.params.gamma_min_gain,
                "min_child_weight": m.params.min_child_weight,
                "base_score": m.params.base_score,
                "seed": m.params.seed,
                "feature_count": m.feature_count,
                "gain_totals": m.gain_totals.tolist(),
                "trees": [{"nodes": tree.to_nodes()} for tree in m.trees],
            }
            for m in bag.members
        ],
    }


def dumps(bag: BagModel) -> str:
    out: list[str] = []
    _emit(_document(bag), out, 0)
    out.append("\n")
    return "".join(out)


def save(bag: BagModel, sink: Union[str, TextIO]) -> None:
    text = dumps(bag)
    if isinstance(sink, (str, bytes)):
        with open(sink, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sink.write(text)


def _member_from_dict(doc: dict) -> gbdt.GBDTModel:
    params = gbdt.TrainParams(
        n_trees=int(doc["n_trees"]),
        max_depth=int(doc["max_depth"]),
        learning_rate=float(doc["learning_rate"]),
        l2_lambda=float(doc["l2_lambda"]),
        gamma_min_gain=float(doc.get("gamma_min_gain", 0.0)),
        min_child_weight=float(doc.get("min_child_weight", 1.0)),
        base_score=float(doc["base_score"]),
        seed=int(doc.get("seed", 0)),
    )
    trees = [gbdt.Tree.from_nodes(t["nodes"]) for t in doc["trees"]]
    return gbdt.GBDTModel(
        params=params,
        trees=trees,
        feature_count=int(doc["feature_count"]),
        gain_totals=np.asarray(doc["gain_totals"], dtype=np.float64),
    )


def load(source: Union[str, TextIO]) -> BagModel:
    """Load a model document; rejects unknown format versions and truncated
    or structurally corrupt documents without producing a partial model."""
    if isinstance(source, (str, bytes)):
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = source.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"unreadable model document: {exc}") from exc
    try:
        version = doc["format_version"]
        if version != FORMAT_VERSION:
            raise ModelFormatError(f"unsupported format_version {version}")
        cfg = doc["config"]
        config = BagConfig(
            n_classifiers=int(cfg["n_classifiers"]),
            subset_size=int(cfg["subset_size"]),
            depth_choices=tuple(cfg["depth_choices"]),
            tree_count_choices=tuple(cfg["tree_count_choices"]),
            master_seed=int(cfg["master_seed"]),
            variant=cfg["variant"],
            vote=cfg.get("vote", "mean"),
        )
        schema = FeatureSchema.from_dict(doc["schema"])
        members = [_member_from_dict(m) for m in doc["members"]]
        threshold = doc.get("threshold")
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"corrupt model document: {exc}") from exc
    if not members:
        raise ModelFormatError("corrupt model document: no members")
    for m in members:
        if m.feature_count != schema.total_width:
            raise ModelFormatError("corrupt model document: member width does not match schema")
    return BagModel(
        config=config,
        members=members,
        schema=schema,
        threshold=None if threshold is None else float(threshold),
        created_at=doc.get("created_at", ""),
        format_version=int(version),
    )


def loads(text: str) -> BagModel:
    return load(io.StringIO(text))
