"""Experiment harness: stratified splitting, validation drawing, ROC/AUC,
F-score threshold selection, the classifiers-by-subset-size grid, and a
synthetic record generator for desk-scale end-to-end checks.

ROC uses the standard definitions (TPR = TP/(TP+FN), FPR = FP/(FP+TN)) with
tied scores grouped, and AUC by the trapezoidal rule, which for grouped ties
equals the pairwise concordance probability.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

from . import ensemble
from .ingest import Label, RawAppRecord


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.30
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    tpr: float
    fpr: float
    tp: int
    fp: int
    tn: int
    fn: int


@dataclass
class EvalReport:
    auc: float
    roc: list[RocPoint]
    chosen_threshold: float
    f_score_at_threshold: float
    grid: Optional[dict[tuple[int, int], float]] = None
    importance_top: list[tuple[str, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        doc = {
            "auc": self.auc,
            "chosen_threshold": self.chosen_threshold,
            "f_score_at_threshold": self.f_score_at_threshold,
            "roc": [vars(p) for p in self.roc],
            "importance_top": [{"feature": n, "score": s} for n, s in self.importance_top],
        }
        if self.grid is not None:
            doc["grid"] = [
                {"n_classifiers": k, "subset_size": s, "auc": a} for (k, s), a in sorted(self.grid.items())
            ]
        return doc


def stratified_split(y: np.ndarray, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint (train, test) index arrays with per-class test counts of
    round(class size * test_fraction); deterministic by seed."""
    spec.validate()
    y = np.asarray(y)
    rng = np.random.default_rng(spec.seed)
    train_parts, test_parts = [], []
    for value in np.unique(y):
        idx = np.flatnonzero(y == value)
        if idx.size < 2:
            raise ValueError(f"class {value!r} has fewer than 2 items")
        perm = rng.permutation(idx)
        k = round(idx.size * spec.test_fraction)
        test_parts.append(perm[:k])
        train_parts.append(perm[k:])
    return np.sort(np.concatenate(train_parts)), np.sort(np.concatenate(test_parts))


def draw_validation(
    y: np.ndarray, train_idx: np.ndarray, test_idx: np.ndarray, seed: int = 0
) -> np.ndarray:
    """Validation indices sampled without replacement from the training
    indices, matching the test set's size and class counts."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    parts = []
    for value in np.unique(y[test_idx]):
        need = int((y[test_idx] == value).sum())
        pool = train_idx[y[train_idx] == value]
        if pool.size < need:
            raise ValueError(f"class {value!r}: training pool smaller than the validation draw")
        parts.append(rng.choice(pool, size=need, replace=False))
    return np.sort(np.concatenate(parts))


def _as_binary_labels(labels) -> np.ndarray:
    arr = np.asarray(
        [1 if l is Label.REMOVED else 0 if l is Label.STABLE else l for l in labels], dtype=np.float64
    )
    if not set(np.unique(arr)) <= {0.0, 1.0}:
        raise ValueError("labels must be Removed/Stable (or 1/0)")
    return arr


def roc_and_auc(scores: np.ndarray, labels) -> tuple[list[RocPoint], float]:
    """ROC points at every distinct score (ties grouped) and trapezoidal
    AUC.  Requires at least one positive and one negative."""
    scores = np.asarray(scores, dtype=np.float64)
    y = _as_binary_labels(labels)
    positives = int(y.sum())
    negatives = int(y.size - positives)
    if positives == 0 or negatives == 0:
        raise ValueError("ROC needs both a positive and a negative sample")

    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    yy = y[order]
    boundary = np.nonzero(np.diff(s))[0]
    last = np.concatenate([boundary, [s.size - 1]])
    cum_tp = np.cumsum(yy)[last]
    cum_fp = np.cumsum(1.0 - yy)[last]

    points: list[RocPoint] = []
    auc = 0.0
    prev_tpr = 0.0
    prev_fpr = 0.0
    for i in range(last.size):
        tp = int(cum_tp[i])
        fp = int(cum_fp[i])
        tpr = tp / positives
        fpr = fp / negatives
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0
        points.append(
            RocPoint(
                threshold=float(s[last[i]]),
                tpr=tpr,
                fpr=fpr,
                tp=tp,
                fp=fp,
                tn=negatives - fp,
                fn=positives - tp,
            )
        )
        prev_tpr, prev_fpr = tpr, fpr
    return points, auc


def confusion_at(scores: np.ndarray, labels, threshold: float) -> tuple[int, int, int, int]:
    """(tp, fp, tn, fn) with the strict decision rule score > threshold."""
    scores = np.asarray(scores, dtype=np.float64)
    y = _as_binary_labels(labels)
    predicted = scores > threshold
    tp = int(np.sum(predicted & (y == 1)))
    fp = int(np.sum(predicted & (y == 0)))
    tn = int(np.sum(~predicted & (y == 0)))
    fn = int(np.sum(~predicted & (y == 1)))
    return tp, fp, tn, fn


def f1_at(scores: np.ndarray, labels, threshold: float) -> float:
    tp, fp, _, fn = confusion_at(scores, labels, threshold)
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def select_threshold(scores: np.ndarray, labels) -> tuple[float, float]:
    """Operating point maximizing F1 for the positive (Removed) class.

    Candidates are the midpoints between adjacent distinct scores plus the
    boundaries 0 and 1; ties resolve to the lowest threshold.
    """
    scores = np.asarray(scores, dtype=np.float64)
    y = _as_binary_labels(labels)
    if not ((y == 1).any() and (y == 0).any()):
        raise ValueError("threshold selection needs both classes")
    distinct = np.unique(scores)
    candidates = np.concatenate([[0.0], (distinct[:-1] + distinct[1:]) / 2.0, [1.0]])
    candidates = np.unique(candidates)

    order = np.argsort(scores, kind="stable")
    s_sorted = scores[order]
    y_sorted = y[order]
    positives = int(y.sum())
    cum_pos = np.cumsum(y_sorted)
    # Predicted positive at threshold t means score > t.
    cut = np.searchsorted(s_sorted, candidates, side="right")
    tp = positives - np.where(cut > 0, cum_pos[np.maximum(cut - 1, 0)], 0.0)
    predicted_pos = s_sorted.size - cut
    fp = predicted_pos - tp
    fn = positives - tp
    denom = 2 * tp + fp + fn
    with np.errstate(invalid="ignore", divide="ignore"):
        f1 = np.where(denom > 0, 2 * tp / denom, 0.0)
    best = int(np.argmax(f1))  # first max = lowest candidate
    return float(candidates[best]), float(f1[best])


def write_roc_csv(points: Iterable[RocPoint], sink: TextIO) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["threshold", "fpr", "tpr"])
    for p in points:
        writer.writerow([repr(p.threshold), repr(p.fpr), repr(p.tpr)])


# ---------------------------------------------------------------------------
# Grid search over (number of classifiers, balanced subset size).


def run_grid(
    X_train: np.ndarray,
    y_train: np.ndarray,
    X_val: np.ndarray,
    y_val: np.ndarray,
    classifier_counts: Sequence[int],
    subset_sizes: Sequence[int],
    master_seed: int = 0,
    variant: str = "developer",
    jobs: int = 1,
) -> dict[tuple[int, int], float]:
    """Validation AUC per (classifier count, subset size) cell.  Each cell
    derives its own seed from the master seed and the cell parameters, so
    results do not depend on evaluation order."""
    if not classifier_counts or not subset_sizes:
        raise ValueError("classifier counts and subset sizes must be non-empty")
    grid: dict[tuple[int, int], float] = {}
    for k in classifier_counts:
        for size in subset_sizes:
            cell_seed = ensemble.member_seed(ensemble.member_seed(master_seed, k), size)
            config = ensemble.BagConfig(
                n_classifiers=k, subset_size=size, master_seed=cell_seed, variant=variant
            )
            bag = ensemble.train_bag(X_train, y_train, config, jobs=jobs)
            scores = ensemble.predict_score(bag, X_val)
            _, auc = roc_and_auc(scores, y_val)
            grid[(k, size)] = auc
    return grid


def format_grid_table(grid: dict[tuple[int, int], float]) -> str:
    counts = sorted({k for k, _ in grid})
    sizes = sorted({s for _, s in grid})
    header = "subset_size " + " ".join(f"{k:>8d}" for k in counts)
    lines = [header]
    for size in sizes:
        cells = " ".join(f"{grid[(k, size)]:8.4f}" for k in counts)
        lines.append(f"{size:<11d} {cells}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Synthetic data with a known removal mechanism.


@dataclass(frozen=True)
class SignalSpec:
    """Additive removal log-odds.  The privacy-link term is the planted
    primary signal: a missing link raises removal odds the most.  The default
    weights keep classes balanced with a strong, learnable mechanism, so
    desk-scale models can approach the best achievable AUC."""

    privacy_link_absent: float = 3.5
    content_rating_teen: float = 1.6
    genre_casino: float = 1.2
    contacts_permission: float = 1.0
    bias: float = -2.65


STRONG_SIGNAL = SignalSpec()
NO_SIGNAL = SignalSpec(0.0, 0.0, 0.0, 0.0, bias=0.0)

#: Feature whose aggregate importance should rank first on strong-signal data.
PLANTED_FEATURE = "PrivacyPolicyLink"

_GENRES = (
    "Tools",
    "Casino",
    "Education",
    "Casual",
    "Communication",
    "Lifestyle",
    "Entertainment",
    "Puzzle",
    "Arcade",
    "Books & Reference",
    "Productivity",
    "Health & Fitness",
)
_CONTENT_RATINGS = ("Everyone", "Teen", "Mature 17+", "Everyone 10+", "PEGI 3")
_ANDROID_VERSIONS = (
    "4.0.3 and up",
    "2.3 and up",
    "4.1 and up",
    "Varies with device",
    "2.3 - 5.0",
    "5.0 and up",
    "4.4 and up",
)
_EXTRA_PERMISSIONS = (
    "android.permission.INTERNET",
    "android.permission.ACCESS_NETWORK_STATE",
    "android.permission.CAMERA",
    "android.permission.ACCESS_FINE_LOCATION",
    "android.permission.RECORD_AUDIO",
    "android.permission.WRITE_EXTERNAL_STORAGE",
)
_RECEIVER_ACTIONS = (
    "android.intent.action.BOOT_COMPLETED",
    "android.net.conn.CONNECTIVITY_CHANGE",
    "com.google.android.c2dm.intent.RECEIVE",
    "android.bluetooth.device.action.ACL_CONNECTED",
)

_BASE_DATE = date(2016, 1, 1)
_DATE_SPAN_DAYS = 1247  # through 2019-05-31


def _manifest_xml(package: str, permissions: list[str], actions: list[str]) -> str:
    perm_lines = "".join(
        f'  <uses-permission android:name="{p}"/>\n' for p in permissions
    )
    action_lines = "".join(
        f'        <action android:name="{a}"/>\n' for a in actions
    )
    receiver = (
        "    <receiver android:name=\".EventReceiver\">\n"
        "      <intent-filter>\n" + action_lines + "      </intent-filter>\n"
        "    </receiver>\n"
        if actions
        else ""
    )
    return (
        '<manifest xmlns:android="http://schemas.android.com/apk/res/android" '
        f'package="{package}">\n{perm_lines}  <application>\n{receiver}  </application>\n</manifest>'
    )


@dataclass
class SyntheticData:
    records: list[RawAppRecord]
    labels: np.ndarray
    probabilities: np.ndarray
    planted_feature: str = PLANTED_FEATURE


def gen_synthetic(n: int, seed: int, spec: SignalSpec = STRONG_SIGNAL) -> SyntheticData:
    """Records whose removal probability is a known logistic function of a
    few attributes, with everything else label-independent noise.  The true
    probabilities are returned so the best achievable AUC is computable."""
    if n < 10:
        raise ValueError("need n >= 10")
    rng = np.random.default_rng(seed)

    # Developer pool: most developers release one app; a few release many,
    # including aggressive low-download publishers.
    big_devs = [f"Studio {i} LLC" for i in range(5)]
    mid_devs = [f"Indie Dev {i}" for i in range(30)]

    records: list[RawAppRecord] = []
    probabilities = np.empty(n)
    labels = np.empty(n, dtype=np.int64)
    for i in range(n):
        has_link = rng.random() < 0.5
        content_rating = _CONTENT_RATINGS[int(rng.integers(0, len(_CONTENT_RATINGS)))]
        genre = _GENRES[int(rng.integers(0, len(_GENRES)))]
        has_contacts = rng.random() < 0.4

        logit = spec.bias
        if not has_link:
            logit += spec.privacy_link_absent
        if content_rating == "Teen":
            logit += spec.content_rating_teen
        if genre == "Casino":
            logit += spec.genre_casino
        if has_contacts:
            logit += spec.contacts_permission
        p = 1.0 / (1.0 + np.exp(-logit))
        removed = bool(rng.random() < p)

        dev_pick = rng.random()
        if dev_pick < 0.10:
            developer = big_devs[int(rng.integers(0, len(big_devs)))]
        elif dev_pick < 0.30:
            developer = mid_devs[int(rng.integers(0, len(mid_devs)))]
        else:
            developer = f"Solo Dev {i}"

        ratings = int(rng.integers(0, 200_000))
        star_weights = rng.dirichlet(np.ones(5))
        stars = rng.multinomial(ratings, star_weights)
        decade = int(rng.integers(1, 8))
        downloads = 10**decade
        updated = _BASE_DATE + timedelta(days=int(rng.integers(0, _DATE_SPAN_DAYS)))

        permissions = []
        if has_contacts:
            permissions.append("android.permission.READ_CONTACTS")
        for perm in _EXTRA_PERMISSIONS:
            if rng.random() < 0.3:
                permissions.append(perm)
        actions = [a for a in _RECEIVER_ACTIONS if rng.random() < 0.25]
        package = f"com.example.app{i}"

        website_pick = rng.random()
        if website_pick < 0.35:
            website = f"https://dev{i}.example.com"
        elif website_pick < 0.55:
            website = f"https://sites.google.com/view/app{i}"
        else:
            website = None

        price = 0.0 if rng.random() < 0.9 else float(rng.integers(1, 10))
        current_version = f"{int(rng.integers(0, 6))}.{int(rng.integers(0, 10))}"
        file_size = "Varies with device" if rng.random() < 0.15 else f"{int(rng.integers(2, 90))}M"

        records.append(
            RawAppRecord(
                # Noise fields stay coarse (few distinct values) so shallow
                # trees cannot memorize individual rows through them.
                description="An app that does things. " * int(rng.integers(1, 4)),
                title=f"App {i % 100_000:05d}",
                last_updated=updated,
                whats_new="Bug fixes and improvements." if rng.random() < 0.6 else None,
                reviews_average=float(np.round(rng.uniform(1.0, 5.0), 1)),
                price=price,
                ratings=ratings,
                one_star_ratings=int(stars[0]),
                two_star_ratings=int(stars[1]),
                three_star_ratings=int(stars[2]),
                four_star_ratings=int(stars[3]),
                five_star_ratings=int(stars[4]),
                privacy_policy_link=f"https://dev{i}.example.com/privacy" if has_link else None,
                genre=genre,
                content_rating=content_rating,
                current_version=current_version,
                android_version=_ANDROID_VERSIONS[int(rng.integers(0, len(_ANDROID_VERSIONS)))],
                developer_email=f"support@dev{i}.example.com" if rng.random() < 0.7 else None,
                developer_website=website,
                developer_name=developer,
                developer_address="1 Example Street" if rng.random() < 0.4 else None,
                file_size=file_size,
                downloads=(downloads, downloads),
                status_checks=(removed, removed, removed),
                manifest_source=_manifest_xml(package, permissions, actions),
                source_row=i + 2,
            )
        )
        probabilities[i] = p
        labels[i] = 1 if removed else 0
    return SyntheticData(records=records, labels=labels, probabilities=probabilities)
