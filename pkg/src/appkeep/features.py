"""Feature engineering: from a raw record plus its manifest groups to the
fixed-width numeric vector the models train on.

Two variants exist.  The user-centered variant carries all 47 engineered
features; the developer-centered variant drops the ten that only exist after
an app has been deployed (star-rating ratios, review average, what's-new
length, download counts, and the update-recency pair) and keeps 37.
Categorical features are one-hot encoded against vocabularies fitted on
training data only; categories unseen at fit time encode as all-zero blocks.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from datetime import date
from functools import lru_cache
from importlib import resources
from math import log10
from typing import Iterable, Optional
from urllib.parse import urlparse

import numpy as np

from .ingest import RawAppRecord
from .manifest import ACTION_GROUP_NAMES, PERMISSION_GROUP_NAMES, ActionGroups, PermissionGroups
from .versions import derive_android_versions

USER = "user"
DEVELOPER = "developer"

AGGRESSIVE = "Aggressive"
ACTIVE = "Active"
MODERATE = "Moderate"
CONSERVATIVE = "Conservative"

#: Features only observable after deployment; excluded from the developer
#: variant.
POST_DEPLOYMENT_FEATURES = frozenset(
    {
        "OneStarRatings",
        "TwoStarRatings",
        "ThreeStarRatings",
        "FourStarRatings",
        "FiveStarRatings",
        "ReviewsAverage",
        "LenWhatsNew",
        "MaxDownloadsLog",
        "DaysSinceLastUpdate",
        "LastUpdated",
    }
)

CATEGORICAL_FEATURES = (
    "LowestAndroidVersion",
    "HighestAndroidVersion",
    "AndroidVersion",
    "CurrentVersion",
    "Genre",
    "ContentRating",
    "DeveloperCategory",
)

#: Canonical feature order; "cat" entries expand into one-hot blocks.
_FEATURE_ORDER: tuple[tuple[str, str], ...] = (
    ("OneStarRatings", "num"),
    ("TwoStarRatings", "num"),
    ("ThreeStarRatings", "num"),
    ("FourStarRatings", "num"),
    ("FiveStarRatings", "num"),
    ("ReviewsAverage", "num"),
    ("LenTitle", "num"),
    ("LenDescription", "num"),
    ("LenWhatsNew", "num"),
    ("DeveloperWebsite", "num"),
    ("DeveloperEmail", "num"),
    ("DeveloperAddress", "num"),
    ("PrivacyPolicyLink", "num"),
    ("Paid", "num"),
    ("MaxDownloadsLog", "num"),
    ("LowestAndroidVersion", "cat"),
    ("HighestAndroidVersion", "cat"),
    ("AndroidVersion", "cat"),
    ("DevRegisteredDomain", "num"),
    ("DaysSinceLastUpdate", "num"),
    ("LastUpdated", "num"),
    ("FileSize", "num"),
    ("CurrentVersion", "cat"),
    ("Genre", "cat"),
    ("ContentRating", "cat"),
    ("DeveloperCategory", "cat"),
    ("IsSpamming", "num"),
    *((name, "num") for name in PERMISSION_GROUP_NAMES),
    *((name, "num") for name in ACTION_GROUP_NAMES),
)


def variant_features(variant: str) -> list[tuple[str, str]]:
    if variant not in (USER, DEVELOPER):
        raise ValueError(f"unknown variant {variant!r}")
    if variant == USER:
        return list(_FEATURE_ORDER)
    return [(n, k) for n, k in _FEATURE_ORDER if n not in POST_DEPLOYMENT_FEATURES]


@dataclass(frozen=True)
class DeveloperProfile:
    developer_name: str
    app_count: int
    max_downloads: int
    mean_downloads: float
    category: str
    is_spamming: int


@dataclass
class FeatureSchema:
    """Fitted encoding state: vocabularies, the training-set maximum update
    date, and the resulting expanded column layout."""

    variant: str
    vocabularies: dict[str, list[str]]
    max_last_updated: date
    feature_names: list[str]
    total_width: int

    def __post_init__(self):
        self._slots: dict[str, dict[str, int]] = {}
        offset = 0
        self._offsets: list[tuple[str, str, int, int]] = []
        for name, kind in variant_features(self.variant):
            if kind == "cat":
                vocab = self.vocabularies[name]
                self._slots[name] = {c: i for i, c in enumerate(vocab)}
                width = len(vocab)
            else:
                width = 1
            self._offsets.append((name, kind, offset, width))
            offset += width
        if offset != self.total_width:
            raise ValueError(f"schema width mismatch: {offset} != {self.total_width}")

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "feature_names": list(self.feature_names),
            "vocabularies": {k: list(v) for k, v in self.vocabularies.items()},
            "max_last_updated": self.max_last_updated.isoformat(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FeatureSchema":
        schema = cls(
            variant=doc["variant"],
            vocabularies={k: list(v) for k, v in doc["vocabularies"].items()},
            max_last_updated=date.fromisoformat(doc["max_last_updated"]),
            feature_names=list(doc["feature_names"]),
            total_width=len(doc["feature_names"]),
        )
        return schema


# ---------------------------------------------------------------------------
# Individual transforms.

def normalize_star_ratings(
    counts: tuple[int, int, int, int, int], ratings: int
) -> tuple[float, float, float, float, float]:
    """Each star count divided by the rating total; all zeros when there are
    no ratings (no signal rather than a division error)."""
    if ratings < 0:
        raise ValueError("ratings must be >= 0")
    if ratings == 0:
        return (0.0, 0.0, 0.0, 0.0, 0.0)
    return tuple(c / ratings for c in counts)  # type: ignore[return-value]


def max_downloads_log(downloads: tuple[int, int]) -> float:
    """log10 of the range maximum; 0 for a zero maximum."""
    _, hi = downloads
    if hi < 0:
        raise ValueError("download maximum must be >= 0")
    return log10(hi) if hi >= 1 else 0.0


def current_version_major(text: str) -> str:
    """Leading integer token of the version string, else 'other'."""
    token = text.strip().split(".", 1)[0]
    return token if token.isdigit() else "other"


def scalar_transforms(record: RawAppRecord) -> dict[str, float]:
    """The plain per-record scalars: text lengths, presence bits, Paid,
    update year, and the varies-with-device file-size bit."""
    return {
        "LenTitle": float(len(record.title)),
        "LenDescription": float(len(record.description)),
        "LenWhatsNew": float(len(record.whats_new)) if record.whats_new else 0.0,
        "DeveloperWebsite": 1.0 if record.developer_website else 0.0,
        "DeveloperEmail": 1.0 if record.developer_email else 0.0,
        "DeveloperAddress": 1.0 if record.developer_address else 0.0,
        "PrivacyPolicyLink": 1.0 if record.privacy_policy_link else 0.0,
        "Paid": 1.0 if (record.price or 0.0) > 0.0 else 0.0,
        "LastUpdated": float(record.last_updated.year) if record.last_updated else 0.0,
        "FileSize": 1.0 if record.file_size.strip().lower() == "varies with device" else 0.0,
    }


def days_since_last_update(last_updated: date, max_last_updated: date) -> int:
    """Whole days between an app's update date and the newest update in the
    training set; dates past the maximum clamp to 0."""
    return max((max_last_updated - last_updated).days, 0)


@lru_cache(maxsize=1)
def _shared_hosting_domains() -> frozenset[str]:
    data = resources.files("appkeep.data").joinpath("shared_hosting_domains.txt").read_text("utf-8")
    return frozenset(
        line.strip().lower()
        for line in data.splitlines()
        if line.strip() and not line.startswith("#")
    )


def dev_registered_domain(developer_website: Optional[str]) -> int:
    """1 iff the developer website exists and is not hosted on a known
    shared-hosting / site-builder domain."""
    if not developer_website:
        return 0
    url = developer_website.strip()
    if "//" not in url:
        url = "//" + url
    try:
        host = urlparse(url).hostname
    except ValueError:
        return 0
    if not host:
        return 0
    host = host.lower()
    for denied in _shared_hosting_domains():
        if host == denied or host.endswith("." + denied):
            return 0
    return 1


def build_developer_profiles(records: Iterable[RawAppRecord]) -> dict[str, DeveloperProfile]:
    """Per-developer release statistics over the training records.

    Category bands by app count: >50 Aggressive, 10-50 Active, 2-9 Moderate,
    1 Conservative.  A developer is spamming iff Aggressive with no app over
    1M downloads and a mean install count below 10k.
    """
    per_dev: dict[str, list[int]] = {}
    for record in records:
        hi = record.downloads[1] if record.downloads else 0
        per_dev.setdefault(record.developer_name, []).append(hi)
    profiles: dict[str, DeveloperProfile] = {}
    for name, maxima in per_dev.items():
        count = len(maxima)
        if count > 50:
            category = AGGRESSIVE
        elif count >= 10:
            category = ACTIVE
        elif count >= 2:
            category = MODERATE
        else:
            category = CONSERVATIVE
        max_dl = max(maxima)
        mean_dl = statistics.fmean(maxima)
        spamming = 1 if category == AGGRESSIVE and max_dl <= 1_000_000 and mean_dl < 10_000 else 0
        profiles[name] = DeveloperProfile(name, count, max_dl, mean_dl, category, spamming)
    return profiles


def default_profile(developer_name: str = "") -> DeveloperProfile:
    """Profile for a developer unseen in training: the least-assuming band."""
    return DeveloperProfile(developer_name, 1, 0, 0.0, CONSERVATIVE, 0)


def _categorical_value(record: RawAppRecord, profile: DeveloperProfile, name: str) -> str:
    if name in ("LowestAndroidVersion", "HighestAndroidVersion", "AndroidVersion"):
        lowest, highest, encoded = derive_android_versions(record.android_version)
        return {"LowestAndroidVersion": lowest, "HighestAndroidVersion": highest, "AndroidVersion": encoded}[name]
    if name == "CurrentVersion":
        return current_version_major(record.current_version)
    if name == "Genre":
        return record.genre
    if name == "ContentRating":
        return record.content_rating
    if name == "DeveloperCategory":
        return profile.category
    raise KeyError(name)


def fit_schema(
    records: list[RawAppRecord],
    profiles: dict[str, DeveloperProfile],
    variant: str,
) -> FeatureSchema:
    """Fit encoding vocabularies and the maximum update date on training
    records only.  Vocabularies hold exactly the observed categories, sorted
    for determinism."""
    if not records:
        raise ValueError("cannot fit a schema on an empty training set")
    observed: dict[str, set[str]] = {name: set() for name in CATEGORICAL_FEATURES}
    max_updated: Optional[date] = None
    for record in records:
        profile = profiles.get(record.developer_name) or default_profile(record.developer_name)
        for name in CATEGORICAL_FEATURES:
            observed[name].add(_categorical_value(record, profile, name))
        if record.last_updated and (max_updated is None or record.last_updated > max_updated):
            max_updated = record.last_updated
    if max_updated is None:
        raise ValueError("no record carries a last_updated date")

    vocabularies = {name: sorted(values) for name, values in observed.items()}
    feature_names: list[str] = []
    for name, kind in variant_features(variant):
        if kind == "cat":
            feature_names.extend(f"{name}_{category}" for category in vocabularies[name])
        else:
            feature_names.append(name)
    return FeatureSchema(
        variant=variant,
        vocabularies=vocabularies,
        max_last_updated=max_updated,
        feature_names=feature_names,
        total_width=len(feature_names),
    )


def vectorize(
    record: RawAppRecord,
    perms: PermissionGroups,
    acts: ActionGroups,
    profile: Optional[DeveloperProfile],
    schema: FeatureSchema,
) -> np.ndarray:
    """Deterministic dense vector in schema order.  Unknown categories leave
    their one-hot block all zeros; a missing profile means an unknown
    developer and falls back to the default."""
    profile = profile or default_profile(record.developer_name)
    ratios = normalize_star_ratings(record.star_counts(), record.ratings or 0)
    scalars = scalar_transforms(record)
    perm_flags = dict(zip(PERMISSION_GROUP_NAMES, perms.as_tuple()))
    act_flags = dict(zip(ACTION_GROUP_NAMES, acts.as_tuple()))

    def numeric(name: str) -> float:
        if name == "OneStarRatings":
            return ratios[0]
        if name == "TwoStarRatings":
            return ratios[1]
        if name == "ThreeStarRatings":
            return ratios[2]
        if name == "FourStarRatings":
            return ratios[3]
        if name == "FiveStarRatings":
            return ratios[4]
        if name == "ReviewsAverage":
            return record.reviews_average or 0.0
        if name == "MaxDownloadsLog":
            return max_downloads_log(record.downloads or (0, 0))
        if name == "DevRegisteredDomain":
            return float(dev_registered_domain(record.developer_website))
        if name == "DaysSinceLastUpdate":
            if record.last_updated is None:
                return 0.0
            return float(days_since_last_update(record.last_updated, schema.max_last_updated))
        if name == "IsSpamming":
            return float(profile.is_spamming)
        if name in perm_flags:
            return float(perm_flags[name])
        if name in act_flags:
            return float(act_flags[name])
        return scalars[name]

    vector = np.zeros(schema.total_width, dtype=np.float64)
    for name, kind, offset, width in schema._offsets:
        if kind == "num":
            vector[offset] = numeric(name)
        else:
            slot = schema._slots[name].get(_categorical_value(record, profile, name))
            if slot is not None:
                vector[offset + slot] = 1.0
    return vector


def vectorize_many(
    records: list[RawAppRecord],
    manifest_groups: list[tuple[PermissionGroups, ActionGroups]],
    profiles: dict[str, DeveloperProfile],
    schema: FeatureSchema,
) -> np.ndarray:
    if len(records) != len(manifest_groups):
        raise ValueError("records and manifest groups differ in length")
    matrix = np.empty((len(records), schema.total_width), dtype=np.float64)
    for i, (record, (perms, acts)) in enumerate(zip(records, manifest_groups)):
        matrix[i] = vectorize(record, perms, acts, profiles.get(record.developer_name), schema)
    return matrix
