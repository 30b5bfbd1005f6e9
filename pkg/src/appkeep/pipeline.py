"""Glue between ingestion, manifest parsing, and feature building; shared by
the CLI subcommands and the prediction service."""

from __future__ import annotations

import os
from typing import Iterable, Optional

import numpy as np

from . import features, ingest, manifest
from .features import DeveloperProfile, FeatureSchema
from .ingest import Label, RawAppRecord, RowError
from .manifest import ActionGroups, ManifestParseError, PermissionGroups

Groups = tuple[PermissionGroups, ActionGroups]


def load_labeled_csv(path: str) -> tuple[list[tuple[RawAppRecord, Label]], list[RowError]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        records, errors = ingest.parse_records(fh)
    labeled, drops = ingest.filter_complete(records)
    return labeled, errors + drops


def manifest_groups(record: RawAppRecord, base_dir: str = ".") -> Groups:
    """Parse the record's manifest source (inline XML or a file path) into
    the permission/action group flags."""
    source = record.manifest_source
    if source.lstrip().startswith("<"):
        text = source
    else:
        path = source if os.path.isabs(source) else os.path.join(base_dir, source)
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    info = manifest.parse_manifest_xml(text)
    return manifest.group_permissions(info.permissions), manifest.group_actions(info.receiver_actions)


def resolve_manifests(
    labeled: Iterable[tuple[RawAppRecord, Label]], base_dir: str = "."
) -> tuple[list[tuple[RawAppRecord, Label]], list[Groups], list[RowError]]:
    """Attach manifest groups; records whose manifest cannot be read or
    parsed are dropped with a reason, mirroring the ingest drop report."""
    kept: list[tuple[RawAppRecord, Label]] = []
    groups: list[Groups] = []
    issues: list[RowError] = []
    for record, label in labeled:
        try:
            groups.append(manifest_groups(record, base_dir))
        except (ManifestParseError, OSError) as exc:
            issues.append(RowError(record.source_row, f"manifest:{exc}"))
            continue
        kept.append((record, label))
    return kept, groups, issues


def labels_array(labeled: Iterable[tuple[RawAppRecord, Label]]) -> np.ndarray:
    return np.array([1.0 if label is Label.REMOVED else 0.0 for _, label in labeled])


def vectorize_labeled(
    labeled: list[tuple[RawAppRecord, Label]],
    groups: list[Groups],
    schema: FeatureSchema,
    profiles: Optional[dict[str, DeveloperProfile]] = None,
) -> tuple[np.ndarray, np.ndarray]:
    records = [record for record, _ in labeled]
    X = features.vectorize_many(records, groups, profiles or {}, schema)
    return X, labels_array(labeled)


def fit_and_vectorize(
    labeled: list[tuple[RawAppRecord, Label]],
    groups: list[Groups],
    variant: str,
) -> tuple[FeatureSchema, dict[str, DeveloperProfile], np.ndarray, np.ndarray]:
    """Fit profiles and the schema on the given records, then vectorize
    them.  Used by training; prediction reuses the model's stored schema."""
    records = [record for record, _ in labeled]
    profiles = features.build_developer_profiles(records)
    schema = features.fit_schema(records, profiles, variant)
    X, y = vectorize_labeled(labeled, groups, schema, profiles)
    return schema, profiles, X, y
