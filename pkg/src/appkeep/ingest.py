"""Raw app-record ingestion.

Reads store-page records from CSV, validates field syntax row by row,
aggregates the three market-status checks into the binary target label, drops
incomplete or status-ambiguous records, and summarizes dataset distributions.
All transforms are pure and streaming-friendly: malformed rows are reported,
never silently dropped.
"""

from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum
from typing import Iterable, Optional, TextIO

from . import versions


class IngestError(Exception):
    """Fatal ingestion problem (bad header, unreadable stream)."""


class Label(Enum):
    REMOVED = "Removed"
    STABLE = "Stable"


#: Exact CSV header, comma-delimited, RFC-4180 quoting, UTF-8.
CSV_COLUMNS = [
    "description",
    "title",
    "last_updated",
    "whats_new",
    "reviews_average",
    "price",
    "ratings",
    "one_star_ratings",
    "two_star_ratings",
    "three_star_ratings",
    "four_star_ratings",
    "five_star_ratings",
    "privacy_policy_link",
    "genre",
    "content_rating",
    "current_version",
    "android_version",
    "developer_email",
    "developer_website",
    "developer_name",
    "developer_address",
    "file_size",
    "downloads",
    "status_dec18",
    "status_feb19",
    "status_mayjune19",
    "manifest_source",
]

_STATUS_COLUMNS = ("status_dec18", "status_feb19", "status_mayjune19")

#: Optional text fields: absence is data (mapped to presence bits downstream).
OPTIONAL_FIELDS = frozenset(
    {"whats_new", "privacy_policy_link", "developer_email", "developer_website", "developer_address"}
)

REQUIRED_FIELDS = tuple(c for c in CSV_COLUMNS if c not in OPTIONAL_FIELDS)


@dataclass
class RawAppRecord:
    """One app's store-page fields, status checks, and manifest source."""

    description: str
    title: str
    last_updated: Optional[date]
    whats_new: Optional[str]
    reviews_average: Optional[float]
    price: Optional[float]
    ratings: Optional[int]
    one_star_ratings: Optional[int]
    two_star_ratings: Optional[int]
    three_star_ratings: Optional[int]
    four_star_ratings: Optional[int]
    five_star_ratings: Optional[int]
    privacy_policy_link: Optional[str]
    genre: str
    content_rating: str
    current_version: str
    android_version: str
    developer_email: Optional[str]
    developer_website: Optional[str]
    developer_name: str
    developer_address: Optional[str]
    file_size: str
    downloads: Optional[tuple[int, int]]
    status_checks: tuple[Optional[bool], Optional[bool], Optional[bool]]
    manifest_source: str
    source_row: int = field(default=0, compare=False)

    def star_counts(self) -> tuple[int, int, int, int, int]:
        return (
            self.one_star_ratings or 0,
            self.two_star_ratings or 0,
            self.three_star_ratings or 0,
            self.four_star_ratings or 0,
            self.five_star_ratings or 0,
        )


@dataclass(frozen=True)
class RowError:
    row: int
    reason: str


@dataclass
class DatasetSummary:
    genre_histogram: dict[str, int]
    lowest_version_histogram: dict[str, int]
    review_mean_by_label: dict[Label, float]
    review_std_by_label: dict[Label, float]
    class_counts: dict[Label, int]


# ---------------------------------------------------------------------------
# Field parsers (shared with the prediction service, which accepts the same
# textual forms).

def parse_int_field(text: str) -> int:
    """Integer with optional thousands separators ('114,391,572')."""
    cleaned = text.replace(",", "").replace(" ", "")
    return int(cleaned)


def parse_float_field(text: str) -> float:
    value = float(text.replace(",", ""))
    if math.isnan(value) or math.isinf(value):
        raise ValueError("not finite")
    return value


def parse_date_field(text: str) -> date:
    """ISO-8601 ('2020-05-13') or store long form ('May 13, 2020')."""
    text = text.strip()
    try:
        return date.fromisoformat(text)
    except ValueError:
        pass
    return datetime.strptime(text, "%B %d, %Y").date()


def parse_downloads_field(text: str) -> tuple[int, int]:
    """Download ranges: 'N+' means the open-ended range [N, N]; 'x - y' means
    [x, y]; a bare number N means [N, N]."""
    text = text.strip()
    if text.endswith("+"):
        n = parse_int_field(text[:-1])
        lo, hi = n, n
    elif "-" in text:
        left, _, right = text.partition("-")
        lo, hi = parse_int_field(left), parse_int_field(right)
    else:
        n = parse_int_field(text)
        lo, hi = n, n
    if lo < 0 or lo > hi:
        raise ValueError(f"invalid range [{lo}, {hi}]")
    return lo, hi


_TRUE_WORDS = {"1", "true", "yes"}
_FALSE_WORDS = {"0", "false", "no"}


def parse_status_field(text: str) -> bool:
    word = text.strip().lower()
    if word in _TRUE_WORDS:
        return True
    if word in _FALSE_WORDS:
        return False
    raise ValueError("not a boolean")


# ---------------------------------------------------------------------------

def _parse_row(row: dict[str, str], row_number: int) -> tuple[Optional[RawAppRecord], list[RowError]]:
    errors: list[RowError] = []

    def typed(name: str, parser, constraint=None, what: str = "invalid"):
        raw = (row.get(name) or "").strip()
        if raw == "":
            return None
        try:
            value = parser(raw)
        except (ValueError, TypeError):
            errors.append(RowError(row_number, f"{name}: {what}"))
            return None
        if constraint is not None and not constraint(value):
            errors.append(RowError(row_number, f"{name}: out of range"))
            return None
        return value

    def text(name: str) -> Optional[str]:
        raw = row.get(name) or ""
        return raw if raw.strip() != "" else None

    reviews_average = typed("reviews_average", parse_float_field, lambda v: 0.0 <= v <= 5.0, "not a number")
    price = typed("price", parse_float_field, lambda v: v >= 0.0, "not a number")
    ratings = typed("ratings", parse_int_field, lambda v: v >= 0, "not an integer")
    stars = {
        name: typed(name, parse_int_field, lambda v: v >= 0, "not an integer")
        for name in (
            "one_star_ratings",
            "two_star_ratings",
            "three_star_ratings",
            "four_star_ratings",
            "five_star_ratings",
        )
    }
    last_updated = typed("last_updated", parse_date_field, what="unrecognized date")
    downloads = typed("downloads", parse_downloads_field, what="unrecognized range")
    status = tuple(typed(col, parse_status_field, what="not a boolean") for col in _STATUS_COLUMNS)

    if errors:
        return None, errors

    record = RawAppRecord(
        description=row.get("description") or "",
        title=row.get("title") or "",
        last_updated=last_updated,
        whats_new=text("whats_new"),
        reviews_average=reviews_average,
        price=price,
        ratings=ratings,
        one_star_ratings=stars["one_star_ratings"],
        two_star_ratings=stars["two_star_ratings"],
        three_star_ratings=stars["three_star_ratings"],
        four_star_ratings=stars["four_star_ratings"],
        five_star_ratings=stars["five_star_ratings"],
        privacy_policy_link=text("privacy_policy_link"),
        genre=row.get("genre") or "",
        content_rating=row.get("content_rating") or "",
        current_version=row.get("current_version") or "",
        android_version=row.get("android_version") or "",
        developer_email=text("developer_email"),
        developer_website=text("developer_website"),
        developer_name=row.get("developer_name") or "",
        developer_address=text("developer_address"),
        file_size=row.get("file_size") or "",
        downloads=downloads,
        status_checks=status,  # type: ignore[arg-type]
        manifest_source=row.get("manifest_source") or "",
        source_row=row_number,
    )
    return record, []


def parse_records(stream: Iterable[str]) -> tuple[list[RawAppRecord], list[RowError]]:
    """Parse CSV rows into records.

    Returns (records, row errors).  A missing header column is fatal; a row
    whose fields cannot be parsed is reported with its row number and reason.
    Row numbers are 1-based and count the header as row 1.
    """
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        raise IngestError("empty input: no header row")
    missing = [c for c in CSV_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise IngestError(f"missing required column(s): {', '.join(missing)}")
    extra_status = [c for c in reader.fieldnames if c.startswith("status_") and c not in _STATUS_COLUMNS]
    if extra_status:
        # The status protocol is fixed at three checks; refusing extras beats
        # silently ignoring what looks like a fourth occasion.
        raise IngestError(f"unexpected status column(s): {', '.join(extra_status)}")

    records: list[RawAppRecord] = []
    errors: list[RowError] = []
    for row_number, row in enumerate(reader, start=2):
        record, row_errors = _parse_row(row, row_number)
        if record is not None:
            records.append(record)
        errors.extend(row_errors)
    return records, errors


def aggregate_status(checks: tuple[bool, bool, bool]) -> Optional[Label]:
    """Map the three absent-from-market checks to a label.

    All three absent -> REMOVED, all three present -> STABLE, any mix ->
    None (excluded from the labeled dataset).
    """
    if len(checks) != 3:
        raise ValueError(f"expected exactly 3 status checks, got {len(checks)}")
    if all(c is True for c in checks):
        return Label.REMOVED
    if all(c is False for c in checks):
        return Label.STABLE
    return None


def _missing_fields(record: RawAppRecord) -> list[str]:
    missing = []
    for name in REQUIRED_FIELDS:
        if name in _STATUS_COLUMNS:
            continue
        value = getattr(record, name)
        if value is None or (isinstance(value, str) and value.strip() == ""):
            missing.append(name)
    for col, check in zip(_STATUS_COLUMNS, record.status_checks):
        if check is None:
            missing.append(col)
    return missing


def filter_complete(
    records: Iterable[RawAppRecord],
) -> tuple[list[tuple[RawAppRecord, Label]], list[RowError]]:
    """Keep labeled, complete records; report every drop with a reason.

    Reasons: ``missing:<field>`` for absent required fields,
    ``invalid:star_ratings`` when star counts exceed the rating total, and
    ``status:mixed`` for records whose three checks disagree.
    """
    kept: list[tuple[RawAppRecord, Label]] = []
    drops: list[RowError] = []
    for record in records:
        missing = _missing_fields(record)
        if missing:
            drops.append(RowError(record.source_row, f"missing:{missing[0]}"))
            continue
        if sum(record.star_counts()) > (record.ratings or 0):
            drops.append(RowError(record.source_row, "invalid:star_ratings"))
            continue
        label = aggregate_status(record.status_checks)  # type: ignore[arg-type]
        if label is None:
            drops.append(RowError(record.source_row, "status:mixed"))
            continue
        kept.append((record, label))
    return kept, drops


def summarize(labeled: Iterable[tuple[RawAppRecord, Label]]) -> DatasetSummary:
    """Histogram genres and lowest Android versions, and per-class review
    mean/std (population std).  Empty input yields an empty summary."""
    genre_hist: dict[str, int] = {}
    version_hist: dict[str, int] = {}
    reviews: dict[Label, list[float]] = {Label.REMOVED: [], Label.STABLE: []}
    counts: dict[Label, int] = {}
    for record, label in labeled:
        genre_hist[record.genre] = genre_hist.get(record.genre, 0) + 1
        lowest, _, _ = versions.derive_android_versions(record.android_version)
        version_hist[lowest] = version_hist.get(lowest, 0) + 1
        if record.reviews_average is not None:
            reviews[label].append(record.reviews_average)
        counts[label] = counts.get(label, 0) + 1
    means = {lbl: statistics.fmean(vals) for lbl, vals in reviews.items() if vals}
    stds = {lbl: statistics.pstdev(vals) for lbl, vals in reviews.items() if vals}
    return DatasetSummary(
        genre_histogram=genre_hist,
        lowest_version_histogram=version_hist,
        review_mean_by_label=means,
        review_std_by_label=stds,
        class_counts=counts,
    )


# ---------------------------------------------------------------------------
# Serialization (round-trips every kept record field for field).

def _format_downloads(rng: Optional[tuple[int, int]]) -> str:
    if rng is None:
        return ""
    lo, hi = rng
    return str(lo) if lo == hi else f"{lo} - {hi}"


def write_records(records: Iterable[RawAppRecord], sink: TextIO) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow(
            [
                r.description,
                r.title,
                r.last_updated.isoformat() if r.last_updated else "",
                r.whats_new or "",
                "" if r.reviews_average is None else repr(r.reviews_average),
                "" if r.price is None else repr(r.price),
                "" if r.ratings is None else str(r.ratings),
                "" if r.one_star_ratings is None else str(r.one_star_ratings),
                "" if r.two_star_ratings is None else str(r.two_star_ratings),
                "" if r.three_star_ratings is None else str(r.three_star_ratings),
                "" if r.four_star_ratings is None else str(r.four_star_ratings),
                "" if r.five_star_ratings is None else str(r.five_star_ratings),
                r.privacy_policy_link or "",
                r.genre,
                r.content_rating,
                r.current_version,
                r.android_version,
                r.developer_email or "",
                r.developer_website or "",
                r.developer_name,
                r.developer_address or "",
                r.file_size,
                _format_downloads(r.downloads),
                *("" if c is None else str(int(c)) for c in r.status_checks),
                r.manifest_source,
            ]
        )


def write_drop_report(issues: Iterable[RowError], sink: TextIO) -> None:
    """Drop report CSV with columns row, reason."""
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["row", "reason"])
    for issue in issues:
        writer.writerow([issue.row, issue.reason])
