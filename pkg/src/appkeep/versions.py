"""Android version text handling: release-name lookup and the three
categories derived from a store page's "Requires Android" field."""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources

VARIES = "Varies"
AND_UP = "AndUp"
UNKNOWN = "Unknown"

_RANGE_RE = re.compile(r"^(\d[\d.W]*)\s*[-–]\s*(\d[\d.W]*)$")
_AND_UP_RE = re.compile(r"^(\d[\d.W]*)\s+and\s+up$", re.IGNORECASE)


def _version_tuple(text: str) -> tuple[int, ...]:
    parts = []
    for token in text.split("."):
        digits = re.match(r"\d+", token)
        if digits is None:
            break
        parts.append(int(digits.group()))
    if not parts:
        raise ValueError(f"no numeric version in {text!r}")
    return tuple(parts)


@lru_cache(maxsize=1)
def _name_table() -> list[tuple[str, tuple[int, ...], tuple[int, ...]]]:
    table = []
    data = resources.files("appkeep.data").joinpath("android_versions.tsv").read_text("utf-8")
    for line in data.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, lo, hi = line.split("\t")
        table.append((name, _version_tuple(lo), _version_tuple(hi)))
    return table


def release_name(version_text: str) -> str:
    """Release name for a numeric platform version ('4.0.3' -> the Android
    4.0.x release name); UNKNOWN when outside every span in the table."""
    try:
        v = _version_tuple(version_text)
    except ValueError:
        return UNKNOWN
    for name, lo, hi in _name_table():
        # Pad so that '4' reads as 4.0 against lower bounds and '3.1' falls
        # inside a 3.0 - 3.2.6 span.
        lo_ok = v + (0,) * max(0, len(lo) - len(v)) >= lo
        hi_ok = v <= hi + (999,) * max(0, len(v) - len(hi))
        if lo_ok and hi_ok:
            return name
    return UNKNOWN


def derive_android_versions(text: str) -> tuple[str, str, str]:
    """Split a "Requires Android" string into (lowest, highest, encoded).

    'X and up'          -> (name(X), AndUp, raw text)
    'X - Y'             -> (name(X), name(Y), raw text)
    'Varies with device'-> (Varies, Varies, Varies)
    anything else       -> (Unknown, Unknown, raw text)
    """
    raw = text.strip()
    if raw.lower() == "varies with device":
        return VARIES, VARIES, VARIES
    m = _AND_UP_RE.match(raw)
    if m:
        return release_name(m.group(1)), AND_UP, raw
    m = _RANGE_RE.match(raw)
    if m:
        return release_name(m.group(1)), release_name(m.group(2)), raw
    return UNKNOWN, UNKNOWN, raw
