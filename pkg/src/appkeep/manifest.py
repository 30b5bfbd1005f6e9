"""Textual AndroidManifest parsing and permission/action grouping.

Extracts the requested permissions and the broadcast-receiver actions from a
decoded manifest XML document, then maps them onto the nine dangerous
permission-group flags and eleven action-group flags used as model features.
Binary AXML is out of scope: callers decode APK-internal manifests to text
with any external decoder first.
"""

from __future__ import annotations

import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable

log = logging.getLogger(__name__)

_ANDROID_NS = "{http://schemas.android.com/apk/res/android}"

PERMISSION_GROUP_NAMES = (
    "Storage",
    "Calendar",
    "Camera",
    "Contacts",
    "Location",
    "Microphone",
    "Phone",
    "Sensors",
    "SMS",
)

ACTION_GROUP_NAMES = (
    "Net",
    "Intent",
    "Bluetooth",
    "App",
    "Provider",
    "Speech",
    "NFC",
    "Media",
    "Hardware",
    "Google",
    "OS",
)

_ACTION_SEGMENTS = {name.lower(): name for name in ACTION_GROUP_NAMES if name != "Google"}


class ManifestParseError(Exception):
    """Malformed manifest XML; carries the byte offset of the failure."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (byte offset {byte_offset})")
        self.byte_offset = byte_offset


@dataclass(frozen=True)
class ManifestInfo:
    package: str
    permissions: frozenset[str]
    receiver_actions: frozenset[str]


@dataclass(frozen=True)
class PermissionGroups:
    storage: int = 0
    calendar: int = 0
    camera: int = 0
    contacts: int = 0
    location: int = 0
    microphone: int = 0
    phone: int = 0
    sensors: int = 0
    sms: int = 0

    def as_tuple(self) -> tuple[int, ...]:
        return (
            self.storage,
            self.calendar,
            self.camera,
            self.contacts,
            self.location,
            self.microphone,
            self.phone,
            self.sensors,
            self.sms,
        )


@dataclass(frozen=True)
class ActionGroups:
    net: int = 0
    intent: int = 0
    bluetooth: int = 0
    app: int = 0
    provider: int = 0
    speech: int = 0
    nfc: int = 0
    media: int = 0
    hardware: int = 0
    google: int = 0
    os: int = 0

    def as_tuple(self) -> tuple[int, ...]:
        return (
            self.net,
            self.intent,
            self.bluetooth,
            self.app,
            self.provider,
            self.speech,
            self.nfc,
            self.media,
            self.hardware,
            self.google,
            self.os,
        )


def _name_attr(element: ET.Element) -> str:
    return element.get(_ANDROID_NS + "name") or element.get("name") or ""


def _byte_offset(text: str, line: int, column: int) -> int:
    lines = text.encode("utf-8").split(b"\n")
    return sum(len(l) + 1 for l in lines[: line - 1]) + column


def parse_manifest_xml(text: str) -> ManifestInfo:
    """Extract package name, uses-permission names, and the action names
    nested under receiver intent-filters."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, column = exc.position
        raise ManifestParseError(str(exc), _byte_offset(text, line, column)) from exc

    package = root.get("package") or ""
    if not package:
        log.warning("manifest has no package attribute")

    permissions = {
        name for el in root.iter("uses-permission") if (name := _name_attr(el))
    }
    actions = {
        name
        for receiver in root.iter("receiver")
        for action in receiver.findall("intent-filter/action")
        if (name := _name_attr(action))
    }
    return ManifestInfo(
        package=package,
        permissions=frozenset(permissions),
        receiver_actions=frozenset(actions),
    )


@lru_cache(maxsize=1)
def _dangerous_table() -> dict[str, str]:
    """permission identifier -> group name, from the shipped table."""
    mapping: dict[str, str] = {}
    data = resources.files("appkeep.data").joinpath("dangerous_permissions.tsv").read_text("utf-8")
    for line in data.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        group, permission = line.split("\t")
        if group not in PERMISSION_GROUP_NAMES:
            raise ValueError(f"unknown permission group {group!r} in table")
        mapping[permission] = group
    return mapping


def group_permissions(permissions: Iterable[str]) -> PermissionGroups:
    """Set a group flag iff at least one of its dangerous permissions was
    requested.  Normal permissions set no flag."""
    table = _dangerous_table()
    hit = {table[p].lower() for p in permissions if p in table}
    return PermissionGroups(**{g: 1 for g in hit})


def _action_group(identifier: str) -> str | None:
    if identifier.startswith("com.google"):
        return "google"
    prefix = "android."
    if identifier.startswith(prefix):
        segment = identifier[len(prefix):].split(".", 1)[0].lower()
        if segment in _ACTION_SEGMENTS:
            return segment
    return None


def group_actions(actions: Iterable[str]) -> ActionGroups:
    """Group receiver actions by top package segment below 'android.', with
    'com.google.*' collected under the Google flag."""
    hit = {g for a in actions if (g := _action_group(a)) is not None}
    return ActionGroups(**{g: 1 for g in hit})


def unmatched_actions(actions: Iterable[str]) -> frozenset[str]:
    """Actions that set no group flag; exposed so corpus drift is visible."""
    return frozenset(a for a in actions if _action_group(a) is None)
