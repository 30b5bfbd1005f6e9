"""HTTP prediction service: score, what-if deltas, global importance, and
the attribute schema the form clients build themselves from.

One immutable model is shared by all handlers; an explicit admin reload swaps
it atomically.  Request bodies are plain JSON objects of app attributes;
unknown attribute names are rejected rather than ignored so clients notice
typos.  Scores are P(removed) and the label applies the model's stored
operating threshold.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from typing import Any, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import ensemble, features, ingest, manifest
from .ensemble import BagModel
from .features import DEVELOPER, default_profile
from .ingest import RawAppRecord
from .manifest import ACTION_GROUP_NAMES, PERMISSION_GROUP_NAMES, ManifestParseError

_TEXT_FIELDS = (
    "description",
    "title",
    "whats_new",
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
)
_NUMBER_FIELDS = (
    "reviews_average",
    "price",
    "ratings",
    "one_star_ratings",
    "two_star_ratings",
    "three_star_ratings",
    "four_star_ratings",
    "five_star_ratings",
)
_FLAG_ATTRS = tuple(n.lower() for n in PERMISSION_GROUP_NAMES + ACTION_GROUP_NAMES)

#: Request attributes that only influence post-deployment features; the
#: developer-centered variant does not accept them.
_POST_DEPLOYMENT_ATTRS = frozenset(
    {
        "ratings",
        "one_star_ratings",
        "two_star_ratings",
        "three_star_ratings",
        "four_star_ratings",
        "five_star_ratings",
        "reviews_average",
        "whats_new",
        "downloads",
        "last_updated",
    }
)


class RequestError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "message": message})


def accepted_attributes(variant: str) -> list[str]:
    names = list(_TEXT_FIELDS) + list(_NUMBER_FIELDS) + ["last_updated", "downloads", "manifest_xml"]
    names += list(_FLAG_ATTRS) + ["developer_category", "is_spamming"]
    if variant == DEVELOPER:
        names = [n for n in names if n not in _POST_DEPLOYMENT_ATTRS]
    return names


def _coerce_int(name: str, value: Any) -> int:
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        try:
            return ingest.parse_int_field(value)
        except ValueError:
            pass
    raise RequestError(400, "bad_value", f"{name}: expected an integer")


def _coerce_float(name: str, value: Any) -> float:
    if isinstance(value, bool):
        raise RequestError(400, "bad_value", f"{name}: expected a number")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return ingest.parse_float_field(value)
        except ValueError:
            pass
    raise RequestError(400, "bad_value", f"{name}: expected a number")


def _coerce_downloads(value: Any) -> tuple[int, int]:
    if isinstance(value, str):
        try:
            return ingest.parse_downloads_field(value)
        except ValueError as exc:
            raise RequestError(400, "bad_value", f"downloads: {exc}")
    if isinstance(value, int) and not isinstance(value, bool):
        if value < 0:
            raise RequestError(400, "bad_value", "downloads: must be >= 0")
        return value, value
    if isinstance(value, (list, tuple)) and len(value) == 2:
        lo, hi = (_coerce_int("downloads", v) for v in value)
        if 0 <= lo <= hi:
            return lo, hi
    raise RequestError(400, "bad_value", "downloads: expected 'N+', 'x - y', N, or [lo, hi]")


@dataclass
class ParsedRequest:
    record: RawAppRecord
    perms: manifest.PermissionGroups
    acts: manifest.ActionGroups
    profile: features.DeveloperProfile


def _empty_record() -> RawAppRecord:
    return RawAppRecord(
        description="",
        title="",
        last_updated=None,
        whats_new=None,
        reviews_average=None,
        price=None,
        ratings=None,
        one_star_ratings=None,
        two_star_ratings=None,
        three_star_ratings=None,
        four_star_ratings=None,
        five_star_ratings=None,
        privacy_policy_link=None,
        genre="",
        content_rating="",
        current_version="",
        android_version="",
        developer_email=None,
        developer_website=None,
        developer_name="",
        developer_address=None,
        file_size="",
        downloads=None,
        status_checks=(None, None, None),
        manifest_source="",
    )


def parse_request(attrs: dict[str, Any], variant: str) -> ParsedRequest:
    """Turn a JSON attribute object into a record stub plus group flags and
    a developer profile, applying the absent-value defaults of the feature
    module.  Raises RequestError on unknown names or bad values."""
    allowed = set(accepted_attributes(variant))
    record = _empty_record()
    flags: dict[str, int] = {}
    category: Optional[str] = None
    spamming = 0

    for name, value in attrs.items():
        if name not in allowed:
            raise RequestError(400, "unknown_attribute", f"unknown attribute {name!r}")
        if value is None:
            continue
        if name == "manifest_xml":
            if not isinstance(value, str):
                raise RequestError(400, "bad_value", "manifest_xml: expected XML text")
            try:
                info = manifest.parse_manifest_xml(value)
            except ManifestParseError as exc:
                raise RequestError(422, "bad_manifest", str(exc))
            for group, bit in zip(
                PERMISSION_GROUP_NAMES, manifest.group_permissions(info.permissions).as_tuple()
            ):
                if bit:
                    flags[group.lower()] = 1
            for group, bit in zip(
                ACTION_GROUP_NAMES, manifest.group_actions(info.receiver_actions).as_tuple()
            ):
                if bit:
                    flags[group.lower()] = 1
        elif name in _FLAG_ATTRS:
            bit = _coerce_int(name, value)
            if bit not in (0, 1):
                raise RequestError(400, "bad_value", f"{name}: expected 0 or 1")
            if bit:
                flags[name] = 1
        elif name == "is_spamming":
            spamming = _coerce_int(name, value)
            if spamming not in (0, 1):
                raise RequestError(400, "bad_value", "is_spamming: expected 0 or 1")
        elif name == "developer_category":
            if not isinstance(value, str):
                raise RequestError(400, "bad_value", "developer_category: expected text")
            category = value
        elif name == "last_updated":
            if not isinstance(value, str):
                raise RequestError(400, "bad_value", "last_updated: expected a date string")
            try:
                record = replace(record, last_updated=ingest.parse_date_field(value))
            except ValueError:
                raise RequestError(400, "bad_value", "last_updated: unrecognized date")
        elif name == "downloads":
            record = replace(record, downloads=_coerce_downloads(value))
        elif name in _NUMBER_FIELDS:
            if name in ("reviews_average", "price"):
                record = replace(record, **{name: _coerce_float(name, value)})
            else:
                record = replace(record, **{name: _coerce_int(name, value)})
        elif name in _TEXT_FIELDS:
            if not isinstance(value, str):
                raise RequestError(400, "bad_value", f"{name}: expected text")
            record = replace(record, **{name: value})
        else:  # pragma: no cover - allowed set and branches stay in sync
            raise RequestError(400, "unknown_attribute", f"unknown attribute {name!r}")

    perms = manifest.PermissionGroups(
        **{n.lower(): flags.get(n.lower(), 0) for n in PERMISSION_GROUP_NAMES}
    )
    acts = manifest.ActionGroups(
        **{n.lower(): flags.get(n.lower(), 0) for n in ACTION_GROUP_NAMES}
    )
    profile = default_profile(record.developer_name)
    if category is not None or spamming:
        profile = features.DeveloperProfile(
            developer_name=record.developer_name,
            app_count=profile.app_count,
            max_downloads=profile.max_downloads,
            mean_downloads=profile.mean_downloads,
            category=category if category is not None else profile.category,
            is_spamming=spamming,
        )
    return ParsedRequest(record=record, perms=perms, acts=acts, profile=profile)


def _score_request(bag: BagModel, attrs: dict[str, Any]) -> float:
    parsed = parse_request(attrs, bag.config.variant)
    vector = features.vectorize(parsed.record, parsed.perms, parsed.acts, parsed.profile, bag.schema)
    return float(ensemble.predict_score(bag, vector))


@dataclass
class _State:
    model: Optional[BagModel] = None
    version: str = ""
    path: Optional[str] = None


def _model_version(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


def create_app(
    model: Optional[BagModel] = None,
    model_path: Optional[str] = None,
    static_dir: Optional[str] = None,
) -> FastAPI:
    app = FastAPI(title="appkeep", docs_url=None, redoc_url=None)
    state = _State(path=model_path)
    if model is not None:
        state.model = model
        state.version = _model_version(ensemble.dumps(model))
    elif model_path is not None:
        with open(model_path, "r", encoding="utf-8") as fh:
            text = fh.read()
        state.model = ensemble.loads(text)
        state.version = _model_version(text)
    app.state.appkeep = state

    def require_model() -> BagModel:
        if state.model is None:
            raise RequestError(503, "no_model", "no model is loaded")
        return state.model

    @app.exception_handler(RequestError)
    async def handle_request_error(_request, exc: RequestError):
        return _error(exc.status, exc.code, exc.message)

    async def read_object(request: Request) -> dict[str, Any]:
        try:
            payload = await request.json()
        except json.JSONDecodeError:
            raise RequestError(400, "bad_request", "body must be a JSON object")
        if not isinstance(payload, dict):
            raise RequestError(400, "bad_request", "body must be a JSON object")
        return payload

    @app.get("/v1/health")
    async def health():
        if state.model is None:
            return {"status": "no_model", "model_version": None}
        return {"status": "ok", "model_version": state.version}

    @app.get("/v1/schema")
    async def schema():
        bag = require_model()
        vocab = bag.schema.vocabularies
        attrs = []
        for name in accepted_attributes(bag.config.variant):
            entry: dict[str, Any] = {"name": name}
            if name == "genre":
                entry.update(kind="category", values=vocab["Genre"])
            elif name == "content_rating":
                entry.update(kind="category", values=vocab["ContentRating"])
            elif name == "android_version":
                entry.update(kind="category", values=vocab["AndroidVersion"])
            elif name == "developer_category":
                entry.update(kind="category", values=vocab["DeveloperCategory"])
            elif name in _FLAG_ATTRS or name == "is_spamming":
                entry.update(kind="binary")
            elif name in _NUMBER_FIELDS:
                entry.update(kind="number")
            elif name == "last_updated":
                entry.update(kind="date")
            elif name == "downloads":
                entry.update(kind="downloads")
            else:
                entry.update(kind="text")
            attrs.append(entry)
        return {
            "variant": bag.config.variant,
            "threshold": bag.threshold if bag.threshold is not None else 0.5,
            "attributes": attrs,
        }

    @app.get("/v1/importance")
    async def importance():
        bag = require_model()
        ranked = ensemble.aggregate_importance(bag)
        return {"importance": [{"feature": n, "score": s} for n, s in ranked]}

    @app.post("/v1/predict")
    async def predict(request: Request):
        bag = require_model()
        attrs = await read_object(request)
        score = _score_request(bag, attrs)
        threshold = bag.threshold if bag.threshold is not None else 0.5
        top = ensemble.aggregate_importance(bag)[:20]
        return {
            "score": score,
            "label": ("Removed" if score > threshold else "Stable"),
            "threshold": threshold,
            "top_importance": [{"feature": n, "score": s} for n, s in top],
            "model_version": state.version,
        }

    @app.post("/v1/whatif")
    async def whatif(request: Request):
        bag = require_model()
        payload = await read_object(request)
        base = payload.get("base")
        mutations = payload.get("mutations", [])
        if not isinstance(base, dict) or not isinstance(mutations, list):
            raise RequestError(400, "bad_request", "expected {base: {...}, mutations: [...]}")
        base_score = _score_request(bag, base)
        results = []
        for entry in mutations:
            if not isinstance(entry, dict) or "attribute" not in entry:
                raise RequestError(400, "bad_request", "each mutation needs {attribute, value}")
            mutated = dict(base)
            mutated[entry["attribute"]] = entry.get("value")
            score = _score_request(bag, mutated)
            results.append(
                {
                    "mutation": {"attribute": entry["attribute"], "value": entry.get("value")},
                    "score": score,
                    "delta": score - base_score,
                }
            )
        return {"base_score": base_score, "results": results}

    @app.post("/v1/admin/reload")
    async def reload_model():
        if state.path is None:
            raise RequestError(400, "bad_request", "server was not started with a model path")
        with open(state.path, "r", encoding="utf-8") as fh:
            text = fh.read()
        new_model = ensemble.loads(text)
        state.model = new_model
        state.version = _model_version(text)
        return {"status": "ok", "model_version": state.version}

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
