"""Running queries against a search backend under a controlled context.

A backend is anything with ``fetch(request: dict) -> dict`` speaking the
wire schema below; :class:`SimBackend` wraps the in-process simulator and
:class:`HttpBackend` talks to a remote service.

Request: ``{query, lon, lat, account_id, timestamp, page_size, page}``.
Response: ``{"entries": [{"id", "name", "score"}, ...]}``; key names are
configurable per backend through :class:`FieldMapping`.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime
from datetime import time as dtime
from pathlib import Path
from typing import Protocol

from .catalog import Shop
from .text import name_key

OK = "ok"
GATED = "gated"
DEFAULT_WINDOW = (dtime(10, 0), dtime(21, 0))


class BackendError(Exception):
    """Transport failure or malformed response; the query counts as unexecuted."""


@dataclass(frozen=True)
class SearchContext:
    account_id: str
    location: tuple[float, float]
    timestamp: datetime
    page_size: int = 20
    page_depth: int = 1

    def __post_init__(self) -> None:
        if self.page_size < 1 or self.page_depth < 1:
            raise ValueError("page_size and page_depth must be positive")

    @property
    def minute_of_day(self) -> int:
        return self.timestamp.hour * 60 + self.timestamp.minute

    def to_dict(self) -> dict:
        return {"account_id": self.account_id, "lon": self.location[0], "lat": self.location[1],
                "timestamp": self.timestamp.isoformat(), "page_size": self.page_size,
                "page_depth": self.page_depth}

    @classmethod
    def for_shop(cls, shop: Shop, account_id: str, timestamp: datetime,
                 page_size: int = 20, page_depth: int = 1) -> "SearchContext":
        return cls(account_id, shop.location, timestamp, page_size, page_depth)


@dataclass(frozen=True)
class Entry:
    shop_id: str | None
    name: str
    score: float | None = None


@dataclass(frozen=True)
class SearchResultPage:
    entries: tuple[Entry, ...]
    query: str
    context: SearchContext
    latency_ms: float = 0.0
    digest: str = ""

    @property
    def has_ids(self) -> bool:
        return bool(self.entries) and all(e.shop_id is not None for e in self.entries)


def gate_time(ctx: SearchContext, window: tuple[dtime, dtime] = DEFAULT_WINDOW) -> str:
    start, end = window
    if not start < end:
        raise ValueError("time window must have start < end")
    return OK if start <= ctx.timestamp.time() < end else GATED


def recall_check(page: SearchResultPage, target: Shop) -> tuple[bool, str]:
    """Membership of ``target`` in the page and the matching mode used (``id`` or ``name``)."""
    if page.has_ids or not page.entries:
        return any(e.shop_id == target.id for e in page.entries), "id"
    key = name_key(target.name)
    return any(name_key(e.name) == key for e in page.entries), "name"


def recalled(page: SearchResultPage, target: Shop) -> bool:
    return recall_check(page, target)[0]


class Backend(Protocol):
    def fetch(self, request: dict) -> dict: ...


@dataclass(frozen=True)
class FieldMapping:
    entries: str = "entries"
    id: str | None = "id"
    name: str = "name"
    score: str | None = "score"


def build_request(query: str, ctx: SearchContext, page: int = 0) -> dict:
    return {"query": query, "lon": ctx.location[0], "lat": ctx.location[1],
            "account_id": ctx.account_id, "timestamp": ctx.timestamp.isoformat(),
            "page_size": ctx.page_size, "page": page}


def parse_entries(body, mapping: FieldMapping = FieldMapping()) -> list[Entry]:
    if not isinstance(body, dict) or not isinstance(body.get(mapping.entries), list):
        raise BackendError(f"response has no {mapping.entries!r} array")
    out = []
    for raw in body[mapping.entries]:
        if not isinstance(raw, dict) or not isinstance(raw.get(mapping.name), str):
            raise BackendError(f"malformed entry {raw!r}")
        sid = raw.get(mapping.id) if mapping.id else None
        score = raw.get(mapping.score) if mapping.score else None
        out.append(Entry(None if sid is None else str(sid), raw[mapping.name],
                         None if score is None else float(score)))
    return out


def digest(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


class AuditLog:
    """Append-only, order-stamped JSON-lines record of executed queries."""

    def __init__(self, path=None):
        self.path = Path(path) if path else None
        self.records: list[dict] = []
        self._lock = threading.Lock()
        if self.path:
            self.path.write_text("", encoding="utf-8")

    def append(self, record: dict) -> None:
        with self._lock:
            record = {"seq": len(self.records), **record}
            self.records.append(record)
            if self.path:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def execute(query, ctx: SearchContext, backend: Backend,
            mapping: FieldMapping = FieldMapping(), audit: AuditLog | None = None) -> SearchResultPage:
    """Fetch up to ``page_depth`` pages of ``page_size`` entries for one query.

    Raises :class:`BackendError` when the backend fails or answers malformed.
    """
    text = getattr(query, "text", query)
    started = time.perf_counter()
    entries: list[Entry] = []
    bodies = []
    for page in range(ctx.page_depth):
        try:
            body = backend.fetch(build_request(text, ctx, page))
        except BackendError:
            raise
        except Exception as exc:
            raise BackendError(f"{type(exc).__name__}: {exc}") from exc
        got = parse_entries(body, mapping)[: ctx.page_size]
        bodies.append(body)
        entries.extend(got)
        if len(got) < ctx.page_size:
            break
    result = SearchResultPage(tuple(entries), text, ctx,
                              (time.perf_counter() - started) * 1000.0, digest(bodies))
    if audit is not None:
        audit.append({"query": text, "context": ctx.to_dict(), "response_digest": result.digest})
    return result


class HttpBackend:
    def __init__(self, base_url: str, path: str = "/search", timeout: float = 10.0, client=None):
        import httpx

        self.url = base_url.rstrip("/") + path
        self.timeout = timeout
        self._httpx = httpx
        self._client = client or httpx.Client()

    def fetch(self, request: dict) -> dict:
        try:
            resp = self._client.post(self.url, json=request, timeout=self.timeout)
        except self._httpx.HTTPError as exc:
            raise BackendError(f"transport error: {exc}") from exc
        if resp.status_code >= 400:
            raise BackendError(f"HTTP {resp.status_code}")
        try:
            return resp.json()
        except ValueError as exc:
            raise BackendError(f"response is not JSON: {exc}") from exc

    def close(self) -> None:
        self._client.close()


@dataclass
class ReplayBackend:
    """Serves recorded responses keyed by (query, page); unknown requests fail."""

    responses: dict = field(default_factory=dict)

    def fetch(self, request: dict) -> dict:
        key = (request["query"], request.get("page", 0))
        if key not in self.responses:
            raise BackendError(f"no recorded response for {key}")
        return self.responses[key]
