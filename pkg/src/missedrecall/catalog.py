"""Shop catalog model and CSV/JSON ingestion.

CSV header: ``id?,name,type,city,lon,lat,hours?,active?``. JSON is an array
of objects with the same field names. ``hours`` is ``HH:MM-HH:MM[;...]``.
Coordinates are stored as (longitude, latitude) and range-checked, never
swapped.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field

from .text import clean

REQUIRED_FIELDS = ("name", "type", "city", "lon", "lat")
OPTIONAL_FIELDS = ("id", "hours", "active")
CSV_HEADER = ("id", "name", "type", "city", "lon", "lat", "hours", "active")

# violation codes
EMPTY_NAME = "EmptyName"
EMPTY_TYPE = "EmptyType"
LONGITUDE_RANGE = "LongitudeRange"
LATITUDE_RANGE = "LatitudeRange"
INVERTED_OPENING_INTERVAL = "InvertedOpeningInterval"
INTERVAL_OUT_OF_DAY = "IntervalOutOfDay"
DUPLICATE_ID = "DuplicateId"

_HHMM = re.compile(r"^\s*(\d{1,2}):(\d{2})\s*$")


class CatalogParseError(Exception):
    """The input as a whole cannot be read (bad encoding, bad header, not an array)."""


@dataclass(frozen=True)
class Shop:
    id: str
    name: str
    shop_type: str
    city: str
    lon: float
    lat: float
    # minutes since local midnight; None means always open
    opening_hours: tuple[tuple[int, int], ...] | None = None
    active: bool = True

    @property
    def location(self) -> tuple[float, float]:
        return (self.lon, self.lat)

    def is_open_at(self, minute_of_day: int) -> bool:
        if self.opening_hours is None:
            return True
        return any(o <= minute_of_day < c for o, c in self.opening_hours)


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str = ""


@dataclass(frozen=True)
class RowError:
    row: int
    reasons: tuple[str, ...]


@dataclass
class Catalog:
    shops: list[Shop]
    source: str = ""
    rejected: list[RowError] = field(default_factory=list)

    def __post_init__(self) -> None:
        ids = [s.id for s in self.shops]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate shop ids in catalog")
        self._by_id = {s.id: s for s in self.shops}

    def __len__(self) -> int:
        return len(self.shops)

    def __iter__(self):
        return iter(self.shops)

    def get(self, shop_id: str) -> Shop:
        return self._by_id[shop_id]

    def __contains__(self, shop_id: object) -> bool:
        return shop_id in self._by_id


def validate_shop(shop: Shop) -> list[Violation]:
    out: list[Violation] = []
    if not shop.name.strip():
        out.append(Violation(EMPTY_NAME))
    if not shop.shop_type.strip():
        out.append(Violation(EMPTY_TYPE))
    if not -180.0 <= shop.lon <= 180.0:
        out.append(Violation(LONGITUDE_RANGE, f"lon={shop.lon}"))
    if not -90.0 <= shop.lat <= 90.0:
        out.append(Violation(LATITUDE_RANGE, f"lat={shop.lat}"))
    for o, c in shop.opening_hours or ():
        if not (0 <= o <= 1440 and 0 <= c <= 1440):
            out.append(Violation(INTERVAL_OUT_OF_DAY, f"{format_minutes(o)}-{format_minutes(c)}"))
        elif o >= c:
            out.append(Violation(INVERTED_OPENING_INTERVAL, f"{format_minutes(o)}-{format_minutes(c)}"))
    return out


def parse_minutes(text: str) -> int:
    m = _HHMM.match(text)
    if not m:
        raise ValueError(f"bad time {text!r}")
    h, mi = int(m.group(1)), int(m.group(2))
    if mi >= 60 or h > 24 or (h == 24 and mi):
        raise ValueError(f"bad time {text!r}")
    return h * 60 + mi


def format_minutes(minutes: int) -> str:
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


def parse_hours(text: str) -> tuple[tuple[int, int], ...] | None:
    text = text.strip()
    if not text:
        return None
    out = []
    for part in text.split(";"):
        if not part.strip():
            continue
        try:
            o, c = part.split("-")
        except ValueError:
            raise ValueError(f"bad interval {part!r}") from None
        out.append((parse_minutes(o), parse_minutes(c)))
    return tuple(out) or None


def format_hours(hours: tuple[tuple[int, int], ...] | None) -> str:
    if hours is None:
        return ""
    return ";".join(f"{format_minutes(o)}-{format_minutes(c)}" for o, c in hours)


def _parse_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("", "1", "true", "yes", "y"):
        return True
    if text in ("0", "false", "no", "n"):
        return False
    raise ValueError(f"bad boolean {value!r}")


def _row_to_shop(record: dict, index: int) -> Shop:
    """Build a Shop from a raw record or raise ValueError listing every problem."""
    reasons: list[str] = []
    for name in REQUIRED_FIELDS:
        if record.get(name) is None:
            reasons.append(f"missing field {name!r}")
    if reasons:
        raise ValueError(*reasons)

    coords = {}
    for name in ("lon", "lat"):
        try:
            coords[name] = float(record[name])
        except (TypeError, ValueError):
            reasons.append(f"{name} is not a number: {record[name]!r}")
    hours = None
    raw_hours = record.get("hours")
    if raw_hours not in (None, ""):
        try:
            hours = parse_hours(str(raw_hours))
        except ValueError as exc:
            reasons.append(str(exc))
    active = True
    if record.get("active") is not None:
        try:
            active = _parse_bool(record["active"])
        except ValueError as exc:
            reasons.append(str(exc))
    if reasons:
        raise ValueError(*reasons)

    raw_id = record.get("id")
    shop = Shop(
        id=clean(str(raw_id)) if raw_id not in (None, "") else f"row-{index}",
        name=clean(str(record["name"])),
        shop_type=clean(str(record["type"])),
        city=clean(str(record["city"])),
        lon=coords["lon"],
        lat=coords["lat"],
        opening_hours=hours,
        active=active,
    )
    violations = validate_shop(shop)
    if violations:
        raise ValueError(*(f"{v.code} {v.detail}".strip() for v in violations))
    return shop


def _records(data: bytes, fmt: str) -> list[dict]:
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise CatalogParseError(f"input is not valid UTF-8: {exc}") from exc
    if fmt == "csv":
        reader = csv.DictReader(io.StringIO(text))
        header = [h.strip() for h in (reader.fieldnames or [])]
        if not header:
            raise CatalogParseError("missing CSV header")
        unknown = set(header) - set(REQUIRED_FIELDS) - set(OPTIONAL_FIELDS)
        missing = set(REQUIRED_FIELDS) - set(header)
        if unknown or missing:
            raise CatalogParseError(
                f"CSV header mismatch (missing={sorted(missing)}, unknown={sorted(unknown)})"
            )
        reader.fieldnames = header
        return [dict(r) for r in reader]
    if fmt == "json":
        try:
            payload = json.loads(text) if text.strip() else []
        except json.JSONDecodeError as exc:
            raise CatalogParseError(f"invalid JSON: {exc}") from exc
        if not isinstance(payload, list):
            raise CatalogParseError("JSON catalog must be an array of objects")
        return [r if isinstance(r, dict) else {} for r in payload]
    raise CatalogParseError(f"unknown catalog format {fmt!r}")


def parse_catalog(data: bytes, fmt: str = "csv", source: str = "") -> Catalog:
    """Parse catalog bytes; bad rows are collected in ``Catalog.rejected``."""
    shops: list[Shop] = []
    rejected: list[RowError] = []
    seen: set[str] = set()
    for index, record in enumerate(_records(data, fmt)):
        try:
            shop = _row_to_shop(record, index)
        except ValueError as exc:
            rejected.append(RowError(index, tuple(str(a) for a in exc.args)))
            continue
        if shop.id in seen:
            rejected.append(RowError(index, (f"{DUPLICATE_ID} {shop.id}",)))
            continue
        seen.add(shop.id)
        shops.append(shop)
    return Catalog(shops=shops, source=source, rejected=rejected)


def load_catalog(path, fmt: str | None = None) -> Catalog:
    from pathlib import Path

    path = Path(path)
    fmt = fmt or ("json" if path.suffix.lower() == ".json" else "csv")
    return parse_catalog(path.read_bytes(), fmt, source=str(path))


def shop_to_record(shop: Shop) -> dict:
    return {
        "id": shop.id,
        "name": shop.name,
        "type": shop.shop_type,
        "city": shop.city,
        "lon": shop.lon,
        "lat": shop.lat,
        "hours": format_hours(shop.opening_hours),
        "active": shop.active,
    }


def emit_catalog(catalog: Catalog, fmt: str = "csv") -> bytes:
    records = [shop_to_record(s) for s in catalog.shops]
    if fmt == "json":
        return (json.dumps(records, ensure_ascii=False, indent=1) + "\n").encode("utf-8")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_HEADER, lineterminator="\n")
    writer.writeheader()
    for r in records:
        writer.writerow({**r, "lon": repr(r["lon"]), "lat": repr(r["lat"]),
                         "active": "true" if r["active"] else "false"})
    return buf.getvalue().encode("utf-8")
