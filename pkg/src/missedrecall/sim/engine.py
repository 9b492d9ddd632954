"""A small deterministic shop search engine with injectable recall faults.

Pipeline per query: normalize, segment, pick the main part by IDF, resolve a
landmark phrase into a geo constraint, gather candidates from the token
postings, drop closed / inactive / out-of-radius shops, score, sort by
(score desc, distance asc, id asc) and cut at the page cap.

Two fault kinds reproduce known missed-recall causes:

``segmentation_main_part``
    The engine commits to the configured token as the only intent and
    treats the query as a brand lookup: every other segment is ignored and
    the brand's shops are listed by static offset then id, with no regard
    to proximity. A shop carrying the brand word but crowded out by
    sibling shops of the same brand is lost.

``landmark_misparse``
    A fragment of a shop name is read as a place. The fragment leaves the
    match tokens and the search is recentred on the configured coordinates.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..adapter import Entry, SearchContext, SearchResultPage
from ..catalog import Catalog, Shop
from ..text import name_key, tokens

SEGMENTATION_MAIN_PART = "segmentation_main_part"
LANDMARK_MISPARSE = "landmark_misparse"
FAULT_KINDS = (SEGMENTATION_MAIN_PART, LANDMARK_MISPARSE)

EARTH_RADIUS_M = 6_371_008.8


class FaultInjectionError(ValueError):
    pass


def haversine_m(a: tuple[float, float], b: tuple[float, float]) -> float:
    lon1, lat1, lon2, lat2 = map(math.radians, (a[0], a[1], b[0], b[1]))
    h = (math.sin((lat2 - lat1) / 2) ** 2
         + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2)
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


@dataclass(frozen=True)
class FaultSpec:
    kind: str
    # token (segmentation) or phrase (landmark) the fault is about
    trigger: str
    # selectors; a fault with neither applies to every query containing the trigger
    query_pattern: str | None = None
    shop_id: str | None = None
    # landmark_misparse: where the misread place is; defaults to the landmark dictionary
    location: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.kind not in FAULT_KINDS:
            raise FaultInjectionError(f"unknown fault kind {self.kind!r}")
        object.__setattr__(self, "trigger", name_key(self.trigger))
        if not self.trigger:
            raise FaultInjectionError("fault trigger is empty")
        if self.location is not None:
            object.__setattr__(self, "location", (float(self.location[0]), float(self.location[1])))
        if self.query_pattern is not None:
            re.compile(self.query_pattern)

    @property
    def trigger_tokens(self) -> tuple[str, ...]:
        return tuple(self.trigger.split())

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "trigger": self.trigger}
        if self.query_pattern is not None:
            out["query_pattern"] = self.query_pattern
        if self.shop_id is not None:
            out["shop_id"] = self.shop_id
        if self.location is not None:
            out["location"] = list(self.location)
        return out


@dataclass(frozen=True)
class SimConfig:
    page_cap: int = 20
    radius_m: float = 3000.0
    token_weight: float = 1.0
    distance_weight: float = 0.2
    faults: tuple[FaultSpec, ...] = ()
    landmarks: dict = field(default_factory=dict)
    static_offsets: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.page_cap < 1:
            raise ValueError("page_cap must be >= 1")
        if self.radius_m <= 0:
            raise ValueError("radius_m must be > 0")
        if self.token_weight < 0 or self.distance_weight < 0:
            raise ValueError("weights must be >= 0")
        object.__setattr__(self, "faults", tuple(self.faults))
        object.__setattr__(self, "landmarks", {
            name_key(k): (float(v[0]), float(v[1])) for k, v in self.landmarks.items()})

    def without_faults(self) -> "SimConfig":
        return replace(self, faults=())

    def to_dict(self) -> dict:
        return {
            "page_cap": self.page_cap, "radius_m": self.radius_m,
            "token_weight": self.token_weight, "distance_weight": self.distance_weight,
            "faults": [f.to_dict() for f in self.faults],
            "landmarks": {k: list(v) for k, v in sorted(self.landmarks.items())},
            "static_offsets": dict(sorted(self.static_offsets.items())),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        data = dict(data)
        data["faults"] = tuple(FaultSpec(**f) for f in data.get("faults", ()))
        return cls(**data)


def load_sim_config(path) -> SimConfig:
    return SimConfig.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class SimIndex:
    shops: dict[str, Shop]
    postings: dict[str, tuple[str, ...]]
    name_tokens: frozenset[str]
    shop_tokens: dict[str, frozenset[str]]

    @property
    def size(self) -> int:
        return len(self.shops)

    def idf(self, token: str) -> float:
        df = len(self.postings.get(token, ()))
        if not df:
            return 0.0  # unknown to the index: carries no intent
        return math.log((1 + self.size) / df)


def index(catalog: Catalog, config: SimConfig | None = None) -> SimIndex:
    postings: dict[str, set[str]] = {}
    shop_tokens: dict[str, frozenset[str]] = {}
    name_toks: set[str] = set()
    shops: dict[str, Shop] = {}
    for shop in catalog.shops:
        if shop.id in shops:
            raise ValueError(f"shop {shop.id} indexed twice")
        shops[shop.id] = shop
        nt = tokens(shop.name)
        toks = frozenset(nt) | frozenset(tokens(shop.shop_type))
        name_toks.update(nt)
        shop_tokens[shop.id] = toks
        for t in toks:
            postings.setdefault(t, set()).add(shop.id)
    return SimIndex(shops, {t: tuple(sorted(ids)) for t, ids in sorted(postings.items())},
                    frozenset(name_toks), shop_tokens)


def check_faults(config: SimConfig, idx: SimIndex) -> None:
    """Every fault must point at something that exists in the catalog."""
    for f in config.faults:
        if f.shop_id is not None and f.shop_id not in idx.shops:
            raise FaultInjectionError(f"fault selector names unknown shop {f.shop_id!r}")
        if not all(t in idx.name_tokens for t in f.trigger_tokens):
            raise FaultInjectionError(f"fault trigger {f.trigger!r} occurs in no shop name")
        if f.kind == LANDMARK_MISPARSE and f.location is None and f.trigger not in config.landmarks:
            raise FaultInjectionError(f"no coordinates for misparsed landmark {f.trigger!r}")


def _selected(f: FaultSpec, query_key: str, segments: list[str], idx: SimIndex | None) -> bool:
    if f.query_pattern is not None and not re.fullmatch(f.query_pattern, query_key):
        return False
    if f.shop_id is not None:
        if idx is None or f.shop_id not in idx.shops:
            return False
        if not set(segments) & set(tokens(idx.shops[f.shop_id].name)):
            return False
    return True


def _contains_run(segments: list[str], run: tuple[str, ...]) -> bool:
    n = len(run)
    return any(tuple(segments[i:i + n]) == run for i in range(len(segments) - n + 1))


@dataclass(frozen=True)
class Segmentation:
    segments: tuple[str, ...]
    main_part: str
    faulted: bool = False


def pick_main_part(segments, idx: SimIndex | None) -> str:
    if idx is None:
        return segments[0]
    best, best_idf = segments[0], idx.idf(segments[0])
    for s in segments[1:]:
        v = idx.idf(s)
        if v > best_idf:
            best, best_idf = s, v
    return best


def segment(query: str, config: SimConfig, idx: SimIndex | None = None) -> Segmentation:
    segs = tokens(query)
    if not segs:
        raise ValueError("query has no segments")
    key = " ".join(segs)
    for f in config.faults:
        if (f.kind == SEGMENTATION_MAIN_PART and _contains_run(segs, f.trigger_tokens)
                and _selected(f, key, segs, idx)):
            return Segmentation(tuple(segs), f.trigger, True)
    return Segmentation(tuple(segs), pick_main_part(segs, idx))


@dataclass(frozen=True)
class LocationPhrase:
    phrase: str
    location: tuple[float, float]
    span: tuple[int, int]
    faulted: bool = False


def _edge_spans(n: int):
    for length in range(n, 0, -1):
        yield (n - length, n)
        if length < n:
            yield (0, length)


def resolve_location_phrase(segments, config: SimConfig,
                            idx: SimIndex | None = None) -> LocationPhrase | None:
    """Longest prefix/suffix run naming a landmark, or None.

    A dictionary phrase that is also a word of some indexed shop name is
    taken as part of a name, not as a place. The ``landmark_misparse``
    fault overrides that judgement for its trigger phrase.
    """
    segs = list(segments)
    key = " ".join(segs)
    for f in config.faults:
        if f.kind != LANDMARK_MISPARSE or not _selected(f, key, segs, idx):
            continue
        for start, end in _edge_spans(len(segs)):
            if tuple(segs[start:end]) == f.trigger_tokens:
                loc = f.location or config.landmarks[f.trigger]
                return LocationPhrase(f.trigger, loc, (start, end), True)
    for start, end in _edge_spans(len(segs)):
        phrase = " ".join(segs[start:end])
        if phrase in config.landmarks:
            if idx is not None and all(t in idx.name_tokens for t in segs[start:end]):
                continue
            return LocationPhrase(phrase, config.landmarks[phrase], (start, end))
    return None


def rank(query: str, ctx: SearchContext, idx: SimIndex, config: SimConfig) -> list[Entry]:
    """Full ranked result list, already cut at the page cap."""
    seg = segment(query, config, idx)
    loc = resolve_location_phrase(seg.segments, config, idx)
    origin = ctx.location
    match = list(seg.segments)
    if loc is not None:
        origin = loc.location
        match = match[: loc.span[0]] + match[loc.span[1]:]
    if not match:
        return []
    main = seg.main_part if seg.main_part in match else pick_main_part(match, idx)
    minute = ctx.minute_of_day

    def admissible(shop: Shop, dist: float) -> bool:
        return shop.active and shop.is_open_at(minute) and dist <= config.radius_m

    scored = []
    if seg.faulted:
        for sid in idx.postings.get(main, ()):
            shop = idx.shops[sid]
            dist = haversine_m(origin, shop.location)
            if admissible(shop, dist):
                score = config.token_weight + config.static_offsets.get(sid, 0.0)
                scored.append((-score, sid, score))
        scored.sort()
        ordered = [(sid, score) for _, sid, score in scored]
    else:
        weights = {t: (2.0 if t == main else 1.0) for t in match}
        total = sum(weights[t] for t in match)
        candidates = sorted({sid for t in set(match) for sid in idx.postings.get(t, ())})
        for sid in candidates:
            shop = idx.shops[sid]
            dist = haversine_m(origin, shop.location)
            if not admissible(shop, dist):
                continue
            toks = idx.shop_tokens[sid]
            frac = sum(weights[t] for t in match if t in toks) / total
            score = (config.token_weight * frac
                     - config.distance_weight * dist / config.radius_m
                     + config.static_offsets.get(sid, 0.0))
            scored.append((-score, dist, sid, score))
        scored.sort()
        ordered = [(sid, score) for _, _, sid, score in scored]
    return [Entry(sid, idx.shops[sid].name, round(score, 6))
            for sid, score in ordered[: config.page_cap]]


def search(query: str, ctx: SearchContext, idx: SimIndex, config: SimConfig) -> SearchResultPage:
    entries = rank(query, ctx, idx, config)
    cap = min(config.page_cap, ctx.page_size * ctx.page_depth)
    return SearchResultPage(tuple(entries[:cap]), query, ctx)


@dataclass(frozen=True)
class ExpectedMiss:
    shop_id: str
    query_text: str


def ground_truth_misses(catalog: Catalog, groups, config: SimConfig, context_for) -> list[ExpectedMiss]:
    """White-box expected findings: queries that recall their shop only without faults,
    in groups where some sibling still recalls it with faults on.

    ``context_for(shop)`` builds the search context the detector will use.
    """
    idx = index(catalog, config)
    clean_cfg = config.without_faults()
    out: list[ExpectedMiss] = []
    for group in groups:
        if len(group.queries) < 2:
            continue
        shop = catalog.get(group.target_shop_id)
        ctx = context_for(shop)
        faulty = [shop.id in {e.shop_id for e in search(q.text, ctx, idx, config).entries}
                  for q in group.queries]
        if not any(faulty):
            continue
        for q, hit in zip(group.queries, faulty):
            if hit:
                continue
            if shop.id in {e.shop_id for e in search(q.text, ctx, idx, clean_cfg).entries}:
                out.append(ExpectedMiss(shop.id, q.text))
    out.sort(key=lambda m: (m.shop_id, m.query_text))
    return out
