"""Query groups per target shop: LLM-backed and deterministic template generators."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

from .catalog import Shop
from .llm.prompts import PromptTemplate, assemble_generation_prompt
from .text import clean, dedup_key, parenthetical, raw_tokens, strip_parenthetical

DERIVATIONS = ("name", "service_product", "location")
RELATIONS = ("equivalent", "including", "included", "unknown")
SOURCES = ("llm", "template")
MIN_GROUP_SIZE = 2
DEFAULT_GROUP_CAP = 6


class EmptyOutputError(ValueError):
    """The completion contained no extractable query."""


@dataclass(frozen=True)
class TestQuery:
    __test__ = False  # not a pytest class

    text: str
    target_shop_id: str
    derivation: str = "name"
    concept_relation: str = "unknown"
    source: str = "template"

    def __post_init__(self) -> None:
        text = clean(self.text)
        if not text:
            raise ValueError("query text is empty")
        object.__setattr__(self, "text", text)
        if self.derivation not in DERIVATIONS:
            raise ValueError(f"unknown derivation {self.derivation!r}")
        if self.concept_relation not in RELATIONS:
            raise ValueError(f"unknown concept relation {self.concept_relation!r}")
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")

    @property
    def key(self) -> str:
        return dedup_key(self.text)

    def to_dict(self) -> dict:
        return {"text": self.text, "derivation": self.derivation,
                "concept_relation": self.concept_relation, "source": self.source}


@dataclass(frozen=True)
class DroppedQuery:
    query: TestQuery
    reason: str
    verdict: str = "unreasonable"

    def to_dict(self) -> dict:
        return {**self.query.to_dict(), "verdict": self.verdict, "reason": self.reason}


@dataclass(frozen=True)
class QueryGroup:
    target_shop_id: str
    queries: tuple[TestQuery, ...]
    dropped: tuple[DroppedQuery, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "queries", tuple(self.queries))
        object.__setattr__(self, "dropped", tuple(self.dropped))
        keys = set()
        for q in self.queries:
            if q.target_shop_id != self.target_shop_id:
                raise ValueError(f"query {q.text!r} targets {q.target_shop_id}, "
                                 f"group targets {self.target_shop_id}")
            if q.key in keys:
                raise ValueError(f"duplicate query {q.text!r} in group")
            keys.add(q.key)

    @classmethod
    def build(cls, target_shop_id: str, queries: Iterable[TestQuery]) -> "QueryGroup":
        """Group from queries, dropping later duplicates under the dedup equivalence."""
        seen: set[str] = set()
        kept = []
        for q in queries:
            if q.key not in seen:
                seen.add(q.key)
                kept.append(q)
        return cls(target_shop_id, tuple(kept))

    @property
    def eligible(self) -> bool:
        return len(self.queries) >= MIN_GROUP_SIZE

    def __len__(self) -> int:
        return len(self.queries)

    def to_dict(self) -> dict:
        out = {"target_shop_id": self.target_shop_id,
               "queries": [q.to_dict() for q in self.queries]}
        if self.dropped:
            out["dropped"] = [d.to_dict() for d in self.dropped]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "QueryGroup":
        sid = data["target_shop_id"]
        queries = [TestQuery(target_shop_id=sid, **q) for q in data.get("queries", [])]
        dropped = []
        for d in data.get("dropped", []):
            d = dict(d)
            reason, verdict = d.pop("reason", ""), d.pop("verdict", "unreasonable")
            dropped.append(DroppedQuery(TestQuery(target_shop_id=sid, **d), reason, verdict))
        return cls(sid, tuple(queries), tuple(dropped))


def write_groups(path, groups: Iterable[QueryGroup]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for g in groups:
            fh.write(json.dumps(g.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def read_groups(path) -> list[QueryGroup]:
    with Path(path).open(encoding="utf-8") as fh:
        return [QueryGroup.from_dict(json.loads(line)) for line in fh if line.strip()]


# --- LLM output parsing ----------------------------------------------------

_BULLET = re.compile(r"^\s*(?:\d+[.)]\s+|\d+[.)]$|\d+\s*、\s*|\d+[:：]\s+|\(\d+\)\s*|[-*•·]\s+)")
_HEADING = re.compile(r"^\s*(?:\[(?P<br>[^\]]+)\]|#+\s*(?P<hash>.+?)|(?P<colon>.+?)[:：])\s*$")
_LABEL_WORDS = (
    ("service_product", ("service", "product", "商品", "服务", "产品")),
    ("location", ("location", "place", "地点", "位置", "地理")),
    ("name", ("name", "店名", "名称", "名字")),
)
_QUOTE_PAIRS = {'"': '"', "“": "”", "「": "」", "『": "』", "'": "'", "‘": "’"}


def _heading_label(line: str) -> str | None:
    m = _HEADING.match(line)
    if not m:
        return None
    label = (m.group("br") or m.group("hash") or m.group("colon") or "").lower()
    for derivation, words in _LABEL_WORDS:
        if any(w in label for w in words):
            return derivation
    return None


def _strip_line(line: str) -> str:
    prev = None
    text = line.strip()
    while text != prev:
        prev = text
        text = _BULLET.sub("", text).strip()
        if len(text) >= 2 and _QUOTE_PAIRS.get(text[0]) == text[-1]:
            text = text[1:-1].strip()
    return clean(text)


def parse_labeled_output(raw: str) -> list[tuple[str, str]]:
    """(query text, derivation) pairs; unlabeled lines fall back to ``name``."""
    out: list[tuple[str, str]] = []
    seen: set[str] = set()
    current = "name"
    for line in (raw or "").splitlines():
        label = _heading_label(line)
        if label is not None:
            current = label
            continue
        text = _strip_line(line)
        if not any(ch.isalnum() for ch in text) or dedup_key(text) in seen:
            continue
        seen.add(dedup_key(text))
        out.append((text, current))
    if not out:
        raise EmptyOutputError("no queries found in model output")
    return out


def parse_llm_output(raw: str) -> list[str]:
    return [text for text, _ in parse_labeled_output(raw)]


def generate_llm(shop: Shop, template: PromptTemplate, gateway) -> QueryGroup:
    request = assemble_generation_prompt(shop, template)
    completion = gateway.complete(request)
    pairs = parse_labeled_output(completion.text)
    return QueryGroup.build(shop.id, (
        TestQuery(text, shop.id, derivation, "unknown", "llm") for text, derivation in pairs
    ))


def cap_group(group: QueryGroup, cap: int = DEFAULT_GROUP_CAP) -> QueryGroup:
    """Truncate to ``cap`` queries, keeping one per derivation when possible."""
    if len(group.queries) <= cap:
        return group
    chosen: list[int] = []
    seen: set[str] = set()
    for i, q in enumerate(group.queries):
        if q.derivation not in seen:
            seen.add(q.derivation)
            chosen.append(i)
    for i in range(len(group.queries)):
        if len(chosen) >= cap:
            break
        if i not in chosen:
            chosen.append(i)
    keep = sorted(chosen[:cap])
    return replace(group, queries=tuple(group.queries[i] for i in keep))


# --- template generator ----------------------------------------------------

@dataclass(frozen=True)
class TemplateRules:
    min_token_length: int = 2
    strip_branch: bool = True
    first_last: bool = True
    name_tokens: bool = True
    type_queries: bool = True
    branch_location: bool = True
    city_location: bool = True
    max_queries: int | None = None


def generate_template(shop: Shop, rules: TemplateRules = TemplateRules()) -> QueryGroup:
    """Deterministic queries built from the shop's name, type and city."""
    candidates: list[TestQuery] = []

    def add(text: str, derivation: str, relation: str) -> None:
        text = clean(text)
        if text:
            candidates.append(TestQuery(text, shop.id, derivation, relation, "template"))

    add(shop.name, "name", "equivalent")
    base = strip_parenthetical(shop.name) if rules.strip_branch else shop.name
    add(base, "name", "equivalent")
    base_tokens = raw_tokens(base)
    if rules.first_last and len(base_tokens) >= 3:
        add(f"{base_tokens[0]} {base_tokens[-1]}", "name", "equivalent")
    if rules.name_tokens:
        for tok in raw_tokens(shop.name):
            if len(tok) >= rules.min_token_length:
                add(tok, "name", "equivalent")
    type_tokens = raw_tokens(shop.shop_type)
    head = type_tokens[-1] if type_tokens else ""
    if rules.type_queries:
        add(shop.shop_type, "service_product", "including")
        add(head, "service_product", "including")
    branch = parenthetical(shop.name)
    if rules.branch_location and branch and head:
        add(f"{head} {branch}", "location", "including")
    if rules.city_location and shop.city:
        add(f"{shop.shop_type} {shop.city}", "location", "including")
    group = QueryGroup.build(shop.id, candidates)
    if rules.max_queries is not None:
        group = cap_group(group, rules.max_queries)
    return group
