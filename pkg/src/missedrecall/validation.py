"""Re-judging generated queries and dropping the ones users would not type.

Unclear verdicts count as failures: only ``reasonable`` queries survive.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable

from .catalog import Shop
from .generation import DroppedQuery, QueryGroup, TestQuery
from .llm.gateway import LLMError
from .llm.prompts import DEFAULT_VALIDATION_EXAMPLES, assemble_validation_prompt
from .text import tokens

REASONABLE = "reasonable"
UNREASONABLE = "unreasonable"
UNCLEAR = "unclear"

_FIRST_WORD = re.compile(r"[A-Za-z]+")


class ContractError(ValueError):
    pass


@dataclass(frozen=True)
class ValidationVerdict:
    query: TestQuery
    verdict: str
    rationale: str = ""
    judge: str = "rule"

    def to_dict(self) -> dict:
        return {"text": self.query.text, "verdict": self.verdict,
                "rationale": self.rationale, "judge": self.judge}


def parse_judge_reply(reply: str) -> str:
    """Map a judge reply to a verdict by its leading KEEP/DROP token."""
    m = _FIRST_WORD.search(reply or "")
    if not m or reply[: m.start()].strip(" \t\n*_`>#\"'“”[(:-"):
        return UNCLEAR
    word = m.group(0).upper()
    if word == "KEEP":
        return REASONABLE
    if word == "DROP":
        return UNREASONABLE
    return UNCLEAR


def validate_llm(shop: Shop, query: TestQuery, gateway,
                 examples=DEFAULT_VALIDATION_EXAMPLES, language: str = "en") -> ValidationVerdict:
    request = assemble_validation_prompt(shop, query.text, examples, language)
    reply = gateway.complete(request).text
    return ValidationVerdict(query, parse_judge_reply(reply), reply.strip(), "llm")


def validate_llm_cautious(shop: Shop, query: TestQuery, gateway, **kwargs) -> ValidationVerdict:
    """Like :func:`validate_llm` but a failed call yields ``unclear`` instead of raising."""
    try:
        return validate_llm(shop, query, gateway, **kwargs)
    except LLMError as exc:
        return ValidationVerdict(query, UNCLEAR, f"judge unavailable: {exc}", "llm")


@dataclass(frozen=True)
class RuleConfig:
    max_length: int = 64


def validate_rule(shop: Shop, query: TestQuery, rules: RuleConfig = RuleConfig()) -> ValidationVerdict:
    text = query.text.strip()
    if not text:
        return ValidationVerdict(query, UNREASONABLE, "empty query")
    if len(text) > rules.max_length:
        return ValidationVerdict(query, UNREASONABLE, f"longer than {rules.max_length} characters")
    shop_tokens = set(tokens(shop.name)) | set(tokens(shop.shop_type)) | set(tokens(shop.city))
    shared = sorted(set(tokens(text)) & shop_tokens)
    if not shared:
        return ValidationVerdict(query, UNREASONABLE, "shares no token with the shop name, type or city")
    return ValidationVerdict(query, REASONABLE, "shares " + ", ".join(shared))


def judge_group(shop: Shop, group: QueryGroup,
                judge: Callable[[Shop, TestQuery], ValidationVerdict]) -> list[ValidationVerdict]:
    return [judge(shop, q) for q in group.queries]


def filter_group(group: QueryGroup, verdicts: Iterable[ValidationVerdict]) -> QueryGroup:
    """Keep only queries judged reasonable; the rest go to ``dropped`` with reasons."""
    by_key = {}
    for v in verdicts:
        by_key[v.query.key] = v
    missing = [q.text for q in group.queries if q.key not in by_key]
    if missing:
        raise ContractError(f"no verdict for queries {missing}")
    kept, dropped = [], list(group.dropped)
    for q in group.queries:
        v = by_key[q.key]
        if v.verdict == REASONABLE:
            kept.append(q)
        else:
            dropped.append(DroppedQuery(q, v.rationale or v.verdict, v.verdict))
    return QueryGroup(group.target_shop_id, tuple(kept), tuple(dropped))
