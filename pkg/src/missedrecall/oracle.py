"""Consistency oracle over query groups.

All queries built for one shop should agree on whether the shop is
recalled. A group with mixed outcomes yields one finding per query that
missed the shop, witnessed by the queries that found it. A group where no
query finds the shop is suppressed: the shop may simply be gone.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .generation import QueryGroup, TestQuery

CONSISTENT_ALL_TRUE = "consistent_all_true"
SUPPRESSED_ALL_FALSE = "suppressed_all_false"
VIOLATION = "violation"
INELIGIBLE = "ineligible"
INCOMPLETE = "incomplete"
CLASSIFICATIONS = (CONSISTENT_ALL_TRUE, SUPPRESSED_ALL_FALSE, VIOLATION, INELIGIBLE, INCOMPLETE)


class ArityError(ValueError):
    pass


@dataclass(frozen=True)
class GroupVerdict:
    target_shop_id: str
    outcomes: tuple[bool | None, ...]
    classification: str

    def to_dict(self) -> dict:
        return {"target_shop_id": self.target_shop_id, "outcomes": list(self.outcomes),
                "classification": self.classification}


def finding_id(shop_id: str, query_text: str) -> str:
    h = hashlib.sha1(f"{shop_id}\x1f{query_text}".encode("utf-8")).hexdigest()[:10]
    return f"{shop_id}:{h}"


@dataclass(frozen=True)
class MissedRecallFinding:
    target_shop_id: str
    failing_query: TestQuery
    witnesses: tuple[TestQuery, ...]
    context: dict = field(default_factory=dict, compare=False)
    run_id: str = ""

    def __post_init__(self) -> None:
        if not self.witnesses:
            raise ValueError("a finding needs at least one witness query")

    @property
    def id(self) -> str:
        return finding_id(self.target_shop_id, self.failing_query.text)

    def to_dict(self) -> dict:
        return {"id": self.id, "target_shop_id": self.target_shop_id,
                "query": self.failing_query.text,
                "derivation": self.failing_query.derivation,
                "witnesses": [w.text for w in self.witnesses],
                "context": self.context, "run_id": self.run_id}


def classify(outcomes: Sequence[bool | None]) -> str:
    if len(outcomes) < 2:
        return INELIGIBLE
    if any(o is None for o in outcomes):
        return INCOMPLETE
    if all(outcomes):
        return CONSISTENT_ALL_TRUE
    if not any(outcomes):
        return SUPPRESSED_ALL_FALSE
    return VIOLATION


def evaluate_group(group: QueryGroup, outcomes: Sequence[bool | None] | None,
                   context: dict | None = None,
                   run_id: str = "") -> tuple[GroupVerdict, list[MissedRecallFinding]]:
    """Classify one group. ``None`` outcomes (or ``outcomes=None``) mark unexecuted queries."""
    if outcomes is None:
        outcomes = [None] * len(group.queries)
    outcomes = tuple(outcomes)
    if len(outcomes) != len(group.queries):
        raise ArityError(f"{len(outcomes)} outcomes for {len(group.queries)} queries")
    kind = classify(outcomes)
    verdict = GroupVerdict(group.target_shop_id, outcomes, kind)
    if kind != VIOLATION:
        return verdict, []
    witnesses = tuple(q for q, y in zip(group.queries, outcomes) if y)
    findings = [MissedRecallFinding(group.target_shop_id, q, witnesses, dict(context or {}), run_id)
                for q, y in zip(group.queries, outcomes) if not y]
    return verdict, findings


@dataclass
class RunEvaluation:
    verdicts: list[GroupVerdict]
    findings: list[MissedRecallFinding]
    errors: list[str] = field(default_factory=list)

    @property
    def counts(self) -> dict[str, int]:
        c = Counter(v.classification for v in self.verdicts)
        return {k: c.get(k, 0) for k in CLASSIFICATIONS}

    @property
    def flagged_shops(self) -> list[str]:
        return sorted({f.target_shop_id for f in self.findings})

    def tallies(self) -> dict[str, int]:
        return {"entries": len(self.findings), "shops": len(self.flagged_shops)}


def evaluate_run(pairs: Iterable[tuple[QueryGroup, Sequence[bool | None] | None]],
                 contexts: dict | None = None, run_id: str = "") -> RunEvaluation:
    """Evaluate every (group, outcomes) pair; contract errors are collected, not raised."""
    verdicts: list[GroupVerdict] = []
    findings: list[MissedRecallFinding] = []
    errors: list[str] = []
    for group, outcomes in pairs:
        try:
            v, f = evaluate_group(group, outcomes, (contexts or {}).get(group.target_shop_id), run_id)
        except ArityError as exc:
            errors.append(f"{group.target_shop_id}: {exc}")
            continue
        verdicts.append(v)
        findings.extend(f)
    verdicts.sort(key=lambda v: v.target_shop_id)
    findings.sort(key=lambda f: (f.target_shop_id, f.failing_query.text))
    return RunEvaluation(verdicts, findings, errors)
