"""Stage functions composing generation, validation, execution and the oracle.

Each stage is usable on its own (the CLI runs them over JSON-lines files)
or chained by :func:`run_pipeline` in a single process.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from .adapter import (
    GATED,
    AuditLog,
    Backend,
    BackendError,
    FieldMapping,
    HttpBackend,
    SearchContext,
    execute,
    gate_time,
    recalled,
)
from .catalog import Catalog, Shop, load_catalog
from .config import RunConfig
from .generation import QueryGroup, cap_group, generate_llm, generate_template, EmptyOutputError
from .llm.gateway import EndpointConfig, LLMError, LLMGateway, RateLimiter, ReplyTransport, RetryPolicy
from .llm.prompts import get_template
from .metrics import RunLedger, RunMetrics, compute_metrics
from .oracle import RunEvaluation, evaluate_run
from .validation import ValidationVerdict, filter_group, validate_llm_cautious, validate_rule

log = logging.getLogger(__name__)


def _map_ordered(fn, items: list, workers: int) -> list:
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --- generation ---------------------------------------------------------

@dataclass
class GenerationResult:
    groups: list[QueryGroup]
    errors: dict[str, str] = field(default_factory=dict)


def generate_groups(catalog: Catalog, make_group: Callable[[Shop], QueryGroup],
                    workers: int = 1) -> GenerationResult:
    """Per-shop generation; failures are collected and the run goes on."""
    shops = sorted(catalog.shops, key=lambda s: s.id)

    def one(shop: Shop):
        try:
            return make_group(shop), None
        except (LLMError, EmptyOutputError) as exc:
            log.warning("generation failed for %s: %s", shop.id, exc)
            return None, f"{type(exc).__name__}: {exc}"

    groups, errors = [], {}
    for shop, (group, err) in zip(shops, _map_ordered(one, shops, workers)):
        if err is not None:
            errors[shop.id] = err
        else:
            groups.append(group)
    return GenerationResult(groups, errors)


# --- validation ---------------------------------------------------------

@dataclass
class ValidationResult:
    groups: list[QueryGroup]
    verdicts: list[ValidationVerdict]


def validate_groups(catalog: Catalog, groups: Iterable[QueryGroup],
                    judge: Callable[[Shop, object], ValidationVerdict] | None,
                    cap: int | None = None) -> ValidationResult:
    """Judge every query, keep the reasonable ones, then cap group size.

    ``judge=None`` passes groups through unchanged (validation off).
    """
    out, verdicts = [], []
    for group in groups:
        if judge is not None:
            shop = catalog.get(group.target_shop_id)
            vs = [judge(shop, q) for q in group.queries]
            verdicts.extend(vs)
            group = filter_group(group, vs)
        if cap is not None:
            group = cap_group(group, cap)
        out.append(group)
    return ValidationResult(out, verdicts)


# --- execution ----------------------------------------------------------

@dataclass
class GroupOutcome:
    group: QueryGroup
    outcomes: list[bool | None]
    context: SearchContext | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def executed(self) -> int:
        return sum(o is not None for o in self.outcomes)

    @property
    def complete(self) -> bool:
        return all(o is not None for o in self.outcomes)

    def to_dict(self) -> dict:
        return {**self.group.to_dict(), "outcomes": self.outcomes,
                "context": self.context.to_dict() if self.context else None,
                "notes": self.notes}

    @classmethod
    def from_dict(cls, data: dict) -> "GroupOutcome":
        from datetime import datetime

        ctx = data.get("context")
        context = None
        if ctx:
            context = SearchContext(ctx["account_id"], (ctx["lon"], ctx["lat"]),
                                    datetime.fromisoformat(ctx["timestamp"]),
                                    ctx["page_size"], ctx["page_depth"])
        return cls(QueryGroup.from_dict(data), list(data["outcomes"]), context,
                   list(data.get("notes", [])))


@dataclass
class ExecutionSettings:
    account_id: str = "missed-recall-probe"
    page_size: int = 20
    page_depth: int = 1
    window: tuple = None
    clock: Callable = None
    mapping: FieldMapping = field(default_factory=FieldMapping)

    def context_for(self, shop: Shop) -> SearchContext:
        from datetime import datetime

        now = self.clock() if self.clock else datetime.now()
        return SearchContext.for_shop(shop, self.account_id, now, self.page_size, self.page_depth)


def execute_group(catalog: Catalog, group: QueryGroup, backend: Backend,
                  settings: ExecutionSettings, audit: AuditLog | None = None) -> GroupOutcome:
    shop = catalog.get(group.target_shop_id)
    outcomes: list[bool | None] = []
    notes: list[str] = []
    ctx = settings.context_for(shop)
    for q in group.queries:
        if settings.window is not None and gate_time(ctx, settings.window) == GATED:
            notes.append(f"gated: {q.text!r} at {ctx.timestamp.time()}")
            outcomes.append(None)
            continue
        try:
            page = execute(q, ctx, backend, settings.mapping, audit)
        except BackendError as exc:
            notes.append(f"unexecuted: {q.text!r}: {exc}")
            outcomes.append(None)
            continue
        outcomes.append(recalled(page, shop))
    return GroupOutcome(group, outcomes, ctx, notes)


def execute_groups(catalog: Catalog, groups: list[QueryGroup], backend: Backend,
                   settings: ExecutionSettings, audit: AuditLog | None = None,
                   workers: int = 1) -> list[GroupOutcome]:
    groups = sorted(groups, key=lambda g: g.target_shop_id)
    return _map_ordered(lambda g: execute_group(catalog, g, backend, settings, audit), groups, workers)


def evaluate_outcomes(outcomes: list[GroupOutcome], run_id: str = "") -> RunEvaluation:
    pairs = [(o.group, o.outcomes) for o in outcomes]
    contexts = {o.group.target_shop_id: o.context.to_dict() for o in outcomes if o.context}
    return evaluate_run(pairs, contexts, run_id)


def write_jsonl(path, rows: Iterable[dict]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def read_jsonl(path) -> list[dict]:
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


# --- wiring from a RunConfig -------------------------------------------

class MockLLM:
    """Canned replies for offline runs.

    File format: ``{"generate": {shop name: reply}, "validate": {query: reply},
    "default_validate": "KEEP ..."}``.
    """

    def __init__(self, data: dict):
        self.generate = data.get("generate", {})
        self.validate = data.get("validate", {})
        self.default_validate = data.get("default_validate", "KEEP")

    @classmethod
    def load(cls, path) -> "MockLLM":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def __call__(self, payload: dict) -> str:
        last = payload["messages"][-1]["content"]
        fields = dict(line.split(": ", 1) for line in last.splitlines() if ": " in line)
        if "Query" in fields:
            return self.validate.get(fields["Query"], self.default_validate)
        name = fields.get("Shop name") or last.splitlines()[0].split("：", 1)[-1]
        return self.generate.get(name, "")


def build_gateway(config: RunConfig) -> LLMGateway:
    s = config.llm
    policy = RetryPolicy(config.retry.per_attempt_timeout, config.retry.max_retries,
                         config.retry.wait_min, config.retry.wait_max, seed=config.seed)
    transport = None
    if s.mock:
        transport = ReplyTransport(MockLLM.load(config.path(s.mock)))
    return LLMGateway(EndpointConfig(s.base_url, s.model, s.api_key_env), policy, transport,
                      RateLimiter(s.requests_per_minute))


def build_generator(config: RunConfig, gateway: LLMGateway | None = None) -> Callable[[Shop], QueryGroup]:
    if config.generator == "template":
        return generate_template
    gateway = gateway or build_gateway(config)
    template = get_template(config.llm.template_style, config.llm.language)
    return lambda shop: generate_llm(shop, template, gateway)


def build_judge(config: RunConfig, gateway: LLMGateway | None = None):
    if config.validation == "off":
        return None
    if config.validation == "rule":
        return validate_rule
    gateway = gateway or build_gateway(config)
    return lambda shop, q: validate_llm_cautious(shop, q, gateway, language=config.llm.language)


def build_backend(config: RunConfig, catalog: Catalog) -> Backend:
    if config.backend.kind == "http":
        return HttpBackend(config.backend.url, timeout=config.backend.timeout)
    from .sim import SimBackend, SimConfig, load_sim_config

    path = config.path(config.backend.sim_config)
    return SimBackend(catalog, load_sim_config(path) if path else SimConfig())


def execution_settings(config: RunConfig) -> ExecutionSettings:
    c = config.context
    fixed = c.clock() if c.timestamp else None
    return ExecutionSettings(c.account_id, c.page_size, c.page_depth, c.window_times(),
                             (lambda: fixed) if fixed else None,
                             FieldMapping(**config.backend.fields) if config.backend.fields else FieldMapping())


def run_id_for(config: RunConfig) -> str:
    return f"run-{config.digest()[:12]}-s{config.seed}"


@dataclass
class RunResult:
    run_id: str
    generated: GenerationResult
    validated: ValidationResult
    outcomes: list[GroupOutcome]
    evaluation: RunEvaluation
    metrics: RunMetrics


def detect(catalog: Catalog, groups: list[QueryGroup], backend: Backend,
           settings: ExecutionSettings, run_id: str = "", n_generated: int | None = None,
           audit: AuditLog | None = None, workers: int = 1):
    outcomes = execute_groups(catalog, groups, backend, settings, audit, workers)
    evaluation = evaluate_outcomes(outcomes, run_id)
    n_total = sum(o.executed for o in outcomes)
    metrics = compute_metrics(RunLedger(n_total, evaluation.findings, {}, n_generated))
    return outcomes, evaluation, metrics


def run_pipeline(config: RunConfig, catalog: Catalog | None = None, backend: Backend | None = None,
                 audit: AuditLog | None = None) -> RunResult:
    catalog = catalog or load_catalog(config.path(config.catalog), config.catalog_format)
    gateway = build_gateway(config) if "llm" in (config.generator, config.validation) else None
    generated = generate_groups(catalog, build_generator(config, gateway), config.workers)
    cap = config.group_cap if config.generator == "llm" else None
    validated = validate_groups(catalog, generated.groups, build_judge(config, gateway), cap)
    backend = backend or build_backend(config, catalog)
    run_id = run_id_for(config)
    n_generated = sum(len(g) for g in generated.groups)
    outcomes, evaluation, metrics = detect(catalog, validated.groups, backend,
                                           execution_settings(config), run_id, n_generated,
                                           audit, config.workers)
    return RunResult(run_id, generated, validated, outcomes, evaluation, metrics)
