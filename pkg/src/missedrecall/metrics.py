"""Run metrics (false-positive ratio, test-case efficiency), confirmation
labels and report emission.

Both ratios are entry-wise. An undefined ratio is reported as ``None`` with
a reason, never as 0 or infinity.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .oracle import CLASSIFICATIONS, GroupVerdict, MissedRecallFinding

log = logging.getLogger(__name__)

CONFIRMED = "confirmed"
FALSE_POSITIVE = "false_positive"
PENDING = "pending"
LABELS = (CONFIRMED, FALSE_POSITIVE, PENDING)
CONFIRMATION_HEADER = ("finding_id", "label", "annotator", "notes")


@dataclass
class RunLedger:
    n_total: int
    findings: list[MissedRecallFinding] = field(default_factory=list)
    labels: dict[str, str] = field(default_factory=dict)
    n_generated: int | None = None

    def __post_init__(self) -> None:
        ids = {f.id for f in self.findings}
        unknown = set(self.labels) - ids
        if unknown:
            raise ValueError(f"labels for unknown findings: {sorted(unknown)}")
        if self.n_total < len({f.failing_query.text + "\x1f" + f.target_shop_id for f in self.findings}):
            raise ValueError("n_total is smaller than the number of flagged queries")

    def label_of(self, finding: MissedRecallFinding) -> str:
        return self.labels.get(finding.id, PENDING)


@dataclass(frozen=True)
class RunMetrics:
    n_total: int
    reported_entries: int
    reported_shops: int
    confirmed_entries: int
    confirmed_shops: int
    pending: int
    r_fp: float | None
    e_tc: float | None
    undefined: dict = field(default_factory=dict)
    n_generated: int | None = None

    @property
    def provisional(self) -> bool:
        return self.pending > 0

    def to_dict(self) -> dict:
        def ratio(value, num, den, name):
            if value is None:
                return {"value": None, "reason": self.undefined[name]}
            return {"value": round(value, 3), "numerator": num, "denominator": den}

        return {
            "n_total": self.n_total,
            "n_generated": self.n_generated,
            "reported": {"entries": self.reported_entries, "shops": self.reported_shops},
            "confirmed": {"entries": self.confirmed_entries, "shops": self.confirmed_shops},
            "pending": self.pending,
            "provisional": self.provisional,
            "r_fp": ratio(self.r_fp, self.reported_entries - self.confirmed_entries,
                          self.reported_entries, "r_fp"),
            "e_tc": ratio(self.e_tc, self.n_total, self.confirmed_entries, "e_tc"),
        }


def metrics_from_counts(n_reported: int, n_confirmed: int, n_total: int,
                        reported_shops: int | None = None, confirmed_shops: int | None = None,
                        pending: int = 0, n_generated: int | None = None) -> RunMetrics:
    if not 0 <= n_confirmed <= n_reported:
        raise ValueError("need 0 <= confirmed <= reported")
    undefined = {}
    r_fp = e_tc = None
    if n_reported > 0:
        r_fp = (n_reported - n_confirmed) / n_reported
    else:
        undefined["r_fp"] = "no reported findings"
    if n_confirmed > 0:
        e_tc = n_total / n_confirmed
    else:
        undefined["e_tc"] = "no confirmed findings"
    return RunMetrics(
        n_total, n_reported, n_reported if reported_shops is None else reported_shops,
        n_confirmed, n_confirmed if confirmed_shops is None else confirmed_shops,
        pending, r_fp, e_tc, undefined, n_generated,
    )


def compute_metrics(ledger: RunLedger) -> RunMetrics:
    """Pending labels count as unconfirmed (provisional metrics)."""
    confirmed = [f for f in ledger.findings if ledger.label_of(f) == CONFIRMED]
    pending = sum(1 for f in ledger.findings if ledger.label_of(f) == PENDING)
    return metrics_from_counts(
        len(ledger.findings), len(confirmed), ledger.n_total,
        reported_shops=len({f.target_shop_id for f in ledger.findings}),
        confirmed_shops=len({f.target_shop_id for f in confirmed}),
        pending=pending, n_generated=ledger.n_generated,
    )


@dataclass
class Confirmations:
    labels: dict[str, str]
    errors: list[str]
    warnings: list[str]


def ingest_confirmations(source, finding_ids: Iterable[str]) -> Confirmations:
    """Read ``finding_id,label,annotator,notes`` rows; later rows win on conflict."""
    if isinstance(source, (str, Path)) and Path(source).exists():
        text = Path(source).read_text(encoding="utf-8-sig")
    elif isinstance(source, bytes):
        text = source.decode("utf-8-sig")
    else:
        text = str(source)
    known = set(finding_ids)
    labels: dict[str, str] = {}
    errors, warnings = [], []
    for lineno, row in enumerate(csv.DictReader(io.StringIO(text)), start=2):
        fid = (row.get("finding_id") or "").strip()
        label = (row.get("label") or "").strip().lower()
        if fid not in known:
            errors.append(f"line {lineno}: unknown finding id {fid!r}")
            continue
        if label not in LABELS:
            errors.append(f"line {lineno}: unknown label {label!r}")
            continue
        if fid in labels and labels[fid] != label:
            msg = f"line {lineno}: {fid} relabeled {labels[fid]} -> {label}"
            log.warning(msg)
            warnings.append(msg)
        labels[fid] = label
    return Confirmations(labels, errors, warnings)


def _fmt_ratio(value: float | None, num: int, den: int, reason: str | None) -> str:
    if value is None:
        return f"undefined ({reason})"
    return f"{num}/{den}={value:.3f}"


def _group_counts(verdicts: Iterable[GroupVerdict]) -> dict[str, int]:
    counts = {k: 0 for k in CLASSIFICATIONS}
    for v in verdicts:
        counts[v.classification] += 1
    return counts


def render_report(verdicts, findings, metrics: RunMetrics, fmt: str = "json",
                  run_id: str = "", config_digest: str = "", warnings=(),
                  labels: dict | None = None) -> str:
    verdicts = sorted(verdicts, key=lambda v: v.target_shop_id)
    findings = sorted(findings, key=lambda f: (f.target_shop_id, f.failing_query.text))
    labels = labels or {}
    if fmt == "json":
        body = {
            "run_id": run_id,
            "config_digest": config_digest,
            "group_counts": _group_counts(verdicts),
            "findings": [{**f.to_dict(), "label": labels.get(f.id, PENDING)} for f in findings],
            "metrics": metrics.to_dict(),
            "warnings": list(warnings),
        }
        return json.dumps(body, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["finding_id", "target_shop_id", "query", "derivation", "witnesses", "label"])
        for f in findings:
            w.writerow([f.id, f.target_shop_id, f.failing_query.text, f.failing_query.derivation,
                        " | ".join(q.text for q in f.witnesses), labels.get(f.id, PENDING)])
        return buf.getvalue()
    if fmt == "text":
        m = metrics
        counts = _group_counts(verdicts)
        lines = [
            f"run: {run_id}" if run_id else "run: -",
            "groups: " + " ".join(f"{k}={counts[k]}" for k in CLASSIFICATIONS),
            f"N_total: {m.n_total}",
            f"N_reported: {m.reported_entries} entries / {m.reported_shops} shops",
            f"N_confirmed: {m.confirmed_entries} entries / {m.confirmed_shops} shops"
            + (f" (pending {m.pending}, provisional)" if m.provisional else ""),
            "R_fp: " + _fmt_ratio(m.r_fp, m.reported_entries - m.confirmed_entries,
                                  m.reported_entries, m.undefined.get("r_fp")),
            "E_tc: " + _fmt_ratio(m.e_tc, m.n_total, m.confirmed_entries, m.undefined.get("e_tc")),
        ]
        if findings:
            lines.append("findings:")
            for f in findings:
                lines.append(f"  {f.id} [{labels.get(f.id, PENDING)}] query={f.failing_query.text!r} "
                             f"witnesses={[q.text for q in f.witnesses]!r}")
        for warning in warnings:
            lines.append(f"warning: {warning}")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def emit_report(verdicts, findings, metrics: RunMetrics, fmt: str = "json", path=None, **kwargs) -> str:
    text = render_report(verdicts, findings, metrics, fmt, **kwargs)
    if path is not None:
        try:
            Path(path).write_text(text, encoding="utf-8", newline="\n")
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc
    return text
