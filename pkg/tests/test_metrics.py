import json

import pytest
from hypothesis import given, strategies as st

from missedrecall.generation import TestQuery
from missedrecall.metrics import (
    CONFIRMED,
    FALSE_POSITIVE,
    RunLedger,
    compute_metrics,
    emit_report,
    ingest_confirmations,
    metrics_from_counts,
)
from missedrecall.oracle import MissedRecallFinding, evaluate_run
from missedrecall.generation import QueryGroup


def findings(n, shops=1):
    out = []
    for i in range(n):
        sid = f"s{i % shops}"
        out.append(MissedRecallFinding(sid, TestQuery(f"miss {i}", sid), (TestQuery("hit", sid),)))
    return out


def test_ablation_row_without_validation():
    m = metrics_from_counts(78, 71, 3724)
    assert m.r_fp == pytest.approx(0.090, abs=0.0005)
    assert m.e_tc == pytest.approx(52.451, abs=0.001)


def test_zero_confirmed_leaves_cost_undefined():
    m = metrics_from_counts(5, 0, 100)
    assert m.r_fp == 1.0
    assert m.e_tc is None
    d = m.to_dict()
    assert d["e_tc"] == {"value": None, "reason": "no confirmed findings"}


def test_zero_reported_leaves_both_undefined():
    m = metrics_from_counts(0, 0, 100)
    assert m.r_fp is None and m.e_tc is None


def test_confirmed_cannot_exceed_reported():
    with pytest.raises(ValueError):
        metrics_from_counts(2, 3, 10)


def test_pending_counts_as_unconfirmed():
    fs = findings(4, shops=2)
    ledger = RunLedger(40, fs, {fs[0].id: CONFIRMED, fs[1].id: FALSE_POSITIVE})
    m = compute_metrics(ledger)
    assert (m.reported_entries, m.confirmed_entries, m.pending) == (4, 1, 2)
    assert m.provisional
    assert m.e_tc == 40.0
    assert m.reported_shops == 2 and m.confirmed_shops == 1


def test_ledger_rejects_unknown_labels():
    with pytest.raises(ValueError):
        RunLedger(10, findings(1), {"nope": CONFIRMED})


def test_confirmations_last_writer_wins_with_warning():
    fs = findings(2)
    csv = (f"finding_id,label,annotator,notes\n"
           f"{fs[0].id},confirmed,ann1,\n{fs[0].id},false_positive,ann2,disagree\n"
           f"{fs[1].id},confirmed,ann1,\nghost:123,confirmed,ann1,\n{fs[1].id},maybe,ann1,\n")
    conf = ingest_confirmations(csv.encode(), [f.id for f in fs])
    assert conf.labels[fs[0].id] == FALSE_POSITIVE
    assert conf.labels[fs[1].id] == CONFIRMED
    assert any(fs[0].id in w for w in conf.warnings)
    assert conf.errors  # unknown id and bad label are reported


def test_text_report_shows_ratios():
    fs = findings(47)
    labels = {f.id: CONFIRMED for f in fs[:46]}
    m = compute_metrics(RunLedger(3724, fs, labels))
    text = emit_report([], fs, m, "text", labels=labels)
    assert "R_fp: 1/47=0.021" in text
    assert "E_tc: 3724/46=80.957" in text


def test_json_report_round_trips(tmp_path):
    ev = evaluate_run([(QueryGroup("a", (TestQuery("x", "a"), TestQuery("y", "a"))), [True, False])])
    m = compute_metrics(RunLedger(2, ev.findings))
    path = tmp_path / "r.json"
    emit_report(ev.verdicts, ev.findings, m, "json", path, run_id="r1")
    data = json.loads(path.read_text())
    assert data["metrics"]["r_fp"]["value"] == 1.0
    assert data["metrics"]["provisional"] is True


@given(st.integers(1, 500), st.data(), st.integers(0, 10_000))
def test_metric_bounds(reported, data, extra):
    confirmed = data.draw(st.integers(0, reported))
    m = metrics_from_counts(reported, confirmed, reported + extra)
    assert 0.0 <= m.r_fp <= 1.0
    if confirmed:
        assert m.e_tc >= 1.0
    else:
        assert m.e_tc is None
