"""
Cost metrics from a labeled run
===============================

False-positive rate and test cases per confirmed miss, computed from
counts and from a run ledger with human labels.
"""

from missedrecall.metrics import CONFIRMED, FALSE_POSITIVE, RunLedger, compute_metrics, emit_report, metrics_from_counts

for reported, confirmed, total in [(47, 46, 3724), (35, 6, 2607), (54, 32, 3803)]:
    m = metrics_from_counts(reported, confirmed, total)
    print(f"{reported:>4} reported {confirmed:>4} confirmed  R_fp={m.r_fp:.3f}  E_tc={m.e_tc:.3f}")

# nobody confirmed anything yet: the cost per miss is undefined, not infinite
print(metrics_from_counts(5, 0, 100).to_dict()["e_tc"])

# labels attach to findings by id; unlabeled ones stay pending
from missedrecall.generation import QueryGroup, TestQuery
from missedrecall.oracle import evaluate_run

g = QueryGroup("s1", tuple(TestQuery(t, "s1") for t in ("Tea House", "Tea", "tea shop", "tea near me")))
ev = evaluate_run([(g, [True, False, False, True])])
labels = {ev.findings[0].id: CONFIRMED}
m = compute_metrics(RunLedger(4, ev.findings, labels))
print(emit_report(ev.verdicts, ev.findings, m, "text", labels=labels))

labels[ev.findings[1].id] = FALSE_POSITIVE
print(compute_metrics(RunLedger(4, ev.findings, labels)).to_dict()["r_fp"])
