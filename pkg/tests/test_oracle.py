import pytest
from hypothesis import given, strategies as st

from missedrecall.generation import QueryGroup, TestQuery
from missedrecall.oracle import (
    CONSISTENT_ALL_TRUE,
    INCOMPLETE,
    INELIGIBLE,
    SUPPRESSED_ALL_FALSE,
    VIOLATION,
    ArityError,
    MissedRecallFinding,
    evaluate_group,
    evaluate_run,
)


def group(n, shop="s1"):
    return QueryGroup(shop, tuple(TestQuery(f"query {i}", shop) for i in range(n)))


outcome_vectors = st.lists(st.booleans(), min_size=2, max_size=12)


def test_violation_reports_each_false_query_with_true_witnesses():
    g = group(4)
    verdict, findings = evaluate_group(g, [True, False, True, False], {"k": 1}, "run-1")
    assert verdict.classification == VIOLATION
    assert [f.failing_query.text for f in findings] == ["query 1", "query 3"]
    for f in findings:
        assert [w.text for w in f.witnesses] == ["query 0", "query 2"]
        assert f.context == {"k": 1} and f.run_id == "run-1"


@pytest.mark.parametrize("outcomes,kind", [
    ([True, True], CONSISTENT_ALL_TRUE),
    ([False, False, False], SUPPRESSED_ALL_FALSE),
    ([True, None], INCOMPLETE),
    ([False, None, True], INCOMPLETE),
])
def test_classification_without_findings(outcomes, kind):
    verdict, findings = evaluate_group(group(len(outcomes)), outcomes)
    assert verdict.classification == kind
    assert findings == []


def test_single_query_group_is_ineligible():
    verdict, findings = evaluate_group(group(1), [False])
    assert verdict.classification == INELIGIBLE and findings == []


def test_unexecuted_group_is_incomplete():
    verdict, _ = evaluate_group(group(3), None)
    assert verdict.classification == INCOMPLETE
    assert verdict.outcomes == (None, None, None)


def test_arity_mismatch_raises_and_run_collects_it():
    with pytest.raises(ArityError):
        evaluate_group(group(3), [True, False])
    ev = evaluate_run([(group(3, "a"), [True, False]), (group(2, "b"), [True, False])])
    assert len(ev.errors) == 1 and ev.errors[0].startswith("a:")
    assert [f.target_shop_id for f in ev.findings] == ["b"]


def test_finding_requires_witness():
    with pytest.raises(ValueError):
        MissedRecallFinding("s1", TestQuery("x", "s1"), ())


def test_finding_ids_are_stable_and_distinct():
    g = group(3)
    _, f1 = evaluate_group(g, [True, False, False])
    _, f2 = evaluate_group(g, [True, False, False], run_id="other")
    assert [f.id for f in f1] == [f.id for f in f2]
    assert len({f.id for f in f1}) == 2


def test_run_tallies_entries_and_shops():
    ev = evaluate_run([(group(3, "b"), [True, False, False]), (group(2, "a"), [False, True]),
                       (group(2, "c"), [True, True])])
    assert ev.tallies() == {"entries": 3, "shops": 2}
    assert ev.flagged_shops == ["a", "b"]
    assert ev.counts[VIOLATION] == 2 and ev.counts[CONSISTENT_ALL_TRUE] == 1


@given(outcome_vectors, st.randoms(use_true_random=False))
def test_permutation_invariance(outcomes, rnd):
    g = group(len(outcomes))
    pairs = list(zip(g.queries, outcomes))
    rnd.shuffle(pairs)
    shuffled = QueryGroup("s1", tuple(q for q, _ in pairs))
    v1, f1 = evaluate_group(g, outcomes)
    v2, f2 = evaluate_group(shuffled, [y for _, y in pairs])
    assert v1.classification == v2.classification
    assert {f.failing_query.text for f in f1} == {f.failing_query.text for f in f2}


@given(outcome_vectors, st.data())
def test_recalling_one_more_query_removes_one_finding(outcomes, data):
    falses = [i for i, y in enumerate(outcomes) if not y]
    if not falses:
        return
    i = data.draw(st.sampled_from(falses))
    flipped = list(outcomes)
    flipped[i] = True
    v_before, before = evaluate_group(group(len(outcomes)), outcomes)
    v_after, after = evaluate_group(group(len(outcomes)), flipped)
    if v_before.classification == VIOLATION:
        assert len(after) == len(before) - 1
    else:  # all-false group: one recalled query turns the rest into findings
        assert len(after) == len(outcomes) - 1


@given(outcome_vectors)
def test_findings_partition_the_group(outcomes):
    verdict, findings = evaluate_group(group(len(outcomes)), outcomes)
    if findings:
        failing = {f.failing_query.text for f in findings}
        witnesses = {w.text for w in findings[0].witnesses}
        assert failing.isdisjoint(witnesses)
        assert len(failing) + len(witnesses) == len(outcomes)
    else:
        assert verdict.classification != VIOLATION
