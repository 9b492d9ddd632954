import pytest

from missedrecall.catalog import Shop
from missedrecall.generation import QueryGroup, TestQuery
from missedrecall.llm import EndpointConfig, LLMGateway, RetryPolicy, ScriptedStep, ScriptedTransport
from missedrecall.validation import (
    REASONABLE,
    UNCLEAR,
    UNREASONABLE,
    ContractError,
    ValidationVerdict,
    filter_group,
    judge_group,
    parse_judge_reply,
    validate_llm,
    validate_llm_cautious,
    validate_rule,
)

SHOP = Shop("s1", "Freshside Laundry", "laundry", "Shanghai", 121.4, 31.2)


@pytest.mark.parametrize("reply,verdict", [
    ("KEEP it names the shop", REASONABLE),
    ("**Drop** - a barber is a different service", UNREASONABLE),
    ("keep", REASONABLE),
    ("I think KEEP", UNCLEAR),
    ("", UNCLEAR),
    ("maybe", UNCLEAR),
])
def test_parse_judge_reply(reply, verdict):
    assert parse_judge_reply(reply) == verdict


def test_rule_judge():
    assert validate_rule(SHOP, TestQuery("laundry Shanghai", "s1")).verdict == REASONABLE
    assert validate_rule(SHOP, TestQuery("a barber", "s1")).verdict == UNREASONABLE
    assert validate_rule(SHOP, TestQuery("laundry " * 20, "s1")).verdict == UNREASONABLE


def gateway(*steps, retries=0):
    return LLMGateway(EndpointConfig("http://x", "m"),
                      RetryPolicy(per_attempt_timeout=0.2, max_retries=retries, wait_min=0, wait_max=0),
                      ScriptedTransport(list(steps)))


def test_llm_judge_and_cautious_fallback():
    q = TestQuery("a barber", "s1")
    assert validate_llm(SHOP, q, gateway(ScriptedStep(text="DROP no"))).verdict == UNREASONABLE
    failing = gateway(ScriptedStep(status=500))
    with pytest.raises(Exception):
        validate_llm(SHOP, q, failing)
    v = validate_llm_cautious(SHOP, q, gateway(ScriptedStep(status=500)))
    assert v.verdict == UNCLEAR and "unavailable" in v.rationale


def test_filter_is_sound_and_audited():
    g = QueryGroup("s1", tuple(TestQuery(t, "s1") for t in ("Freshside", "laundry", "a barber")))
    kept = filter_group(g, judge_group(SHOP, g, validate_rule))
    assert [q.text for q in kept.queries] == ["Freshside", "laundry"]
    assert [(d.query.text, d.verdict) for d in kept.dropped] == [("a barber", UNREASONABLE)]
    again = filter_group(kept, judge_group(SHOP, kept, validate_rule))
    assert again.queries == kept.queries and again.dropped == kept.dropped


def test_missing_verdict_is_a_contract_error():
    g = QueryGroup("s1", (TestQuery("a", "s1"), TestQuery("b", "s1")))
    with pytest.raises(ContractError):
        filter_group(g, [ValidationVerdict(g.queries[0], REASONABLE)])
