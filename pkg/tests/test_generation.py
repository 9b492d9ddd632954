import pytest
from hypothesis import given, strategies as st

from missedrecall.catalog import Shop
from missedrecall.generation import (
    EmptyOutputError,
    QueryGroup,
    TemplateRules,
    TestQuery,
    cap_group,
    generate_llm,
    generate_template,
    parse_labeled_output,
    parse_llm_output,
    read_groups,
    write_groups,
)
from missedrecall.llm import EndpointConfig, LLMGateway, RetryPolicy, ScriptedStep, ScriptedTransport, get_template
from missedrecall.text import dedup_key

SHOP = Shop("s14", "F's Seafood Barbecue (Fangbang)", "barbecue", "Shanghai", 121.5, 31.2)

LABELED = """[name]
1. F's Seafood Barbecue
2. "F's Barbecue"
[service_product]
- seafood barbecue
- Seafood Barbecue
[location]
1) barbecue near Fangbang
"""


def test_parse_labeled_lists():
    assert parse_labeled_output(LABELED) == [
        ("F's Seafood Barbecue", "name"),
        ("F's Barbecue", "name"),
        ("seafood barbecue", "service_product"),
        ("barbecue near Fangbang", "location"),
    ]


def test_parse_keeps_numbers_inside_queries():
    assert parse_llm_output("1. 7:30 breakfast\n2. 1.5 litre tea\n3、老王烧烤") == [
        "7:30 breakfast", "1.5 litre tea", "老王烧烤"]


def test_parse_empty_output_raises():
    with pytest.raises(EmptyOutputError):
        parse_llm_output("\n[name]\n  \n- \n")


lines = st.lists(st.text(st.characters(blacklist_categories=("Cs", "Cc")), max_size=25), max_size=8)


@given(lines)
def test_parse_is_idempotent(raw):
    try:
        once = parse_llm_output("\n".join(raw))
    except EmptyOutputError:
        return
    assert parse_llm_output("\n".join(once)) == once
    assert len({dedup_key(q) for q in once}) == len(once)


def test_template_queries_for_branch_shop():
    texts = [q.text for q in generate_template(SHOP).queries]
    assert texts == ["F's Seafood Barbecue (Fangbang)", "F's Seafood Barbecue", "F's Barbecue",
                     "F's", "Seafood", "Barbecue", "Fangbang", "barbecue Fangbang",
                     "barbecue Shanghai"]


def test_template_is_deterministic_and_capped():
    g = generate_template(SHOP, TemplateRules(max_queries=4))
    assert g == generate_template(SHOP, TemplateRules(max_queries=4))
    assert len(g) == 4
    full = generate_template(SHOP)
    assert {q.derivation for q in g.queries} == {q.derivation for q in full.queries}


def test_group_rejects_duplicates_and_foreign_queries():
    with pytest.raises(ValueError):
        QueryGroup("a", (TestQuery("x", "a"), TestQuery(" X ", "a")))
    with pytest.raises(ValueError):
        QueryGroup("a", (TestQuery("x", "b"),))
    assert len(QueryGroup.build("a", [TestQuery("x", "a"), TestQuery("X", "a")])) == 1


def test_groups_jsonl_round_trip(tmp_path):
    groups = [generate_template(SHOP), QueryGroup("z", (TestQuery("烧烤", "z"),))]
    write_groups(tmp_path / "g.jsonl", groups)
    assert read_groups(tmp_path / "g.jsonl") == groups


def test_generate_llm_through_gateway():
    transport = ScriptedTransport([ScriptedStep(text=LABELED)])
    gw = LLMGateway(EndpointConfig("http://x", "m"), RetryPolicy(), transport)
    g = generate_llm(SHOP, get_template("cot"), gw)
    assert len(g) == 4
    assert all(q.source == "llm" for q in g.queries)
    assert transport.calls[0]["temperature"] == 0.0


@given(st.lists(st.sampled_from(["name", "service_product", "location"]), min_size=1, max_size=15),
       st.integers(1, 8))
def test_cap_keeps_order_and_covers_derivations(derivs, cap):
    g = QueryGroup("a", tuple(TestQuery(f"q{i}", "a", d) for i, d in enumerate(derivs)))
    capped = cap_group(g, cap)
    assert len(capped) == min(cap, len(g))
    idx = [int(q.text[1:]) for q in capped.queries]
    assert idx == sorted(idx)
    assert len({q.derivation for q in capped.queries}) == min(cap, len(set(derivs)))
