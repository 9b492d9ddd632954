import time

import pytest

from missedrecall.catalog import Shop
from missedrecall.llm import (
    ChatRequest,
    EndpointConfig,
    LLMGateway,
    PromptConfigError,
    PromptTemplate,
    RateLimiter,
    RetryPolicy,
    ScriptedStep,
    ScriptedTransport,
    TimeoutExhausted,
    TransportError,
    assemble_generation_prompt,
    assemble_validation_prompt,
    get_template,
)

SHOP = Shop("s1", "Freshside Healthy SPA", "SPA", "Shanghai", 121.47, 31.23)
FAST = RetryPolicy(per_attempt_timeout=0.2, max_retries=3, wait_min=0.0, wait_max=0.0)
ENDPOINT = EndpointConfig("http://mock.invalid/v1", "m", api_key_env="MR_TEST_KEY")
REQUEST = ChatRequest((("user", "hi"),))


@pytest.mark.parametrize("style,lang", [("cot", "en"), ("cot", "zh"), ("few_shot", "en"),
                                        ("zero_shot", "en")])
def test_generation_prompt_shape(style, lang):
    req = assemble_generation_prompt(SHOP, get_template(style, lang))
    roles = [r for r, _ in req.messages]
    assert roles[0] == "system" and roles[-1] == "user"
    assert "Freshside Healthy SPA" in req.messages[-1][1]
    assert req.temperature == 0.0
    if style != "zero_shot":
        assert "assistant" in roles
    assert req.to_json() == assemble_generation_prompt(SHOP, get_template(style, lang)).to_json()


def test_cot_template_needs_three_steps():
    bad = PromptTemplate("task", ("one", "two"), (("q", "a"),))
    with pytest.raises(PromptConfigError):
        assemble_generation_prompt(SHOP, bad)
    with pytest.raises(PromptConfigError):
        get_template("chain")


def test_validation_prompt():
    req = assemble_validation_prompt(SHOP, "SPA near me")
    assert req.messages[-1][1].endswith("Query: SPA near me")
    assert any("DROP" in text for role, text in req.messages if role == "assistant")
    with pytest.raises(PromptConfigError):
        assemble_validation_prompt(SHOP, "  ")
    with pytest.raises(PromptConfigError):
        assemble_validation_prompt(SHOP, "x", examples=())


def test_chat_request_checks():
    with pytest.raises(PromptConfigError):
        ChatRequest((("system", "only system"),))
    with pytest.raises(PromptConfigError):
        ChatRequest((("user", "x"),), temperature=-1)


def test_key_comes_from_environment(monkeypatch):
    monkeypatch.delenv("MR_TEST_KEY", raising=False)
    assert "Authorization" not in ENDPOINT.headers()
    monkeypatch.setenv("MR_TEST_KEY", "sk-test")
    assert ENDPOINT.headers()["Authorization"] == "Bearer sk-test"


def test_success_first_try_records_one_attempt():
    done = LLMGateway(ENDPOINT, FAST, ScriptedTransport([ScriptedStep(text="hello")])).complete(REQUEST)
    assert done.text == "hello" and [a.status for a in done.attempts] == ["ok"]


def test_timeout_then_success():
    t = ScriptedTransport([ScriptedStep(delay=0.5, text="late"), ScriptedStep(text="ok")])
    done = LLMGateway(ENDPOINT, FAST, t).complete(REQUEST)
    assert [a.status for a in done.attempts] == ["timeout", "ok"]


def test_malformed_body_is_retried_then_transport_error():
    t = ScriptedTransport([ScriptedStep(body={"nope": 1})])
    with pytest.raises(TransportError) as info:
        LLMGateway(ENDPOINT, FAST, t).complete(REQUEST)
    assert not isinstance(info.value, TimeoutExhausted)
    assert [a.status for a in info.value.attempts] == ["malformed"] * 4


def test_waits_are_seeded_and_bounded():
    waits = []
    policy = RetryPolicy(per_attempt_timeout=0.2, max_retries=3, wait_min=0.5, wait_max=2.0, seed=3)

    def run():
        slept = []
        gw = LLMGateway(ENDPOINT, policy, ScriptedTransport([ScriptedStep(status=500)]), sleep=slept.append)
        with pytest.raises(TransportError):
            gw.complete(REQUEST)
        return slept

    a, b = run(), run()
    assert a == b and len(a) == 3
    assert all(0.5 <= w <= 2.0 for w in a)
    waits.extend(a)


def test_retry_policy_bounds():
    assert RetryPolicy().worst_case_seconds() == 4 * 32.0
    with pytest.raises(ValueError):
        RetryPolicy(max_retries=-1)
    with pytest.raises(ValueError):
        RetryPolicy(wait_min=3, wait_max=1)


def test_rate_limiter_spaces_dispatches():
    now = [0.0]
    slept = []

    def sleep(s):
        slept.append(s)
        now[0] += s

    rl = RateLimiter(per_minute=120, clock=lambda: now[0], sleep=sleep)
    for _ in range(3):
        rl.acquire()
    assert slept == [0.5, 0.5]


def test_timeout_abandons_slow_attempt_quickly():
    t = ScriptedTransport([ScriptedStep(delay=5, text="x")])
    policy = RetryPolicy(per_attempt_timeout=0.1, max_retries=0, wait_min=0, wait_max=0)
    started = time.monotonic()
    with pytest.raises(TimeoutExhausted):
        LLMGateway(ENDPOINT, policy, t).complete(REQUEST)
    assert time.monotonic() - started < 1.0
