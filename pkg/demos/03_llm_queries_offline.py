"""
Generating and judging queries with a scripted model
====================================================

The LLM stages run through a gateway with timeouts and retries. Here the
transport is scripted, so no network or key is needed.
"""

from missedrecall.catalog import Shop
from missedrecall.generation import generate_llm
from missedrecall.llm import (
    EndpointConfig, LLMGateway, RetryPolicy, ScriptedStep, ScriptedTransport,
    assemble_generation_prompt, get_template,
)
from missedrecall.validation import filter_group, judge_group, validate_llm_cautious

shop = Shop("s07", "Freshside Healthy SPA", "SPA", "Shanghai", 121.47, 31.23)

request = assemble_generation_prompt(shop, get_template("cot", "en"))
for role, text in request.messages[:2]:
    print(f"--- {role}\n{text[:300]}")

reply = """[name]
1. Freshside Healthy SPA
2. Freshside SPA
[service_product]
1. SPA
2. a barber
[location]
1. SPA near People's Square"""

# the first call times out, the second fails with a 503, the third answers
transport = ScriptedTransport([ScriptedStep(delay=1.0, text="late"), ScriptedStep(status=503),
                               ScriptedStep(text=reply)])
policy = RetryPolicy(per_attempt_timeout=0.3, max_retries=3, wait_min=0.0, wait_max=0.1)
gateway = LLMGateway(EndpointConfig("http://localhost:8000/v1", "gpt-3.5-turbo"), policy, transport)

group = generate_llm(shop, get_template("cot"), gateway)
print([(q.text, q.derivation) for q in group.queries])

# the judge keeps everything but "a barber"; a failed call would count as unclear
judge = LLMGateway(gateway.endpoint, policy, ScriptedTransport(
    [ScriptedStep(text="KEEP")] * 3 + [ScriptedStep(text="DROP not a hair salon"), ScriptedStep(text="KEEP")]))
kept = filter_group(group, judge_group(shop, group, lambda s, q: validate_llm_cautious(s, q, judge)))
print(len(kept), "kept;", [(d.query.text, d.reason) for d in kept.dropped])
