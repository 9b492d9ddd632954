"""Prompt templates and chat-request assembly for generation and validation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..catalog import Shop

ROLES = ("system", "user", "assistant")
STEP_LABELS = ("name", "service_product", "location")


class PromptConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[tuple[str, str], ...]
    temperature: float = 0.0
    max_output_tokens: int = 512

    def __post_init__(self) -> None:
        if not any(role == "user" for role, _ in self.messages):
            raise PromptConfigError("a chat request needs at least one user message")
        for role, _ in self.messages:
            if role not in ROLES:
                raise PromptConfigError(f"unknown role {role!r}")
        if self.temperature < 0:
            raise PromptConfigError("temperature must be >= 0")
        if self.max_output_tokens <= 0:
            raise PromptConfigError("max_output_tokens must be positive")

    def payload(self, model: str) -> dict:
        return {
            "model": model,
            "messages": [{"role": r, "content": t} for r, t in self.messages],
            "temperature": self.temperature,
            "max_tokens": self.max_output_tokens,
        }

    def to_json(self) -> str:
        return json.dumps(
            {"messages": [list(m) for m in self.messages], "temperature": self.temperature,
             "max_output_tokens": self.max_output_tokens},
            ensure_ascii=False, sort_keys=True,
        )


@dataclass(frozen=True)
class PromptTemplate:
    task_description: str
    cot_steps: tuple[str, ...]
    qa_examples: tuple[tuple[str, str], ...]
    language: str = "en"
    style: str = "cot"  # cot | few_shot | zero_shot
    shop_line: str = "Shop name: {name}\nShop type: {type}"
    answer_instruction: str = ""

    def check(self) -> None:
        if not self.task_description.strip():
            raise PromptConfigError("template has no task description")
        if self.style == "cot":
            if len(self.cot_steps) != 3:
                raise PromptConfigError(
                    f"CoT template needs exactly 3 steps (name, services/products, location), "
                    f"got {len(self.cot_steps)}"
                )
            if not self.qa_examples:
                raise PromptConfigError("CoT template needs QA examples")
        elif self.style == "few_shot":
            if not self.qa_examples:
                raise PromptConfigError("few-shot template needs QA examples")
        elif self.style != "zero_shot":
            raise PromptConfigError(f"unknown template style {self.style!r}")


@dataclass(frozen=True)
class ValidationExample:
    shop_name: str
    shop_type: str
    query: str
    keep: bool
    reason: str = ""


_EN_TASK = (
    "You help test the search engine of a local-services shopping app. Given a target "
    "shop, write the search queries that ordinary users would really type when they "
    "look for this shop. Each query must express a clear intention towards the target "
    "shop. Do not invent products the shop type does not suggest."
)

_EN_STEPS = (
    "Step 1 (shop name): write queries built from the shop name, such as the full "
    "name, a recognizable part of the name, or its brand word.",
    "Step 2 (services/products): write queries naming the products or services the "
    "shop offers, as implied by its name and type.",
    "Step 3 (location): if the name or city tells where the shop is, write queries "
    "combining a product or service with that place, the way users search vaguely "
    "by location.",
)

_EN_EXAMPLES = (
    (
        "Shop name: Ma's burgers\nShop type: fast food",
        "[name]\n1. Ma's burgers\n2. Ma's\n[service_product]\n1. hamburgers\n"
        "[location]\n1. burgers nearby",
    ),
    (
        "Shop name: Old Flavor Hotpot (People's Square)\nShop type: Beijing hotpot",
        "[name]\n1. Old Flavor Hotpot\n2. Old Flavor\n[service_product]\n1. hotpot\n"
        "2. Beijing hotpot\n[location]\n1. hotpot People's Square",
    ),
    (
        "Shop name: Chen's hardware\nShop type: hardware store",
        "[name]\n1. Chen's hardware\n2. Chen's\n[service_product]\n1. hardware store\n"
        "[location]\n1. hardware store nearby",
    ),
)

_EN_ANSWER = (
    "Answer with one numbered list per step, each list preceded by its label line "
    "[name], [service_product] or [location]."
)

_ZH_TASK = (
    "你是本地生活电商平台搜索测试助手。给定目标商户，请写出普通用户在寻找这家商户时"
    "真实会输入的搜索词。每个搜索词都必须明确指向目标商户，不要编造该商户类型不提供的商品。"
)

_ZH_STEPS = (
    "第一步（店名）：根据商户名称构造搜索词，例如全称、名称中易于识别的部分或品牌词。",
    "第二步（商品/服务）：根据名称和类型，写出该商户提供的商品或服务作为搜索词。",
    "第三步（地点）：如果名称或城市体现了商户所在位置，将商品或服务与该地点组合，模拟用户按地点模糊搜索。",
)

_ZH_EXAMPLES = (
    (
        "商户名称：老味道火锅（人民广场店）\n商户类型：北京火锅",
        "[name]\n1. 老味道火锅\n2. 老味道\n[service_product]\n1. 火锅\n2. 北京火锅\n"
        "[location]\n1. 人民广场 火锅",
    ),
    (
        "商户名称：马记汉堡\n商户类型：快餐",
        "[name]\n1. 马记汉堡\n2. 马记\n[service_product]\n1. 汉堡\n[location]\n1. 附近 汉堡",
    ),
)

_ZH_ANSWER = "请按步骤分别输出编号列表，每个列表前单独一行写标签 [name]、[service_product] 或 [location]。"


def cot_template(language: str = "en") -> PromptTemplate:
    if language == "zh":
        return PromptTemplate(_ZH_TASK, _ZH_STEPS, _ZH_EXAMPLES, "zh", "cot",
                              "商户名称：{name}\n商户类型：{type}", _ZH_ANSWER)
    if language == "en":
        return PromptTemplate(_EN_TASK, _EN_STEPS, _EN_EXAMPLES, "en", "cot",
                              answer_instruction=_EN_ANSWER)
    raise PromptConfigError(f"no built-in template for language {language!r}")


def few_shot_template(language: str = "en") -> PromptTemplate:
    base = cot_template(language)
    return PromptTemplate(base.task_description, (), base.qa_examples, language,
                          "few_shot", base.shop_line, base.answer_instruction)


def zero_shot_template(language: str = "en") -> PromptTemplate:
    base = cot_template(language)
    return PromptTemplate(base.task_description, (), (), language, "zero_shot",
                          base.shop_line, "")


TEMPLATES = {"cot": cot_template, "few_shot": few_shot_template, "zero_shot": zero_shot_template}


def get_template(style: str = "cot", language: str = "en") -> PromptTemplate:
    try:
        return TEMPLATES[style](language)
    except KeyError:
        raise PromptConfigError(f"unknown template style {style!r}") from None


def assemble_generation_prompt(shop: Shop, template: PromptTemplate,
                               max_output_tokens: int = 512) -> ChatRequest:
    template.check()
    system = template.task_description
    if template.cot_steps:
        system += "\n\n" + "\n".join(template.cot_steps)
    if template.answer_instruction:
        system += "\n\n" + template.answer_instruction
    messages: list[tuple[str, str]] = [("system", system)]
    for question, answer in template.qa_examples:
        messages.append(("user", question))
        messages.append(("assistant", answer))
    messages.append(("user", template.shop_line.format(name=shop.name, type=shop.shop_type)))
    return ChatRequest(tuple(messages), temperature=0.0, max_output_tokens=max_output_tokens)


DEFAULT_VALIDATION_EXAMPLES = (
    ValidationExample("Chen's hardware", "hardware store", "Chen's", True,
                      "users shorten the name to its brand word"),
    ValidationExample("Ma's burgers", "fast food", "hamburgers", True,
                      "names the main product"),
    ValidationExample("Lily Hair Studio", "hairdressing salon", "a barber", False,
                      "a barber is not how users look for a hair salon"),
    ValidationExample("A supermarket", "supermarket", "supermarket near A", False,
                      "treats part of the shop name as a place"),
    ValidationExample("Shanghai Flavor House", "Shanghai cuisine", "Shanghai restaurant", False,
                      "reads as restaurants located in Shanghai, not Shanghai cuisine"),
)

_VALIDATION_SYSTEM = (
    "You review search queries generated for testing a shopping app. For a target shop "
    "and one query, decide whether ordinary users would really type this query to look "
    "for this shop. Start your answer with KEEP if the query is reasonable or DROP if "
    "it is not, then give a one-sentence reason."
)

_VALIDATION_SYSTEM_ZH = (
    "你负责审核为测试购物应用搜索而生成的搜索词。给定目标商户和一个搜索词，判断普通用户"
    "是否真的会用这个搜索词寻找该商户。回答必须以 KEEP（合理）或 DROP（不合理）开头，然后用一句话说明理由。"
)


def _validation_question(name: str, shop_type: str, query: str) -> str:
    return f"Shop name: {name}\nShop type: {shop_type}\nQuery: {query}"


def assemble_validation_prompt(shop: Shop, query_text: str,
                               examples=DEFAULT_VALIDATION_EXAMPLES,
                               language: str = "en") -> ChatRequest:
    if not query_text or not query_text.strip():
        raise PromptConfigError("query text is empty")
    examples = list(examples)
    if not examples:
        raise PromptConfigError("validation prompt needs labeled examples")
    system = _VALIDATION_SYSTEM_ZH if language == "zh" else _VALIDATION_SYSTEM
    messages: list[tuple[str, str]] = [("system", system)]
    for ex in examples:
        messages.append(("user", _validation_question(ex.shop_name, ex.shop_type, ex.query)))
        verdict = "KEEP" if ex.keep else "DROP"
        messages.append(("assistant", f"{verdict} {ex.reason}".strip()))
    messages.append(("user", _validation_question(shop.name, shop.shop_type, query_text)))
    return ChatRequest(tuple(messages), temperature=0.0, max_output_tokens=64)
