from .gateway import (
    Attempt,
    Completion,
    EndpointConfig,
    HttpTransport,
    LLMError,
    LLMGateway,
    RateLimiter,
    ReplyTransport,
    RetryPolicy,
    ScriptedStep,
    ScriptedTransport,
    TimeoutExhausted,
    TransportError,
    complete,
)
from .prompts import (
    ChatRequest,
    PromptConfigError,
    PromptTemplate,
    ValidationExample,
    assemble_generation_prompt,
    assemble_validation_prompt,
    cot_template,
    few_shot_template,
    get_template,
    zero_shot_template,
)
