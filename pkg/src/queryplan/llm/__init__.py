"""Prompting, parsing and transport for chat-model policies."""

from .client import (
    API_KEY_ENV,
    AuthError,
    ChatClient,
    ChatExchange,
    EndpointError,
    LlmConfig,
    RateLimited,
    ReplayMiss,
    Transcript,
    request_fingerprint,
)
from .mock import MockChatModel
from .parsing import FormatError, ParseError, parse_action, parse_action_sequence, parse_actions, parse_rating, parse_selection
from .policy import LLMPolicy, translate_description
from .prompts import PROMPT_KINDS, MissingField, build_prompt, build_translation_prompt

__all__ = [
    "API_KEY_ENV", "AuthError", "ChatClient", "ChatExchange", "EndpointError", "LlmConfig", "RateLimited",
    "ReplayMiss", "Transcript", "request_fingerprint", "MockChatModel", "FormatError", "parse_action",
    "ParseError", "parse_action_sequence", "parse_actions", "parse_rating", "parse_selection", "LLMPolicy",
    "translate_description", "PROMPT_KINDS", "MissingField", "build_prompt", "build_translation_prompt",
]
