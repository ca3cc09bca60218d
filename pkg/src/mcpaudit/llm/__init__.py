"""Provider-agnostic LLM access for the pipeline's roles."""
from .config import Role, RoleConfig, default_role_configs, load_role_configs
from .gateway import (
    ChatExchange,
    GatewayError,
    HttpProvider,
    LlmGateway,
    ScriptedProvider,
    ScriptExhaustedError,
)
from .templates import TEMPLATES, PromptTemplate, TemplateError, render_template

__all__ = [
    "ChatExchange",
    "GatewayError",
    "HttpProvider",
    "LlmGateway",
    "PromptTemplate",
    "Role",
    "RoleConfig",
    "ScriptExhaustedError",
    "ScriptedProvider",
    "TEMPLATES",
    "TemplateError",
    "default_role_configs",
    "load_role_configs",
    "render_template",
]
