"""Taint-anchored auditing and prompt-evolution fuzzing for MCP tool servers.

Three stages: static anchoring resolves taint alerts to concrete tool
handlers and emits call chains; a surrogate agent evolves natural-language
prompts against the live server; feedback scoring, exploit-stage validation,
and seed scheduling drive the search until attacker-controlled input
demonstrably reaches a dangerous sink.
"""
__version__ = "0.1.0"
