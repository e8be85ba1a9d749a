"""Mutation testing for event-condition-action adaptation policies."""

from .model import (
    Action,
    Condition,
    ContextFlow,
    ContextSchema,
    EventTrigger,
    Policy,
    PropertySchema,
    Rule,
    SystemModel,
    validate_flow,
    validate_policy,
)
from .text import ParseError, parse_flow, parse_policy, parse_schema, parse_system_model, serialize_policy

__version__ = "0.1.0"
