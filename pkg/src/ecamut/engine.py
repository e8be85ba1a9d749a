"""Simulated reconfiguration pipeline.

An environment emulator replays a context flow; the sensor turns each new
instance into events (one per changed property, every property on the first
instance); the reconfiguration engine fires matching rules; a probe records
the reconfiguration requests. Effects of a request are applied to internal
state immediately, so rules later in the same step see the updated values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Optional

from .model import (
    Condition,
    ContextFlow,
    ContextInstance,
    ContextSchema,
    Policy,
    SystemModel,
)


@dataclass(frozen=True)
class Event:
    property: str
    new_value: int
    new_level: str


@dataclass(frozen=True)
class ReconfigurationRequest:
    action_property: str
    value: str
    rule_index: int

    @property
    def observable(self) -> tuple[str, str]:
        return (self.action_property, self.value)


@dataclass(frozen=True)
class EngineState:
    internal: Mapping[str, int]
    last_instance: Optional[ContextInstance] = None

    @classmethod
    def initial(cls, sysmodel: SystemModel) -> EngineState:
        return cls(MappingProxyType(sysmodel.initial_state()))

    def key(self) -> tuple:
        return (tuple(sorted(self.internal.items())), self.last_instance)


@dataclass(frozen=True)
class Step:
    instance: ContextInstance
    events: tuple[Event, ...]
    requests: tuple[ReconfigurationRequest, ...]
    post_state: Mapping[str, int] = field(compare=True)

    def observations(self) -> tuple[tuple[str, str], ...]:
        return tuple(r.observable for r in self.requests)


@dataclass(frozen=True)
class Trace:
    steps: tuple[Step, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    def observations(self) -> tuple[tuple[tuple[str, str], ...], ...]:
        return tuple(s.observations() for s in self.steps)

    def to_dict(self) -> dict:
        return {
            "steps": [
                {
                    "index": i,
                    "instance": list(s.instance),
                    "events": [
                        {"property": e.property, "value": e.new_value, "level": e.new_level}
                        for e in s.events
                    ],
                    "requests": [
                        {"action_property": r.action_property, "value": r.value, "rule_index": r.rule_index}
                        for r in s.requests
                    ],
                    "state": dict(s.post_state),
                }
                for i, s in enumerate(self.steps)
            ]
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        lines = []
        for i, s in enumerate(self.steps):
            inst = ",".join(str(v) for v in s.instance)
            events = " ".join(f"{e.property}={e.new_value}({e.new_level})" for e in s.events) or "-"
            reqs = " ".join(f"{r.action_property}:='{r.value}'[r{r.rule_index}]" for r in s.requests) or "-"
            state = " ".join(f"{k}={v}" for k, v in sorted(s.post_state.items()))
            lines.append(f"step {i} <{inst}> events {events} | requests {reqs} | state {state}")
        return "\n".join(lines) + ("\n" if lines else "")


def level_of(schema: ContextSchema, prop: str, value: int) -> str:
    return schema[prop].level_of(value)


def events_between(
    schema: ContextSchema, prev: Optional[ContextInstance], curr: ContextInstance
) -> list[Event]:
    arity = len(schema.properties)
    if len(curr) != arity or (prev is not None and len(prev) != arity):
        raise ValueError(f"instance arity does not match schema ({arity} properties)")
    events = []
    for i, prop in enumerate(schema.properties):
        if prev is None or prev[i] != curr[i]:
            events.append(Event(prop.name, curr[i], prop.level_of(curr[i])))
    return events


def eval_condition(cond: Condition, internal: Mapping[str, int]) -> bool:
    try:
        actual = internal[cond.state_ref]
    except KeyError:
        raise KeyError(f"unknown state variable {cond.state_ref}") from None
    return cond.holds(actual)


def step(
    policy: Policy,
    schema: ContextSchema,
    sysmodel: SystemModel,
    state: EngineState,
    instance: ContextInstance,
) -> tuple[EngineState, Step]:
    instance = tuple(instance)
    events = events_between(schema, state.last_instance, instance)
    internal = dict(state.internal)
    requests = []
    for event in events:
        for idx, rule in enumerate(policy.rules):
            if rule.trigger.property != event.property:
                continue
            if rule.trigger.accepts(event.new_level) and eval_condition(rule.condition, internal):
                act = rule.action
                requests.append(ReconfigurationRequest(act.action_property, act.new_value, idx))
                for asg in sysmodel.assignments_for(act.action_property, act.new_value):
                    internal[asg.target] = asg.expr.evaluate(internal)
    frozen = MappingProxyType(internal)
    return (
        EngineState(frozen, instance),
        Step(instance, tuple(events), tuple(requests), frozen),
    )


def run_flow(policy: Policy, schema: ContextSchema, sysmodel: SystemModel, flow: ContextFlow) -> Trace:
    state = EngineState.initial(sysmodel)
    steps = []
    for instance in flow:
        state, record = step(policy, schema, sysmodel, state, instance)
        steps.append(record)
    return Trace(tuple(steps))
