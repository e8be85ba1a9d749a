"""Domain types for action-based adaptation policies.

A policy is an ordered list of event-condition-action rules. Rules react to
changes of context properties (integers with qualitative levels), check one
comparison against the adaptation system's internal state and, when it holds,
assign a qualitative value to an action property.

All types are frozen and hashable so they can be shared between worker
processes and used as dictionary keys.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field
from typing import Iterator, Optional

COMPARATORS = {
    "==": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}

ContextInstance = tuple[int, ...]


@dataclass(frozen=True)
class SourceSpan:
    """Location of a construct in its source text (1-based)."""

    line: int
    column: int
    length: int
    end_line: Optional[int] = None

    def __post_init__(self) -> None:
        if self.line < 1 or self.column < 1:
            raise ValueError(f"invalid span {self.line}:{self.column}")

    def __str__(self) -> str:
        if self.end_line is not None and self.end_line != self.line:
            return f"lines {self.line}-{self.end_line}"
        return f"line {self.line}, column {self.column}"


# ---------------------------------------------------------------------------
# Context
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Level:
    name: str
    lo: int
    hi: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "name", self.name.lower())
        if self.lo > self.hi:
            raise ValueError(f"level {self.name!r} has empty interval [{self.lo},{self.hi}]")

    def __contains__(self, value: int) -> bool:
        return self.lo <= value <= self.hi


@dataclass(frozen=True)
class PropertySchema:
    """One context property: an inclusive integer domain split into levels.

    Level names are stored lower-cased. The levels must partition
    ``[lower, upper]`` exactly; :class:`ValueError` names the first overlap
    or gap found.
    """

    name: str
    lower: int
    upper: int
    levels: tuple[Level, ...]

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("property name must be non-empty")
        if self.lower > self.upper:
            raise ValueError(f"property {self.name}: lower bound {self.lower} > upper bound {self.upper}")
        if not self.levels:
            raise ValueError(f"property {self.name}: no levels declared")
        seen: set[str] = set()
        for lvl in self.levels:
            if lvl.name in seen:
                raise ValueError(f"property {self.name}: duplicate level {lvl.name!r}")
            seen.add(lvl.name)
        ordered = sorted(self.levels, key=lambda lvl: (lvl.lo, lvl.hi))
        expected = self.lower
        for lvl in ordered:
            if lvl.lo > expected:
                raise ValueError(f"property {self.name}: gap in levels at {expected}..{lvl.lo - 1}")
            if lvl.lo < expected:
                raise ValueError(
                    f"property {self.name}: overlapping levels at {lvl.lo}..{min(expected - 1, lvl.hi)}"
                )
            expected = lvl.hi + 1
        if expected != self.upper + 1:
            if expected <= self.upper:
                raise ValueError(f"property {self.name}: gap in levels at {expected}..{self.upper}")
            raise ValueError(
                f"property {self.name}: levels exceed domain at {self.upper + 1}..{expected - 1}"
            )

    @property
    def level_names(self) -> tuple[str, ...]:
        return tuple(lvl.name for lvl in self.levels)

    @property
    def size(self) -> int:
        return self.upper - self.lower + 1

    def level_of(self, value: int) -> str:
        if not self.lower <= value <= self.upper:
            raise ValueError(f"value {value} out of bounds for {self.name} [{self.lower},{self.upper}]")
        for lvl in self.levels:
            if value in lvl:
                return lvl.name
        raise AssertionError("levels do not cover the domain")  # unreachable by construction


@dataclass(frozen=True)
class ContextSchema:
    properties: tuple[PropertySchema, ...]

    def __post_init__(self) -> None:
        if not self.properties:
            raise ValueError("a context schema needs at least one property")
        names = [p.name for p in self.properties]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate property names in {names}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.properties)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown property {name}") from None

    def get(self, name: str) -> Optional[PropertySchema]:
        for prop in self.properties:
            if prop.name == name:
                return prop
        return None

    def __getitem__(self, name: str) -> PropertySchema:
        prop = self.get(name)
        if prop is None:
            raise KeyError(f"unknown property {name}")
        return prop


@dataclass(frozen=True)
class ContextFlow:
    """A test case: context instances ordered by time.

    Construction does not check the instances; see :func:`validate_flow`.
    """

    instances: tuple[ContextInstance, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "instances", tuple(tuple(int(v) for v in inst) for inst in self.instances)
        )

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self) -> Iterator[ContextInstance]:
        return iter(self.instances)

    def __getitem__(self, i: int) -> ContextInstance:
        return self.instances[i]


# ---------------------------------------------------------------------------
# Policy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EventTrigger:
    property: str
    accepted_levels: tuple[str, ...]

    def __post_init__(self) -> None:
        levels = tuple(lvl.lower() for lvl in self.accepted_levels)
        if not levels:
            raise ValueError("a trigger needs at least one accepted level")
        if len(set(levels)) != len(levels):
            raise ValueError(f"duplicate accepted level in {levels}")
        object.__setattr__(self, "accepted_levels", levels)

    def accepts(self, level: str) -> bool:
        return level.lower() in self.accepted_levels


@dataclass(frozen=True)
class Condition:
    state_ref: str
    op: str
    value: int

    def __post_init__(self) -> None:
        if not self.state_ref:
            raise ValueError("condition must reference a state variable")
        if self.op not in COMPARATORS:
            raise ValueError(f"unknown comparison operator {self.op!r}")

    def holds(self, actual: int) -> bool:
        return COMPARATORS[self.op](actual, self.value)


@dataclass(frozen=True)
class Action:
    action_property: str
    new_value: str

    def __post_init__(self) -> None:
        if not self.action_property or not self.new_value:
            raise ValueError("action property and value must be non-empty")
        object.__setattr__(self, "new_value", self.new_value.lower())


@dataclass(frozen=True)
class Rule:
    trigger: EventTrigger
    condition: Condition
    action: Action
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class Policy:
    """Ordered rule set; textual order is firing priority."""

    rules: tuple[Rule, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "rules", tuple(self.rules))

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self) -> Iterator[Rule]:
        return iter(self.rules)

    def without(self, indices) -> Policy:
        drop = set(indices)
        return Policy(tuple(r for i, r in enumerate(self.rules) if i not in drop))

    def replace_rule(self, index: int, rule: Rule) -> Policy:
        rules = list(self.rules)
        rules[index] = rule
        return Policy(tuple(rules))


# ---------------------------------------------------------------------------
# System model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Expr:
    """``var + const``; ``var`` is ``None`` for a plain constant."""

    var: Optional[str]
    const: int = 0

    def evaluate(self, state: dict[str, int]) -> int:
        if self.var is None:
            return self.const
        return state[self.var] + self.const

    def __str__(self) -> str:
        if self.var is None:
            return str(self.const)
        if self.const == 0:
            return self.var
        sign = "+" if self.const > 0 else "-"
        return f"{self.var} {sign} {abs(self.const)}"


@dataclass(frozen=True)
class Assignment:
    target: str
    expr: Expr


@dataclass(frozen=True)
class Effect:
    action_property: str
    action_value: str
    assignments: tuple[Assignment, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "action_value", self.action_value.lower())


@dataclass(frozen=True)
class SystemModel:
    """Internal state variables and how reconfiguration requests change them.

    Requests without a matching effect leave the state untouched.
    """

    state_vars: tuple[tuple[str, int], ...] = ()
    effects: tuple[Effect, ...] = ()

    def __post_init__(self) -> None:
        names = [name for name, _ in self.state_vars]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate state variables in {names}")
        declared = set(names)
        for eff in self.effects:
            for asg in eff.assignments:
                for ref in (asg.target, asg.expr.var):
                    if ref is not None and ref not in declared:
                        raise ValueError(
                            f"effect {eff.action_property} '{eff.action_value}' references "
                            f"undeclared state variable {ref}"
                        )

    @property
    def var_names(self) -> frozenset[str]:
        return frozenset(name for name, _ in self.state_vars)

    def initial_state(self) -> dict[str, int]:
        return dict(self.state_vars)

    def assignments_for(self, action_property: str, value: str) -> tuple[Assignment, ...]:
        value = value.lower()
        out: list[Assignment] = []
        for eff in self.effects:
            if eff.action_property == action_property and eff.action_value == value:
                out.extend(eff.assignments)
        return tuple(out)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        return "ok" if self.ok else "\n".join(self.violations)


def validate_policy(policy: Policy, schema: ContextSchema, sysmodel: SystemModel) -> ValidationReport:
    problems = []
    declared_vars = sysmodel.var_names
    for i, rule in enumerate(policy.rules):
        where = f"rule {i}" + (f" ({rule.span})" if rule.span else "")
        prop = schema.get(rule.trigger.property)
        if prop is None:
            problems.append(f"{where}: unknown property {rule.trigger.property}")
        else:
            for lvl in rule.trigger.accepted_levels:
                if lvl not in prop.level_names:
                    problems.append(f"{where}: level '{lvl}' not declared for property {prop.name}")
        if rule.condition.state_ref not in declared_vars:
            problems.append(f"{where}: unknown state variable {rule.condition.state_ref}")
    return ValidationReport(tuple(problems))


def validate_flow(flow: ContextFlow, schema: ContextSchema) -> ValidationReport:
    problems = []
    arity = len(schema.properties)
    prev = None
    for i, inst in enumerate(flow.instances):
        if len(inst) != arity:
            problems.append(f"instance {i} has {len(inst)} values, expected {arity}")
        else:
            for prop, value in zip(schema.properties, inst):
                if not prop.lower <= value <= prop.upper:
                    problems.append(
                        f"value {value} out of bounds for {prop.name} "
                        f"[{prop.lower},{prop.upper}] at index {i}"
                    )
        if prev is not None and inst == prev:
            problems.append(f"consecutive instances identical at index {i}")
        prev = inst
    return ValidationReport(tuple(problems))
