"""Text <-> model bridge for policies, schemas, system models and flows.

Policy grammar (keywords case-insensitive, ``#`` starts a line comment)::

    policy := rule*
    rule   := "when" IDENT "is" QVAL ("or" QVAL)*
              "if" DOTTED CMP INT
              "then" "utility" "of" IDENT "is" QVAL
    QVAL   := "'" IDENT "'"
    CMP    := "==" | "!=" | "<=" | ">=" | "<" | ">"

Line breaks are ordinary whitespace; the canonical serialization puts each
clause on its own line and separates rules by one blank line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Protocol

from .model import (
    Action,
    Assignment,
    Condition,
    ContextFlow,
    ContextSchema,
    Effect,
    EventTrigger,
    Expr,
    Level,
    Policy,
    PropertySchema,
    Rule,
    SourceSpan,
    SystemModel,
    validate_flow,
)


class ParseError(ValueError):
    def __init__(self, message: str, span: Optional[SourceSpan] = None):
        self.message = message
        self.span = span
        if span is not None:
            message = f"line {span.line}, column {span.column}: {message}"
        super().__init__(message)


def _lines(text: str) -> list[str]:
    return text.replace("\r\n", "\n").replace("\r", "\n").split("\n")


# ---------------------------------------------------------------------------
# Policy tokenizer and parser
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, DOTTED, QVAL, CMP, INT, EOF
    text: str
    line: int
    column: int
    offset: int
    end: int

    @property
    def span(self) -> SourceSpan:
        return SourceSpan(self.line, self.column, max(len(self.text), 1))

    def describe(self) -> str:
        if self.kind == "EOF":
            return "end of input"
        if self.kind == "QVAL":
            return f"'{self.text}'"
        return repr(self.text)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\f\v]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<qval>'(?P<qbody>[^'\n]*)')
  | (?P<cmp>==|!=|<=|>=|<|>)
  | (?P<int>-?[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*)
  | (?P<bad>.)
    """,
    re.VERBOSE,
)
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def tokenize(text: str) -> list[Token]:
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    tokens = []
    line, line_start = 1, 0
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        col = m.start() - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("ws", "comment"):
            continue
        elif kind == "qval":
            body = m.group("qbody")
            if not _IDENT_RE.fullmatch(body):
                raise ParseError(f"invalid qualitative value '{body}'", SourceSpan(line, col, len(m.group())))
            tokens.append(Token("QVAL", body, line, col, m.start(), m.end()))
        elif kind == "cmp":
            tokens.append(Token("CMP", m.group(), line, col, m.start(), m.end()))
        elif kind == "int":
            tokens.append(Token("INT", m.group(), line, col, m.start(), m.end()))
        elif kind == "ident":
            word = m.group()
            tokens.append(Token("DOTTED" if "." in word else "IDENT", word, line, col, m.start(), m.end()))
        else:
            raise ParseError(f"unexpected character {m.group()!r}", SourceSpan(line, col, 1))
    tokens.append(Token("EOF", "", line, len(text) - line_start + 1, len(text), len(text)))
    return tokens


class _PolicyParser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def fail(self, expected: str):
        raise ParseError(f"expected {expected}, found {self.tok.describe()}", self.tok.span)

    def keyword(self, word: str) -> Token:
        if self.tok.kind == "IDENT" and self.tok.text.lower() == word:
            return self.advance()
        self.fail(f"'{word}'")

    def at_keyword(self, word: str) -> bool:
        return self.tok.kind == "IDENT" and self.tok.text.lower() == word

    def expect(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            self.fail(what)
        return self.advance()

    def policy(self) -> Policy:
        rules = []
        while self.tok.kind != "EOF":
            if not self.at_keyword("when"):
                self.fail("'when' or end of input")
            rules.append(self.rule())
        return Policy(tuple(rules))

    def rule(self) -> Rule:
        start = self.keyword("when")
        prop = self.expect("IDENT", "property name")
        self.keyword("is")
        levels = [self.expect("QVAL", "quoted level").text]
        while self.at_keyword("or"):
            self.advance()
            lvl = self.expect("QVAL", "quoted level")
            if lvl.text.lower() in (x.lower() for x in levels):
                raise ParseError(f"duplicate level '{lvl.text}'", lvl.span)
            levels.append(lvl.text)
        self.keyword("if")
        if self.tok.kind not in ("IDENT", "DOTTED"):
            self.fail("state variable")
        ref = self.advance()
        op = self.expect("CMP", "comparison operator")
        value = self.expect("INT", "integer")
        self.keyword("then")
        self.keyword("utility")
        self.keyword("of")
        target = self.expect("IDENT", "action property")
        self.keyword("is")
        new_value = self.expect("QVAL", "quoted value")
        last = self.tokens[self.pos - 1]
        span = SourceSpan(start.line, start.column, last.end - start.offset, end_line=last.line)
        return Rule(
            EventTrigger(prop.text, tuple(levels)),
            Condition(ref.text, op.text, int(value.text)),
            Action(target.text, new_value.text),
            span,
        )


def parse_policy(text: str) -> Policy:
    return _PolicyParser(text).policy()


def format_rule(rule: Rule) -> str:
    levels = " or ".join(f"'{lvl}'" for lvl in rule.trigger.accepted_levels)
    cond = rule.condition
    act = rule.action
    return (
        f"when {rule.trigger.property} is {levels}\n"
        f"if {cond.state_ref} {cond.op} {cond.value}\n"
        f"then utility of {act.action_property} is '{act.new_value}'"
    )


def serialize_policy(policy: Policy) -> str:
    if not policy.rules:
        return ""
    return "\n\n".join(format_rule(r) for r in policy.rules) + "\n"


class PolicyBridge(Protocol):
    """A concrete policy syntax. Mutation works on models only."""

    extension: str

    def parse(self, text: str) -> Policy: ...

    def serialize(self, policy: Policy) -> str: ...


class EcaTextBridge:
    extension = ".apl"

    def parse(self, text: str) -> Policy:
        return parse_policy(text)

    def serialize(self, policy: Policy) -> str:
        return serialize_policy(policy)


BRIDGES: dict[str, PolicyBridge] = {EcaTextBridge.extension: EcaTextBridge()}


def bridge_for(path: str) -> PolicyBridge:
    for ext, bridge in BRIDGES.items():
        if str(path).endswith(ext):
            return bridge
    return BRIDGES[".apl"]


# ---------------------------------------------------------------------------
# Schema
# ---------------------------------------------------------------------------

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_DOTTED = rf"{_IDENT}(?:\.{_IDENT})*"
_INT = r"-?\d+"

_PROPERTY_RE = re.compile(
    rf"^property\s+(?P<name>{_IDENT})\s*:\s*int\s*\[\s*(?P<lo>{_INT})\s*,\s*(?P<hi>{_INT})\s*\]"
    rf"\s*levels\s*\{{(?P<levels>[^}}]*)\}}\s*$",
    re.IGNORECASE,
)
_LEVEL_RE = re.compile(rf"^\s*(?P<name>{_IDENT})\s*:\s*\[\s*(?P<lo>{_INT})\s*,\s*(?P<hi>{_INT})\s*\]\s*$")


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_schema(text: str) -> ContextSchema:
    props = []
    for lineno, raw in enumerate(_lines(text), 1):
        line = _strip_comment(raw)
        if not line:
            continue
        span = SourceSpan(lineno, 1, len(raw))
        m = _PROPERTY_RE.match(line)
        if not m:
            raise ParseError("expected 'property NAME : int [LO,UP] levels { name: [a,b], ... }'", span)
        levels = []
        body = m.group("levels").strip()
        for item in re.split(r",(?![^\[]*\])", body) if body else []:
            lm = _LEVEL_RE.match(item)
            if not lm:
                raise ParseError(f"malformed level declaration {item.strip()!r}", span)
            try:
                levels.append(Level(lm.group("name"), int(lm.group("lo")), int(lm.group("hi"))))
            except ValueError as exc:
                raise ParseError(str(exc), span) from None
        try:
            props.append(PropertySchema(m.group("name"), int(m.group("lo")), int(m.group("hi")), tuple(levels)))
        except ValueError as exc:
            raise ParseError(str(exc), span) from None
    try:
        return ContextSchema(tuple(props))
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def serialize_schema(schema: ContextSchema) -> str:
    out = []
    for p in schema.properties:
        levels = ", ".join(f"{lvl.name}: [{lvl.lo},{lvl.hi}]" for lvl in p.levels)
        out.append(f"property {p.name} : int [{p.lower},{p.upper}] levels {{ {levels} }}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# System model
# ---------------------------------------------------------------------------

_STATE_RE = re.compile(rf"^state\s+(?P<name>{_DOTTED})\s*=\s*(?P<init>{_INT})$", re.IGNORECASE)
_EFFECT_RE = re.compile(
    rf"^effect\s+(?P<prop>{_IDENT})\s+'(?P<value>{_IDENT})'\s*=>\s*(?P<body>.+)$", re.IGNORECASE
)
_ASSIGN_RE = re.compile(
    rf"^\s*(?P<target>{_DOTTED})\s*:=\s*(?:(?P<const>{_INT})|(?P<var>{_DOTTED})(?:\s*(?P<sign>[+-])\s*(?P<k>\d+))?)\s*$"
)


def parse_system_model(text: str) -> SystemModel:
    state_vars: list[tuple[str, int]] = []
    effects: list[Effect] = []
    for lineno, raw in enumerate(_lines(text), 1):
        line = _strip_comment(raw)
        if not line:
            continue
        span = SourceSpan(lineno, 1, len(raw))
        if m := _STATE_RE.match(line):
            name = m.group("name")
            if any(name == n for n, _ in state_vars):
                raise ParseError(f"state variable {name} declared twice", span)
            state_vars.append((name, int(m.group("init"))))
            continue
        m = _EFFECT_RE.match(line)
        if not m:
            raise ParseError("expected 'state NAME = INT' or 'effect PROP 'VALUE' => NAME := EXPR'", span)
        declared = {n for n, _ in state_vars}
        assignments = []
        for part in m.group("body").split(","):
            am = _ASSIGN_RE.match(part)
            if not am:
                raise ParseError(f"malformed assignment {part.strip()!r}", span)
            if am.group("const") is not None:
                expr = Expr(None, int(am.group("const")))
            else:
                k = int(am.group("k") or 0)
                expr = Expr(am.group("var"), -k if am.group("sign") == "-" else k)
            for ref in (am.group("target"), expr.var):
                if ref is not None and ref not in declared:
                    raise ParseError(f"unknown state variable {ref}", span)
            assignments.append(Assignment(am.group("target"), expr))
        effects.append(Effect(m.group("prop"), m.group("value"), tuple(assignments)))
    return SystemModel(tuple(state_vars), tuple(effects))


def serialize_system_model(sysmodel: SystemModel) -> str:
    out = [f"state {name} = {init}" for name, init in sysmodel.state_vars]
    for eff in sysmodel.effects:
        body = ", ".join(f"{a.target} := {a.expr}" for a in eff.assignments)
        out.append(f"effect {eff.action_property} '{eff.action_value}' => {body}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Context flows
# ---------------------------------------------------------------------------


def parse_flow(text: str, schema: ContextSchema) -> ContextFlow:
    instances = []
    for lineno, raw in enumerate(_lines(text), 1):
        line = _strip_comment(raw)
        if not line:
            continue
        try:
            instances.append(tuple(int(v) for v in line.split(",")))
        except ValueError:
            raise ParseError(f"expected comma-separated integers, got {line!r}", SourceSpan(lineno, 1, len(raw))) from None
    flow = ContextFlow(tuple(instances))
    report = validate_flow(flow, schema)
    if not report.ok:
        raise ParseError("; ".join(report.violations))
    return flow


def serialize_flow(flow: ContextFlow) -> str:
    return "".join(",".join(str(v) for v in inst) + "\n" for inst in flow.instances)
