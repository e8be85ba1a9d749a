"""Mutation operators for action-based adaptation policies.

Environmental-completeness operators delete rules:

* ICP  ignore a context property (drop every rule triggered by it),
* ISV  ignore one (property, level) couple,
* IMV  ignore several couples over distinct properties at once.

Adaptation-correctness operators rewrite rules:

* SRA   swap the action values of two rules driving the same action property,
* MRCV  widen a ``<``/``<=``/``>``/``>=`` condition bound.

Operators work on :class:`~ecamut.model.Policy` models only; any concrete
syntax goes through a bridge in :mod:`ecamut.text`.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Optional

from .model import Action, Condition, ContextSchema, Policy


class Operator(str, enum.Enum):
    ICP = "ICP"
    ISV = "ISV"
    IMV = "IMV"
    SRA = "SRA"
    MRCV = "MRCV"

    @classmethod
    def parse_list(cls, text: str) -> list[Operator]:
        ops = []
        for name in text.split(","):
            name = name.strip().upper()
            if name:
                try:
                    ops.append(cls(name))
                except ValueError:
                    raise ValueError(f"unknown mutation operator {name!r}") from None
        return ops


ALL_OPERATORS = tuple(Operator)


@dataclass(frozen=True, eq=False)
class Mutant:
    id: str
    operator: Operator
    params: dict[str, Any]
    policy: Policy
    affected_rules: frozenset[int] = field(default_factory=frozenset)

    def describe(self) -> str:
        return f"{self.id} {self.operator.value} {json.dumps(self.params, sort_keys=True)}"


@dataclass(frozen=True)
class MutantSet:
    original: Policy
    mutants: tuple[Mutant, ...] = ()
    raw_count: int = 0

    @property
    def deduped_count(self) -> int:
        return len(self.mutants)

    def __len__(self) -> int:
        return len(self.mutants)

    def __iter__(self):
        return iter(self.mutants)

    def by_id(self, mutant_id: str) -> Mutant:
        for m in self.mutants:
            if m.id == mutant_id:
                return m
        raise KeyError(mutant_id)


def _ident(op: Operator, n: int) -> str:
    return f"{op.value}-{n:03d}"


def _executable_on(policy: Policy, couples: Iterable[tuple[str, str]]) -> list[int]:
    couples = list(couples)
    return [
        i
        for i, rule in enumerate(policy.rules)
        if any(rule.trigger.property == p and rule.trigger.accepts(v) for p, v in couples)
    ]


def gen_icp(policy: Policy, schema: ContextSchema) -> list[Mutant]:
    out = []
    for prop in schema.names:
        hit = [i for i, r in enumerate(policy.rules) if r.trigger.property == prop]
        if hit:
            out.append(
                Mutant(_ident(Operator.ICP, len(out) + 1), Operator.ICP, {"property": prop},
                       policy.without(hit), frozenset(hit))
            )
    return out


def gen_isv(policy: Policy, schema: ContextSchema) -> list[Mutant]:
    out = []
    for prop in schema.properties:
        for level in prop.level_names:
            hit = _executable_on(policy, [(prop.name, level)])
            if hit:
                out.append(
                    Mutant(_ident(Operator.ISV, len(out) + 1), Operator.ISV,
                           {"property": prop.name, "level": level}, policy.without(hit), frozenset(hit))
                )
    return out


def gen_imv(policy: Policy, schema: ContextSchema, n: int = 2) -> list[Mutant]:
    if n < 2:
        raise ValueError("IMV needs at least two couples")
    out = []
    for props in itertools.combinations(schema.properties, n):
        for levels in itertools.product(*(p.level_names for p in props)):
            couples = [(p.name, lvl) for p, lvl in zip(props, levels)]
            hit = _executable_on(policy, couples)
            if len({policy.rules[i].trigger.property for i in hit}) < 2:
                continue
            out.append(
                Mutant(_ident(Operator.IMV, len(out) + 1), Operator.IMV,
                       {"couples": [list(c) for c in couples]}, policy.without(hit), frozenset(hit))
            )
    return out


def swap_actions(policy: Policy, i: int, j: int) -> Policy:
    ri, rj = policy.rules[i], policy.rules[j]
    swapped = policy.replace_rule(i, replace(ri, action=Action(ri.action.action_property, rj.action.new_value)))
    return swapped.replace_rule(j, replace(rj, action=Action(rj.action.action_property, ri.action.new_value)))


def gen_sra(policy: Policy) -> list[Mutant]:
    out = []
    for i, j in itertools.combinations(range(len(policy.rules)), 2):
        ai, aj = policy.rules[i].action, policy.rules[j].action
        if ai.action_property != aj.action_property or ai.new_value == aj.new_value:
            continue
        out.append(
            Mutant(_ident(Operator.SRA, len(out) + 1), Operator.SRA,
                   {"rules": [i, j], "action_property": ai.action_property,
                    "values": [ai.new_value, aj.new_value]},
                   swap_actions(policy, i, j), frozenset((i, j)))
        )
    return out


def widened_bound(op: str, value: int) -> Optional[int]:
    """New bound for a condition value, or ``None`` if ``op`` is not ordered.

    Upper bounds (``<``, ``<=``) grow tenfold (0 becomes 10); lower bounds
    (``>``, ``>=``) shrink tenfold, falling back to ``value - 1`` when
    flooring leaves the value unchanged.
    """
    if op in ("<", "<="):
        return value * 10 if value != 0 else 10
    if op in (">", ">="):
        new = value // 10
        return new if new != value else value - 1
    return None


def gen_mrcv(policy: Policy) -> list[Mutant]:
    out = []
    for i, rule in enumerate(policy.rules):
        cond = rule.condition
        new = widened_bound(cond.op, cond.value)
        if new is None:
            continue
        mutated = replace(rule, condition=Condition(cond.state_ref, cond.op, new))
        out.append(
            Mutant(_ident(Operator.MRCV, len(out) + 1), Operator.MRCV,
                   {"rule": i, "op": cond.op, "old": cond.value, "new": new},
                   policy.replace_rule(i, mutated), frozenset((i,)))
        )
    return out


def enumerate_mutants(
    policy: Policy,
    schema: ContextSchema,
    operators: Iterable[Operator] = ALL_OPERATORS,
    imv_n: int = 2,
) -> MutantSet:
    """Run the selected operators in canonical order and collect their mutants.

    Identity mutants are dropped, and so are duplicates *within* one operator
    (first occurrence wins). Duplicates across operators are kept so that
    per-operator scores stay meaningful. Ids are renumbered per operator.
    """
    selected = set(operators)
    generators = {
        Operator.ICP: lambda: gen_icp(policy, schema),
        Operator.ISV: lambda: gen_isv(policy, schema),
        Operator.IMV: lambda: gen_imv(policy, schema, imv_n),
        Operator.SRA: lambda: gen_sra(policy),
        Operator.MRCV: lambda: gen_mrcv(policy),
    }
    kept: list[Mutant] = []
    raw = 0
    for op in ALL_OPERATORS:
        if op not in selected:
            continue
        seen = set()
        for m in generators[op]():
            raw += 1
            # canonical serialization is injective on models, so structural
            # equality is textual equality
            if m.policy == policy or m.policy in seen:
                continue
            seen.add(m.policy)
            kept.append(replace(m, id=_ident(op, len(seen))))
    return MutantSet(policy, tuple(kept), raw)


# ---------------------------------------------------------------------------
# On-disk layout: <outdir>/<id>.apl plus manifest.json
# ---------------------------------------------------------------------------

MANIFEST = "manifest.json"


def write_mutants(mutants: MutantSet, outdir: Path, bridge=None) -> Path:
    from .text import EcaTextBridge

    bridge = bridge or EcaTextBridge()
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    entries = []
    for m in mutants:
        fname = f"{m.id}{bridge.extension}"
        (outdir / fname).write_text(bridge.serialize(m.policy), encoding="utf-8")
        entries.append({
            "id": m.id,
            "operator": m.operator.value,
            "params": m.params,
            "affected_rules": sorted(m.affected_rules),
            "file": fname,
        })
    manifest = {
        "format": "ecamut.mutants/1",
        "raw_count": mutants.raw_count,
        "deduped_count": mutants.deduped_count,
        "mutants": entries,
    }
    path = outdir / MANIFEST
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def read_mutants(outdir: Path, original: Policy, bridge=None) -> MutantSet:
    from .text import EcaTextBridge

    bridge = bridge or EcaTextBridge()
    outdir = Path(outdir)
    manifest = json.loads((outdir / MANIFEST).read_text(encoding="utf-8"))
    mutants = []
    for entry in manifest["mutants"]:
        policy = bridge.parse((outdir / entry["file"]).read_text(encoding="utf-8"))
        mutants.append(
            Mutant(entry["id"], Operator(entry["operator"]), entry["params"], policy,
                   frozenset(entry["affected_rules"]))
        )
    return MutantSet(original, tuple(mutants), manifest.get("raw_count", len(mutants)))
