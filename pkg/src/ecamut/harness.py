"""Run suites against an original policy and its mutants, and score them.

A flow kills a mutant when the probe's per-step request lists differ
(compared step by step, in order, ignoring which rule index produced a
request). A suite's score counts the mutants killed by at least one of its
flows.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence, Union

from .engine import EngineState, Trace, run_flow, step
from .model import ContextFlow, ContextSchema, Policy, SystemModel, validate_policy
from .mutation import Mutant, MutantSet
from .testgen import TestSuite

log = logging.getLogger(__name__)

Observations = tuple[tuple[tuple[str, str], ...], ...]


def first_divergence(orig: Observations, mut: Observations) -> Optional[int]:
    if len(orig) != len(mut):
        raise ValueError(f"trace length mismatch: {len(orig)} vs {len(mut)}")
    for i, (a, b) in enumerate(zip(orig, mut)):
        if a != b:
            return i
    return None


def kills(orig: Trace, mut: Trace) -> Optional[int]:
    """First step at which the two traces' requests differ, or ``None``."""
    return first_divergence(orig.observations(), mut.observations())


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KillMatrix:
    mutant_ids: tuple[str, ...]
    operators: tuple[str, ...]
    columns: tuple[tuple[int, int], ...]  # (suite index, flow index)
    cells: tuple[tuple[Optional[int], ...], ...]  # first divergence step, None if alive

    def killed(self, row: int, col: int) -> bool:
        return self.cells[row][col] is not None

    def killed_by_suite(self, suite_index: int) -> set[int]:
        cols = [c for c, (s, _) in enumerate(self.columns) if s == suite_index]
        return {r for r, row in enumerate(self.cells) if any(row[c] is not None for c in cols)}


@dataclass(frozen=True)
class SuiteScore:
    killed: int
    total: int

    @property
    def fraction(self) -> Optional[Fraction]:
        return Fraction(self.killed, self.total) if self.total else None


@dataclass(frozen=True)
class AnalysisReport:
    per_suite: tuple[SuiteScore, ...]
    per_operator: dict[str, SuiteScore]
    survivors: tuple[tuple[str, str, dict], ...]  # (id, operator, params) killed by no suite
    total: int

    @property
    def min_score(self) -> Optional[Fraction]:
        fr = [s.fraction for s in self.per_suite if s.fraction is not None]
        return min(fr) if fr else None

    @property
    def max_score(self) -> Optional[Fraction]:
        fr = [s.fraction for s in self.per_suite if s.fraction is not None]
        return max(fr) if fr else None

    @property
    def avg_score(self) -> Optional[Fraction]:
        fr = [s.fraction for s in self.per_suite if s.fraction is not None]
        return sum(fr, Fraction(0)) / len(fr) if fr else None


class Analysis(NamedTuple):
    matrix: KillMatrix
    report: AnalysisReport


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


def _observe(policy: Policy, schema: ContextSchema, sysmodel: SystemModel, flows) -> list[Observations]:
    return [run_flow(policy, schema, sysmodel, flow).observations() for flow in flows]


def _mutant_row(task) -> tuple[Optional[int], ...]:
    policy, schema, sysmodel, flows, originals = task
    return tuple(
        first_divergence(orig, obs)
        for orig, obs in zip(originals, _observe(policy, schema, sysmodel, flows))
    )


def run_analysis(
    policy: Policy,
    schema: ContextSchema,
    sysmodel: SystemModel,
    suites: Sequence[TestSuite],
    mutants: MutantSet,
    parallelism: int = 1,
) -> Analysis:
    check = validate_policy(policy, schema, sysmodel)
    if not check.ok:
        raise ValueError(f"policy does not validate: {check}")
    columns = tuple((s, f) for s, suite in enumerate(suites) for f in range(len(suite.flows)))
    flows = [suites[s].flows[f] for s, f in columns]
    originals = _observe(policy, schema, sysmodel, flows)
    tasks = [(m.policy, schema, sysmodel, flows, originals) for m in mutants]
    log.info("running %d flows x %d mutants (jobs=%d)", len(flows), len(tasks), parallelism)
    if parallelism > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            rows = list(pool.map(_mutant_row, tasks))
    else:
        rows = [_mutant_row(t) for t in tasks]

    matrix = KillMatrix(
        tuple(m.id for m in mutants),
        tuple(m.operator.value for m in mutants),
        columns,
        tuple(rows),
    )
    total = len(mutants)
    per_suite = tuple(SuiteScore(len(matrix.killed_by_suite(s)), total) for s in range(len(suites)))
    ever_killed = {r for r, row in enumerate(rows) if any(c is not None for c in row)}
    per_operator: dict[str, SuiteScore] = {}
    for op in dict.fromkeys(matrix.operators):
        idx = [r for r, o in enumerate(matrix.operators) if o == op]
        per_operator[op] = SuiteScore(sum(r in ever_killed for r in idx), len(idx))
    survivors = tuple(
        (m.id, m.operator.value, m.params) for r, m in enumerate(mutants) if r not in ever_killed
    )
    return Analysis(matrix, AnalysisReport(per_suite, per_operator, survivors, total))


# ---------------------------------------------------------------------------
# Bounded exhaustive search
# ---------------------------------------------------------------------------


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Verdict:
    killable: bool
    max_len: int
    witness: Optional[ContextFlow] = None
    divergence_step: Optional[int] = None

    def __str__(self) -> str:
        if self.killable:
            inst = " ".join("<" + ",".join(map(str, i)) + ">" for i in self.witness)
            return f"killable: witness {inst} diverges at step {self.divergence_step}"
        return f"equivalent up to length {self.max_len}"


def brute_force_survivor_check(
    policy: Policy,
    mutant: Union[Policy, Mutant],
    schema: ContextSchema,
    sysmodel: SystemModel,
    max_len: int,
    budget: int = 10**7,
) -> Verdict:
    """Search every valid flow of length <= ``max_len`` for one that kills.

    Returns the shortest killing flow, lexicographically first among those
    of that length. Prefixes that reach an identical pair of engine states
    behave identically from then on, so only the first of them is extended.
    """
    if isinstance(mutant, Mutant):
        mutant = mutant.policy
    space = 1
    for prop in schema.properties:
        space *= prop.size
    if space**max_len > budget:
        raise BudgetExceeded(f"{space}^{max_len} flows exceed the budget of {budget}")

    instances = list(itertools.product(*(range(p.lower, p.upper + 1) for p in schema.properties)))
    start = EngineState.initial(sysmodel)
    frontier = [((), start, start)]
    seen = {(start.key(), start.key())}
    for length in range(1, max_len + 1):
        nxt = []
        for prefix, s_orig, s_mut in frontier:
            for inst in instances:
                if prefix and inst == prefix[-1]:
                    continue
                o_state, o_step = step(policy, schema, sysmodel, s_orig, inst)
                m_state, m_step = step(mutant, schema, sysmodel, s_mut, inst)
                flow = prefix + (inst,)
                if o_step.observations() != m_step.observations():
                    return Verdict(True, max_len, ContextFlow(flow), length - 1)
                key = (o_state.key(), m_state.key())
                if key not in seen:
                    seen.add(key)
                    nxt.append((flow, o_state, m_state))
        frontier = nxt
        if not frontier:
            break
    return Verdict(False, max_len)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def _fmt_score(score: Optional[Fraction], total: int) -> str:
    if score is None:
        return "n/a"
    killed = score * total
    num = str(killed.numerator) if killed.denominator == 1 else f"{float(killed):.1f}"
    return f"{num}/{total} ≈ {round(float(score) * 100)}%"


def _text_report(rep: AnalysisReport) -> str:
    rows = [
        ("Test suite", "Random"),
        ("minimum mutation score", _fmt_score(rep.min_score, rep.total)),
        ("maximum mutation score", _fmt_score(rep.max_score, rep.total)),
        ("average mutation score", _fmt_score(rep.avg_score, rep.total)),
    ]
    w0 = max(len(r[0]) for r in rows)
    w1 = max(len(r[1]) for r in rows)
    rule = f"+-{'-' * w0}-+-{'-' * w1}-+"
    out = [rule, f"| {rows[0][0]:<{w0}} | {rows[0][1]:^{w1}} |", rule.replace("-", "=")]
    for label, value in rows[1:]:
        out.append(f"| {label:<{w0}} | {value:^{w1}} |")
        out.append(rule)
    out.append("")
    out.append(f"suites: {len(rep.per_suite)}  mutants: {rep.total}")
    if rep.per_operator:
        out.append("per operator (killed by any suite):")
        for op, sc in rep.per_operator.items():
            out.append(f"  {op:<5} {sc.killed}/{sc.total}")
    out.append(f"survivors: {len(rep.survivors)}")
    for mid, op, params in rep.survivors:
        out.append(f"  {mid} {op} {json.dumps(params, sort_keys=True)}")
    return "\n".join(out) + "\n"


def _score_json(score: Optional[Fraction]):
    if score is None:
        return None
    return {"numerator": score.numerator, "denominator": score.denominator, "value": float(score)}


def to_dict(analysis: Analysis) -> dict:
    matrix, rep = analysis
    return {
        "format": "ecamut.analysis/1",
        "mutants": rep.total,
        "min_score": _score_json(rep.min_score),
        "max_score": _score_json(rep.max_score),
        "avg_score": _score_json(rep.avg_score),
        "per_suite": [{"killed": s.killed, "total": s.total} for s in rep.per_suite],
        "per_operator": {op: {"killed": s.killed, "total": s.total} for op, s in rep.per_operator.items()},
        "survivors": [{"id": i, "operator": op, "params": p} for i, op, p in rep.survivors],
        "kill_matrix": {
            "mutants": list(matrix.mutant_ids),
            "operators": list(matrix.operators),
            "columns": [list(c) for c in matrix.columns],
            "first_divergence": [list(row) for row in matrix.cells],
        },
    }


CSV_FIELDS = ["mutant_id", "operator", "suite", "flow", "killed", "first_divergence_step"]


def _csv_report(matrix: KillMatrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for mid, op, row in zip(matrix.mutant_ids, matrix.operators, matrix.cells):
        for (s, f), cell in zip(matrix.columns, row):
            writer.writerow([mid, op, s, f, int(cell is not None), "" if cell is None else cell])
    return buf.getvalue()


def report(analysis: Analysis, fmt: str = "text") -> str:
    if fmt == "text":
        return _text_report(analysis.report)
    if fmt == "json":
        return json.dumps(to_dict(analysis), indent=2) + "\n"
    if fmt == "csv":
        return _csv_report(analysis.matrix)
    raise ValueError(f"unknown report format {fmt!r}")
