"""Command-line entry point: ``ecamut <command> ...``.

Exit codes: 0 success, 1 validation or syntax error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from . import harness, mutation, testgen, text
from .engine import run_flow
from .model import ContextSchema, Policy, SystemModel, validate_policy

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2


class InvalidInput(Exception):
    """Input parsed but failed validation."""


def shipped(name: str) -> Path:
    """Path of a data file bundled with the package (e.g. ``webserver.apl``)."""
    return Path(str(resources.files("ecamut") / "data" / name))


def _read(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_schema(path) -> ContextSchema:
    return text.parse_schema(_read(path))


def _load_sys(path) -> SystemModel:
    return text.parse_system_model(_read(path))


def _load_policy(path, schema: ContextSchema, sysmodel: Optional[SystemModel] = None) -> Policy:
    policy = text.bridge_for(path).parse(_read(path))
    report = validate_policy(policy, schema, sysmodel or _permissive(policy))
    if not report.ok:
        raise InvalidInput(f"{path}:\n{report}")
    return policy


def _permissive(policy: Policy) -> SystemModel:
    # lets `mutate` check triggers without a system model
    refs = dict.fromkeys(r.condition.state_ref for r in policy.rules)
    return SystemModel(tuple((ref, 0) for ref in refs))


def _write_or_print(content: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(content, encoding="utf-8")
    else:
        sys.stdout.write(content)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    schema, sysmodel = _load_schema(args.schema), _load_sys(args.sys)
    policy = text.bridge_for(args.policy).parse(_read(args.policy))
    report = validate_policy(policy, schema, sysmodel)
    if report.ok:
        print(f"{args.policy}: ok ({len(policy)} rules)")
        return EXIT_OK
    for v in report.violations:
        print(f"{args.policy}: {v}")
    return EXIT_INVALID


def cmd_mutate(args) -> int:
    schema = _load_schema(args.schema)
    policy = _load_policy(args.policy, schema)
    ops = mutation.Operator.parse_list(args.ops)
    mutants = mutation.enumerate_mutants(policy, schema, ops, args.imv_n)
    mutation.write_mutants(mutants, Path(args.out), text.bridge_for(args.policy))
    print(f"{mutants.deduped_count} mutants ({mutants.raw_count} before deduplication) -> {args.out}")
    for m in mutants:
        print(f"  {m.describe()}")
    return EXIT_OK


def cmd_run(args) -> int:
    schema, sysmodel = _load_schema(args.schema), _load_sys(args.sys)
    policy = _load_policy(args.policy, schema, sysmodel)
    flow = text.parse_flow(_read(args.flow), schema)
    trace = run_flow(policy, schema, sysmodel, flow)
    rendered = trace.to_json() + "\n" if args.trace_format == "json" else trace.to_text()
    _write_or_print(rendered, args.trace_out)
    return EXIT_OK


def cmd_gen(args) -> int:
    schema = _load_schema(args.schema)
    out = Path(args.out)
    for k in range(args.suites):
        seed = args.seed + k
        suite = testgen.random_suite(schema, args.flows, args.len, seed)
        target = out if args.suites == 1 else out / f"suite-{k:03d}"
        testgen.write_suite(suite, target)
    print(f"{args.suites} suite(s) x {args.flows} flows x {args.len} instances -> {out}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    schema, sysmodel = _load_schema(args.schema), _load_sys(args.sys)
    policy = _load_policy(args.policy, schema, sysmodel)
    mutants = mutation.read_mutants(Path(args.mutants), policy, text.bridge_for(args.policy))
    suites = testgen.find_suites(args.suites, schema)
    analysis = harness.run_analysis(policy, schema, sysmodel, suites, mutants, args.jobs)
    _write_or_print(harness.report(analysis, args.format), args.out)
    return EXIT_OK


def cmd_witness(args) -> int:
    schema, sysmodel = _load_schema(args.schema), _load_sys(args.sys)
    policy = _load_policy(args.policy, schema, sysmodel)
    mutant = _load_policy(args.mutant, schema, sysmodel)
    verdict = harness.brute_force_survivor_check(policy, mutant, schema, sysmodel, args.max_len, args.budget)
    print(verdict)
    if verdict.killable:
        sys.stdout.write(text.serialize_flow(verdict.witness))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecamut",
        description="Mutation testing for event-condition-action adaptation policies.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def inputs(p, sysmodel=True):
        p.add_argument("--schema", default=str(shipped("webserver.ctx")),
                       help="context schema (.ctx); defaults to the bundled web-server schema")
        if sysmodel:
            p.add_argument("--sys", default=str(shipped("webserver.sys")),
                           help="system model (.sys); defaults to the bundled web-server model")

    p = sub.add_parser("validate", help="check a policy against a schema and system model")
    p.add_argument("policy")
    inputs(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("mutate", help="generate mutants into a directory")
    p.add_argument("policy")
    inputs(p, sysmodel=False)
    p.add_argument("--ops", default="icp,isv,imv,sra,mrcv", help="comma-separated operators")
    p.add_argument("--imv-n", type=int, default=2, help="couples per IMV mutant (default 2)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mutate)

    p = sub.add_parser("run", help="simulate one flow and print the trace")
    p.add_argument("policy")
    inputs(p)
    p.add_argument("--flow", required=True)
    p.add_argument("--trace-out")
    p.add_argument("--trace-format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("gen", help="generate seeded random test suites")
    inputs(p, sysmodel=False)
    p.add_argument("--flows", type=int, default=10, help="flows per suite")
    p.add_argument("--len", type=int, default=20, help="instances per flow")
    p.add_argument("--seed", type=int, required=True, help="seed of the first suite")
    p.add_argument("--suites", type=int, default=1,
                   help="number of suites; suite k uses seed+k and goes to OUT/suite-kkk")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("analyze", help="score suites against mutants")
    p.add_argument("policy")
    inputs(p)
    p.add_argument("--mutants", required=True, help="directory written by `mutate`")
    p.add_argument("--suites", required=True, nargs="+",
                   help="suite directories, or directories containing them")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("witness", help="exhaustively search for a flow that kills a mutant")
    p.add_argument("policy")
    p.add_argument("mutant")
    inputs(p)
    p.add_argument("--max-len", type=int, required=True)
    p.add_argument("--budget", type=int, default=10**7,
                   help="refuse when (domain size)^max-len exceeds this")
    p.set_defaults(func=cmd_witness)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (text.ParseError, InvalidInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
