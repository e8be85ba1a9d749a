"""Seeded random context flows and test suites.

Randomness comes from SplitMix64 (Steele, Lea & Flood 2014) so generated
fixtures are reproducible from the seed alone in any language:

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    return z ^ (z >> 31)                       (all arithmetic mod 2**64)

Bounded integers in ``[lo, hi]`` use rejection: with ``n = hi - lo + 1``,
draw ``x`` until ``x < 2**64 - (2**64 % n)`` and return ``lo + x % n``.
An instance draws its values in schema property order; a flow redraws a
whole instance while it equals its predecessor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .model import ContextFlow, ContextInstance, ContextSchema
from .text import parse_flow, serialize_flow

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def randint(self, lo: int, hi: int) -> int:
        if lo > hi:
            raise ValueError(f"empty range [{lo},{hi}]")
        n = hi - lo + 1
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return lo + x % n


def random_instance(schema: ContextSchema, rng: SplitMix64) -> ContextInstance:
    return tuple(rng.randint(p.lower, p.upper) for p in schema.properties)


def random_flow(schema: ContextSchema, length: int, rng: SplitMix64) -> ContextFlow:
    if length < 0:
        raise ValueError("flow length must be non-negative")
    if length >= 2 and all(p.size == 1 for p in schema.properties):
        raise ValueError("every property has a single value; no flow longer than 1 exists")
    instances: list[ContextInstance] = []
    for _ in range(length):
        inst = random_instance(schema, rng)
        while instances and inst == instances[-1]:
            inst = random_instance(schema, rng)
        instances.append(inst)
    return ContextFlow(tuple(instances))


@dataclass(frozen=True)
class TestSuite:
    __test__ = False  # not a pytest class

    flows: tuple[ContextFlow, ...]
    seed: int
    flow_length: int
    flow_count: int

    def __len__(self) -> int:
        return len(self.flows)


def random_suite(schema: ContextSchema, flow_count: int, flow_length: int, seed: int) -> TestSuite:
    rng = SplitMix64(seed)
    flows = tuple(random_flow(schema, flow_length, rng) for _ in range(flow_count))
    return TestSuite(flows, seed, flow_length, flow_count)


SUITE_INDEX = "suite.json"


def write_suite(suite: TestSuite, outdir: Path) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = []
    for i, flow in enumerate(suite.flows):
        name = f"flow-{i:03d}.flow"
        (outdir / name).write_text(serialize_flow(flow), encoding="utf-8")
        files.append(name)
    index = {
        "format": "ecamut.suite/1",
        "prng": "splitmix64",
        "seed": suite.seed,
        "flow_count": suite.flow_count,
        "flow_length": suite.flow_length,
        "flows": files,
    }
    path = outdir / SUITE_INDEX
    path.write_text(json.dumps(index, indent=2) + "\n", encoding="utf-8")
    return path


def read_suite(suite_dir: Path, schema: ContextSchema) -> TestSuite:
    suite_dir = Path(suite_dir)
    index = json.loads((suite_dir / SUITE_INDEX).read_text(encoding="utf-8"))
    flows = tuple(parse_flow((suite_dir / f).read_text(encoding="utf-8"), schema) for f in index["flows"])
    return TestSuite(flows, index["seed"], index["flow_length"], index["flow_count"])


def find_suites(paths, schema: ContextSchema) -> list[TestSuite]:
    """Load suites from directories that either are suites or contain them."""
    suites = []
    for path in map(Path, paths):
        if (path / SUITE_INDEX).exists():
            suites.append(read_suite(path, schema))
            continue
        children = sorted(p for p in path.iterdir() if (p / SUITE_INDEX).exists())
        if not children:
            raise FileNotFoundError(f"no {SUITE_INDEX} in {path} or its subdirectories")
        suites.extend(read_suite(child, schema) for child in children)
    return suites
