import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecamut.model import Action, Condition, EventTrigger, Policy, Rule
from ecamut.mutation import (
    Operator,
    enumerate_mutants,
    gen_icp,
    gen_imv,
    gen_isv,
    gen_mrcv,
    gen_sra,
    read_mutants,
    swap_actions,
    widened_bound,
    write_mutants,
)
from ecamut.text import parse_policy, serialize_policy


def _find(mutants, **params):
    hits = [m for m in mutants if all(m.params.get(k) == v for k, v in params.items())]
    assert len(hits) == 1, hits
    return hits[0]


# excerpt rule indices: 0 = cache high/medium, 1 = cache low, 2 = LOAD high, 3 = LOAD low


def test_icp_requestdensity_follows_definition(excerpt, schema):
    m = _find(gen_icp(excerpt, schema), property="requestdensity")
    assert m.affected_rules == {0, 1}
    assert m.policy.rules == excerpt.rules[2:]


def test_icp_count(excerpt, schema):
    assert [m.params["property"] for m in gen_icp(excerpt, schema)] == ["LOAD", "requestdensity"]


def test_icp_single_property_policy_empties(excerpt, schema):
    only_load = Policy(excerpt.rules[2:])
    (m,) = gen_icp(only_load, schema)
    assert m.policy == Policy()


def test_isv_load_high(excerpt, schema):
    m = _find(gen_isv(excerpt, schema), property="LOAD", level="high")
    assert m.affected_rules == {2}
    assert m.policy.rules == (excerpt.rules[0], excerpt.rules[1], excerpt.rules[3])


def test_isv_duplicates_collapse(excerpt, schema):
    raw = gen_isv(excerpt, schema)
    assert len(raw) == 5
    hi = _find(raw, property="requestdensity", level="high")
    med = _find(raw, property="requestdensity", level="medium")
    assert hi.policy == med.policy
    kept = enumerate_mutants(excerpt, schema, {Operator.ISV})
    assert kept.raw_count == 5 and kept.deduped_count == 4


def test_isv_unmatched_couple_yields_nothing(excerpt, schema):
    policy = Policy(excerpt.rules[2:3])  # only LOAD 'high'
    assert [m.params for m in gen_isv(policy, schema)] == [{"property": "LOAD", "level": "high"}]


def test_imv_example(excerpt, schema):
    m = _find(gen_imv(excerpt, schema), couples=[["LOAD", "high"], ["requestdensity", "low"]])
    assert m.affected_rules == {1, 2}
    assert m.policy.rules == (excerpt.rules[0], excerpt.rules[3])


def test_imv_high_high(excerpt, schema):
    m = _find(gen_imv(excerpt, schema), couples=[["LOAD", "high"], ["requestdensity", "high"]])
    assert m.affected_rules == {0, 2}


def test_imv_needs_two_properties(excerpt, schema):
    # no requestdensity rules: every couple set only hits LOAD rules
    assert gen_imv(Policy(excerpt.rules[2:]), schema) == []
    with pytest.raises(ValueError):
        gen_imv(excerpt, schema, n=1)


def test_imv_counts(excerpt, schema):
    assert len(gen_imv(excerpt, schema)) == 6
    assert gen_imv(excerpt, schema, n=3) == []  # only two properties


def test_sra(excerpt):
    muts = gen_sra(excerpt)
    assert [m.params["rules"] for m in muts] == [[0, 1], [2, 3]]
    m = muts[1]
    assert m.policy.rules[2].action == Action("addFileServer", "low")
    assert m.policy.rules[3].action == Action("addFileServer", "high")
    assert m.policy.rules[:2] == excerpt.rules[:2]


def test_sra_identical_values_no_mutant(excerpt):
    twin = Policy((excerpt.rules[2], excerpt.rules[2]))
    assert gen_sra(twin) == []


@pytest.mark.parametrize(
    "op, value, expected",
    [("<=", 10, 100), ("<", 10, 100), ("<", 0, 10), (">", 10, 1), (">=", 10, 1),
     (">", 5, 0), (">", 0, -1), (">", 1, 0), ("==", 0, None), ("!=", 3, None)],
)
def test_widened_bound(op, value, expected):
    assert widened_bound(op, value) == expected


def test_mrcv_excerpt(excerpt):
    muts = gen_mrcv(excerpt)
    assert [m.params["rule"] for m in muts] == [2, 3]
    assert muts[0].policy.rules[2].condition == Condition("FileServers.size", "<=", 100)
    assert "FileServers.size <= 100" in serialize_policy(muts[0].policy).split("\n\n")[2]


def test_mrcv_greater_than():
    rule = parse_policy("when p is 'a' if x > 10 then utility of y is 'z'")
    (m,) = gen_mrcv(rule)
    assert m.policy.rules[0].condition.value == 1


def test_mrcv_skips_equality(excerpt):
    assert gen_mrcv(Policy(excerpt.rules[:2])) == []


def test_enumerate_excerpt_fixture(excerpt, schema):
    ms = enumerate_mutants(excerpt, schema)
    # hand enumeration: ICP 2, ISV 5 (4 distinct), IMV 6 (4 distinct), SRA 2, MRCV 2
    assert ms.raw_count == 17
    assert ms.deduped_count == 14
    assert [m.id for m in ms] == [
        "ICP-001", "ICP-002",
        "ISV-001", "ISV-002", "ISV-003", "ISV-004",
        "IMV-001", "IMV-002", "IMV-003", "IMV-004",
        "SRA-001", "SRA-002",
        "MRCV-001", "MRCV-002",
    ]


def test_enumerate_empty_and_subset(excerpt, schema):
    assert len(enumerate_mutants(Policy(), schema)) == 0
    sra = enumerate_mutants(excerpt, schema, {Operator.SRA})
    assert [m.operator for m in sra] == [Operator.SRA, Operator.SRA]


@pytest.mark.invariant
def test_enumerate_deterministic(webserver, schema):
    a = enumerate_mutants(webserver, schema)
    b = enumerate_mutants(webserver, schema)
    assert [(m.id, m.params, m.policy) for m in a] == [(m.id, m.params, m.policy) for m in b]


def test_manifest_round_trip(tmp_path, excerpt, schema):
    ms = enumerate_mutants(excerpt, schema)
    write_mutants(ms, tmp_path)
    assert (tmp_path / "ISV-001.apl").exists()
    back = read_mutants(tmp_path, excerpt)
    assert [(m.id, m.operator, m.params, m.policy, m.affected_rules) for m in back] == [
        (m.id, m.operator, m.params, m.policy, m.affected_rules) for m in ms
    ]
    assert back.raw_count == ms.raw_count


def test_operator_list_parsing():
    assert Operator.parse_list("icp, SRA") == [Operator.ICP, Operator.SRA]
    with pytest.raises(ValueError):
        Operator.parse_list("xyz")


# ---------------------------------------------------------------------------
# Invariants over random policies on the web-server schema
# ---------------------------------------------------------------------------

_levels = {"LOAD": ["low", "high"], "requestdensity": ["low", "medium", "high"]}


@st.composite
def ws_rules(draw):
    prop = draw(st.sampled_from(sorted(_levels)))
    levels = draw(st.lists(st.sampled_from(_levels[prop]), min_size=1, unique=True))
    return Rule(
        EventTrigger(prop, tuple(levels)),
        Condition(draw(st.sampled_from(["cacheHandler.size", "FileServers.size"])),
                  draw(st.sampled_from(["==", "!=", "<", "<=", ">", ">="])), draw(st.integers(0, 20))),
        Action(draw(st.sampled_from(["addCache", "addFileServer"])), draw(st.sampled_from(["low", "high"]))),
    )


ws_policies = st.lists(ws_rules(), max_size=7).map(lambda rs: Policy(tuple(rs)))


@pytest.mark.invariant
@given(policy=ws_policies)
@settings(max_examples=150, deadline=None)
def test_every_mutant_differs_from_original(policy, schema):
    ms = enumerate_mutants(policy, schema)
    original = serialize_policy(policy)
    for m in ms:
        assert serialize_policy(m.policy) != original
        assert m.affected_rules
    for op in Operator:
        texts = [serialize_policy(m.policy) for m in ms if m.operator is op]
        assert len(texts) == len(set(texts))
    assert ms.deduped_count <= ms.raw_count


@pytest.mark.invariant
@given(policy=ws_policies)
@settings(max_examples=150, deadline=None)
def test_icp_is_filter(policy, schema):
    for m in gen_icp(policy, schema):
        p = m.params["property"]
        assert m.policy.rules == tuple(r for r in policy.rules if r.trigger.property != p)


@pytest.mark.invariant
@given(policy=ws_policies)
@settings(max_examples=150, deadline=None)
def test_isv_deletes_exactly_matching(policy, schema):
    for m in gen_isv(policy, schema):
        p, v = m.params["property"], m.params["level"]
        doomed = {i for i, r in enumerate(policy.rules) if r.trigger.property == p and v in r.trigger.accepted_levels}
        assert m.affected_rules == doomed
        assert m.policy.rules == tuple(r for i, r in enumerate(policy.rules) if i not in doomed)


@pytest.mark.invariant
@given(policy=ws_policies)
@settings(max_examples=150, deadline=None)
def test_sra_involution(policy):
    for m in gen_sra(policy):
        i, j = m.params["rules"]
        assert swap_actions(m.policy, i, j) == policy


@pytest.mark.invariant
@given(policy=ws_policies)
@settings(max_examples=150, deadline=None)
def test_mrcv_changes_one_integer(policy):
    for m in gen_mrcv(policy):
        assert len(m.policy) == len(policy)
        diffs = [(a, b) for a, b in zip(policy.rules, m.policy.rules) if a != b]
        assert len(diffs) == 1
        a, b = diffs[0]
        assert (a.trigger, a.action) == (b.trigger, b.action)
        assert (a.condition.state_ref, a.condition.op) == (b.condition.state_ref, b.condition.op)
        assert a.condition.value != b.condition.value


@pytest.mark.invariant
@given(policy=ws_policies)
@settings(max_examples=100, deadline=None)
def test_imv_spans_two_properties(policy, schema):
    for m in gen_imv(policy, schema):
        props = {policy.rules[i].trigger.property for i in m.affected_rules}
        assert len(props) >= 2
