import pytest
from hypothesis import given, strategies as st

from entcert.partitions import (Partition, StructureSpec, enumerate_partitions, family, free_part_order,
                                refines, squareability_of, stirling2)
from oracles import BELL, brute_set_partitions, stirling2_formula


def as_sets(p: Partition):
    return frozenset(frozenset(x) for x in p.parts)


@pytest.mark.parametrize("n", range(1, 7))
def test_enumeration_matches_brute_force(n):
    got = enumerate_partitions(n)
    assert len(got) == BELL[n]
    assert len(set(got)) == len(got)
    assert {as_sets(p) for p in got} == brute_set_partitions(n)


@pytest.mark.parametrize("n", range(7, 10))
def test_enumeration_counts_bell_numbers(n):
    assert len(enumerate_partitions(n)) == BELL[n]


@given(st.integers(1, 10), st.integers(1, 10))
def test_stirling_numbers(n, k):
    assert stirling2(n, k) == stirling2_formula(n, k)


@pytest.mark.parametrize("n", range(1, 7))
def test_counts_by_number_of_parts(n):
    counts = {}
    for p in enumerate_partitions(n):
        counts[len(p)] = counts.get(len(p), 0) + 1
    assert counts == {k: stirling2(n, k) for k in range(1, n + 1)}


def brute_refines(a: Partition, b: Partition) -> bool:
    return all(any(set(x) <= set(y) for y in b.parts) for x in a.parts)


@pytest.mark.parametrize("n", [3, 4])
def test_refinement_matches_definition(n):
    allp = enumerate_partitions(n)
    for a in allp:
        for b in allp:
            assert refines(a, b) == brute_refines(a, b)


def specs(n):
    out = [StructureSpec("part", n, k) for k in range(1, n + 1)]
    out += [StructureSpec("prod", n, h) for h in range(1, n + 1)]
    out += [StructureSpec("sq", n, q) for q in range(n, n * n + 1)]
    if n == 5:
        out += [StructureSpec("tough", 5, 1), StructureSpec("tough", 5, 2)]
    if n == 4:
        out += [StructureSpec("custom", 4, 0, ("2|2", "3|1"))]
    return out


def direct_membership(spec: StructureSpec, p: Partition) -> bool:
    if spec.kind == "part":
        return len(p) >= spec.param
    if spec.kind == "prod":
        return max(p.sizes) <= spec.param
    if spec.kind == "sq":
        return sum(s * s for s in p.sizes) <= spec.param
    types = {tuple(sorted(map(int, t.split("|")), reverse=True)) for t in
             ({1: ["4|1"], 2: ["4|1", "3|2"]}[spec.param] if spec.kind == "tough" else spec.types)}
    gens = [g for g in enumerate_partitions(spec.n) if tuple(sorted(g.sizes, reverse=True)) in types]
    return any(brute_refines(p, g) for g in gens)


@pytest.mark.parametrize("n", range(2, 7))
def test_families_are_antichains_with_correct_closure(n):
    allp = enumerate_partitions(n)
    for spec in specs(n):
        fam = family(spec)
        members = fam.maximal_partitions
        assert members, spec
        for a in members:
            for b in members:
                if a != b:
                    assert not brute_refines(a, b), (spec, a, b)
        for p in allp:
            assert fam.allows(p) == direct_membership(spec, p), (spec, p)


@pytest.mark.parametrize("text,n,counts", [
    ("full-sep", 4, {"1|1|1|1": 1}),
    ("part:3", 4, {"2|1|1": 6}),
    ("part:2", 4, {"3|1": 4, "2|2": 3}),
    ("prod:2", 4, {"2|2": 3}),
    ("part:4", 5, {"2|1|1|1": 10}),
    ("prod:3", 5, {"3|2": 10}),
    ("sq:7", 5, {"2|1|1|1": 10}),
    ("sq:9", 5, {"2|2|1": 15}),
    ("sq:11", 5, {"3|1|1": 10, "2|2|1": 15}),
    ("sq:13", 5, {"3|2": 10}),
    ("sq:17", 5, {"4|1": 5, "3|2": 10}),
    ("tough:1", 5, {"4|1": 5}),
    ("tough:2", 5, {"4|1": 5, "3|2": 10}),
    ("custom:3|1,2|2", 4, {"3|1": 4, "2|2": 3}),
])
def test_known_family_shapes(text, n, counts):
    assert family(StructureSpec.parse(text, n)).type_counts == counts


@pytest.mark.parametrize("text,n", [
    ("part:0", 4), ("part:5", 4), ("prod:0", 3), ("sq:3", 4), ("sq:17", 4), ("tough:1", 4),
    ("tough:3", 5), ("custom:3|2", 4), ("custom:", 4), ("blob:2", 4), ("part:x", 4),
])
def test_invalid_structures_raise(text, n):
    with pytest.raises(ValueError):
        StructureSpec.parse(text, n)


def test_full_sep_is_part_n():
    assert StructureSpec.parse("full-sep", 6) == StructureSpec("part", 6, 6)
    assert str(StructureSpec.parse("full-sep", 3)) == "part:3"


partitions_st = st.integers(1, 11).flatmap(lambda n: st.sampled_from(enumerate_partitions(min(n, 7))))


@given(partitions_st)
def test_partition_string_round_trip(p):
    assert Partition.parse(str(p)) == p
    assert squareability_of(p) == sum(s * s for s in p.sizes)


def test_partition_string_with_many_parties():
    p = Partition.singletons(11)
    assert str(p) == "1|2|3|4|5|6|7|8|9|10|11"
    assert Partition.parse(str(p)) == p
    q = Partition(((0, 10), tuple(range(1, 10))))
    assert Partition.parse(str(q)) == q


def test_partition_validation():
    with pytest.raises(ValueError):
        Partition(((0,), (2,)))
    with pytest.raises(ValueError):
        Partition(((0, 1), (1,)))


def test_free_part_order_starts_with_largest():
    p = Partition.parse("1|23|4")
    assert free_part_order(p) == [(1, 2), (3,), (0,)]
    q = Partition.parse("12|34")
    assert free_part_order(q) == [(0, 1), (2, 3)]
    assert free_part_order(Partition.singletons(3)) == [(0,), (1,), (2,)]


def test_toughness_levels_are_nested():
    one, two = (set(family(StructureSpec.parse(f"tough:{k}", 5)).maximal_partitions) for k in (1, 2))
    assert one < two
    assert two == set(family(StructureSpec.parse("part:2", 5)).maximal_partitions)
