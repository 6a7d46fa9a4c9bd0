"""Set partitions of parties and the structure classes built on them.

A structure class (partitionability, producibility, squareability, toughness or
an explicit list of partition types) is a predicate on partitions that is
closed under refinement. The convex set of states with that structure is
generated by product states over its *maximal* partitions, so a
:class:`StructureFamily` only keeps those.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterator, Sequence

MAX_PARTIES = 12


@dataclass(frozen=True, order=True)
class Partition:
    """Disjoint cover of parties ``0..n-1``; parts sorted by smallest element."""

    parts: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        parts = tuple(sorted((tuple(sorted(int(x) for x in p)) for p in self.parts), key=lambda p: p[0] if p else -1))
        if any(not p for p in parts):
            raise ValueError("partition has an empty part")
        flat = sorted(x for p in parts for x in p)
        if flat != list(range(len(flat))):
            raise ValueError(f"{parts} is not a partition of 0..{len(flat) - 1}")
        object.__setattr__(self, "parts", parts)

    @property
    def n(self) -> int:
        return sum(len(p) for p in self.parts)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(p) for p in self.parts)

    @property
    def type_string(self) -> str:
        return "|".join(str(s) for s in sorted(self.sizes, reverse=True))

    def __len__(self) -> int:
        return len(self.parts)

    def __str__(self) -> str:
        # 1-based, e.g. "123|4"; commas once party labels need two digits
        sep = "" if self.n <= 9 else ","
        return "|".join(sep.join(str(x + 1) for x in p) for p in self.parts)

    @classmethod
    def parse(cls, text: str) -> "Partition":
        """Inverse of ``str``: "12|34" or "1,2|3,4" with 1-based labels."""
        chunks = text.split("|")
        if "," not in text:
            try:
                return cls(tuple(tuple(int(x) - 1 for x in chunk) for chunk in chunks))
            except ValueError:
                pass  # "1|2|...|10|11": every part is a single multi-digit label
        return cls(tuple(tuple(int(x) - 1 for x in chunk.split(",")) for chunk in chunks))

    @classmethod
    def trivial(cls, n: int) -> "Partition":
        return cls((tuple(range(n)),))

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(tuple((k,) for k in range(n)))


def enumerate_partitions(n: int) -> list[Partition]:
    """All set partitions of ``n`` parties via restricted growth strings."""
    if not 1 <= n <= MAX_PARTIES:
        raise ValueError(f"n must be in [1, {MAX_PARTIES}], got {n}")
    return [Partition(tuple(tuple(b) for b in blocks)) for blocks in _blocks(n)]


def _blocks(n: int) -> Iterator[list[list[int]]]:
    def rec(k: int, blocks: list[list[int]]):
        if k == n:
            yield [list(b) for b in blocks]
            return
        for b in blocks:
            b.append(k)
            yield from rec(k + 1, blocks)
            b.pop()
        blocks.append([k])
        yield from rec(k + 1, blocks)
        blocks.pop()

    yield from rec(0, [])


def refines(a: Partition, b: Partition) -> bool:
    """True iff every part of ``a`` lies inside some part of ``b``."""
    if a.n != b.n:
        raise ValueError("partitions of different party counts")
    owner = {}
    for i, p in enumerate(b.parts):
        for x in p:
            owner[x] = i
    return all(len({owner[x] for x in p}) == 1 for p in a.parts)


def squareability_of(p: Partition) -> int:
    return sum(s * s for s in p.sizes)


def parse_type(text: str) -> tuple[int, ...]:
    sizes = tuple(sorted((int(x) for x in text.split("|")), reverse=True))
    if not sizes or min(sizes) < 1:
        raise ValueError(f"bad partition type {text!r}")
    return sizes


# Toughness levels are only tabulated for five parties. Levels are nested: each
# level names the type it admits on top of the lower levels, as squareability does.
TOUGHNESS_TYPES = {5: {1: ("4|1",), 2: ("4|1", "3|2")}}

KINDS = ("part", "prod", "sq", "tough", "custom")


@dataclass(frozen=True)
class StructureSpec:
    """A structure class on ``n`` parties.

    ``kind`` is one of ``part`` (at least ``param`` parts), ``prod`` (parts of
    size at most ``param``), ``sq`` (sum of squared part sizes at most
    ``param``), ``tough`` (tabulated level) or ``custom`` (explicit types).
    """

    kind: str
    n: int
    param: int = 0
    types: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown structure kind {self.kind!r}")
        if not 1 <= self.n <= MAX_PARTIES:
            raise ValueError(f"party count {self.n} out of range")
        if self.kind in ("part", "prod") and not 1 <= self.param <= self.n:
            raise ValueError(f"{self.kind}:{self.param} outside [1, {self.n}]")
        if self.kind == "sq" and not self.n <= self.param <= self.n ** 2:
            raise ValueError(f"sq:{self.param} outside [{self.n}, {self.n ** 2}]")
        if self.kind == "tough":
            levels = TOUGHNESS_TYPES.get(self.n)
            if levels is None:
                raise ValueError(f"toughness is only defined here for n=5, not n={self.n}")
            if self.param not in levels:
                raise ValueError(f"toughness level {self.param} not tabulated for n={self.n}")
        if self.kind == "custom":
            if not self.types:
                raise ValueError("custom structure needs at least one type")
            for t in self.types:
                if sum(parse_type(t)) != self.n:
                    raise ValueError(f"type {t!r} does not cover {self.n} parties")

    @classmethod
    def parse(cls, text: str, n: int) -> "StructureSpec":
        """Parse "part:2", "prod:3", "sq:13", "tough:1", "custom:3|2,4|1" or "full-sep"."""
        text = text.strip()
        if text in ("full-sep", "fullsep", "full"):
            return cls("part", n, n)
        kind, _, arg = text.partition(":")
        if kind == "custom":
            return cls("custom", n, 0, tuple(t.strip() for t in arg.split(",") if t.strip()))
        try:
            return cls(kind, n, int(arg))
        except ValueError as exc:
            raise ValueError(f"cannot parse structure {text!r}: {exc}") from None

    def __str__(self) -> str:
        if self.kind == "custom":
            return "custom:" + ",".join(self.types)
        return f"{self.kind}:{self.param}"

    @property
    def allowed_types(self) -> tuple[tuple[int, ...], ...] | None:
        if self.kind == "tough":
            return tuple(parse_type(t) for t in TOUGHNESS_TYPES[self.n][self.param])
        if self.kind == "custom":
            return tuple(parse_type(t) for t in self.types)
        return None

    def predicate(self) -> Callable[[Partition], bool]:
        """Membership test, closed under refinement."""
        if self.kind == "part":
            return lambda p: len(p) >= self.param
        if self.kind == "prod":
            return lambda p: max(p.sizes) <= self.param
        if self.kind == "sq":
            return lambda p: squareability_of(p) <= self.param
        gens = [p for p in enumerate_partitions(self.n)
                if tuple(sorted(p.sizes, reverse=True)) in self.allowed_types]
        return lambda p: any(refines(p, g) for g in gens)


@dataclass(frozen=True)
class StructureFamily:
    spec: StructureSpec
    maximal_partitions: tuple[Partition, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.maximal_partitions)

    def allows(self, p: Partition) -> bool:
        """Whether a product over ``p`` has this structure (``p`` refines a member)."""
        return p.n == self.spec.n and any(refines(p, m) for m in self.maximal_partitions)

    @cached_property
    def type_counts(self) -> dict[str, int]:
        return dict(Counter(p.type_string for p in self.maximal_partitions))


def _merges(p: Partition) -> Iterator[Partition]:
    parts = p.parts
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            rest = [q for k, q in enumerate(parts) if k not in (i, j)]
            yield Partition(tuple(rest) + (parts[i] + parts[j],))


def family(spec: StructureSpec) -> StructureFamily:
    """Maximal partitions (under refinement) allowed by ``spec``."""
    allp = enumerate_partitions(spec.n)
    if spec.allowed_types is not None:
        cands = [p for p in allp if tuple(sorted(p.sizes, reverse=True)) in spec.allowed_types]
        maximal = [p for p in cands if not any(q != p and refines(p, q) for q in cands)]
    else:
        ok = spec.predicate()
        # for a refinement-closed predicate, maximality only needs one-step merges
        maximal = [p for p in allp if ok(p) and not any(ok(q) for q in _merges(p))]
    return StructureFamily(spec, tuple(sorted(maximal, key=lambda p: (-max(p.sizes), p.sizes, p.parts))))


def family_from_string(text: str, n: int) -> StructureFamily:
    return family(StructureSpec.parse(text, n))


def stirling2(n: int, k: int) -> int:
    """Number of partitions of ``n`` labelled parties into ``k`` parts."""
    row = [1] + [0] * k
    for i in range(1, n + 1):
        new = [0] * (k + 1)
        for j in range(1, min(i, k) + 1):
            new[j] = j * row[j] + row[j - 1]
        row = new
    return row[k]


def free_part_order(p: Partition) -> list[tuple[int, ...]]:
    """Parts in rotation order: largest first (ties to the lowest element), then cyclic."""
    parts: Sequence[tuple[int, ...]] = p.parts
    start = max(range(len(parts)), key=lambda i: (len(parts[i]), -parts[i][0]))
    return [parts[(start + r) % len(parts)] for r in range(len(parts))]
