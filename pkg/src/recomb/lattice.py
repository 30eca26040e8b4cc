"""Set partitions and partition lattices.

A :class:`Partition` is a set partition of a finite set of integer sites
(its *support*), stored with canonically ordered blocks.  A
:class:`Lattice` is a finite family of partitions of a common support,
ordered by refinement, with the bottom (all singletons) first and the
top (one block) last.  Two standard families are provided: all set
partitions ("full") and the partitions into contiguous runs
("interval"), plus sublattices generated by arbitrary elements.
"""
from __future__ import annotations

import itertools
from enum import Enum
from typing import Iterable, Iterator, Sequence

__all__ = [
    "LatticeKind",
    "SupportMismatchError",
    "Partition",
    "Lattice",
    "EMPTY",
    "bottom_partition",
    "top_partition",
    "parse_partition",
    "enumerate_lattice",
    "induced_lattice",
    "generated_sublattice",
    "chains",
    "validate_structure",
    "StructureReport",
    "FULL_SITE_LIMIT",
    "INTERVAL_SITE_LIMIT",
]

#: Enumeration caps; beyond these the element count stops being desk-scale.
FULL_SITE_LIMIT = 10
INTERVAL_SITE_LIMIT = 16

#: Largest element count for which the order relation is precomputed densely.
_EAGER_ORDER_LIMIT = 2048


class LatticeKind(str, Enum):
    """Which family of partitions a lattice holds."""

    FULL = "full"
    INTERVAL = "interval"
    GENERATED = "generated"


class SupportMismatchError(ValueError):
    """Raised when a binary operation mixes partitions of different supports."""


class Partition:
    """An exact set partition with canonically ordered blocks.

    Blocks are stored as tuples of increasing sites, ordered by their
    smallest element.  Partitions compare equal iff their blocks agree;
    the support may be any finite set of positive integers (the empty
    partition, with no blocks, is a legal value).
    """

    __slots__ = ("blocks", "_support")

    blocks: tuple[tuple[int, ...], ...]

    def __init__(self, blocks: Iterable[Iterable[int]]) -> None:
        canon: list[tuple[int, ...]] = []
        seen: set[int] = set()
        for raw in blocks:
            block = tuple(sorted(raw))
            if not block:
                raise ValueError("partition blocks must be nonempty")
            for site in block:
                if not isinstance(site, int) or site < 1:
                    raise ValueError(f"sites must be positive integers, got {site!r}")
                if site in seen:
                    raise ValueError(f"site {site} appears in more than one block")
                seen.add(site)
            if len(set(block)) != len(block):
                raise ValueError(f"duplicate site inside block {block}")
            canon.append(block)
        canon.sort(key=lambda b: b[0])
        object.__setattr__(self, "blocks", tuple(canon))
        object.__setattr__(self, "_support", frozenset(seen))

    # -- basic structure ------------------------------------------------

    @property
    def support(self) -> frozenset[int]:
        """The set of sites this partition covers."""
        return self._support

    @property
    def size(self) -> int:
        """Number of blocks."""
        return len(self.blocks)

    @property
    def n(self) -> int:
        """Number of sites in the support."""
        return len(self._support)

    def singleton_sites(self) -> tuple[int, ...]:
        """Sites that form singleton blocks, in increasing order."""
        return tuple(b[0] for b in self.blocks if len(b) == 1)

    def is_bottom(self) -> bool:
        """True when every block is a singleton."""
        return all(len(b) == 1 for b in self.blocks)

    def is_top(self) -> bool:
        """True when there is exactly one block (or the support is empty)."""
        return len(self.blocks) <= 1

    def site_block_index(self) -> dict[int, int]:
        """Map each site to the index of its block."""
        out: dict[int, int] = {}
        for i, block in enumerate(self.blocks):
            for site in block:
                out[site] = i
        return out

    # -- order and lattice operations ------------------------------------

    def _require_same_support(self, other: "Partition") -> None:
        if self._support != other._support:
            raise SupportMismatchError(
                f"supports differ: {sorted(self._support)} vs {sorted(other._support)}"
            )

    def refines(self, other: "Partition") -> bool:
        """True iff every block of ``self`` lies inside a block of ``other``."""
        self._require_same_support(other)
        where = other.site_block_index()
        for block in self.blocks:
            first = where[block[0]]
            if any(where[site] != first for site in block[1:]):
                return False
        return True

    def meet(self, other: "Partition") -> "Partition":
        """Coarsest common refinement: pairwise block intersections."""
        self._require_same_support(other)
        where = other.site_block_index()
        pieces: list[list[int]] = []
        for block in self.blocks:
            buckets: dict[int, list[int]] = {}
            for site in block:
                buckets.setdefault(where[site], []).append(site)
            pieces.extend(buckets.values())
        return Partition(pieces)

    def join(self, other: "Partition") -> "Partition":
        """Finest common coarsening: components of the block-overlap graph."""
        self._require_same_support(other)
        parent: dict[int, int] = {s: s for s in self._support}

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(a: int, b: int) -> None:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb

        for part in (self, other):
            for block in part.blocks:
                for site in block[1:]:
                    union(block[0], site)
        groups: dict[int, list[int]] = {}
        for site in self._support:
            groups.setdefault(find(site), []).append(site)
        return Partition(groups.values())

    def restrict(self, sites: Iterable[int]) -> "Partition":
        """Restriction to a subset of the support (empty blocks dropped)."""
        keep = frozenset(sites)
        extra = keep - self._support
        if extra:
            raise SupportMismatchError(
                f"cannot restrict to sites outside the support: {sorted(extra)}"
            )
        blocks = [tuple(s for s in b if s in keep) for b in self.blocks]
        return Partition(b for b in blocks if b)

    def strip_singletons(self, which: Iterable[int] | str = "all") -> "Partition":
        """Drop singleton blocks (all of them, or a chosen set of sites)."""
        if isinstance(which, str):
            if which != "all":
                raise ValueError("which must be 'all' or an iterable of sites")
            drop = set(self.singleton_sites())
        else:
            drop = set(which)
            singles = set(self.singleton_sites())
            bad = drop - singles
            if bad:
                raise ValueError(
                    f"sites {sorted(bad)} are not singleton blocks of {self}"
                )
        return Partition(b for b in self.blocks if not (len(b) == 1 and b[0] in drop))

    def parts_split_by(self, finer: "Partition") -> int:
        """How many blocks of ``self`` the partition ``finer`` cuts into >= 2 pieces."""
        self._require_same_support(finer)
        where = finer.site_block_index()
        count = 0
        for block in self.blocks:
            first = where[block[0]]
            if any(where[site] != first for site in block[1:]):
                count += 1
        return count

    # -- dunder plumbing --------------------------------------------------

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Partition) and self.blocks == other.blocks

    def __hash__(self) -> int:
        return hash(self.blocks)

    def __repr__(self) -> str:
        return f"Partition({self})"

    def __str__(self) -> str:
        return format_partition(self)

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("Partition is immutable")


#: The empty partition (empty support, no blocks).
EMPTY = Partition(())


def bottom_partition(sites: Iterable[int]) -> Partition:
    """All-singletons partition of the given sites."""
    return Partition([s] for s in sites)


def top_partition(sites: Iterable[int]) -> Partition:
    """One-block partition of the given sites (empty partition for no sites)."""
    sites = tuple(sites)
    return Partition([sites] if sites else ())


def format_partition(p: Partition) -> str:
    """Canonical text form: blocks joined by '|'.

    Sites are juxtaposed digits when the largest site is <= 9 (e.g.
    ``12|3|45``) and comma-separated otherwise (e.g. ``1,2|10``).  The
    empty partition renders as ``empty``.
    """
    if not p.blocks:
        return "empty"
    if max(p.support) <= 9:
        return "|".join("".join(str(s) for s in b) for b in p.blocks)
    return "|".join(",".join(str(s) for s in b) for b in p.blocks)


def parse_partition(text: str, n: int | None = None) -> Partition:
    """Parse the textual partition syntax.

    ``bottom`` and ``top`` are accepted as aliases when ``n`` is given.
    If the text contains a comma, every block is read as comma-separated
    integers; otherwise each digit character is one site (the compact
    form used for sites 1..9).
    """
    body = text.strip()
    if not body:
        raise ValueError("empty partition text")
    if body in ("bottom", "top"):
        if n is None:
            raise ValueError(f"'{body}' alias needs the number of sites")
        sites = range(1, n + 1)
        return bottom_partition(sites) if body == "bottom" else top_partition(sites)
    if body == "empty":
        return EMPTY
    blocks: list[list[int]] = []
    comma_mode = "," in body
    for chunk in body.split("|"):
        chunk = chunk.strip()
        if not chunk:
            raise ValueError(f"empty block in partition text {text!r}")
        try:
            if comma_mode:
                block = [int(tok) for tok in chunk.split(",")]
            else:
                if not chunk.isdigit():
                    raise ValueError
                block = [int(ch) for ch in chunk]
        except ValueError:
            raise ValueError(f"malformed block {chunk!r} in partition text {text!r}") from None
        blocks.append(block)
    part = Partition(blocks)
    if n is not None and part.support != frozenset(range(1, n + 1)):
        raise ValueError(f"partition {text!r} does not cover sites 1..{n}")
    return part


def canonical_order(elements: Iterable[Partition]) -> list[Partition]:
    """Sort partitions into canonical lattice order.

    Primary key: number of blocks, descending (bottom first, top last);
    secondary key: block tuples, descending lexicographically.  This is a
    linear extension of refinement: strictly refining strictly increases
    the block count.
    """
    out = sorted(elements, key=lambda p: p.blocks, reverse=True)
    out.sort(key=lambda p: -len(p.blocks))
    return out


class Lattice:
    """A finite family of partitions of a common support, ordered by refinement.

    Elements are held in canonical order (a linear extension of
    refinement), so every incidence matrix over the lattice is upper
    triangular.  The pairwise order relation is precomputed as bitset
    rows for lattices up to a size threshold and evaluated on demand
    beyond it.
    """

    def __init__(
        self,
        kind: LatticeKind,
        elements: Iterable[Partition],
        *,
        check_closure: bool = False,
    ) -> None:
        elems = canonical_order(set(elements))
        if not elems:
            raise ValueError("a lattice needs at least one element")
        support = elems[0].support
        for p in elems:
            if p.support != support:
                raise SupportMismatchError(
                    f"lattice elements must share a support; {p} does not cover"
                    f" {sorted(support)}"
                )
        self.kind = LatticeKind(kind)
        self.elements: tuple[Partition, ...] = tuple(elems)
        self.support: tuple[int, ...] = tuple(sorted(support))
        self.index: dict[Partition, int] = {p: i for i, p in enumerate(self.elements)}
        self._leq_rows: list[int] | None = None
        self._interval_cache: dict[tuple[int, int], tuple[int, ...]] = {}
        self._induced_cache: dict[tuple[int, ...], "Lattice"] = {}
        if check_closure:
            self._check_closure()

    # -- basic accessors --------------------------------------------------

    @property
    def n(self) -> int:
        """Number of sites in the support."""
        return len(self.support)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[Partition]:
        return iter(self.elements)

    def __contains__(self, p: Partition) -> bool:
        return p in self.index

    @property
    def bottom(self) -> Partition:
        return self.elements[0]

    @property
    def top(self) -> Partition:
        return self.elements[-1]

    @property
    def bottom_index(self) -> int:
        return 0

    @property
    def top_index(self) -> int:
        return len(self.elements) - 1

    def index_of(self, p: Partition) -> int:
        try:
            return self.index[p]
        except KeyError:
            raise KeyError(f"{p} is not an element of this lattice") from None

    # -- order relation ---------------------------------------------------

    def _order_rows(self) -> list[int] | None:
        if self._leq_rows is None and len(self.elements) <= _EAGER_ORDER_LIMIT:
            rows: list[int] = []
            for a in self.elements:
                mask = 0
                for j, b in enumerate(self.elements):
                    if len(a.blocks) >= len(b.blocks) and a.refines(b):
                        mask |= 1 << j
                rows.append(mask)
            self._leq_rows = rows
        return self._leq_rows

    def leq(self, i: int, j: int) -> bool:
        """True iff elements[i] refines elements[j]."""
        if i == j:
            return True
        if i > j:
            return False  # canonical order is a linear extension
        rows = self._order_rows()
        if rows is not None:
            return bool(rows[i] >> j & 1)
        return self.elements[i].refines(self.elements[j])

    def interval(self, i: int, j: int) -> tuple[int, ...]:
        """Indices of all elements C with elements[i] <= C <= elements[j]."""
        key = (i, j)
        cached = self._interval_cache.get(key)
        if cached is not None:
            return cached
        if not self.leq(i, j):
            out: tuple[int, ...] = ()
        else:
            out = tuple(
                k for k in range(i, j + 1) if self.leq(i, k) and self.leq(k, j)
            )
        self._interval_cache[key] = out
        return out

    def comparable_pairs(self) -> Iterator[tuple[int, int]]:
        """All index pairs (i, j) with elements[i] <= elements[j]."""
        for i in range(len(self.elements)):
            for j in range(i, len(self.elements)):
                if self.leq(i, j):
                    yield (i, j)

    def up_indices(self, i: int) -> tuple[int, ...]:
        """Indices of all elements above elements[i] (inclusive)."""
        return self.interval(i, self.top_index)

    # -- lattice operations -----------------------------------------------

    def meet_index(self, i: int, j: int) -> int:
        return self.index_of(self.elements[i].meet(self.elements[j]))

    def join_index(self, i: int, j: int) -> int:
        return self.index_of(self.elements[i].join(self.elements[j]))

    def _check_closure(self) -> None:
        for a, b in itertools.combinations(self.elements, 2):
            for result, name in ((a.meet(b), "meet"), (a.join(b), "join")):
                if result not in self.index:
                    raise ValueError(
                        f"not closed: {name}({a}, {b}) = {result} is missing"
                    )

    def covers(self) -> list[tuple[int, int]]:
        """Hasse cover pairs (i, j): elements[j] covers elements[i].

        For the full family a cover merges exactly two blocks; for the
        interval family it merges two adjacent blocks.  Generated
        sublattices fall back to the order relation.
        """
        out: list[tuple[int, int]] = []
        if self.kind is LatticeKind.GENERATED:
            m = len(self.elements)
            for i in range(m):
                above = [j for j in range(i + 1, m) if self.leq(i, j)]
                for j in above:
                    if not any(self.leq(k, j) for k in above if k < j and k != j):
                        out.append((i, j))
            return sorted(out)
        for i, p in enumerate(self.elements):
            if p.size < 2:
                continue
            if self.kind is LatticeKind.INTERVAL:
                merge_pairs: Iterable[tuple[int, int]] = (
                    (k, k + 1) for k in range(p.size - 1)
                )
            else:
                merge_pairs = itertools.combinations(range(p.size), 2)
            for a, b in merge_pairs:
                merged = [blk for k, blk in enumerate(p.blocks) if k not in (a, b)]
                merged.append(p.blocks[a] + p.blocks[b])
                out.append((i, self.index_of(Partition(merged))))
        return sorted(out)


def _set_partitions(sites: Sequence[int]) -> Iterator[Partition]:
    """All set partitions of the given sites (restricted-growth recursion)."""
    if not sites:
        yield EMPTY
        return
    blocks: list[list[int]] = []

    def place(k: int) -> Iterator[Partition]:
        if k == len(sites):
            yield Partition(blocks)
            return
        site = sites[k]
        for block in blocks:
            block.append(site)
            yield from place(k + 1)
            block.pop()
        blocks.append([site])
        yield from place(k + 1)
        blocks.pop()

    yield from place(0)


def _interval_partitions(sites: Sequence[int]) -> Iterator[Partition]:
    """All partitions of the ordered sites into contiguous runs."""
    ordered = sorted(sites)
    if not ordered:
        yield EMPTY
        return
    gaps = len(ordered) - 1
    for cuts in range(1 << gaps):
        blocks: list[list[int]] = [[ordered[0]]]
        for g in range(gaps):
            if cuts >> g & 1:
                blocks.append([ordered[g + 1]])
            else:
                blocks[-1].append(ordered[g + 1])
        yield Partition(blocks)


def enumerate_lattice(kind: LatticeKind | str, n: int) -> Lattice:
    """Build the standard lattice of the given kind on sites 1..n."""
    kind = LatticeKind(kind)
    if kind is LatticeKind.GENERATED:
        raise ValueError("generated sublattices come from generated_sublattice()")
    limit = FULL_SITE_LIMIT if kind is LatticeKind.FULL else INTERVAL_SITE_LIMIT
    if not 1 <= n <= limit:
        raise ValueError(f"n must be between 1 and {limit} for the {kind.value} family")
    sites = range(1, n + 1)
    if kind is LatticeKind.FULL:
        elements: Iterable[Partition] = _set_partitions(tuple(sites))
    else:
        elements = _interval_partitions(tuple(sites))
    return Lattice(kind, elements)


def induced_lattice(lattice: Lattice, sites: Iterable[int]) -> Lattice:
    """The lattice induced on a subset of sites by restriction.

    For the standard families this is the same family on the sub-sites
    (contiguity taken within the ordered subset); for generated
    sublattices the restrictions of all elements are collected.
    """
    keep = tuple(sorted(set(sites)))
    if not keep:
        raise ValueError("cannot induce a lattice on an empty site set")
    missing = set(keep) - set(lattice.support)
    if missing:
        raise SupportMismatchError(
            f"sites {sorted(missing)} are outside the lattice support"
        )
    cached = lattice._induced_cache.get(keep)
    if cached is not None:
        return cached
    if keep == lattice.support:
        out = lattice
    elif lattice.kind is LatticeKind.FULL:
        out = Lattice(LatticeKind.FULL, _set_partitions(keep))
    elif lattice.kind is LatticeKind.INTERVAL:
        out = Lattice(LatticeKind.INTERVAL, _interval_partitions(keep))
    else:
        out = Lattice(
            LatticeKind.GENERATED, (p.restrict(keep) for p in lattice.elements)
        )
    lattice._induced_cache[keep] = out
    return out


def generated_sublattice(generators: Iterable[Partition]) -> Lattice:
    """Closure of the generators under meet and join."""
    gens = list(generators)
    if not gens:
        raise ValueError("need at least one generator")
    closure: set[Partition] = set(gens)
    frontier = list(closure)
    while frontier:
        fresh: list[Partition] = []
        for a in frontier:
            for b in list(closure):
                for c in (a.meet(b), a.join(b)):
                    if c not in closure:
                        closure.add(c)
                        fresh.append(c)
        frontier = fresh
    return Lattice(LatticeKind.GENERATED, closure, check_closure=True)


def chains(lattice: Lattice, lower: Partition, upper: Partition) -> list[tuple[int, ...]]:
    """All chains from ``lower`` to ``upper`` inside the lattice.

    A chain is a strictly increasing sequence of element indices starting
    at ``lower`` and ending at ``upper`` (both included).  Enumerated by
    depth-first search over the interval.
    """
    lo, hi = lattice.index_of(lower), lattice.index_of(upper)
    if not lattice.leq(lo, hi):
        return []
    if lo == hi:
        return [(lo,)]
    members = lattice.interval(lo, hi)
    out: list[tuple[int, ...]] = []
    path: list[int] = [lo]

    def extend(cur: int) -> None:
        for nxt in members:
            if nxt <= cur or not lattice.leq(cur, nxt):
                continue
            if nxt == hi:
                out.append(tuple(path) + (hi,))
                continue
            path.append(nxt)
            extend(nxt)
            path.pop()

    extend(lo)
    return sorted(out)


class StructureReport(dict):
    """Structural facts about a generated sublattice (a plain dict)."""


def validate_structure(generators: Iterable[Partition]) -> StructureReport:
    """Classify the sublattice generated by the given partitions.

    ``reducible``: the meet of all generators sits strictly above the
    all-singletons partition (the generators share unbroken clusters).
    ``decomposable``: the join of all generators sits strictly below the
    one-block partition (the sites fall into independent groups).
    ``contains_bounds``: bottom and top both lie in the generated closure.
    """
    gens = list(generators)
    lattice = generated_sublattice(gens)
    meet_all = gens[0]
    join_all = gens[0]
    for g in gens[1:]:
        meet_all = meet_all.meet(g)
        join_all = join_all.join(g)
    support = gens[0].support
    bottom = bottom_partition(support)
    top = top_partition(support)
    return StructureReport(
        reducible=meet_all != bottom,
        decomposable=join_all != top,
        contains_bounds=bottom in lattice.index and top in lattice.index,
        meet_of_generators=str(meet_all),
        join_of_generators=str(join_all),
        size=len(lattice),
    )
