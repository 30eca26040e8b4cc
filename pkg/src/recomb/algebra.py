"""The incidence algebra of a partition lattice over the rationals.

An :class:`IncidenceFunction` assigns an exact rational to every
comparable pair (A, B) with A refining B; incomparable pairs are
implicitly zero, so in the canonical element order every such function
is an upper-triangular matrix.  Convolution, the identity delta, zeta,
the Moebius function, and two independent inversion algorithms (the
triangular recursion and the alternating chain sum) are provided; no
floating point is used anywhere in this module.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .lattice import Lattice, LatticeKind, Partition, chains

__all__ = [
    "NotInvertibleError",
    "IncidenceFunction",
    "delta",
    "zeta",
    "convolve",
    "invert_recursive",
    "invert_chain_sum",
    "mobius",
    "mobius_row_sum",
    "CHAIN_SUM_LENGTH_LIMIT",
]

#: Longest interval (order-theoretic length, i.e. longest-chain edge count)
#: the chain-sum inversion will enumerate; it exists for cross-validation.
CHAIN_SUM_LENGTH_LIMIT = 12

Rational = int | Fraction

_ZERO = Fraction(0)
_ONE = Fraction(1)


class NotInvertibleError(ValueError):
    """An incidence function with a zero diagonal value cannot be inverted."""

    def __init__(self, partition: Partition) -> None:
        super().__init__(f"zero diagonal value at {partition}")
        self.partition = partition


class IncidenceFunction:
    """Exact-rational function on the comparable pairs of a lattice."""

    def __init__(
        self,
        lattice: Lattice,
        values: Mapping[tuple[int, int], Rational] | None = None,
    ) -> None:
        self.lattice = lattice
        self._values: dict[tuple[int, int], Fraction] = {}
        if values:
            for (i, j), v in values.items():
                v = Fraction(v)
                if v:
                    if not lattice.leq(i, j):
                        a, b = lattice.elements[i], lattice.elements[j]
                        raise ValueError(
                            f"nonzero value on incomparable pair ({a}, {b})"
                        )
                    self._values[(i, j)] = v

    # -- access -----------------------------------------------------------

    def get(self, i: int, j: int) -> Fraction:
        """Value at an index pair (zero when absent or incomparable)."""
        return self._values.get((i, j), _ZERO)

    def value(self, a: Partition, b: Partition) -> Fraction:
        """Value at a pair of partitions."""
        return self.get(self.lattice.index_of(a), self.lattice.index_of(b))

    def items(self) -> Iterable[tuple[tuple[int, int], Fraction]]:
        return self._values.items()

    def matrix(self) -> list[list[Fraction]]:
        """Dense matrix in lattice index order."""
        m = len(self.lattice)
        out = [[_ZERO] * m for _ in range(m)]
        for (i, j), v in self._values.items():
            out[i][j] = v
        return out

    def diagonal(self) -> list[Fraction]:
        return [self.get(i, i) for i in range(len(self.lattice))]

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, IncidenceFunction)
            and self.lattice is other.lattice
            and self._values == other._values
        )

    def __hash__(self) -> None:  # type: ignore[override]
        raise TypeError("IncidenceFunction is not hashable")

    def __mul__(self, other: "IncidenceFunction") -> "IncidenceFunction":
        return convolve(self, other)

    def __repr__(self) -> str:
        return (
            f"IncidenceFunction({len(self.lattice)} elements,"
            f" {len(self._values)} nonzero)"
        )


def from_rule(
    lattice: Lattice, rule: Callable[[Partition, Partition], Rational]
) -> IncidenceFunction:
    """Build an incidence function from a rule on comparable partition pairs."""
    values = {
        (i, j): rule(lattice.elements[i], lattice.elements[j])
        for i, j in lattice.comparable_pairs()
    }
    return IncidenceFunction(lattice, values)


def delta(lattice: Lattice) -> IncidenceFunction:
    """The convolution identity: 1 on the diagonal, 0 elsewhere."""
    return IncidenceFunction(
        lattice, {(i, i): _ONE for i in range(len(lattice))}
    )


def zeta(lattice: Lattice) -> IncidenceFunction:
    """The indicator of the order relation: 1 on every comparable pair."""
    return IncidenceFunction(
        lattice, {pair: _ONE for pair in lattice.comparable_pairs()}
    )


def convolve(f: IncidenceFunction, g: IncidenceFunction) -> IncidenceFunction:
    """Convolution (f*g)(A,B) = sum over A <= C <= B of f(A,C) g(C,B)."""
    if f.lattice is not g.lattice:
        raise ValueError("convolution needs both functions on the same lattice")
    lat = f.lattice
    values: dict[tuple[int, int], Fraction] = {}
    for i, j in lat.comparable_pairs():
        acc = _ZERO
        for k in lat.interval(i, j):
            left = f.get(i, k)
            if left:
                right = g.get(k, j)
                if right:
                    acc += left * right
        if acc:
            values[(i, j)] = acc
    return IncidenceFunction(lat, values)


def _check_invertible(f: IncidenceFunction) -> None:
    for i, p in enumerate(f.lattice.elements):
        if not f.get(i, i):
            raise NotInvertibleError(p)


def invert_recursive(f: IncidenceFunction) -> IncidenceFunction:
    """Inverse by the triangular recursion.

    g(A,A) = 1/f(A,A) and, for A < B,
    g(A,B) = (-1/f(B,B)) * sum over A <= C < B of g(A,C) f(C,B).
    """
    _check_invertible(f)
    lat = f.lattice
    values: dict[tuple[int, int], Fraction] = {}
    pairs = sorted(lat.comparable_pairs(), key=lambda ij: ij[1] - ij[0])
    for i, j in pairs:
        if i == j:
            values[(i, j)] = 1 / f.get(i, i)
            continue
        acc = _ZERO
        for k in lat.interval(i, j):
            if k == j:
                continue
            left = values.get((i, k), _ZERO)
            if left:
                right = f.get(k, j)
                if right:
                    acc += left * right
        if acc:
            values[(i, j)] = -acc / f.get(j, j)
    return IncidenceFunction(lat, values)


def invert_chain_sum(f: IncidenceFunction) -> IncidenceFunction:
    """Inverse by the alternating sum over all chains.

    f^{-1}(A,B) = sum over chains A = G_1 < ... < G_k = B of
    (-1)^{k-1} * prod f(G_i, G_{i+1}) / prod f(G_j, G_j).
    Exponential in the interval length; guarded, since it exists as a
    cross-validation oracle for :func:`invert_recursive`.
    """
    _check_invertible(f)
    lat = f.lattice
    values: dict[tuple[int, int], Fraction] = {}
    for i, j in lat.comparable_pairs():
        a, b = lat.elements[i], lat.elements[j]
        length = len(a.blocks) - len(b.blocks)
        if length > CHAIN_SUM_LENGTH_LIMIT:
            raise ValueError(
                f"interval [{a}, {b}] has length {length}, beyond the"
                f" chain-sum guard ({CHAIN_SUM_LENGTH_LIMIT})"
            )
        acc = _ZERO
        for chain in chains(lat, a, b):
            num = _ONE
            for u, v in zip(chain, chain[1:]):
                num *= f.get(u, v)
            if not num and len(chain) > 1:
                continue
            den = _ONE
            for u in chain:
                den *= f.get(u, u)
            acc += (-_ONE) ** (len(chain) - 1) * num / den
        if acc:
            values[(i, j)] = acc
    return IncidenceFunction(lat, values)


def mobius(lattice: Lattice) -> IncidenceFunction:
    """The Moebius function (inverse of zeta).

    On interval-partition lattices the closed form
    mu(A,B) = (-1)^(|A|-|B|) is used directly; elsewhere zeta is
    inverted by the triangular recursion.
    """
    if lattice.kind is LatticeKind.INTERVAL:
        values = {
            (i, j): (-_ONE) ** (
                len(lattice.elements[i].blocks) - len(lattice.elements[j].blocks)
            )
            for i, j in lattice.comparable_pairs()
        }
        return IncidenceFunction(lattice, values)
    return invert_recursive(zeta(lattice))


def mobius_row_sum(
    mu: IncidenceFunction, a: Partition, direction: str
) -> Fraction:
    """Sum a row ('up': over B >= A) or column ('down': over B <= A) of mu.

    The up-sum equals 1 exactly when A is the top element; the down-sum
    equals 1 exactly when A is the bottom element.
    """
    lat = mu.lattice
    i = lat.index_of(a)
    if direction == "up":
        return sum((mu.get(i, j) for j in lat.interval(i, lat.top_index)), _ZERO)
    if direction == "down":
        return sum((mu.get(j, i) for j in lat.interval(0, i)), _ZERO)
    raise ValueError("direction must be 'up' or 'down'")
