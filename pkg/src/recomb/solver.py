"""Closed-form solutions of the partition ODE system.

The coefficient functions ``a_t`` of the measure dynamics solve an
upper-triangular linear ODE system indexed by the partition lattice.
This module provides both solution routes:

* the exponential ansatz ``a_t(A) = sum_B theta(A, B) exp(-psi(B) t)``,
  built from a family of coefficient tables ``theta^U`` over every
  induced subsystem (valid whenever the rates are non-degenerate), and
* exact back-substitution on the Markov generator ``Q`` of the
  partitioning process, which needs no genericity at all and yields
  exponential polynomials (``t``- and ``t^2``-terms appear exactly when
  decay rates collide).

It also exposes the generator itself in two forms (the direct
marginal-rate formula and the theta-sandwich product, which agree
entrywise), the inverse table ``eta``, and the mode decomposition of the
measure flow into independently decaying components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .algebra import IncidenceFunction, invert_recursive
from .lattice import Partition, SupportMismatchError, format_partition
from .rates import Genericity, RateSystem

Rational = Fraction | int
_ZERO = Fraction(0)
_ONE = Fraction(1)


class DegenerateRatesError(ValueError):
    """Raised when a decay-rate collision breaks the exponential ansatz.

    The witness is a pair ``(sites, partition)`` with
    ``psi^U(top) == psi^U(partition)`` on the subsystem ``U = sites``.
    """

    def __init__(self, sites: Iterable[int], partition: Partition) -> None:
        self.sites = tuple(sorted(sites))
        self.partition = partition
        super().__init__(
            f"degenerate rates: on sites {self.sites} the decay rate of"
            f" {partition} collides with the top decay rate, so the"
            " exponential ansatz does not apply"
        )

    @property
    def witness(self) -> tuple[tuple[int, ...], Partition]:
        return (self.sites, self.partition)


# -- polynomial helpers (coefficient tuples, lowest degree first) ----------


def _poly_trim(coeffs: Sequence[Rational]) -> tuple[Fraction, ...]:
    out = [Fraction(c) for c in coeffs]
    while out and not out[-1]:
        out.pop()
    return tuple(out)


def _poly_acc(dest: list[Fraction], poly: Sequence[Fraction], scale: Fraction = _ONE) -> None:
    while len(dest) < len(poly):
        dest.append(_ZERO)
    for k, c in enumerate(poly):
        dest[k] += scale * c


def _poly_derivative(poly: Sequence[Fraction]) -> tuple[Fraction, ...]:
    return tuple(k * c for k, c in enumerate(poly) if k)


def _poly_antiderivative(poly: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """The antiderivative vanishing at zero."""
    return (_ZERO,) + tuple(c / (k + 1) for k, c in enumerate(poly))


def _poly_eval(poly: Sequence[Fraction], t: float) -> float:
    acc = 0.0
    for c in reversed(poly):
        acc = acc * t + float(c)
    return acc


# -- the coefficient-table family ------------------------------------------


class ThetaFamily:
    """Solution coefficient tables ``theta^U`` for every induced subsystem.

    Tables are built on demand, bottom-up over the subset size: the
    recursion for ``theta^U(A, B)`` only consults tables on the blocks
    of partitions strictly below the top, which are proper subsets of
    ``U``.  Construction fails with :class:`DegenerateRatesError` when
    the rates admit a decay-rate collision on any subsystem.
    """

    def __init__(self, rates: RateSystem) -> None:
        report = rates.classify()
        if report.kind is Genericity.DEGENERATE:
            sites, partition = report.witness
            raise DegenerateRatesError(sites, partition)
        self._rates = rates
        self._tables: dict[tuple[int, ...], IncidenceFunction] = {}

    @property
    def rates(self) -> RateSystem:
        return self._rates

    @property
    def top(self) -> IncidenceFunction:
        """The table on the full site set."""
        return self.table()

    def table(self, sites: Iterable[int] | None = None) -> IncidenceFunction:
        """The coefficient table on a site subset (default: all sites)."""
        keep = (
            self._rates.sites
            if sites is None
            else tuple(sorted(set(sites)))
        )
        if not keep:
            raise ValueError("coefficient tables need a nonempty site subset")
        cached = self._tables.get(keep)
        if cached is None:
            cached = self._compute(keep)
            self._tables[keep] = cached
        return cached

    def value(self, a: Partition, b: Partition) -> Fraction:
        """``theta^U(a, b)`` on the common support ``U`` of ``a`` and ``b``."""
        if a.support != b.support:
            raise SupportMismatchError(
                f"supports differ: {sorted(a.support)} vs {sorted(b.support)}"
            )
        if a.size == 0:
            return _ONE  # the empty subsystem carries the trivial table
        return self.table(a.support).value(a, b)

    def diagonal_value(self, a: Partition) -> Fraction:
        """The diagonal entry ``theta^U(a, a)`` (1 for the empty partition)."""
        return self.value(a, a)

    def _compute(self, sites: tuple[int, ...]) -> IncidenceFunction:
        rs = self._rates
        lat = rs.sublattice(sites)
        elements = lat.elements
        top_i = lat.top_index
        rho = rs.marginal_rates(sites)
        psi = [rs.psi(p) for p in elements]
        psi_top = psi[top_i]

        values: dict[tuple[int, int], Fraction] = {(top_i, top_i): _ONE}
        for j, b in enumerate(elements):
            if j == top_i:
                continue
            denominator = psi_top - psi[j]
            if denominator == 0:
                raise DegenerateRatesError(sites, b)
            # Partitions C with b <= C < top, together with their rates;
            # each block of such a C is a proper subset of the sites, so
            # the product below only needs strictly smaller tables.
            summands = [
                (elements[k], rho[elements[k]])
                for k in lat.up_indices(j)
                if k != top_i and rho[elements[k]]
            ]
            for i in range(j + 1):
                if not lat.leq(i, j):
                    continue
                a = elements[i]
                acc = _ZERO
                for c, rate in summands:
                    product = rate
                    for block in c.blocks:
                        sub = self.table(block)
                        product *= sub.value(a.restrict(block), b.restrict(block))
                        if not product:
                            break
                    acc += product
                if acc:
                    values[(i, j)] = acc / denominator
        # Top column: rows sum to zero so that a_0 = delta(., top).
        for i in range(len(elements)):
            if i == top_i:
                continue
            row_sum = _ZERO
            for j in range(i, len(elements)):
                if j != top_i and lat.leq(i, j):
                    row_sum += values.get((i, j), _ZERO)
            if row_sum:
                values[(i, top_i)] = -row_sum
        return IncidenceFunction(lat, values)


def theta(rates: RateSystem) -> ThetaFamily:
    """Coefficient tables of the exponential ansatz for non-degenerate rates."""
    return ThetaFamily(rates)


def eta(tf: ThetaFamily) -> IncidenceFunction:
    """The convolution inverse of the full-system coefficient table."""
    return invert_recursive(tf.top)


# -- exponential polynomials -----------------------------------------------


class ExpPolySolution:
    """Per-partition functions ``t -> sum_L p_L(t) exp(-L t)``, exact.

    ``terms`` maps each partition to a dict from the decay rate ``L``
    (an exact rational) to the coefficient tuple of ``p_L`` (lowest
    degree first).  Zero polynomials are dropped on construction.
    """

    def __init__(
        self,
        lattice,
        terms: Mapping[Partition, Mapping[Fraction, Sequence[Rational]]],
    ) -> None:
        self.lattice = lattice
        self._terms: dict[Partition, dict[Fraction, tuple[Fraction, ...]]] = {}
        for p in lattice.elements:
            clean: dict[Fraction, tuple[Fraction, ...]] = {}
            for lam, poly in terms.get(p, {}).items():
                trimmed = _poly_trim(poly)
                if trimmed:
                    clean[Fraction(lam)] = trimmed
            self._terms[p] = clean

    def term(self, p: Partition) -> dict[Fraction, tuple[Fraction, ...]]:
        """The exponential-polynomial data of one partition (a copy)."""
        return dict(self._terms[p])

    def items(self) -> Iterable[tuple[Partition, dict[Fraction, tuple[Fraction, ...]]]]:
        for p in self.lattice.elements:
            yield p, dict(self._terms[p])

    def max_degree(self) -> int:
        return max(
            (len(poly) - 1 for tl in self._terms.values() for poly in tl.values()),
            default=0,
        )

    def evaluate(self, p: Partition, t: float) -> float:
        t = float(t)
        return sum(
            _poly_eval(poly, t) * math.exp(-float(lam) * t)
            for lam, poly in self._terms[p].items()
        )

    def evaluate_all(self, t: float) -> dict[Partition, float]:
        return {p: self.evaluate(p, t) for p in self.lattice.elements}

    def vector(self, t: float) -> np.ndarray:
        """Values at one time, in lattice element order."""
        return np.array([self.evaluate(p, t) for p in self.lattice.elements])

    def total(self) -> dict[Fraction, tuple[Fraction, ...]]:
        """The symbolic sum over all partitions, merged per decay rate."""
        acc: dict[Fraction, list[Fraction]] = {}
        for term_list in self._terms.values():
            for lam, poly in term_list.items():
                _poly_acc(acc.setdefault(lam, []), poly)
        return {
            lam: trimmed
            for lam, poly in acc.items()
            if (trimmed := _poly_trim(poly))
        }

    def payload(self) -> dict[str, list[dict[str, object]]]:
        """JSON-ready form: per partition a list of {lambda, poly} entries."""
        out: dict[str, list[dict[str, object]]] = {}
        for p in self.lattice.elements:
            entries = [
                {"lambda": str(lam), "poly": [str(c) for c in self._terms[p][lam]]}
                for lam in sorted(self._terms[p])
            ]
            out[format_partition(p)] = entries
        return out

    def __repr__(self) -> str:
        return (
            f"ExpPolySolution({len(self.lattice)} partitions,"
            f" max degree {self.max_degree()})"
        )


def coefficients_generic(
    rs: RateSystem, tf: ThetaFamily | None = None
) -> ExpPolySolution:
    """The exponential-ansatz solution (non-degenerate rates only).

    Coefficients at coinciding decay rates are merged by exact
    rational equality.
    """
    if tf is None:
        tf = theta(rs)
    table = tf.top
    lat = table.lattice
    terms: dict[Partition, dict[Fraction, list[Fraction]]] = {}
    for i, a in enumerate(lat.elements):
        by_rate: dict[Fraction, list[Fraction]] = {}
        for j in lat.up_indices(i):
            coeff = table.get(i, j)
            if coeff:
                lam = rs.psi(lat.elements[j])
                _poly_acc(by_rate.setdefault(lam, []), (coeff,))
        terms[a] = by_rate
    return ExpPolySolution(lat, terms)


# -- the Markov generator ---------------------------------------------------


class GeneratorMatrix(IncidenceFunction):
    """Upper-triangular Markov generator on the partition lattice.

    Columns sum to zero, off-diagonal entries are nonnegative, and the
    diagonal carries the negated decay rates.
    """

    def column_sums(self) -> list[Fraction]:
        sums = [_ZERO] * len(self.lattice)
        for (_, j), v in self.items():
            sums[j] += v
        return sums

    def decay_rates(self) -> list[Fraction]:
        """The negated diagonal, in lattice element order."""
        return [-d for d in self.diagonal()]

    def as_dense(self) -> np.ndarray:
        out = np.zeros((len(self.lattice), len(self.lattice)))
        for (i, j), v in self.items():
            out[i, j] = float(v)
        return out


def _parts_cut(coarse: Partition, fine: Partition) -> list[tuple[int, ...]]:
    """The blocks of ``coarse`` that ``fine`` cuts into two or more pieces."""
    where = fine.site_block_index()
    out = []
    for block in coarse.blocks:
        first = where[block[0]]
        if any(where[site] != first for site in block[1:]):
            out.append(block)
    return out


def markov_generator_direct(rs: RateSystem) -> GeneratorMatrix:
    """The generator from marginal rates; valid for every rate choice.

    ``Q(A, B)`` is the induced rate of the restriction ``A|_B1`` when
    ``A`` splits exactly one part ``B1`` of ``B``, the diagonal is
    ``-psi``, and everything else vanishes.
    """
    lat = rs.lattice
    values: dict[tuple[int, int], Fraction] = {}
    for j, b in enumerate(lat.elements):
        values[(j, j)] = -rs.psi(b)
        for i in range(j):
            if not lat.leq(i, j):
                continue
            cut = _parts_cut(b, lat.elements[i])
            if len(cut) == 1:
                part = cut[0]
                values[(i, j)] = rs.marginal_rates(part)[
                    lat.elements[i].restrict(part)
                ]
    return GeneratorMatrix(lat, values)


def markov_generator_via_theta(
    rs: RateSystem,
    tf: ThetaFamily | None = None,
    inverse: IncidenceFunction | None = None,
) -> GeneratorMatrix:
    """The generator as the sandwich product ``-theta * diag(psi) * eta``.

    Agrees entrywise with :func:`markov_generator_direct` whenever the
    coefficient tables exist.
    """
    if tf is None:
        tf = theta(rs)
    table = tf.top
    if inverse is None:
        inverse = eta(tf)
    lat = table.lattice
    psi = [rs.psi(p) for p in lat.elements]
    values: dict[tuple[int, int], Fraction] = {}
    for i, j in lat.comparable_pairs():
        acc = _ZERO
        for k in lat.interval(i, j):
            left = table.get(i, k)
            if left:
                right = inverse.get(k, j)
                if right:
                    acc += left * psi[k] * right
        if acc:
            values[(i, j)] = -acc
    return GeneratorMatrix(lat, values)


# -- the universal solver ----------------------------------------------------


def solve_universal(rs: RateSystem) -> ExpPolySolution:
    """Exact solution for arbitrary rates by back-substitution.

    The generator is upper triangular in the lattice order, so the
    system is solved from the top partition downward: each component
    satisfies a scalar linear ODE whose forcing is the already-solved
    exponential polynomial above it.  Integration is term by term; a
    forcing term whose decay rate equals the component's own rate
    raises the polynomial degree by one (this is the only way ``t^m``
    terms enter, and the degree can never exceed ``n - 2``).
    """
    q = markov_generator_direct(rs)
    lat = q.lattice
    size = len(lat)
    top_i = lat.top_index
    degree_cap = max(rs.n - 2, 0)
    solved: list[dict[Fraction, tuple[Fraction, ...]]] = [{} for _ in range(size)]
    for j in reversed(range(size)):
        own_rate = rs.psi(lat.elements[j])
        # Forcing from the already-solved components strictly above.
        forcing: dict[Fraction, list[Fraction]] = {}
        for k in lat.up_indices(j):
            if k == j:
                continue
            weight = q.get(j, k)
            if not weight:
                continue
            for lam, poly in solved[k].items():
                _poly_acc(forcing.setdefault(lam, []), poly, weight)
        terms: dict[Fraction, list[Fraction]] = {}
        if j == top_i:
            _poly_acc(terms.setdefault(own_rate, []), (_ONE,))
        for lam, poly in forcing.items():
            gap = own_rate - lam
            if gap == 0:
                # Resonant term: integrate the polynomial directly.
                _poly_acc(
                    terms.setdefault(own_rate, []), _poly_antiderivative(poly)
                )
            else:
                # Non-resonant: an exact antiderivative of p(s) e^{gap s}
                # is G(s) e^{gap s} with G = sum_r (-1)^r p^(r) / gap^(r+1).
                g: list[Fraction] = []
                current = _poly_trim(poly)
                sign = _ONE
                power = gap
                while current:
                    _poly_acc(g, current, sign / power)
                    current = _poly_derivative(current)
                    sign = -sign
                    power *= gap
                _poly_acc(terms.setdefault(lam, []), g)
                if g and g[0]:
                    _poly_acc(terms.setdefault(own_rate, []), (-g[0],))
        clean: dict[Fraction, tuple[Fraction, ...]] = {}
        for lam, poly in terms.items():
            trimmed = _poly_trim(poly)
            if trimmed:
                assert len(trimmed) - 1 <= degree_cap, (
                    "polynomial degree exceeded the structural bound"
                )
                clean[lam] = trimmed
        solved[j] = clean
    return ExpPolySolution(
        lat, {lat.elements[j]: solved[j] for j in range(size)}
    )


def e0(alpha: Rational, beta: Rational, t: float) -> float:
    """The two-rate kernel: ``t e^{-at}`` on the diagonal, else a quotient.

    Continuous and symmetric in the two rates; the case split is by
    exact rational equality.
    """
    a = Fraction(alpha)
    b = Fraction(beta)
    t = float(t)
    if a == b:
        return t * math.exp(-float(a) * t)
    return (math.exp(-float(b) * t) - math.exp(-float(a) * t)) / float(a - b)


# -- mode decomposition ------------------------------------------------------


@dataclass(frozen=True)
class Mode:
    """One independently decaying component of the measure flow.

    The component attached to partition ``A`` decays at rate ``psi(A)``
    and starts from ``sum_C weights[C] * R_C(omega0)``, where the sum
    runs over the partitions ``C`` below ``A``.  When an evaluated
    initial tensor is attached, ``value(t)`` returns the component at
    time ``t``.
    """

    partition: Partition
    decay_rate: Fraction
    weights: Mapping[Partition, Fraction]
    initial: np.ndarray | None = field(default=None, compare=False)

    def value(self, t: float) -> np.ndarray:
        if self.initial is None:
            raise ValueError(
                "mode was built without an initial tensor; pass recombined="
                " to mode_decomposition to evaluate it"
            )
        return math.exp(-float(self.decay_rate) * float(t)) * self.initial


def mode_decomposition(
    rs: RateSystem,
    tf: ThetaFamily | None = None,
    recombined: Callable[[Partition], np.ndarray] | None = None,
) -> dict[Partition, Mode]:
    """Split the flow into modes, one per partition.

    Each mode is a weighted combination of recombined initial measures
    that decays as a pure exponential; summing all modes at time zero
    restores the initial measure, and the zero-rate mode (the one at
    the finest partition) is the equilibrium.

    ``recombined`` may map each partition ``C`` to the tensor
    ``R_C(omega0)``; when given, each mode carries its evaluated
    initial tensor.
    """
    if tf is None:
        tf = theta(rs)
    table = tf.top
    lat = table.lattice
    out: dict[Partition, Mode] = {}
    for j, a in enumerate(lat.elements):
        weights: dict[Partition, Fraction] = {}
        for i in range(j + 1):
            if lat.leq(i, j):
                w = table.get(i, j)
                if w:
                    weights[lat.elements[i]] = w
        initial = None
        if recombined is not None:
            for c, w in weights.items():
                piece = float(w) * np.asarray(recombined(c), dtype=float)
                initial = piece if initial is None else initial + piece
        out[a] = Mode(a, rs.psi(a), weights, initial)
    return out
