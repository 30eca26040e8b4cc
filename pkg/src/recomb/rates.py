"""Recombination rate systems and the decay functionals derived from them.

A :class:`RateSystem` attaches a nonnegative exact-rational rate to every
element of a partition lattice.  From it the module derives, per subset
U of sites: the induced (marginal) rates, the recursive decay rates psi,
the linear reference rates chi, the split-count identities relating the
two, and the genericity classification that decides whether the
exponential solution machinery applies.
"""
from __future__ import annotations

import itertools
import json
import random
import warnings
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping

from .lattice import (
    Lattice,
    LatticeKind,
    Partition,
    enumerate_lattice,
    induced_lattice,
    parse_partition,
)

__all__ = [
    "Genericity",
    "GenericityReport",
    "RateSystem",
    "RateFileError",
    "parse_rate_file",
    "format_rate_file",
    "random_rate_system",
]

Rational = int | Fraction
_ZERO = Fraction(0)


class Genericity(str, Enum):
    """How safe the decay rates are for the exponential solution recursions."""

    STRICTLY_GENERIC = "strictly-generic"
    EXTENDED_GENERIC = "extended-generic"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class GenericityReport:
    """Classification plus, when degenerate, a witnessing collision.

    ``witness`` is a pair (sites, partition) with the decay rate of the
    one-block partition on ``sites`` equal to that of ``partition``.
    """

    kind: Genericity
    witness: tuple[tuple[int, ...], Partition] | None = None


def _mask_of(sites: Iterable[int]) -> int:
    mask = 0
    for s in sites:
        mask |= 1 << (s - 1)
    return mask


class RateSystem:
    """Nonnegative rational rates on a partition lattice, with derived caches."""

    def __init__(self, lattice: Lattice, rho: Mapping[Partition, Rational]) -> None:
        self.lattice = lattice
        rates: dict[Partition, Fraction] = {p: _ZERO for p in lattice.elements}
        for p, v in rho.items():
            if p not in lattice.index:
                raise ValueError(f"{p} is not an element of the lattice")
            v = Fraction(v)
            if v < 0:
                raise ValueError(f"negative rate {v} for {p}")
            rates[p] = v
        top = lattice.top
        if rates[top]:
            warnings.warn(
                f"rate {rates[top]} on the top partition {top} has no effect"
                " and is forced to 0",
                UserWarning,
                stacklevel=2,
            )
            rates[top] = _ZERO
        self.rho: dict[Partition, Fraction] = rates
        self._marginals: dict[int, dict[Partition, Fraction]] = {}
        self._psi_top: dict[int, Fraction] = {}
        self._classification: GenericityReport | None = None

    # -- basic accessors ----------------------------------------------------

    @property
    def n(self) -> int:
        return self.lattice.n

    @property
    def sites(self) -> tuple[int, ...]:
        return self.lattice.support

    def rate(self, p: Partition) -> Fraction:
        return self.rho[p]

    @property
    def total_rate(self) -> Fraction:
        return sum(self.rho.values(), _ZERO)

    def rate_vector(self) -> list[Fraction]:
        """Rates in lattice index order."""
        return [self.rho[p] for p in self.lattice.elements]

    # -- subsystems ----------------------------------------------------------

    def sublattice(self, sites: Iterable[int]) -> Lattice:
        """The lattice induced on a subset of sites."""
        return induced_lattice(self.lattice, sites)

    def subsets(self) -> list[tuple[int, ...]]:
        """All nonempty site subsets, smallest first, then lexicographic."""
        out: list[tuple[int, ...]] = []
        sites = self.sites
        for size in range(1, len(sites) + 1):
            out.extend(itertools.combinations(sites, size))
        return out

    def marginal_rates(self, sites: Iterable[int]) -> dict[Partition, Fraction]:
        """Induced rates on a subsystem: sum rates over restriction fibers."""
        keep = tuple(sorted(set(sites)))
        if not keep:
            raise ValueError("marginal rates need a nonempty site subset")
        mask = _mask_of(keep)
        cached = self._marginals.get(mask)
        if cached is not None:
            return cached
        out: dict[Partition, Fraction] = {
            p: _ZERO for p in self.sublattice(keep).elements
        }
        for b, r in self.rho.items():
            if r:
                out[b.restrict(keep)] += r
        self._marginals[mask] = out
        return out

    def psi_top(self, sites: Iterable[int]) -> Fraction:
        """Decay rate of the one-block partition on the given sites.

        Equals the total induced rate of everything below the top of the
        subsystem, i.e. the total rate of partitions splitting the subset.
        """
        keep = tuple(sorted(set(sites)))
        mask = _mask_of(keep)
        cached = self._psi_top.get(mask)
        if cached is not None:
            return cached
        if len(keep) <= 1:
            total = _ZERO
        else:
            total = _ZERO
            keepset = frozenset(keep)
            for b, r in self.rho.items():
                if r and b.restrict(keepset).size >= 2:
                    total += r
        self._psi_top[mask] = total
        return total

    # -- decay functionals ----------------------------------------------------

    def psi(self, p: Partition) -> Fraction:
        """Recursive decay rate: sum of top decay rates over the blocks."""
        return sum((self.psi_top(block) for block in p.blocks), _ZERO)

    def chi(self, p: Partition) -> Fraction:
        """Linear reference rate: total induced rate outside the filter above p."""
        support = tuple(sorted(p.support))
        total = _ZERO
        for b, r in self.marginal_rates(support).items():
            if r and not p.refines(b):
                total += r
        return total

    def psi_via_splits(self, p: Partition) -> Fraction:
        """Split-count route: sum over B of (#parts of p split by B) * rate."""
        total = _ZERO
        for b, r in self.marginal_rates(tuple(sorted(p.support))).items():
            if r:
                total += p.parts_split_by(b) * r
        return total

    def psi_chi_gap(self, p: Partition) -> Fraction:
        """The excess of psi over chi: sum of (m-1) * rate over m-fold splitters."""
        gap = _ZERO
        for b, r in self.marginal_rates(tuple(sorted(p.support))).items():
            if r:
                m = p.parts_split_by(b)
                if m >= 2:
                    gap += (m - 1) * r
        psi, chi = self.psi(p), self.chi(p)
        assert gap >= 0 and psi == chi + gap, (
            f"decay-rate bookkeeping broke at {p}: psi={psi}, chi={chi}, gap={gap}"
        )
        return gap

    def psi_family(self) -> dict[tuple[tuple[int, ...], Partition], Fraction]:
        """psi^U(A) for every nonempty subset U and every A in its sublattice."""
        out: dict[tuple[tuple[int, ...], Partition], Fraction] = {}
        for u in self.subsets():
            for p in self.sublattice(u).elements:
                out[(u, p)] = self.psi(p)
        return out

    def chi_family(self) -> dict[tuple[tuple[int, ...], Partition], Fraction]:
        """chi^U(A) for every nonempty subset U and every A in its sublattice."""
        out: dict[tuple[tuple[int, ...], Partition], Fraction] = {}
        for u in self.subsets():
            for p in self.sublattice(u).elements:
                out[(u, p)] = self.chi(p)
        return out

    # -- genericity ------------------------------------------------------------

    def classify(self) -> GenericityReport:
        """Classify the decay-rate family for the solution recursions.

        Strictly generic: the top-system decay rates are pairwise
        distinct.  Extended generic: not strict, but no subsystem's
        one-block decay rate collides with another decay rate inside that
        subsystem (this is exactly what the recursions divide by).
        Degenerate: such a collision exists; the first one found (subsets
        scanned smallest first) is returned as the witness.
        """
        if self._classification is not None:
            return self._classification
        witness: tuple[tuple[int, ...], Partition] | None = None
        for u in self.subsets():
            if len(u) < 2:
                continue
            top_rate = self.psi_top(u)
            sub = self.sublattice(u)
            for p in sub.elements:
                if p == sub.top:
                    continue
                if self.psi(p) == top_rate:
                    witness = (u, p)
                    break
            if witness:
                break
        if witness is not None:
            report = GenericityReport(Genericity.DEGENERATE, witness)
        else:
            seen: set[Fraction] = set()
            strict = True
            for p in self.lattice.elements:
                v = self.psi(p)
                if v in seen:
                    strict = False
                    break
                seen.add(v)
            report = GenericityReport(
                Genericity.STRICTLY_GENERIC if strict else Genericity.EXTENDED_GENERIC
            )
        self._classification = report
        return report

    # -- derived systems ---------------------------------------------------------

    def restricted(self, sites: Iterable[int]) -> "RateSystem":
        """Standalone subsystem on the given sites, relabeled to 1..k."""
        keep = tuple(sorted(set(sites)))
        relabel = {site: i + 1 for i, site in enumerate(keep)}

        def move(p: Partition) -> Partition:
            return Partition([relabel[s] for s in block] for block in p.blocks)

        if self.lattice.kind is LatticeKind.GENERATED:
            sub = Lattice(
                LatticeKind.GENERATED,
                (move(p) for p in self.sublattice(keep).elements),
            )
        else:
            sub = enumerate_lattice(self.lattice.kind, len(keep))
        rho = {move(p): r for p, r in self.marginal_rates(keep).items()}
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # the induced top rate is dropped
            return RateSystem(sub, rho)

    def __repr__(self) -> str:
        return (
            f"RateSystem({self.lattice.kind.value} lattice on {self.n} sites,"
            f" total rate {self.total_rate})"
        )


class RateFileError(ValueError):
    """A rate file failed to parse; carries the offending line when known."""

    def __init__(self, message: str, line: int | None = None) -> None:
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


def _parse_rational(text: str) -> Fraction:
    return Fraction(str(text).strip())


def _build_system(
    n: object, kind: object, entries: list[tuple[str, str, int | None]]
) -> RateSystem:
    if not isinstance(n, int) or isinstance(n, bool):
        raise RateFileError(f"'n' must be an integer, got {n!r}")
    if kind not in ("interval", "full"):
        raise RateFileError(f"'lattice' must be 'interval' or 'full', got {kind!r}")
    try:
        lattice = enumerate_lattice(str(kind), n)
    except ValueError as exc:
        raise RateFileError(str(exc)) from None
    rho: dict[Partition, Fraction] = {}
    for key, value, line in entries:
        try:
            p = parse_partition(key, n=n)
        except ValueError as exc:
            raise RateFileError(f"bad partition {key!r}: {exc}", line) from None
        if p not in lattice.index:
            raise RateFileError(
                f"partition {key!r} is not in the {kind} lattice", line
            )
        if p in rho:
            raise RateFileError(f"duplicate rate for partition {key!r}", line)
        try:
            v = _parse_rational(value)
        except (ValueError, ZeroDivisionError):
            raise RateFileError(f"bad rational {value!r}", line) from None
        if v < 0:
            raise RateFileError(f"negative rate {value!r} for {key!r}", line)
        rho[p] = v
    return RateSystem(lattice, rho)


def parse_rate_file(text: str) -> RateSystem:
    """Parse a rate file.

    Two syntaxes are accepted.  JSON: an object with keys ``n``,
    ``lattice`` ('interval' or 'full') and ``rates`` (partition string ->
    rational string or number).  Config style: ``key = value`` lines with
    ``n`` and ``lattice`` keys, optional ``[rates]`` section headers and
    ``#`` comments, one ``partition = rational`` entry per line.
    Unlisted partitions get rate 0.
    """
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise RateFileError(f"invalid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise RateFileError("JSON rate file must be an object")
        rates = doc.get("rates", {})
        if not isinstance(rates, dict):
            raise RateFileError("'rates' must be an object")
        entries = [(str(k), str(v), None) for k, v in rates.items()]
        return _build_system(doc.get("n"), doc.get("lattice"), entries)

    n: object = None
    kind: object = None
    entries: list[tuple[str, str, int | None]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            continue  # section header, decorative
        if "=" not in line:
            raise RateFileError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise RateFileError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if key == "n":
            try:
                n = int(value)
            except ValueError:
                raise RateFileError(f"bad integer {value!r} for 'n'", lineno) from None
        elif key == "lattice":
            kind = value
        else:
            entries.append((key, value, lineno))
    if n is None:
        raise RateFileError("missing 'n'")
    if kind is None:
        raise RateFileError("missing 'lattice'")
    return _build_system(n, kind, entries)


def format_rate_file(rs: RateSystem) -> str:
    """Emit a rate system in the config syntax (only nonzero rates listed)."""
    kind = rs.lattice.kind.value
    lines = [f"n = {rs.n}", f"lattice = {kind}", "", "[rates]"]
    for p in rs.lattice.elements:
        if rs.rho[p]:
            lines.append(f"{p} = {rs.rho[p]}")
    return "\n".join(lines) + "\n"


def random_rate_system(lattice: Lattice, seed: int) -> RateSystem:
    """Random rational rates (numerators 1..100, denominators 1..10).

    Every partition below the top gets a positive rate; the draw is
    reproducible from the seed.
    """
    rng = random.Random(seed)
    rho = {
        p: Fraction(rng.randint(1, 100), rng.randint(1, 10))
        for p in lattice.elements
        if p != lattice.top
    }
    return RateSystem(lattice, rho)
