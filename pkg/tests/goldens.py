"""Frozen golden patterns for the 4- and 5-site solution coefficients.

The grids below freeze the closed-form upper-triangular matrices of the
solution coefficients (theta) and their incidence-algebra inverses (eta)
on the interval lattices of four and five sites, written over symbolic
tokens.  Tokens are integer literals, symbols (``x``, ``x1`` .. ``x5``),
reciprocals (``1/x3``), and signed sums (``x5+x4-x2``).  The symbol values
are the resonance ratios xi(A) computed from a concrete rate system by
:func:`xi`.

Row/column order is the canonical element order of the lattices (block
count descending, blocks descending lexicographically), spelled out in
``FOUR_SITE_ORDER`` / ``FIVE_SITE_ORDER`` so tests can assert it.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Mapping

from recomb.lattice import parse_partition
from recomb.rates import RateSystem

FOUR_SITE_ORDER = [
    "1|2|3|4", "12|3|4", "1|23|4", "1|2|34",
    "123|4", "12|34", "1|234", "1234",
]

# theta on I({1..4}): the Moebius pattern with the (12|34) column scaled by
# x = rho(12|34) / (psi(1) - psi(12|34)), top column balancing rows to zero.
FOUR_SITE_THETA = [
    ["1", "-1", "-1", "-1", "1", "x", "1", "-x"],
    ["0", "1", "0", "0", "-1", "-x", "0", "x"],
    ["0", "0", "1", "0", "-1", "0", "-1", "1"],
    ["0", "0", "0", "1", "0", "-x", "-1", "x"],
    ["0", "0", "0", "0", "1", "0", "0", "-1"],
    ["0", "0", "0", "0", "0", "x", "0", "-x"],
    ["0", "0", "0", "0", "0", "0", "1", "-1"],
    ["0", "0", "0", "0", "0", "0", "0", "1"],
]

# eta on I({1..4}): the zeta pattern with the single diagonal entry at
# (12|34) replaced by 1/x.
FOUR_SITE_ETA = [
    ["1", "1", "1", "1", "1", "1", "1", "1"],
    ["0", "1", "0", "0", "1", "1", "0", "1"],
    ["0", "0", "1", "0", "1", "0", "1", "1"],
    ["0", "0", "0", "1", "0", "1", "1", "1"],
    ["0", "0", "0", "0", "1", "0", "0", "1"],
    ["0", "0", "0", "0", "0", "1/x", "0", "1"],
    ["0", "0", "0", "0", "0", "0", "1", "1"],
    ["0", "0", "0", "0", "0", "0", "0", "1"],
]

FIVE_SITE_ORDER = [
    "1|2|3|4|5", "12|3|4|5", "1|23|4|5", "1|2|34|5", "1|2|3|45",
    "123|4|5", "12|34|5", "12|3|45", "1|234|5", "1|23|45", "1|2|345",
    "1234|5", "123|45", "12|345", "1|2345", "12345",
]

# The five resonance ratios of the five-site table, as the partitions whose
# stripped core determines each one.
FIVE_SITE_X = {
    "x1": "12|34|5",
    "x2": "12|3|45",
    "x3": "1|23|45",
    "x4": "123|45",
    "x5": "12|345",
}

FIVE_SITE_THETA = [
    ["1", "-1", "-1", "-1", "-1", "1", "x1", "x2", "1", "x3", "1",
     "-x1", "-x4", "-x5", "-x3", "x5+x4-x2"],
    ["0", "1", "0", "0", "0", "-1", "-x1", "-x2", "0", "0", "0",
     "x1", "x4", "x5", "0", "x2-x4-x5"],
    ["0", "0", "1", "0", "0", "-1", "0", "0", "-1", "-x3", "0",
     "1", "x4", "0", "x3", "-x4"],
    ["0", "0", "0", "1", "0", "0", "-x1", "0", "-1", "0", "-1",
     "x1", "0", "x5", "1", "-x5"],
    ["0", "0", "0", "0", "1", "0", "0", "-x2", "0", "-x3", "-1",
     "0", "x4", "x5", "x3", "x2-x4-x5"],
    ["0", "0", "0", "0", "0", "1", "0", "0", "0", "0", "0",
     "-1", "-x4", "0", "0", "x4"],
    ["0", "0", "0", "0", "0", "0", "x1", "0", "0", "0", "0",
     "-x1", "0", "-x5", "0", "x5"],
    ["0", "0", "0", "0", "0", "0", "0", "x2", "0", "0", "0",
     "0", "-x4", "-x5", "0", "x5+x4-x2"],
    ["0", "0", "0", "0", "0", "0", "0", "0", "1", "0", "0",
     "-1", "0", "0", "-1", "1"],
    ["0", "0", "0", "0", "0", "0", "0", "0", "0", "x3", "0",
     "0", "-x4", "0", "-x3", "x4"],
    ["0", "0", "0", "0", "0", "0", "0", "0", "0", "0", "1",
     "0", "0", "-x5", "-1", "x5"],
    ["0", "0", "0", "0", "0", "0", "0", "0", "0", "0", "0",
     "1", "0", "0", "0", "-1"],
    ["0", "0", "0", "0", "0", "0", "0", "0", "0", "0", "0",
     "0", "x4", "0", "0", "-x4"],
    ["0", "0", "0", "0", "0", "0", "0", "0", "0", "0", "0",
     "0", "0", "x5", "0", "-x5"],
    ["0", "0", "0", "0", "0", "0", "0", "0", "0", "0", "0",
     "0", "0", "0", "1", "-1"],
    ["0", "0", "0", "0", "0", "0", "0", "0", "0", "0", "0",
     "0", "0", "0", "0", "1"],
]

FIVE_SITE_ETA = [
    ["1", "1", "1", "1", "1", "1", "1", "1", "1", "1", "1",
     "1", "1", "1", "1", "1"],
    ["0", "1", "0", "0", "0", "1", "1", "1", "0", "0", "0",
     "1", "1", "1", "0", "1"],
    ["0", "0", "1", "0", "0", "1", "0", "0", "1", "1", "0",
     "1", "1", "0", "1", "1"],
    ["0", "0", "0", "1", "0", "0", "1", "0", "1", "0", "1",
     "1", "0", "1", "1", "1"],
    ["0", "0", "0", "0", "1", "0", "0", "1", "0", "1", "1",
     "0", "1", "1", "1", "1"],
    ["0", "0", "0", "0", "0", "1", "0", "0", "0", "0", "0",
     "1", "1", "0", "0", "1"],
    ["0", "0", "0", "0", "0", "0", "1/x1", "0", "0", "0", "0",
     "1", "0", "1/x1", "0", "1"],
    ["0", "0", "0", "0", "0", "0", "0", "1/x2", "0", "0", "0",
     "0", "1/x2", "1/x2", "0", "1"],
    ["0", "0", "0", "0", "0", "0", "0", "0", "1", "0", "0",
     "1", "0", "0", "1", "1"],
    ["0", "0", "0", "0", "0", "0", "0", "0", "0", "1/x3", "0",
     "0", "1/x3", "0", "1", "1"],
    ["0", "0", "0", "0", "0", "0", "0", "0", "0", "0", "1",
     "0", "0", "1", "1", "1"],
    ["0", "0", "0", "0", "0", "0", "0", "0", "0", "0", "0",
     "1", "0", "0", "0", "1"],
    ["0", "0", "0", "0", "0", "0", "0", "0", "0", "0", "0",
     "0", "1/x4", "0", "0", "1"],
    ["0", "0", "0", "0", "0", "0", "0", "0", "0", "0", "0",
     "0", "0", "1/x5", "0", "1"],
    ["0", "0", "0", "0", "0", "0", "0", "0", "0", "0", "0",
     "0", "0", "0", "1", "1"],
    ["0", "0", "0", "0", "0", "0", "0", "0", "0", "0", "0",
     "0", "0", "0", "0", "1"],
]

_ATOM = re.compile(r"([+-]?)([^+-]+)")


def resolve(token: str, symbols: Mapping[str, Fraction]) -> Fraction:
    """Evaluate a golden-grid token over the given symbol values."""
    total = Fraction(0)
    consumed = 0
    for match in _ATOM.finditer(token):
        sign = -1 if match.group(1) == "-" else 1
        atom = match.group(2)
        if atom.startswith("1/"):
            value = 1 / symbols[atom[2:]]
        elif atom.isdigit():
            value = Fraction(int(atom))
        else:
            value = symbols[atom]
        total += sign * value
        consumed = match.end()
    if consumed != len(token):
        raise ValueError(f"unparsed token remainder in {token!r}")
    return total


def xi(rs: RateSystem, text: str) -> Fraction:
    """Resonance ratio of a partition: induced rate of its singleton-stripped
    core over the decay-rate gap of the core's subsystem."""
    p = parse_partition(text, rs.n)
    core = p.strip_singletons()
    support = tuple(sorted(core.support))
    induced = rs.marginal_rates(support)[core]
    return induced / (rs.psi_top(support) - rs.psi(core))


def four_site_symbols(rs: RateSystem) -> dict[str, Fraction]:
    return {"x": xi(rs, "12|34")}


def five_site_symbols(rs: RateSystem) -> dict[str, Fraction]:
    return {name: xi(rs, text) for name, text in FIVE_SITE_X.items()}
