"""Shared helpers for the test suite."""
from __future__ import annotations

import random
from fractions import Fraction

import numpy as np

from recomb.algebra import IncidenceFunction
from recomb.lattice import Lattice


def random_rational(rng: random.Random, allow_zero: bool = True) -> Fraction:
    """A small random rational, numerator up to 100, denominator up to 10."""
    num = rng.randint(0 if allow_zero else 1, 100)
    if allow_zero and rng.random() < 0.5:
        num = -num
    return Fraction(num, rng.randint(1, 10))


def random_incidence(
    lat: Lattice, rng: random.Random, invertible: bool = True
) -> IncidenceFunction:
    """Random incidence function with rational entries on comparable pairs."""
    values = {}
    for i, j in lat.comparable_pairs():
        if i == j and invertible:
            values[(i, j)] = random_rational(rng, allow_zero=False)
        else:
            values[(i, j)] = random_rational(rng)
    return IncidenceFunction(lat, values)


def expm_multiply(matrix: np.ndarray, t: float, vector: np.ndarray) -> np.ndarray:
    """e^{t*matrix} @ vector by scaling-and-squaring power series.

    Independent of the exact solver: only dense float arithmetic.  Accurate
    to ~1e-12 for the small generator matrices used in tests.
    """
    m = np.asarray(matrix, dtype=float) * t
    norm = np.linalg.norm(m, ord=np.inf)
    squarings = max(0, int(np.ceil(np.log2(max(norm, 1e-16) / 0.5))))
    m /= 2.0**squarings
    result = np.eye(m.shape[0])
    term = np.eye(m.shape[0])
    for k in range(1, 24):
        term = term @ m / k
        result += term
    for _ in range(squarings):
        result = result @ result
    return result @ np.asarray(vector, dtype=float)
