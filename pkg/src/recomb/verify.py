"""A self-contained invariant suite for one rate system.

Runs the cross-checks that tie the exact layer to its independent
oracles: generator identities, coefficient-table structure, reduction
behavior, and numeric agreement between the closed-form solution and
fixed-step integration of both ODE systems.  Every check is timed and
reported individually so a failure names the broken invariant.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .algebra import convolve, delta, invert_recursive
from .dynamics import (
    assemble_omega,
    integrate_a_ode,
    integrate_measure_ode,
    random_tensor,
)
from .lattice import format_partition
from .rates import Genericity, RateSystem
from .solver import (
    markov_generator_direct,
    markov_generator_via_theta,
    solve_universal,
    theta,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    seconds: float
    detail: str


@dataclass(frozen=True)
class VerificationReport:
    status: str  # "PASS" or "FAIL"
    classification: str
    witness: str | None
    checks: tuple[CheckResult, ...]

    def payload(self) -> dict:
        return {
            "status": self.status,
            "classification": self.classification,
            "witness": self.witness,
            "checks": [
                {
                    "name": c.name,
                    "passed": c.passed,
                    "seconds": round(c.seconds, 6),
                    "detail": c.detail,
                }
                for c in self.checks
            ],
        }


def _run(checks: list[CheckResult], name: str, body: Callable[[], str]) -> None:
    start = time.perf_counter()
    try:
        detail = body()
        checks.append(CheckResult(name, True, time.perf_counter() - start, detail))
    except AssertionError as exc:
        checks.append(
            CheckResult(name, False, time.perf_counter() - start, str(exc) or "failed")
        )


def run_verification(
    rs: RateSystem,
    t_grid: Sequence[float] = (0.5, 1.0),
    dt: float = 1e-3,
    seed: int = 0,
) -> VerificationReport:
    """Run every applicable invariant check on one rate system.

    Checks that require the coefficient tables (which only exist away
    from rate degeneracies) are skipped with an explanatory detail when
    the system is degenerate; the universal solver checks always run.
    """
    times = sorted(float(t) for t in t_grid)
    if not times or times[0] <= 0:
        raise ValueError("t_grid must contain positive times")
    report = rs.classify()
    generic = report.kind is not Genericity.DEGENERATE
    witness = None
    if report.witness is not None:
        sites, partition = report.witness
        witness = f"({{{','.join(map(str, sites))}}}, {format_partition(partition)})"

    checks: list[CheckResult] = []
    lat = rs.lattice
    q = markov_generator_direct(rs)
    sol = solve_universal(rs)

    def generator_structure() -> str:
        assert all(s == 0 for s in q.column_sums()), "columns must sum to zero"
        for i, j in lat.comparable_pairs():
            if i != j:
                assert q.get(i, j) >= 0, "negative off-diagonal entry"
        for i, p in enumerate(lat.elements):
            assert q.get(i, i) == -rs.psi(p), "diagonal must be the negated decay rate"
        return f"{len(lat)}x{len(lat)} generator well-formed"

    _run(checks, "generator-structure", generator_structure)

    def generator_equality() -> str:
        if not generic:
            return "skipped: coefficient tables do not exist at a degeneracy"
        assert markov_generator_via_theta(rs) == q, (
            "direct and conjugated generators differ"
        )
        return "direct == conjugated, entrywise exact"

    _run(checks, "generator-equality", generator_equality)

    def coefficient_tables() -> str:
        if not generic:
            return "skipped: coefficient tables do not exist at a degeneracy"
        tf = theta(rs)
        top = lat.top_index
        matrix = tf.top.matrix()
        for i, row in enumerate(matrix):
            expected = 1 if i == top else 0
            assert sum(row) == expected, "coefficient rows must sum to the start law"
        inverse = invert_recursive(tf.top)
        assert convolve(tf.top, inverse) == delta(lat), "inverse identity failed"
        return "row sums and two-sided inverse exact"

    _run(checks, "coefficient-tables", coefficient_tables)

    def reduction() -> str:
        if not generic:
            return "skipped: coefficient tables do not exist at a degeneracy"
        tf = theta(rs)
        checked = 0
        for i, j in lat.comparable_pairs():
            b = lat.elements[j]
            dropped = b.singleton_sites()
            if not dropped or len(dropped) == b.n:
                continue
            a = lat.elements[i]
            kept = sorted(b.support - set(dropped))
            sub = tf.table(kept)
            assert tf.value(a, b) == sub.value(a.restrict(kept), b.restrict(kept)), (
                f"reduction failed at ({format_partition(a)}, {format_partition(b)})"
            )
            checked += 1
        return f"{checked} singleton-stripped entries match their subsystems"

    _run(checks, "reduction", reduction)

    def solution_total() -> str:
        assert sol.total() == {Fraction(0): (Fraction(1),)}, (
            "solution coefficients must sum to one identically"
        )
        return "sum of coefficients is the constant 1, symbolically"

    _run(checks, "solution-total", solution_total)

    def solution_nonneg() -> str:
        worst = 0.0
        for t in np.linspace(0.0, max(times[-1], 10.0), 101):
            worst = min(worst, sol.vector(float(t)).min())
        assert worst >= -1e-12, f"coefficient dipped to {worst}"
        return f"min sampled coefficient {worst:.3e}"

    _run(checks, "solution-nonneg", solution_nonneg)

    def solver_vs_coefficient_rk4() -> str:
        rec = integrate_a_ode(rs, times[-1], dt)
        worst = 0.0
        for t in times:
            idx = int(np.argmin(np.abs(rec.times - t)))
            gap = float(np.abs(rec.values[idx] - sol.vector(rec.times[idx])).max())
            worst = max(worst, gap)
        assert worst < 1e-8, f"numeric integration disagrees by {worst:.3e}"
        return f"max |closed form - RK4| = {worst:.3e}"

    _run(checks, "solver-vs-coefficient-rk4", solver_vs_coefficient_rk4)

    def measure_cross_check() -> str:
        omega0 = random_tensor((2,) * rs.n, seed)
        horizon = min(times[-1], 1.0)
        rec = integrate_measure_ode(rs, omega0, horizon, dt)
        closed = assemble_omega(sol, omega0, horizon)
        gap = float(np.abs(rec.values[-1].reshape(omega0.shape) - closed.values).max())
        assert gap < 1e-6, f"measure flow disagrees by {gap:.3e}"
        assert rec.row_sum_error() < 1e-10, "mass not conserved"
        assert float(rec.values.min()) >= -1e-12, "positivity violated"
        return f"max |assembled - integrated| = {gap:.3e} at t={horizon}"

    _run(checks, "measure-cross-check", measure_cross_check)

    status = "PASS" if all(c.passed for c in checks) else "FAIL"
    return VerificationReport(
        status=status,
        classification=report.kind.name,
        witness=witness,
        checks=tuple(checks),
    )
