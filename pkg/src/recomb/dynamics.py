"""Measure dynamics driven by partition rates, and its stochastic twin.

A probability tensor on a finite product space evolves by repeatedly
splitting along partitions and reassembling independent block marginals.
This module provides the recombinator that does one such reassembly, the
closed-form assembly of the evolved tensor from solution coefficients,
fixed-step integrators for both the coefficient system and the measure
system (independent numeric cross-checks of the exact solver), Gillespie
simulation of the partition-valued jump process, and a convergence report
that measures the exponential approach to the fully decoupled product
measure.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .lattice import Lattice, Partition, format_partition
from .rates import RateSystem
from .solver import ExpPolySolution, GeneratorMatrix

MAX_TENSOR_ENTRIES = 10**6
_NEGATIVE_SLACK = 1e-12


# -- probability tensors -------------------------------------------------------


class ProbabilityTensor:
    """Dense nonnegative tensor over a finite product space.

    Site ``i`` of a partition addresses axis ``i - 1``; the axis lengths
    are the per-site alphabet sizes.  Entries must be nonnegative up to a
    tiny numeric slack, and the total number of entries is capped at
    ``MAX_TENSOR_ENTRIES``.  Total mass is usually 1 but any positive
    mass is accepted (the recombinator is defined on the whole positive
    cone).
    """

    __slots__ = ("values",)

    def __init__(self, values) -> None:
        arr = np.asarray(values, dtype=float)
        if arr.ndim == 0:
            raise ValueError("a tensor needs at least one site")
        if arr.size > MAX_TENSOR_ENTRIES:
            raise ValueError(
                f"state space has {arr.size} entries, cap is {MAX_TENSOR_ENTRIES}"
            )
        low = float(arr.min()) if arr.size else 0.0
        if low < -_NEGATIVE_SLACK:
            raise ValueError(f"negative entry {low} in tensor")
        self.values = arr

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.values.shape)

    @property
    def n(self) -> int:
        """Number of sites (tensor axes)."""
        return self.values.ndim

    def total_mass(self) -> float:
        return float(self.values.sum())

    def is_probability(self, tol: float = 1e-9) -> bool:
        return abs(self.total_mass() - 1.0) <= tol

    def marginal(self, sites: Sequence[int]) -> "ProbabilityTensor":
        """Sum out every site not listed; kept axes stay in site order."""
        keep = sorted(set(sites))
        if not keep:
            raise ValueError("marginal needs a nonempty site subset")
        if keep[0] < 1 or keep[-1] > self.n:
            raise ValueError(f"sites {keep} out of range 1..{self.n}")
        out = np.einsum(self.values, list(range(self.n)), [s - 1 for s in keep])
        return ProbabilityTensor(out)

    def l1_distance(self, other: "ProbabilityTensor") -> float:
        return float(np.abs(self.values - other.values).sum())

    def flat(self) -> list[float]:
        return [float(v) for v in self.values.reshape(-1)]

    @classmethod
    def uniform(cls, shape: Sequence[int]) -> "ProbabilityTensor":
        size = math.prod(shape)
        return cls(np.full(tuple(shape), 1.0 / size))

    @classmethod
    def point_mass(cls, shape: Sequence[int], index: Sequence[int]) -> "ProbabilityTensor":
        arr = np.zeros(tuple(shape))
        arr[tuple(index)] = 1.0
        return cls(arr)

    @classmethod
    def from_flat(cls, shape: Sequence[int], values: Sequence[float]) -> "ProbabilityTensor":
        arr = np.asarray(list(values), dtype=float)
        if arr.size != math.prod(shape):
            raise ValueError(
                f"{arr.size} values do not fill a tensor of shape {tuple(shape)}"
            )
        return cls(arr.reshape(tuple(shape)))

    def __repr__(self) -> str:  # pragma: no cover
        return f"ProbabilityTensor(shape={self.shape}, mass={self.total_mass():.6g})"


def random_tensor(shape: Sequence[int], seed: int) -> ProbabilityTensor:
    """A reproducible random probability tensor with full support."""
    rng = np.random.default_rng(seed)
    arr = rng.random(tuple(shape)) + 1e-3
    return ProbabilityTensor(arr / arr.sum())


# -- recombinator ---------------------------------------------------------------


def _recombine_array(values: np.ndarray, blocks: Sequence[Sequence[int]]) -> np.ndarray:
    """Product of block marginals, rescaled so total mass is preserved."""
    if len(blocks) == 1:
        return values.copy()
    n = values.ndim
    mass = float(values.sum())
    operands: list = []
    axis_groups = []
    for block in blocks:
        axes = [s - 1 for s in block]
        axis_groups.append(axes)
        operands.append(np.einsum(values, list(range(n)), axes))
        operands.append(axes)
    out = np.einsum(*operands, list(range(n)))
    out *= mass ** (1 - len(blocks))
    return out


def recombinator(partition: Partition, omega: ProbabilityTensor) -> ProbabilityTensor:
    """Replace a tensor by the product of its block marginals.

    The blocks of the partition become independent: the result is the
    tensor product of the per-block marginals, rescaled so the total mass
    is unchanged.  A single block returns the input itself.
    """
    if partition.n != omega.n or partition.support != set(range(1, omega.n + 1)):
        raise ValueError(
            f"partition on sites {sorted(partition.support)} does not match a "
            f"{omega.n}-site tensor"
        )
    if omega.total_mass() <= 0.0:
        raise ValueError("recombinator needs positive total mass")
    return ProbabilityTensor(_recombine_array(omega.values, partition.blocks))


def assemble_omega(
    coeffs: ExpPolySolution, omega0: ProbabilityTensor, t: float
) -> ProbabilityTensor:
    """Evolved tensor as the coefficient-weighted sum of recombinations.

    Evaluates every partition's coefficient at time ``t`` and combines the
    recombinations of the initial tensor with those weights.  The weights
    form a probability vector, so total mass is preserved.
    """
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    acc = np.zeros(omega0.shape)
    for p, weight in coeffs.evaluate_all(float(t)).items():
        if weight != 0.0:
            acc += weight * _recombine_array(omega0.values, p.blocks)
    acc[np.abs(acc) < 1e-300] = 0.0
    return ProbabilityTensor(acc)


# -- trajectory records -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """A fixed-grid trajectory of either coefficient rows or tensor rows.

    ``columns`` labels coefficient trajectories (one column per
    partition); ``shape`` tags measure trajectories (each row is a
    flattened tensor).  ``metadata`` records method, step size, and seed.
    """

    times: np.ndarray
    values: np.ndarray
    columns: tuple[str, ...] | None = None
    shape: tuple[int, ...] | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.ndim != 1 or np.any(np.diff(times) <= 0):
            raise ValueError("times must be one-dimensional and strictly increasing")
        if values.shape[0] != times.shape[0]:
            raise ValueError("one value row per time point required")
        if self.columns is not None and values.shape[1] != len(self.columns):
            raise ValueError("column labels do not match row width")
        if self.shape is not None and values.shape[1] != math.prod(self.shape):
            raise ValueError("shape does not match row width")

    def row_sum_error(self) -> float:
        """Largest deviation of any row sum from one."""
        return float(np.abs(self.values.sum(axis=1) - 1.0).max())

    def final(self) -> np.ndarray:
        return self.values[-1]

    def at(self, t: float) -> np.ndarray:
        """The recorded row at grid time ``t`` (must lie on the grid)."""
        hits = np.nonzero(np.isclose(self.times, t, rtol=0.0, atol=1e-12))[0]
        if hits.size == 0:
            raise KeyError(f"time {t} is not on the recorded grid")
        return self.values[hits[0]]

    def tensor_at(self, t: float) -> ProbabilityTensor:
        if self.shape is None:
            raise ValueError("not a measure trajectory")
        return ProbabilityTensor(self.at(t).reshape(self.shape))


def _rk4(
    state: np.ndarray,
    deriv: Callable[[np.ndarray], np.ndarray],
    t_end: float,
    dt: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Classic fixed-step fourth-order Runge--Kutta from 0 to ``t_end``.

    Returns the time grid and the full state at every grid point.  The
    step count is chosen so the grid lands exactly on ``t_end`` with a
    step no larger than ``dt``.
    """
    if dt <= 0:
        raise ValueError(f"step size must be positive, got {dt}")
    if dt > t_end:
        raise ValueError(f"step size {dt} exceeds the horizon {t_end}")
    steps = max(1, math.ceil(t_end / dt - 1e-12))
    h = t_end / steps
    times = np.linspace(0.0, t_end, steps + 1)
    rows = np.empty((steps + 1, state.size))
    rows[0] = state
    y = state.astype(float).copy()
    for k in range(steps):
        k1 = deriv(y)
        k2 = deriv(y + 0.5 * h * k1)
        k3 = deriv(y + 0.5 * h * k2)
        k4 = deriv(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rows[k + 1] = y
    return times, rows


# -- coefficient-system integrator --------------------------------------------------


def integrate_a_ode(rs: RateSystem, t_end: float, dt: float = 1e-3) -> TrajectoryRecord:
    """Integrate the coupled coefficient system for every site subset.

    The coefficient vector of the full system is driven by the marginal
    coefficient vectors of all sub-site systems (one per nonempty subset
    of sites), so all of them are integrated simultaneously: the rate of
    a coefficient is its subsystem's top decay rate times itself, plus,
    for every proper coarsening with positive marginal rate, that rate
    times the product of the block coefficients.  Starts from the point
    mass on the one-block partition of every subsystem and records the
    full-system rows.
    """
    subsets = rs.subsets()
    offsets: dict[tuple[int, ...], int] = {}
    lattices: dict[tuple[int, ...], Lattice] = {}
    total = 0
    for u in subsets:
        lat = rs.sublattice(u)
        offsets[u] = total
        lattices[u] = lat
        total += len(lat)

    psi_vec = np.zeros(total)
    start = np.zeros(total)
    by_width: dict[int, tuple[list[float], list[int], list[list[int]]]] = {}
    for u in subsets:
        lat = lattices[u]
        base = offsets[u]
        psi_vec[base : base + len(lat)] = float(rs.psi_top(u))
        start[base + lat.top_index] = 1.0
        marginal = rs.marginal_rates(u)
        for b in lat.elements:
            rate = marginal.get(b, Fraction(0))
            if b == lat.top or rate == 0:
                continue
            block_info = [
                (offsets[tuple(block)], lattices[tuple(block)]) for block in b.blocks
            ]
            width = len(block_info)
            rates, targets, cols = by_width.setdefault(width, ([], [], []))
            for i, a in enumerate(lat.elements):
                if not a.refines(b):
                    continue
                rates.append(float(rate))
                targets.append(base + i)
                cols.append(
                    [
                        off + sub.index_of(a.restrict(sub.top.support))
                        for off, sub in block_info
                    ]
                )

    compiled = [
        (np.array(rates), np.array(targets), np.array(cols))
        for rates, targets, cols in by_width.values()
    ]

    def deriv(vec: np.ndarray) -> np.ndarray:
        out = -psi_vec * vec
        for rates, targets, cols in compiled:
            products = rates * np.multiply.reduce(vec[cols], axis=1)
            out += np.bincount(targets, weights=products, minlength=total)
        return out

    times, rows = _rk4(start, deriv, float(t_end), float(dt))
    full = rs.sites
    base = offsets[full]
    lat = lattices[full]
    return TrajectoryRecord(
        times=times,
        values=rows[:, base : base + len(lat)],
        columns=tuple(format_partition(p) for p in lat.elements),
        metadata={"method": "rk4", "dt": float(t_end) / (len(times) - 1), "seed": None},
    )


# -- measure-system integrator --------------------------------------------------------


def integrate_measure_ode(
    rs: RateSystem, omega0: ProbabilityTensor, t_end: float, dt: float = 1e-3
) -> TrajectoryRecord:
    """Integrate the measure system directly on the tensor.

    The tensor's rate of change is the rate-weighted sum, over all
    partitions, of the recombination minus the identity.  Mass is
    conserved along the flow; rows are recorded as flattened tensors.
    """
    if omega0.n != rs.n:
        raise ValueError(f"tensor has {omega0.n} sites, rates have {rs.n}")
    terms = [
        (p.blocks, float(rate))
        for p, rate in rs.rho.items()
        if rate != 0 and p.size > 1
    ]
    shape = omega0.shape

    def deriv(flat: np.ndarray) -> np.ndarray:
        w = flat.reshape(shape)
        out = np.zeros(shape)
        for blocks, rate in terms:
            out += rate * (_recombine_array(w, blocks) - w)
        return out.reshape(-1)

    times, rows = _rk4(
        omega0.values.reshape(-1).copy(), deriv, float(t_end), float(dt)
    )
    return TrajectoryRecord(
        times=times,
        values=rows,
        shape=shape,
        metadata={"method": "rk4", "dt": float(t_end) / (len(times) - 1), "seed": None},
    )


# -- stochastic twin ---------------------------------------------------------------------


def simulate_partitioning(
    q: GeneratorMatrix, t: float, samples: int, seed: int
) -> dict[Partition, float]:
    """Empirical distribution of the partition-valued jump process.

    Each sample starts at the one-block partition and follows the
    continuous-time chain of the generator: in a state with decay rate
    ``r`` it waits an exponential time with rate ``r`` and then jumps to
    a refinement chosen with probability proportional to the generator
    entry.  States with zero decay rate are absorbing.  Sample ``i``
    draws from its own counter-based random stream derived from ``seed``,
    so results are reproducible and order-independent.
    """
    if samples < 1:
        raise ValueError(f"need at least one sample, got {samples}")
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    lat = q.lattice
    size = len(lat)
    exits = [0.0] * size
    targets: list[list[int]] = [[] for _ in range(size)]
    cumulative: list[list[float]] = [[] for _ in range(size)]
    for j in range(size):
        total = -q.get(j, j)
        exits[j] = float(total)
        if total == 0:
            continue
        acc = Fraction(0)
        for i in range(size):
            if i == j:
                continue
            entry = q.get(i, j)
            if entry != 0:
                acc += entry / total
                targets[j].append(i)
                cumulative[j].append(float(acc))
        cumulative[j][-1] = 1.0

    key = int(seed) % (1 << 128)
    counts = np.zeros(size, dtype=np.int64)
    horizon = float(t)
    for index in range(samples):
        gen = np.random.Generator(np.random.Philox(key=key, counter=[0, 0, 0, index]))
        state = lat.top_index
        clock = 0.0
        while exits[state] > 0.0:
            clock += gen.standard_exponential() / exits[state]
            if clock >= horizon:
                break
            pick = bisect_right(cumulative[state], gen.random())
            state = targets[state][min(pick, len(targets[state]) - 1)]
        counts[state] += 1
    return {p: counts[i] / samples for i, p in enumerate(lat.elements)}


# -- convergence report ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    """Distances to the fully decoupled limit and their fitted decay rate.

    ``reference_rate`` is the smallest positive decay rate whose mode
    actually appears in the evolved tensor (None when every mode with a
    positive rate vanishes, e.g. for zero rates).
    """

    times: np.ndarray
    distances: np.ndarray
    fitted_rate: float
    reference_rate: float | None

    def relative_gap(self) -> float | None:
        if self.reference_rate is None or self.reference_rate == 0:
            return None
        return abs(self.fitted_rate - self.reference_rate) / self.reference_rate


def convergence_report(
    coeffs: ExpPolySolution,
    omega0: ProbabilityTensor,
    t_grid: Sequence[float],
) -> ConvergenceReport:
    """Measure the exponential approach to the product of site marginals.

    Evaluates the evolved tensor on the time grid, records the L1
    distance to the recombination along the finest partition, and fits a
    straight line to the log-distances.  The negated slope is the fitted
    decay rate; it should track the slowest surviving mode.
    """
    times = np.asarray(list(t_grid), dtype=float)
    if times.ndim != 1 or times.size < 1 or np.any(np.diff(times) <= 0):
        raise ValueError("t_grid must be strictly increasing and nonempty")
    lat = coeffs.lattice
    recombined = {
        p: _recombine_array(omega0.values, p.blocks) for p in lat.elements
    }
    limit = recombined[lat.bottom]
    distances = np.empty(times.size)
    for k, t in enumerate(times):
        acc = np.zeros(omega0.shape)
        for p, weight in coeffs.evaluate_all(float(t)).items():
            if weight != 0.0:
                acc += weight * recombined[p]
        distances[k] = np.abs(acc - limit).sum()

    mask = distances > 1e-300
    if int(mask.sum()) >= 2:
        slope = np.polyfit(times[mask], np.log(distances[mask]), 1)[0]
        fitted = -float(slope)
    else:
        fitted = 0.0

    surviving: set[Fraction] = set()
    for p, term in coeffs.items():
        for lam, poly in term.items():
            if lam <= 0 or lam in surviving:
                continue
            for degree in range(len(poly)):
                tensor = np.zeros(omega0.shape)
                for pp, tt in coeffs.items():
                    c = tt.get(lam, ())
                    if degree < len(c) and c[degree] != 0:
                        tensor += float(c[degree]) * recombined[pp]
                if np.abs(tensor).max() > 1e-12:
                    surviving.add(lam)
                    break
    reference = float(min(surviving)) if surviving else None
    return ConvergenceReport(
        times=times,
        distances=distances,
        fitted_rate=fitted,
        reference_rate=reference,
    )
