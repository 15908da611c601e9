"""Processor grids and the communication cost of the 3D algorithm.

A p1 x p2 x p3 grid (p1 p2 p3 = P, axes aligned to n1, n2, n3) gives each
processor an A block gathered over its size-p3 fiber, a B block gathered over
its size-p1 fiber, and a C contribution reduce-scattered over its size-p2
fiber, for a per-processor cost of

    (1 - 1/p3) n1n2/(p1p2) + (1 - 1/p1) n2n3/(p2p3) + (1 - 1/p2) n1n3/(p1p3)

words.  The grid minimizing this attains the lower bound whenever the analytic
minimizer is integral; exhaustive search over factor triples confirms the
analytic choice independently.  All cost arithmetic is exact rationals since
competing grids can differ by tiny margins.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .bounds import ProblemShape, case_of
from .exact import Value, root_value, sqrt_value


@dataclass(frozen=True)
class ProcessorGrid:
    """Factor triple aligned to (n1, n2, n3): p1 splits rows of A/C, p2 the
    contraction dimension, p3 columns of B/C."""

    p1: int
    p2: int
    p3: int

    def __post_init__(self):
        for p in self.dims:
            if not isinstance(p, int) or isinstance(p, bool) or p < 1:
                raise ValueError(f"grid factors must be positive integers, got {self.dims}")

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.p1, self.p2, self.p3)

    @property
    def size(self) -> int:
        return self.p1 * self.p2 * self.p3

    def divides(self, shape: ProblemShape) -> bool:
        return all(d % p == 0 for d, p in zip(shape.dims, self.dims))


@dataclass(frozen=True)
class CostBreakdown:
    words_a: Fraction   # A all-gather over the p3 fiber
    words_b: Fraction   # B all-gather over the p1 fiber
    words_c: Fraction   # C reduce-scatter over the p2 fiber
    total: Fraction
    owned: Fraction     # (n1n2 + n2n3 + n1n3)/P


def comm_cost(shape: ProblemShape, grid: ProcessorGrid) -> CostBreakdown:
    """Exact per-processor word counts of the three collectives.

    Defined for any grid, dividing or not; the formula is what the planner
    optimizes, divisibility only matters to the simulator.
    """
    n1, n2, n3 = shape.dims
    p1, p2, p3 = grid.dims
    words_a = (1 - Fraction(1, p3)) * Fraction(n1 * n2, p1 * p2)
    words_b = (1 - Fraction(1, p1)) * Fraction(n2 * n3, p2 * p3)
    words_c = (1 - Fraction(1, p2)) * Fraction(n1 * n3, p1 * p3)
    return CostBreakdown(
        words_a=words_a,
        words_b=words_b,
        words_c=words_c,
        total=words_a + words_b + words_c,
        owned=Fraction(shape.pair_sum, grid.size),
    )


@dataclass(frozen=True)
class AnalyticGridResult:
    """Real-valued optimal factors, and the integral grid when they admit one.

    factors follow the shape's axis order (p1, p2, p3); non_integral_axes
    lists 1-based axes whose factor is fractional or irrational, in which
    case grid is None and exhaustive search is the fallback.
    """

    case: int
    factors: tuple[Value, Value, Value]
    grid: Optional[ProcessorGrid]
    non_integral_axes: tuple[int, ...]


def analytic_grid(shape: ProblemShape, procs: int) -> AnalyticGridResult:
    """Cost-minimizing grid factors: case 1 puts everything on the longest
    dimension, case 2 matches m/p = n/q with r = 1, case 3 matches
    m/p = n/q = k/r.  Values are reported, never rounded."""
    if procs < 1:
        raise ValueError(f"processor count must be positive, got {procs}")
    m, n, k = shape.sorted_dims
    case, _ = case_of(m, n, k, procs)
    if case == 1:
        p, q, r = Fraction(procs), Fraction(1), Fraction(1)
    elif case == 2:
        # p^2 = P m/n from m/p = n/q and pq = P
        p = sqrt_value(Fraction(procs * m, n))
        q = Fraction(procs) / p if isinstance(p, Fraction) else procs / p
        r = Fraction(1)
    else:
        # p^3 = P m^2/(nk) etc. from m/p = n/q = k/r and pqr = P
        p = root_value(Fraction(procs * m * m, n * k), 3)
        q = root_value(Fraction(procs * n * n, m * k), 3)
        r = root_value(Fraction(procs * k * k, m * n), 3)

    order = shape.axis_order
    factors = [None, None, None]
    for axis, f in zip(order, (p, q, r)):
        factors[axis] = f
    factors = tuple(factors)

    bad = tuple(
        i + 1
        for i, f in enumerate(factors)
        if not (isinstance(f, Fraction) and f.denominator == 1)
    )
    grid = None
    if not bad:
        grid = ProcessorGrid(*(int(f) for f in factors))
        assert grid.size == procs
    return AnalyticGridResult(case=case, factors=factors, grid=grid, non_integral_axes=bad)


def _divisors(n: int) -> list[int]:
    small, large = [], []
    d = 1
    while d * d <= n:
        if n % d == 0:
            small.append(d)
            if d != n // d:
                large.append(n // d)
        d += 1
    return small + large[::-1]


def factor_triples(procs: int) -> list[tuple[int, int, int]]:
    """All ordered triples (p1, p2, p3) with product P, no duplicates."""
    if procs < 1:
        raise ValueError(f"processor count must be positive, got {procs}")
    out = []
    for d1 in _divisors(procs):
        rest = procs // d1
        for d2 in _divisors(rest):
            out.append((d1, d2, rest // d2))
    return out


def exhaustive_grid(
    shape: ProblemShape, procs: int, require_divisibility: bool = False
) -> tuple[ProcessorGrid, CostBreakdown]:
    """Brute-force cost minimum over all factor triples of P.

    Ties break to the lexicographically largest triple, which keeps the big
    factors on the big dimensions (for shape (n,n,n) and prime P the three
    axis-aligned grids tie and (P,1,1) wins).
    """
    best = None
    for t in factor_triples(procs):
        grid = ProcessorGrid(*t)
        if require_divisibility and not grid.divides(shape):
            continue
        cb = comm_cost(shape, grid)
        if best is None or cb.total < best[1].total or (
            cb.total == best[1].total and t > best[0].dims
        ):
            best = (grid, cb)
    if best is None:
        raise ValueError(
            f"no factor triple of P={procs} divides shape {shape.dims}"
        )
    return best
