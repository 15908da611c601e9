"""Brute-force oracles for the geometry under the bound.

A processor's work is a set F of lattice points (i1, i2, i3) in the
n1 x n2 x n3 iteration cube; it needs the A entries phi_A(F) = {(i1, i2)},
the B entries phi_B(F) = {(i2, i3)}, and touches the C entries
phi_C(F) = {(i1, i3)}.  Loomis-Whitney caps |F| by the product of the three
projection sizes, which is exactly the product constraint of the optimization
problem behind D.  The exhaustive engine enumerates every subset of a small
cube as a bitset and certifies the inequalities with no analysis in the loop;
per-shape results are cached so a sweep over many P values pays for the
enumeration once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bounds import ProblemShape

_EXHAUSTIVE_LIMIT = 24
_CHUNK = 1 << 21


@dataclass(frozen=True)
class WorkSet:
    """A set of 1-based lattice points with its owning cube."""

    dims: tuple[int, int, int]
    points: frozenset[tuple[int, int, int]]

    def __post_init__(self):
        n1, n2, n3 = self.dims
        for (i, j, l) in self.points:
            if not (1 <= i <= n1 and 1 <= j <= n2 and 1 <= l <= n3):
                raise ValueError(f"point {(i, j, l)} outside cube {self.dims}")

    @classmethod
    def from_points(cls, dims, points) -> "WorkSet":
        return cls(tuple(dims), frozenset(tuple(p) for p in points))

    @classmethod
    def brick(cls, dims, edges) -> "WorkSet":
        """Axis-aligned a x b x c box anchored at the (1,1,1) corner."""
        a, b, c = edges
        pts = [
            (i, j, l)
            for i in range(1, a + 1)
            for j in range(1, b + 1)
            for l in range(1, c + 1)
        ]
        return cls.from_points(dims, pts)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class ProjectionCounts:
    phi_a: int
    phi_b: int
    phi_c: int

    @property
    def total(self) -> int:
        return self.phi_a + self.phi_b + self.phi_c


def projections_of(ws: WorkSet) -> ProjectionCounts:
    """Exact projection cardinalities onto (i1,i2), (i2,i3), (i1,i3)."""
    pa = {(i, j) for i, j, _ in ws.points}
    pb = {(j, l) for _, j, l in ws.points}
    pc = {(i, l) for i, _, l in ws.points}
    return ProjectionCounts(len(pa), len(pb), len(pc))


def verify_loomis_whitney(ws: WorkSet) -> bool:
    """|F| <= phi_A * phi_B * phi_C."""
    p = projections_of(ws)
    return len(ws) <= p.phi_a * p.phi_b * p.phi_c


@dataclass(frozen=True)
class ProjectionLBReport:
    applicable: bool           # |F| >= n1n2n3 / P
    ok_a: Optional[bool]
    ok_b: Optional[bool]
    ok_c: Optional[bool]

    @property
    def passed(self) -> bool:
        return bool(self.applicable and self.ok_a and self.ok_b and self.ok_c)


def verify_projection_lb(ws: WorkSet, procs: int) -> ProjectionLBReport:
    """A processor doing >= 1/P of the multiplies touches >= n1n2/P of A,
    >= n2n3/P of B, >= n1n3/P of C.  Integer cross-multiplied comparisons;
    an F below the work threshold is reported not-applicable, not failing."""
    if procs < 1:
        raise ValueError(f"processor count must be positive, got {procs}")
    n1, n2, n3 = ws.dims
    if len(ws) * procs < n1 * n2 * n3:
        return ProjectionLBReport(False, None, None, None)
    p = projections_of(ws)
    return ProjectionLBReport(
        True,
        p.phi_a * procs >= n1 * n2,
        p.phi_b * procs >= n2 * n3,
        p.phi_c * procs >= n1 * n3,
    )


class SubsetStats:
    """Per-size minima over every subset of a small cube.

    For each subset size s in 0..N the engine records the minimum of
    phi_A + phi_B + phi_C and of each projection alone, plus whether
    Loomis-Whitney held for all 2^N subsets.  min_*_from_size are suffix
    minima (over sizes >= s), which is what threshold queries need.
    """

    def __init__(self, dims, lw_ok, min_sum_by_size, min_phi_by_size):
        self.dims = dims
        self.lw_ok = lw_ok
        self.min_sum_by_size = min_sum_by_size
        self.min_phi_by_size = min_phi_by_size
        self.min_sum_from_size = np.minimum.accumulate(min_sum_by_size[::-1])[::-1]
        self.min_phi_from_size = {
            key: np.minimum.accumulate(arr[::-1])[::-1]
            for key, arr in min_phi_by_size.items()
        }


_STATS_CACHE: dict[tuple[int, int, int], SubsetStats] = {}


def _per_size_min(sizes, values, n_sizes, vmax):
    """Min of values per size class via one bincount over combined keys."""
    stride = vmax + 1
    key = sizes.astype(np.int64) * stride + values.astype(np.int64)
    counts = np.bincount(key, minlength=n_sizes * stride).reshape(n_sizes, stride)
    present = counts > 0
    big = np.iinfo(np.int64).max
    return np.where(present.any(axis=1), present.argmax(axis=1), big)


def subset_stats(dims) -> SubsetStats:
    """Enumerate all 2^(n1 n2 n3) subsets of the cube; cached per shape.

    Subsets are uint32 bitsets with bit ((i0*d1)+i1)*d2 + i2 after relabeling
    axes in descending size order, so the largest axis collapses by a
    logarithmic shift-OR fold and the two small axes by short shift loops.
    The fold is only sound across the outermost axis (block-aligned shifts
    cannot contaminate other blocks); inner axes use explicit loops.
    """
    dims = tuple(int(d) for d in dims)
    if dims in _STATS_CACHE:
        return _STATS_CACHE[dims]
    n_total = dims[0] * dims[1] * dims[2]
    if n_total > _EXHAUSTIVE_LIMIT:
        raise ValueError(
            f"exhaustive enumeration is limited to n1*n2*n3 <= {_EXHAUSTIVE_LIMIT}, "
            f"got {n_total}"
        )
    order = tuple(sorted(range(3), key=lambda i: -dims[i]))
    d0, d1, d2 = (dims[a] for a in order)
    block = d1 * d2

    mask_drop2 = 0  # i2 == 0 representatives
    for g in range(d0 * d1):
        mask_drop2 |= 1 << (g * d2)
    mask_drop0 = (1 << block) - 1  # i0 == 0 block
    mask_drop1 = 0  # i1 == 0 slots
    for i0 in range(d0):
        for i2 in range(d2):
            mask_drop1 |= 1 << (i0 * block + i2)
    mask_drop2 = np.uint32(mask_drop2)
    mask_drop0 = np.uint32(mask_drop0)
    mask_drop1 = np.uint32(mask_drop1)

    n_sizes = n_total + 1
    min_sum = np.full(n_sizes, np.iinfo(np.int64).max)
    min_phi = {
        key: np.full(n_sizes, np.iinfo(np.int64).max) for key in ("a", "b", "c")
    }
    lw_ok = True

    total = 1 << n_total
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.uint32)
        sizes = np.bitwise_count(idx)

        acc = np.zeros_like(idx)
        for l in range(d2):
            acc |= idx >> np.uint32(l)
        phi_d2 = np.bitwise_count(acc & mask_drop2)

        fold = idx.copy()
        shift = 1
        while shift < d0:
            fold |= fold >> np.uint32(block * shift)
            shift *= 2
        phi_d0 = np.bitwise_count(fold & mask_drop0)

        acc = np.zeros_like(idx)
        for j in range(d1):
            acc |= idx >> np.uint32(j * d2)
        phi_d1 = np.bitwise_count(acc & mask_drop1)

        # phi dropping relabeled axis r == phi dropping input axis order[r]
        by_dropped_axis = {order[0]: phi_d0, order[1]: phi_d1, order[2]: phi_d2}
        phi_a = by_dropped_axis[2]
        phi_b = by_dropped_axis[0]
        phi_c = by_dropped_axis[1]

        prod = phi_a.astype(np.int64) * phi_b * phi_c
        lw_ok = lw_ok and bool(np.all(sizes <= prod))

        psum = phi_a.astype(np.int16) + phi_b + phi_c
        min_sum = np.minimum(min_sum, _per_size_min(sizes, psum, n_sizes, 3 * n_total))
        for key, phi in (("a", phi_a), ("b", phi_b), ("c", phi_c)):
            min_phi[key] = np.minimum(
                min_phi[key], _per_size_min(sizes, phi, n_sizes, n_total)
            )

    stats = SubsetStats(dims, lw_ok, min_sum, min_phi)
    _STATS_CACHE[dims] = stats
    return stats


@dataclass(frozen=True)
class MinProjectionResult:
    minimum: int
    exact: bool         # certified by exhaustive enumeration
    threshold: int      # smallest qualifying |F|, ceil(n1n2n3 / P)
    mode: str


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _edge_candidates(n: int) -> list[int]:
    if n <= 64:
        return list(range(1, n + 1))
    vals = set(np.unique(np.geomspace(1, n, 64).astype(np.int64)).tolist())
    vals.add(n)
    return sorted(vals)


def min_projection_sum(
    shape: ProblemShape,
    procs: int,
    mode: str = "exhaustive",
    seed: Optional[int] = None,
    samples: int = 200,
) -> MinProjectionResult:
    """Minimum of phi_A + phi_B + phi_C over all F with |F| >= n1n2n3/P.

    Exhaustive mode certifies the minimum (cube volume capped at 24 points);
    sampled mode reports the best of brick-shaped candidates and random
    subsets, an upper bound on the true minimum, for shapes too big to
    enumerate.  Either way the lower bound says the result is >= D.
    """
    if procs < 1:
        raise ValueError(f"processor count must be positive, got {procs}")
    volume = shape.volume
    t = _ceil_div(volume, procs)

    if mode == "exhaustive":
        stats = subset_stats(shape.dims)
        return MinProjectionResult(
            minimum=int(stats.min_sum_from_size[t]),
            exact=True,
            threshold=t,
            mode=mode,
        )
    if mode != "sampled":
        raise ValueError(f"mode must be 'exhaustive' or 'sampled', got {mode!r}")
    if seed is None:
        raise ValueError("sampled mode requires a seed")

    n1, n2, n3 = shape.dims
    best = 3 * volume + 1
    for a in _edge_candidates(n1):
        for b in _edge_candidates(n2):
            c = _ceil_div(t, a * b)
            if c < 1:
                c = 1
            if c <= n3:
                best = min(best, a * b + b * c + a * c)

    if volume <= 1_000_000 and t >= 1:
        rng = np.random.default_rng(seed)
        for _ in range(samples):
            flat = rng.choice(volume, size=t, replace=False)
            i = flat // (n2 * n3)
            j = (flat // n3) % n2
            l = flat % n3
            phi_a = np.unique(i * n2 + j).size
            phi_b = np.unique(j * n3 + l).size
            phi_c = np.unique(i * n3 + l).size
            best = min(best, phi_a + phi_b + phi_c)

    return MinProjectionResult(minimum=int(best), exact=False, threshold=t, mode=mode)
