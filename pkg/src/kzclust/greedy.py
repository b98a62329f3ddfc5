"""Hierarchical greedy ball selection producing an incremental center ordering.

Preprocessing values every ball B(p, radius_at(level)) over all points p and
all levels, then builds, per level, a "sequence" neighborhood index at radius
10c·R (never mutated) and a "removal" index at radius 100c^4·R (points are
deleted from it as centers claim them).

Each iteration pops the available ball with the largest value, walks it down
one level at a time -- always moving to the neighbor whose next-level ball
has the largest value -- until the minimum radius, emits that ball's point
as a center, and then sweeps every level's removal index around the new
center, clearing the availability of every returned ball.

Stopping after k iterations yields a k-center solution; the walk never looks
at k, so every prefix of the full ordering is the k-stopped solution.

State mutation (pop/descend/remove) is single-threaded; a finished Solution
is immutable and freely shareable.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import lsh, sketch
from .metric import (
    ClusterParams,
    Dataset,
    ScaleInfo,
    bbox_diagonal,
    cost,
    level_radii,
    normalize,
)
from .seeding import derive_seed

logger = logging.getLogger(__name__)


class BallRef(NamedTuple):
    """A ball named by its center point id and level (radius is implied)."""

    point: int
    level: int


@dataclass(frozen=True)
class Solution:
    """Ordered centers with per-center descent traces.

    prefix_costs[k] is cost(P, centers[:k]) for each requested k, computed
    on whatever dataset the caller evaluated against (raw coordinates from
    the CLI; tests choose explicitly).
    """

    centers: list[int]
    traces: list[list[BallRef]]
    early_terminated: bool
    achieved_k: int
    prefix_costs: dict[int, float] | None = None

    def prefix(self, k: int) -> list[int]:
        return self.centers[:k]


@dataclass
class GreedyStats:
    """Instrumentation of one run: raw events, checked by tests."""

    candidate_events: list[tuple[int, int, np.ndarray]] = field(default_factory=list)
    removal_events: list[tuple[int, int, np.ndarray]] = field(default_factory=list)
    iteration_centers: list[int] = field(default_factory=list)
    unavailable_candidate_hits: int = 0


class AvailableSet:
    """All (point, level) balls ordered by value, with lazy deletion.

    Values are frozen at init and every ball enters exactly once, so a
    descending presort plus a cursor is the whole priority structure: a
    popped maximum is re-checked against the availability bits and skipped
    if a removal sweep already cleared it.  Ties break toward the smallest
    point id, then the smallest level.
    """

    def __init__(self, values: np.ndarray):
        self.num_levels, self.n = values.shape
        total = self.num_levels * self.n
        ids = np.tile(np.arange(self.n), self.num_levels)
        levels = np.repeat(np.arange(self.num_levels), self.n)
        self._order = np.lexsort((levels, ids, -values.ravel()))
        self._avail = np.ones(total, dtype=bool)
        self._cursor = 0
        self._values = values

    def _flat(self, point: int, level: int) -> int:
        return level * self.n + point

    def is_available(self, point: int, level: int) -> bool:
        return bool(self._avail[self._flat(point, level)])

    def clear(self, point: int, level: int) -> None:
        self._avail[self._flat(point, level)] = False

    def clear_many(self, points: np.ndarray, level: int) -> None:
        self._avail[level * self.n + np.asarray(points)] = False

    def available_mask(self, points: np.ndarray, level: int) -> np.ndarray:
        return self._avail[level * self.n + np.asarray(points)]

    def available_count(self) -> int:
        return int(self._avail.sum())

    def peek(self) -> tuple[BallRef, float] | None:
        """Largest available ball and its value, without consuming it."""
        cur = self._cursor
        while cur < len(self._order) and not self._avail[self._order[cur]]:
            cur += 1
        if cur == len(self._order):
            return None
        flat = self._order[cur]
        ref = BallRef(int(flat % self.n), int(flat // self.n))
        return ref, float(self._values[ref.level, ref.point])

    def pop(self) -> BallRef | None:
        """Consume and return the largest available ball, or None."""
        while self._cursor < len(self._order) and not self._avail[self._order[self._cursor]]:
            self._cursor += 1
        if self._cursor == len(self._order):
            return None
        flat = self._order[self._cursor]
        self._avail[flat] = False
        self._cursor += 1
        return BallRef(int(flat % self.n), int(flat // self.n))

    def snapshot(self) -> np.ndarray:
        """Availability bitmap, shape (num_levels, n)."""
        return self._avail.reshape(self.num_levels, self.n).copy()


class _AllPointsIndex:
    """Neighborhood structure for radii that cover the whole point set.

    When the query radius is at least the data diameter, B(p, R) contains
    every point, so returning all live points satisfies both sides of the
    neighborhood sandwich deterministically.
    """

    def __init__(self, n: int):
        self.live = np.ones(n, dtype=bool)

    def query(self, point_id: int) -> np.ndarray:
        return np.flatnonzero(self.live)

    def remove(self, point_id: int) -> None:
        self.live[point_id] = False

    def remove_many(self, point_ids: np.ndarray) -> None:
        self.live[point_ids] = False


class _DuplicateGroupIndex:
    """Neighborhood structure for radii below the minimum nonzero distance.

    After normalization distinct points are at distance >= 1, so when
    c·radius < 1 both B(p, R) and B(p, c·R) contain exactly the duplicates
    of p; returning p's live duplicate group satisfies the sandwich.
    """

    def __init__(self, group_of: np.ndarray, order: np.ndarray, offsets: np.ndarray):
        self.group_of = group_of
        self.order = order
        self.offsets = offsets
        self.live = np.ones(len(group_of), dtype=bool)

    def query(self, point_id: int) -> np.ndarray:
        g = self.group_of[point_id]
        members = self.order[self.offsets[g] : self.offsets[g + 1]]
        return members[self.live[members]]

    def remove(self, point_id: int) -> None:
        self.live[point_id] = False

    def remove_many(self, point_ids: np.ndarray) -> None:
        self.live[point_ids] = False


def _duplicate_groups(points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    _, group_of = np.unique(points, axis=0, return_inverse=True)
    group_of = group_of.astype(np.int64)
    order = np.argsort(group_of, kind="stable").astype(np.int64)
    num_groups = int(group_of.max()) + 1 if len(group_of) else 0
    sizes = np.bincount(group_of, minlength=num_groups)
    offsets = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
    return group_of, order, offsets


class GreedyState:
    """Mutable run state: values, availability, per-level indexes, centers."""

    def __init__(self, ds: Dataset, params: ClusterParams, info: ScaleInfo, mode: str,
                 delta: float, values: np.ndarray, seq_indexes: list, rem_indexes: list,
                 stats: GreedyStats | None):
        self.ds = ds
        self.params = params
        self.info = info
        self.mode = mode
        self.delta = delta
        self.values = values
        self.radii = level_radii(info, params.c)
        self.avail = AvailableSet(values)
        self.seq_indexes = seq_indexes
        self.rem_indexes = rem_indexes
        self.centers: list[int] = []
        self.traces: list[list[BallRef]] = []
        self.iteration = 0
        self.stats = stats

    @property
    def num_levels(self) -> int:
        return self.info.num_levels


def _neighborhood_index(ds: Dataset, radius: float, params: ClusterParams, delta: float,
                        seed: int, mode: str, num_levels: int, diag: float,
                        dup_groups) -> object:
    if mode == "exact":
        return lsh.build(ds, radius, c=params.c, delta=delta, seed=seed, mode="exact")
    # Degenerate radii admit structures that meet the sandwich with
    # probability 1, at a fraction of the table cost.
    if radius >= diag * (1.0 + 1e-9):
        return _AllPointsIndex(ds.n)
    if params.c * radius < 0.999999:
        return _DuplicateGroupIndex(*dup_groups)
    return lsh.build(ds, radius, c=params.c, delta=delta, seed=seed, mode="lsh",
                     num_levels=num_levels)


def _lsh_values(ds: Dataset, params: ClusterParams, info: ScaleInfo, delta: float,
                diag: float, dup_groups) -> np.ndarray:
    """Per-level estimated ball values, shape (num_levels, n).

    Mid-range radii run the full bucket-sketch pipeline.  A radius covering
    the whole set estimates |P| once; a radius with c·R below the minimum
    distance estimates each duplicate group.  All three cases satisfy the
    factor-3 sandwich against |B(p, R)| and |B(p, c·R)|.
    """
    n = ds.n
    radii = level_radii(info, params.c)
    values = np.empty((info.num_levels, n), dtype=np.float64)
    copies = sketch.default_copies(n)
    group_of, order, offsets = dup_groups
    for lvl in range(info.num_levels):
        radius = float(radii[lvl])
        seed = derive_seed(params.seed, "values", lvl)
        rz = radius**params.z
        if radius >= diag * (1.0 + 1e-9):
            whole = sketch.sketch_of(np.arange(n), copies, seed)
            values[lvl, :] = whole.estimate() * rz
        elif params.c * radius < 0.999999:
            ranks = sketch.rank_matrix(np.arange(n), copies, seed)
            group_max = np.maximum.reduceat(ranks[order], offsets[:-1], axis=0)
            est = np.median(2.0 ** group_max.astype(np.float64), axis=1)
            values[lvl, :] = est[group_of] * rz
        else:
            values[lvl, :] = sketch.compute_values(
                ds, radius, c=params.c, z=params.z, delta=delta, seed=seed,
                mode="lsh", num_levels=info.num_levels,
            )
    return values


def init(ds: Dataset, params: ClusterParams, info: ScaleInfo, mode: str = "lsh",
         delta: float | None = None, instrument: bool = False) -> GreedyState:
    """Preprocess a normalized dataset: values, availability, index families."""
    if mode not in ("exact", "lsh"):
        raise ValueError(f"unknown mode {mode!r}")
    n = ds.n
    if delta is None:
        delta = min(0.5, 1.0 / (n * n))
    radii = level_radii(info, params.c)

    diag = bbox_diagonal(ds.points)
    dup_groups = _duplicate_groups(ds.points)

    if mode == "exact":
        counts = sketch.exact_counts(ds, radii)
        values = counts.astype(np.float64) * (radii**params.z)[:, None]
    else:
        values = _lsh_values(ds, params, info, delta, diag, dup_groups)

    seq_indexes = []
    rem_indexes = []
    for lvl in range(info.num_levels):
        radius = float(radii[lvl])
        seq_indexes.append(_neighborhood_index(
            ds, 10.0 * params.c * radius, params, delta,
            derive_seed(params.seed, "seq", lvl), mode, info.num_levels, diag, dup_groups))
        rem_indexes.append(_neighborhood_index(
            ds, 100.0 * params.c**4 * radius, params, delta,
            derive_seed(params.seed, "rem", lvl), mode, info.num_levels, diag, dup_groups))

    stats = GreedyStats() if instrument else None
    return GreedyState(ds, params, info, mode, delta, values, seq_indexes, rem_indexes, stats)


def descend(state: GreedyState, head: BallRef) -> tuple[int, list[BallRef]]:
    """Walk from a head ball down to the minimum radius; return center + trace.

    At each level the candidates are the sequence-index neighbors of the
    current point at radius 10c·R -- unfiltered by availability -- and the
    next ball is the candidate maximizing the value one level down, ties to
    the smallest point id.  The current point always collides with itself,
    so the candidate set is never empty.
    """
    trace = [head]
    point, level = head.point, head.level
    last = state.num_levels - 1
    while level < last:
        candidates = state.seq_indexes[level].query(point)
        if state.stats is not None:
            state.stats.candidate_events.append((state.iteration, level, candidates))
            state.stats.unavailable_candidate_hits += int(
                (~state.avail.available_mask(candidates, level + 1)).sum()
            )
        vals = state.values[level + 1, candidates]
        point = int(candidates[np.lexsort((candidates, -vals))[0]])
        level += 1
        trace.append(BallRef(point, level))
    return point, trace


def remove_around(state: GreedyState, center_id: int) -> None:
    """Sweep every level's removal index around a just-emitted center.

    Each returned point has its ball at that level made unavailable and is
    deleted from that removal index (and only that one); sequence indexes
    are never touched, and values are never re-estimated.
    """
    for lvl in range(state.num_levels):
        index = state.rem_indexes[lvl]
        hit = index.query(center_id)
        state.avail.clear_many(hit, lvl)
        index.remove_many(hit)
        if state.stats is not None:
            state.stats.removal_events.append((state.iteration, lvl, hit))


def run(state: GreedyState, k: int) -> Solution:
    """Select up to k centers; early-terminate when no ball is available.

    A state is consumed by a run; start from a fresh init for another k.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    early = False
    emitted = set(state.centers)
    while len(state.centers) < k:
        head = state.avail.pop()
        if head is None:
            early = True
            break
        state.iteration += 1
        center, trace = descend(state, head)
        remove_around(state, center)
        if state.stats is not None:
            state.stats.iteration_centers.append(center)
        if center in emitted:
            # Only reachable when an lsh removal sweep missed the center's
            # own balls (a probability-delta event); the popped head has
            # been consumed, so the run still terminates.
            logger.debug("duplicate center %d skipped at iteration %d", center, state.iteration)
            continue
        emitted.add(center)
        state.centers.append(center)
        state.traces.append(trace)
    return Solution(
        centers=list(state.centers),
        traces=[list(t) for t in state.traces],
        early_terminated=early,
        achieved_k=len(state.centers),
    )


def run_incremental(state: GreedyState) -> Solution:
    """Full ordering: run with k = n; every prefix is the k-stopped solution."""
    return run(state, state.ds.n)


def solve(ds: Dataset, params: ClusterParams, k: int, mode: str = "lsh",
          delta: float | None = None, instrument: bool = False,
          eval_ks: list[int] | None = None) -> tuple[Solution, GreedyState]:
    """Normalize, preprocess, and run; the one-call library entry point.

    Prefix costs, when requested, are evaluated on the *input* coordinates.
    """
    scaled, info = normalize(ds, params.c)
    state = init(scaled, params, info, mode=mode, delta=delta, instrument=instrument)
    solution = run(state, k)
    if eval_ks:
        prefix_costs = {
            kk: cost(ds, solution.prefix(kk), params.z)
            for kk in eval_ks
            if 1 <= kk <= solution.achieved_k
        }
        solution = Solution(solution.centers, solution.traces, solution.early_terminated,
                            solution.achieved_k, prefix_costs)
    return solution, state
