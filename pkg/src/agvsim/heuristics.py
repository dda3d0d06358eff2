"""Deterministic baseline dispatchers and an exact assignment solver.

All three policies are pure functions of the simulation state: calling them
twice on the same state returns the same action.  The assignment solver runs
on exact rational arithmetic so equal-cost ties resolve reproducibly (it
returns the lexicographically smallest pair list among the optima) and the
reported total is never off by a rounding artifact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence


@dataclass(frozen=True)
class DispatchAction:
    """Agent reply: a pickup-station action index, optionally pinning the
    AGV that must take the job instead of the closest-wins default."""

    action: int
    pinned_agv: Optional[str] = None


@dataclass(frozen=True)
class Assignment:
    pairs: tuple[tuple[int, int], ...]
    total_cost: float


def _jv_solve(cost: list[list[Fraction]]) -> list[int]:
    """Shortest augmenting path assignment for R <= C; returns col of row."""
    rows, cols = len(cost), len(cost[0])
    zero = Fraction(0)
    u = [zero] * (rows + 1)
    v = [zero] * (cols + 1)
    match = [0] * (cols + 1)  # 1-based row matched to each col, 0 = free
    for i in range(1, rows + 1):
        match[0] = i
        j0 = 0
        minv: list[Optional[Fraction]] = [None] * (cols + 1)
        used = [False] * (cols + 1)
        way = [0] * (cols + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta: Optional[Fraction] = None
            j1 = 0
            for j in range(1, cols + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1][j - 1] - u[i0] - v[j]
                if minv[j] is None or cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if delta is None or minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(cols + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                elif minv[j] is not None:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    col_of_row = [-1] * rows
    for j in range(1, cols + 1):
        if match[j]:
            col_of_row[match[j] - 1] = j - 1
    return col_of_row


def _min_total(cost: list[list[Fraction]],
               rows: Sequence[int], cols: Sequence[int]) -> Fraction:
    """Minimum total of a full matching over the given row/col subsets."""
    k = min(len(rows), len(cols))
    if k == 0:
        return Fraction(0)
    if len(rows) <= len(cols):
        sub = [[cost[r][c] for c in cols] for r in rows]
    else:
        sub = [[cost[r][c] for r in rows] for c in cols]
    col_of_row = _jv_solve(sub)
    return sum((sub[i][j] for i, j in enumerate(col_of_row)), Fraction(0))


def linear_sum_assignment(cost: Sequence[Sequence[float]]) -> Assignment:
    """Minimum-cost matching of size min(rows, cols).

    Cells set to +inf mark forbidden pairs and are excluded from the result.
    Ties on total cost resolve to the lexicographically smallest pair list.
    """
    rows = len(cost)
    if rows == 0 or len(cost[0]) == 0:
        raise ValueError("cost matrix must be non-empty")
    cols = len(cost[0])
    if any(len(row) != cols for row in cost):
        raise ValueError("cost matrix must be rectangular")
    for row in cost:
        for cell in row:
            if math.isnan(cell):
                raise ValueError("cost cells must not be NaN")

    finite_sum = sum(
        Fraction(abs(c)) for row in cost for c in row if math.isfinite(c)
    )
    big = finite_sum + 1
    exact = [
        [Fraction(c) if math.isfinite(c) else big for c in row] for row in cost
    ]

    k = min(rows, cols)
    target = _min_total(exact, range(rows), range(cols))

    pairs: list[tuple[int, int]] = []
    rows_left = list(range(rows))
    cols_left = list(range(cols))
    fixed = Fraction(0)
    last_row = -1
    for pos in range(k):
        need_after = k - pos - 1
        if rows <= cols:
            candidate_rows = [rows_left[0]]  # every row is matched, in order
        else:
            candidate_rows = [
                r for r in rows_left
                if r > last_row and sum(1 for x in rows_left if x > r) >= need_after
            ]
        placed = False
        for r in candidate_rows:
            rest_rows = [x for x in rows_left if (x > r if rows > cols else x != r)]
            for c in cols_left:
                rest_cols = [x for x in cols_left if x != c]
                total = fixed + exact[r][c] + _min_total(exact, rest_rows, rest_cols)
                if total == target:
                    pairs.append((r, c))
                    fixed += exact[r][c]
                    rows_left = rest_rows
                    cols_left = rest_cols
                    last_row = r
                    placed = True
                    break
            if placed:
                break
        assert placed, "assignment refinement failed to extend an optimum"

    kept = tuple(p for p in pairs if math.isfinite(cost[p[0]][p[1]]))
    total_cost = float(sum(cost[r][c] for r, c in kept))
    return Assignment(pairs=kept, total_cost=total_cost)


# ---------------------------------------------------------------------------
# dispatch policies


def _longest_waiting_station(sim):
    """Station whose oldest unclaimed output-buffer part has waited longest;
    ties go to the station listed first in the config."""
    waiting = sim.stations_with_waiting_parts()
    if not waiting:
        return None
    return min(waiting, key=lambda sa: (sa[1], sim.config.station_index(sa[0].id)))[0]


def _longest_waiting_agv(sim):
    idle = sim.waiting_agvs()
    if not idle:
        return None
    return min(idle, key=lambda a: (a.waiting_since, a.index))


class FifoAgent:
    """Send the longest-waiting AGV to the longest-waiting part."""

    name = "fifo"

    def act(self, sim, observation=None) -> DispatchAction:
        station = _longest_waiting_station(sim)
        if station is None:
            return DispatchAction(sim.action_spec.do_nothing_index)
        agv = _longest_waiting_agv(sim)
        if agv is None:
            return DispatchAction(sim.action_spec.do_nothing_index)
        return DispatchAction(sim.action_spec.index_of(station.id), pinned_agv=agv.id)

    def train_step(self, experience) -> None:
        pass


class NearestNeighborAgent:
    """Serve the longest-waiting part only if an idle AGV is the fastest of
    the whole fleet to reach it; otherwise leave the request unanswered."""

    name = "nn"

    def act(self, sim, observation=None) -> DispatchAction:
        station = _longest_waiting_station(sim)
        if station is None or not sim.waiting_agvs():
            return DispatchAction(sim.action_spec.do_nothing_index)
        best = min(
            sim.agvs,
            key=lambda a: (
                sim.estimate_or_inf(a, station.id),
                0 if a.idle else 1,  # prefer assigning on exact ties
                a.index,
            ),
        )
        if best.idle and sim.estimate_or_inf(best, station.id) != math.inf:
            return DispatchAction(sim.action_spec.index_of(station.id))
        return DispatchAction(sim.action_spec.do_nothing_index)

    def train_step(self, experience) -> None:
        pass


class CostTableAgent:
    """Solve the assignment problem over inactive AGVs x waiting stations
    and dispatch the pair whose AGV has been idle longest."""

    name = "cost-table"

    def act(self, sim, observation=None) -> DispatchAction:
        idle = sim.waiting_agvs()
        waiting = sim.stations_with_waiting_parts()
        if not idle or not waiting:
            return DispatchAction(sim.action_spec.do_nothing_index)
        stations = [s for s, _ in waiting]
        table = [
            [sim.estimate_or_inf(a, s.id) for s in stations]
            for a in idle
        ]
        solution = linear_sum_assignment(table)
        if not solution.pairs:
            return DispatchAction(sim.action_spec.do_nothing_index)
        row, col = min(
            solution.pairs,
            key=lambda rc: (idle[rc[0]].waiting_since, idle[rc[0]].index),
        )
        return DispatchAction(
            sim.action_spec.index_of(stations[col].id),
            pinned_agv=idle[row].id,
        )

    def train_step(self, experience) -> None:
        pass
