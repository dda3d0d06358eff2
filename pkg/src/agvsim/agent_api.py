"""Agent-facing contract: observation encoding, action space, score and reward.

Everything here is a pure function of value inputs, so it is safe to call
from anywhere.  The observation layout is frozen per plant config; its
exact block order is documented on ObservationLayout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .plant import MACHINE, SINK, PlantConfig

# One-hot positions, frozen. The simulator's state enums use the same order.
AGV_STATES = (
    "DRIVING",
    "TRANSFERRING_IN",
    "TRANSFERRING_OUT",
    "WAITING_FOR_ORDER",
    "WAITING_TO_DROPDOWN",
    "WAITING_TO_PICKUP",
)
UNIT_STATES = (
    "PROCESSING",
    "TRANSFERRING_IN",
    "TRANSFERRING_OUT",
    "WAITING_TO_DROPDOWN",
    "WAITING_TO_PICKUP",
)


@dataclass(frozen=True)
class ScoreParams:
    """Weights that balance the four score components per scenario."""

    scale: float = 4000.0
    expected_parts: float = 500.0
    expected_decisions: float = 2000.0
    expected_seconds: float = 43200.0

    def __post_init__(self):
        for name in ("scale", "expected_parts", "expected_decisions", "expected_seconds"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class Counters:
    parts_completed: int
    completion_sum: float
    decisions_assigned: int
    elapsed: float


@dataclass(frozen=True)
class Experience:
    observation: np.ndarray
    action: int
    reward: float
    next_observation: np.ndarray
    done: bool


def score(counters: Counters, deadlocked: bool, params: ScoreParams) -> float:
    """State score: completed+partial parts, assigned decisions, and - as
    long as the run is deadlock-free - elapsed seconds."""
    base = (
        (counters.parts_completed + counters.completion_sum) / params.expected_parts
        + counters.decisions_assigned / params.expected_decisions
    )
    if not deadlocked:
        base += counters.elapsed / params.expected_seconds
    return params.scale * base


def reward(prev: Counters, nxt: Counters, params: ScoreParams,
           deadlocked: bool = False) -> float:
    """Score difference between consecutive decision points.

    `deadlocked` describes the resulting state; a transition into deadlock
    forfeits the accumulated time component, which is the punishment.
    """
    return score(nxt, deadlocked, params) - score(prev, False, params)


def part_completion(part) -> float:
    """Fraction of a part's drive/process actions already performed."""
    total = part.type.total_actions
    done = part.actions_done
    if not 0 <= done <= total:
        raise ValueError(f"part {part.uid} has {done} of {total} actions done")
    return done / total


class ActionSpec:
    """Action index mapping: one pickup action per source/machine station,
    plus a trailing do-nothing action.  The sink only accepts drop-offs and
    never appears."""

    def __init__(self, config: PlantConfig):
        self.station_ids: tuple[str, ...] = tuple(
            s.id for s in config.stations if s.kind != SINK
        )
        self._index = {sid: i for i, sid in enumerate(self.station_ids)}
        self.count = len(self.station_ids) + 1
        self.do_nothing_index = self.count - 1

    def index_of(self, station_id: str) -> int:
        return self._index[station_id]

    def station_id_at(self, index: int) -> Optional[str]:
        if index == self.do_nothing_index:
            return None
        return self.station_ids[index]


class ObservationLayout:
    """Flat numeric encoding of the dynamic state.

    Per AGV (config order):
      action state one-hot(6) + carried part block + drive target one-hot
      over buffer-attached nodes (zeros unless driving) + last visited node
      one-hot over all graph nodes.
    Per unit (stations in config order; IB, PU, OB where present):
      action state one-hot(5) + one part block per slot, FIFO order,
      absent slots all-zero.
    Part block: type one-hot + completion scalar + next station one-hot
    over all stations (sink included).
    """

    def __init__(self, config: PlantConfig):
        self.config = config
        self.n_types = len(config.part_types)
        self.n_stations = len(config.stations)
        self.part_block = self.n_types + 1 + self.n_stations
        self._type_index = {pt.id: i for i, pt in enumerate(config.part_types)}
        self._station_index = {s.id: i for i, s in enumerate(config.stations)}
        self._sink_index = self._station_index[config.sink.id]

        self.target_nodes: tuple[str, ...] = tuple(
            n for s in config.stations
            for n in (s.input_node, s.output_node) if n is not None
        )
        self._target_index = {n: i for i, n in enumerate(self.target_nodes)}
        self.graph_nodes = config.graph.node_ids
        self._node_index = {n: i for i, n in enumerate(self.graph_nodes)}

        self.agv_block = (
            len(AGV_STATES) + self.part_block
            + len(self.target_nodes) + len(self.graph_nodes)
        )
        # (station id, unit kind, slot count) in encoding order
        self.unit_slots: list[tuple[str, str, int]] = _unit_layout(config)
        self.length = len(config.agvs) * self.agv_block + sum(
            len(UNIT_STATES) + cap * self.part_block
            for _, _, cap in self.unit_slots
        )

    # -- encoding -----------------------------------------------------------

    def _write_part(self, vec: np.ndarray, offset: int, part) -> None:
        vec[offset + self._type_index[part.type.id]] = 1.0
        vec[offset + self.n_types] = part_completion(part)
        if part.route_cursor < len(part.type.route):
            nxt = self._station_index[part.type.route[part.route_cursor]]
        else:
            nxt = self._sink_index
        vec[offset + self.n_types + 1 + nxt] = 1.0

    def encode(self, sim) -> np.ndarray:
        vec = np.zeros(self.length)
        off = 0
        for agv in sim.agvs:
            vec[off + int(agv.action_state)] = 1.0
            pos = off + len(AGV_STATES)
            if agv.carried is not None:
                self._write_part(vec, pos, agv.carried)
            pos += self.part_block
            if agv.current_target is not None:
                vec[pos + self._target_index[agv.current_target]] = 1.0
            pos += len(self.target_nodes)
            vec[pos + self._node_index[agv.last_node]] = 1.0
            off += self.agv_block
        for station_id, kind, cap in self.unit_slots:
            unit = sim.unit(station_id, kind)
            vec[off + int(unit.action_state)] = 1.0
            pos = off + len(UNIT_STATES)
            for i, part in enumerate(unit.parts):
                self._write_part(vec, pos + i * self.part_block, part)
            off += len(UNIT_STATES) + cap * self.part_block
        return vec

    # -- decoding (round-trip checks and debugging) -------------------------

    def _read_part(self, vec: np.ndarray, offset: int) -> Optional[dict]:
        block = vec[offset:offset + self.part_block]
        if not block.any():
            return None
        type_hot = block[: self.n_types]
        next_hot = block[self.n_types + 1:]
        return {
            "type": self.config.part_types[int(np.argmax(type_hot))].id,
            "completion": float(block[self.n_types]),
            "next_station": self.config.stations[int(np.argmax(next_hot))].id,
        }

    def decode(self, vec: np.ndarray) -> dict:
        out: dict = {"agvs": [], "units": {}}
        off = 0
        for spec in self.config.agvs:
            state = AGV_STATES[int(np.argmax(vec[off:off + len(AGV_STATES)]))]
            pos = off + len(AGV_STATES)
            carried = self._read_part(vec, pos)
            pos += self.part_block
            target_hot = vec[pos:pos + len(self.target_nodes)]
            target = (
                self.target_nodes[int(np.argmax(target_hot))]
                if target_hot.any() else None
            )
            pos += len(self.target_nodes)
            node_hot = vec[pos:pos + len(self.graph_nodes)]
            out["agvs"].append({
                "id": spec.id,
                "state": state,
                "carried": carried,
                "target": target,
                "last_node": self.graph_nodes[int(np.argmax(node_hot))],
            })
            off += self.agv_block
        for station_id, kind, cap in self.unit_slots:
            state = UNIT_STATES[int(np.argmax(vec[off:off + len(UNIT_STATES)]))]
            pos = off + len(UNIT_STATES)
            parts = []
            for i in range(cap):
                part = self._read_part(vec, pos + i * self.part_block)
                if part is not None:
                    parts.append(part)
            out["units"][f"{station_id}.{kind}"] = {"state": state, "parts": parts}
            off += len(UNIT_STATES) + cap * self.part_block
        return out


def _unit_layout(config: PlantConfig) -> list[tuple[str, str, int]]:
    slots: list[tuple[str, str, int]] = []
    for s in config.stations:
        if s.input_node is not None:
            slots.append((s.id, "IB", s.buffer_capacity))
        if s.kind == MACHINE:
            slots.append((s.id, "PU", 1))
        if s.output_node is not None:
            slots.append((s.id, "OB", s.buffer_capacity))
    return slots


def encode_observation(sim, config: Optional[PlantConfig] = None) -> np.ndarray:
    """One-off encoding helper; simulations cache a layout internally."""
    return ObservationLayout(config or sim.config).encode(sim)
