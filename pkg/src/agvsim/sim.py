"""Plant dynamics: part release, machine cycles, AGV jobs, the dispatch
protocol between waiting AGVs and the agent, and deadlock detection.

A PlantSimulation instance is single-threaded and owns all of its mutable
state; run independent instances for parallelism.  Two runs with identical
(config, seed, agent decisions) produce identical event traces.

Between agent decisions the state evolves only through popped events.  A
decision is requested whenever at least one AGV sits in WAITING_FOR_ORDER
and something changed that could make an assignment worthwhile: an AGV
became free, a part arrived in an output buffer, or a buffer slot freed.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, Optional

import numpy as np

from . import agent_api
from .events import EventKind, EventQueue
from .plant import (
    MACHINE,
    SINK,
    SOURCE,
    AgvSpec,
    ConfigError,
    PartTypeSpec,
    PlantConfig,
    StationSpec,
    UnreachableError,
    drive_duration,
    validate_config,
)


class AgvActionState(IntEnum):
    DRIVING = 0
    TRANSFERRING_IN = 1
    TRANSFERRING_OUT = 2
    WAITING_FOR_ORDER = 3
    WAITING_TO_DROPDOWN = 4
    WAITING_TO_PICKUP = 5


class UnitActionState(IntEnum):
    PROCESSING = 0
    TRANSFERRING_IN = 1
    TRANSFERRING_OUT = 2
    WAITING_TO_DROPDOWN = 3
    WAITING_TO_PICKUP = 4


_UNIT_BUSY = (
    UnitActionState.PROCESSING,
    UnitActionState.TRANSFERRING_IN,
    UnitActionState.TRANSFERRING_OUT,
)

# Hard cap on agent re-offers while the event queue is empty; past it the
# state provably cannot change and the run counts as deadlocked.
_QUIESCENT_OFFER_CAP = 64


@dataclass
class Part:
    uid: int
    type: PartTypeSpec
    route_cursor: int = 0
    actions_done: int = 0
    claimed_by: Optional[str] = None
    arrived_at: float = 0.0  # entered its current container
    visited: list[str] = field(default_factory=list)

    def next_station_id(self, sink_id: str) -> str:
        if self.route_cursor < len(self.type.route):
            return self.type.route[self.route_cursor]
        return sink_id


@dataclass
class Job:
    """A transport order bound at assignment time: pick the FIFO-head part
    of `station`'s output buffer, deliver it to `dest_station`'s input."""

    station_id: str
    part: Part
    dest_station_id: str
    leg: str = "fetch"  # fetch -> deliver


@dataclass
class AgvState:
    spec: AgvSpec
    index: int
    action_state: AgvActionState
    last_node: str
    current_target: Optional[str] = None
    carried: Optional[Part] = None
    job: Optional[Job] = None
    waiting_since: float = 0.0
    phase_end: float = 0.0

    @property
    def id(self) -> str:
        return self.spec.id

    @property
    def idle(self) -> bool:
        return self.action_state == AgvActionState.WAITING_FOR_ORDER


@dataclass
class UnitState:
    station: StationSpec
    kind: str  # IB | PU | OB
    capacity: int
    action_state: UnitActionState = UnitActionState.WAITING_TO_DROPDOWN
    parts: deque[Part] = field(default_factory=deque)
    inflight: int = 0  # incoming transfers that already reserved a slot

    @property
    def id(self) -> str:
        return f"{self.station.id}.{self.kind}"

    @property
    def busy(self) -> bool:
        return self.action_state in _UNIT_BUSY

    @property
    def free_slots(self) -> int:
        return self.capacity - len(self.parts) - self.inflight

    def settle(self) -> None:
        self.action_state = (
            UnitActionState.WAITING_TO_PICKUP if self.parts
            else UnitActionState.WAITING_TO_DROPDOWN
        )


@dataclass(frozen=True)
class Transition:
    observation: np.ndarray
    reward: float
    done: bool
    info: dict


class PlantSimulation:
    """Discrete-event plant with a reset/step decision interface."""

    def __init__(
        self,
        config: PlantConfig,
        horizon: float = 12 * 3600.0,
        score_params: Optional[agent_api.ScoreParams] = None,
        trace: Optional[Callable[[dict], None]] = None,
        keep_decision_log: bool = False,
    ):
        violations = validate_config(config)
        if violations:
            raise ConfigError("; ".join(violations))
        self.config = config
        self.horizon = float(horizon)
        self.score_params = score_params or agent_api.ScoreParams()
        self.action_spec = agent_api.ActionSpec(config)
        self.layout = agent_api.ObservationLayout(config)
        self.trace = trace
        self.keep_decision_log = keep_decision_log
        self.decision_log: list[dict] = []
        self._station_index = {s.id: i for i, s in enumerate(config.stations)}
        self.reset(seed=0)

    # ------------------------------------------------------------------
    # lifecycle

    def reset(self, seed: int = 0) -> np.ndarray:
        self.rng = random.Random(seed)
        self.queue = EventQueue()
        self.agvs = [
            AgvState(spec=a, index=i,
                     action_state=AgvActionState.WAITING_FOR_ORDER,
                     last_node=a.start_node)
            for i, a in enumerate(self.config.agvs)
        ]
        self.units: dict[tuple[str, str], UnitState] = {}
        for s in self.config.stations:
            if s.input_node is not None:
                self.units[(s.id, "IB")] = UnitState(s, "IB", s.buffer_capacity)
            if s.kind == MACHINE:
                self.units[(s.id, "PU")] = UnitState(s, "PU", 1)
            if s.output_node is not None:
                self.units[(s.id, "OB")] = UnitState(s, "OB", s.buffer_capacity)
        self._wtd_queues: dict[str, deque[AgvState]] = {
            u.id: deque() for u in self.units.values() if u.kind == "IB"
        }
        self.parts_released = 0
        self.parts_completed = 0
        self.completion_sum = 0.0
        self.decisions_assigned = 0
        self.deadlocked = False
        self.done = False
        self._decision_pending = False
        self._quiescent_offers = 0
        self.decision_log.clear()
        self._next_part_uid = 0

        if self.config.source_clock > 0:
            self.queue.schedule(0.0, EventKind.SOURCE_CLOCK_TICK)
        else:
            self.queue.schedule(0.0, EventKind.PART_RELEASED)
        self._advance()
        return self._observe()

    @property
    def clock(self) -> float:
        return self.queue.clock

    def unit(self, station_id: str, kind: str) -> UnitState:
        return self.units[(station_id, kind)]

    def counters_snapshot(self) -> agent_api.Counters:
        return agent_api.Counters(
            parts_completed=self.parts_completed,
            completion_sum=self.completion_sum,
            decisions_assigned=self.decisions_assigned,
            elapsed=min(self.clock, self.horizon),
        )

    def _observe(self) -> np.ndarray:
        return self.layout.encode(self)

    # ------------------------------------------------------------------
    # step / dispatch

    def step(self, action: int) -> Transition:
        if self.done:
            raise RuntimeError("simulation is done; call reset()")
        if not self._decision_pending:
            raise RuntimeError("no decision pending")
        if not 0 <= action < self.action_spec.count:
            raise ValueError(
                f"action {action} out of range [0, {self.action_spec.count})"
            )
        return self._dispatch(action, pinned_agv=None)

    def step_dispatch(self, action: int, pinned_agv: Optional[str] = None) -> Transition:
        """step() variant that lets an agent pin the assignee AGV, which the
        FIFO and cost-table policies require."""
        if self.done:
            raise RuntimeError("simulation is done; call reset()")
        if not self._decision_pending:
            raise RuntimeError("no decision pending")
        if not 0 <= action < self.action_spec.count:
            raise ValueError(
                f"action {action} out of range [0, {self.action_spec.count})"
            )
        return self._dispatch(action, pinned_agv)

    def _dispatch(self, action: int, pinned_agv: Optional[str]) -> Transition:
        prev = self.counters_snapshot()
        station_id = self.action_spec.station_id_at(action)
        assigned = None
        if station_id is not None:
            assigned = self._controller_dispatch(station_id, pinned_agv)

        if self.keep_decision_log:
            self.decision_log.append({
                "t": self.clock,
                "waiting_agvs": [a.id for a in self.agvs if a.idle],
                "action": station_id if station_id is not None else "nothing",
                "assigned_agv": assigned.id if assigned else None,
                "dest": assigned.job.dest_station_id if assigned else None,
            })

        if assigned is None:
            # Executed as do-nothing: waiting AGVs stay inactive until the
            # next wake-up trigger.
            self._decision_pending = False
        elif not any(a.idle for a in self.agvs):
            self._decision_pending = False

        if not self._decision_pending:
            self._advance()
        nxt = self.counters_snapshot()
        rew = agent_api.reward(prev, nxt, self.score_params,
                               deadlocked=self.deadlocked)
        info = {
            "clock": self.clock,
            "deadlocked": self.deadlocked,
            "assigned_agv": assigned.id if assigned else None,
            "parts_completed": self.parts_completed,
        }
        return Transition(self._observe(), rew, self.done, info)

    def _controller_dispatch(self, station_id: str,
                             pinned_agv: Optional[str]) -> Optional[AgvState]:
        """Assign a pickup job at `station_id` to the waiting AGV that would
        start it fastest (or to the pinned AGV).  Returns the assignee, or
        None when the request degenerates to do-nothing."""
        station = self.config.station(station_id)
        part = self._oldest_unclaimed(station_id)
        if part is None or station.output_node is None:
            return None
        waiting = [a for a in self.agvs if a.idle]
        if not waiting:
            return None
        if pinned_agv is not None:
            agv = next((a for a in waiting if a.id == pinned_agv), None)
            if agv is None:
                return None
        else:
            agv = min(
                waiting,
                key=lambda a: (self.estimate_or_inf(a, station_id), a.index),
            )
            if self.estimate_or_inf(agv, station_id) == float("inf"):
                return None
        dest = part.next_station_id(self.config.sink.id)
        part.claimed_by = agv.id
        agv.job = Job(station_id=station_id, part=part, dest_station_id=dest)
        self.decisions_assigned += 1
        self._start_drive(agv, station.output_node)
        return agv

    def _oldest_unclaimed(self, station_id: str) -> Optional[Part]:
        ob = self.units.get((station_id, "OB"))
        if ob is None:
            return None
        for part in ob.parts:
            if part.claimed_by is None:
                return part
        return None

    # ------------------------------------------------------------------
    # agent-visible queries

    def waiting_agvs(self) -> list[AgvState]:
        return [a for a in self.agvs if a.idle]

    def stations_with_waiting_parts(self) -> list[tuple[StationSpec, float]]:
        """Stations whose output buffer holds an unclaimed part, with the
        arrival time of the oldest one."""
        out = []
        for s in self.config.stations:
            part = self._oldest_unclaimed(s.id)
            if part is not None:
                out.append((s, part.arrived_at))
        return out

    def estimate_time_to_station(self, agv: AgvState, station_id: str) -> float:
        """Seconds until `agv` could begin a pickup at `station_id`: the
        remaining nominal duration of its current job, if any, plus the drive
        from where that job ends."""
        station = self.config.station(station_id)
        if station.output_node is None:
            raise ValueError(f"station {station_id!r} has no output buffer")
        target = station.output_node
        speed = agv.spec.speed
        graph = self.config.graph
        transfer = self.config.transfer_time

        def drive(a: str, b: str) -> float:
            if a == b:
                return 0.0
            return drive_duration(graph.distance(a, b), speed)

        if agv.idle:
            return drive(agv.last_node, target)

        job = agv.job
        if job is None:  # mid-transfer bookkeeping edge; treat as busy-now
            return drive(agv.last_node, target)
        pickup_node = self.config.station(job.station_id).output_node
        dest_station = self.config.station(job.dest_station_id)
        dest_node = dest_station.input_node
        remaining = 0.0
        state = agv.action_state
        if state == AgvActionState.DRIVING:
            remaining += max(0.0, agv.phase_end - self.clock)
            if job.leg == "fetch":
                remaining += transfer + drive(pickup_node, dest_node) + transfer
            else:
                remaining += transfer
        elif state == AgvActionState.WAITING_TO_PICKUP:
            remaining += transfer + drive(pickup_node, dest_node) + transfer
        elif state == AgvActionState.TRANSFERRING_IN:
            remaining += max(0.0, agv.phase_end - self.clock)
            remaining += drive(pickup_node, dest_node) + transfer
        elif state == AgvActionState.WAITING_TO_DROPDOWN:
            remaining += transfer
        elif state == AgvActionState.TRANSFERRING_OUT:
            remaining += max(0.0, agv.phase_end - self.clock)
        return remaining + drive(dest_node, target)

    def estimate_or_inf(self, agv: AgvState, station_id: str) -> float:
        try:
            return self.estimate_time_to_station(agv, station_id)
        except UnreachableError:
            return float("inf")

    # ------------------------------------------------------------------
    # event loop

    def _advance(self) -> None:
        while not self.done:
            if self.deadlocked:
                self._finish(deadlocked=True)
                return
            if self._decision_pending:
                return
            next_time = self.queue.peek_time()
            if next_time is None:
                self._on_quiescent()
                if self._decision_pending or self.done:
                    return
                continue
            if next_time >= self.horizon:
                self.queue.clock = self.horizon
                self._finish(deadlocked=False)
                return
            event = self.queue.next_event()
            if self.trace is not None:
                self.trace({
                    "t": event.time, "id": event.id,
                    "kind": event.kind.value, "payload": event.payload,
                })
            self._apply(event)

    def _finish(self, deadlocked: bool) -> None:
        self.deadlocked = deadlocked
        self.done = True
        self._decision_pending = False

    def _on_quiescent(self) -> None:
        """Empty event queue: nothing will happen without an assignment."""
        if self.detect_deadlock():
            self._finish(deadlocked=True)
            return
        if self.parts_released == self.parts_completed:
            self._finish(deadlocked=False)
            return
        if any(a.idle for a in self.agvs):
            self._quiescent_offers += 1
            if self._quiescent_offers > _QUIESCENT_OFFER_CAP:
                # The agent keeps refusing in an unchanged state; the run can
                # never progress.  Count it as deadlocked.
                self._finish(deadlocked=True)
                return
            self._decision_pending = True
            return
        # No events, no idle AGVs, no deadlock: nothing left to simulate.
        self._finish(deadlocked=False)

    def _raise_decision(self) -> None:
        if any(a.idle for a in self.agvs):
            self._decision_pending = True
            self._quiescent_offers = 0

    # -- event handlers -------------------------------------------------

    def _apply(self, event) -> None:
        kind = event.kind
        if kind == EventKind.SOURCE_CLOCK_TICK:
            self._on_source_tick()
        elif kind == EventKind.PART_RELEASED:
            self._on_release_attempt()
        elif kind == EventKind.DRIVE_ARRIVED:
            self._on_drive_arrived(self.agvs[event.payload["agv"]])
        elif kind == EventKind.TRANSFER_DONE:
            self._on_transfer_done(event.payload)
        elif kind == EventKind.PROCESSING_DONE:
            self._on_processing_done(event.payload["station"])
        else:  # pragma: no cover - enum is closed
            raise RuntimeError(f"unknown event kind {kind}")

    def _noisy(self, nominal: float, component: str) -> float:
        noise = self.config.noise
        if noise is None:
            return nominal
        delta = getattr(noise, component)
        if delta <= 0:
            return nominal
        return nominal * self.rng.uniform(1.0 - delta, 1.0 + delta)

    def _on_source_tick(self) -> None:
        self.release_part()
        period = self._noisy(self.config.source_clock, "source_clock")
        self.queue.schedule(self.clock + period, EventKind.SOURCE_CLOCK_TICK)

    def _on_release_attempt(self) -> None:
        if self.release_part() and self.config.source_clock == 0:
            ob = self.units[(self.config.source.id, "OB")]
            if ob.free_slots > 0:
                self.queue.schedule(self.clock, EventKind.PART_RELEASED)

    def release_part(self) -> Optional[Part]:
        """Append a uniformly sampled part to the source output buffer, or
        return None when the buffer is at capacity (the attempt is wasted)."""
        ob = self.units[(self.config.source.id, "OB")]
        if ob.free_slots <= 0:
            return None
        ptype = self.config.part_types[self.rng.randrange(len(self.config.part_types))]
        part = Part(uid=self._next_part_uid, type=ptype, arrived_at=self.clock)
        self._next_part_uid += 1
        self.parts_released += 1
        ob.parts.append(part)
        if not ob.busy:
            ob.settle()
        self._raise_decision()  # part arrived in an output buffer
        return part

    def _start_drive(self, agv: AgvState, target_node: str) -> None:
        path = self.config.graph.shortest_path(agv.last_node, target_node)
        duration = self._noisy(
            drive_duration(path.distance, agv.spec.speed), "drive"
        )
        agv.action_state = AgvActionState.DRIVING
        agv.current_target = target_node
        agv.phase_end = self.clock + duration
        self.queue.schedule(agv.phase_end, EventKind.DRIVE_ARRIVED,
                            {"agv": agv.index})

    def _on_drive_arrived(self, agv: AgvState) -> None:
        agv.last_node = agv.current_target
        agv.current_target = None
        if agv.job.leg == "fetch":
            if not self._try_start_pickup(agv):
                agv.action_state = AgvActionState.WAITING_TO_PICKUP
        else:
            if not self._try_start_drop(agv):
                agv.action_state = AgvActionState.WAITING_TO_DROPDOWN
                self._wtd_queues[f"{agv.job.dest_station_id}.IB"].append(agv)
                if self.detect_deadlock():
                    self.deadlocked = True

    def _try_start_pickup(self, agv: AgvState) -> bool:
        ob = self.units[(agv.job.station_id, "OB")]
        if ob.busy or not ob.parts or ob.parts[0] is not agv.job.part:
            return False
        ob.action_state = UnitActionState.TRANSFERRING_OUT
        agv.action_state = AgvActionState.TRANSFERRING_IN
        agv.phase_end = self.clock + self._noisy(self.config.transfer_time, "transfer")
        self.queue.schedule(agv.phase_end, EventKind.TRANSFER_DONE,
                            {"move": "pickup", "agv": agv.index})
        return True

    def _try_start_drop(self, agv: AgvState) -> bool:
        ib = self.units[(agv.job.dest_station_id, "IB")]
        if ib.busy or ib.free_slots <= 0:
            return False
        ib.action_state = UnitActionState.TRANSFERRING_IN
        ib.inflight += 1
        agv.action_state = AgvActionState.TRANSFERRING_OUT
        agv.phase_end = self.clock + self._noisy(self.config.transfer_time, "transfer")
        self.queue.schedule(agv.phase_end, EventKind.TRANSFER_DONE,
                            {"move": "drop", "agv": agv.index})
        return True

    def _on_transfer_done(self, payload: dict) -> None:
        move = payload["move"]
        if move == "pickup":
            self._finish_pickup(self.agvs[payload["agv"]])
        elif move == "drop":
            self._finish_drop(self.agvs[payload["agv"]])
        elif move == "ib_pu":
            self._finish_ib_to_pu(payload["station"])
        elif move == "pu_ob":
            self._finish_pu_to_ob(payload["station"])
        else:  # pragma: no cover
            raise RuntimeError(f"unknown transfer move {move}")

    def _finish_pickup(self, agv: AgvState) -> None:
        job = agv.job
        ob = self.units[(job.station_id, "OB")]
        part = ob.parts.popleft()
        assert part is agv.job.part
        ob.settle()
        agv.carried = part
        part.arrived_at = self.clock
        job.leg = "deliver"
        dest = self.config.station(job.dest_station_id)
        self._start_drive(agv, dest.input_node)
        # A buffer slot freed:
        station = ob.station
        if station.kind == SOURCE and self.config.source_clock == 0:
            self.queue.schedule(self.clock, EventKind.PART_RELEASED)
        if station.kind == MACHINE:
            self._try_pu_to_ob(station)
        self._wake_pickup_waiters(ob)
        self._raise_decision()

    def _finish_drop(self, agv: AgvState) -> None:
        job = agv.job
        ib = self.units[(job.dest_station_id, "IB")]
        part = agv.carried
        agv.carried = None
        agv.job = None
        part.claimed_by = None
        part.actions_done += 1  # the drive that just delivered it
        self.completion_sum += 1.0 / part.type.total_actions
        part.arrived_at = self.clock
        part.visited.append(job.dest_station_id)
        ib.inflight -= 1
        station = ib.station
        if station.kind == SINK:
            # The sink consumes parts on arrival; its buffer never fills.
            self.parts_completed += 1
            ib.settle()
        else:
            ib.parts.append(part)
            ib.settle()
            self._try_ib_to_pu(station)
        self._wake_drop_waiters(ib)
        agv.action_state = AgvActionState.WAITING_FOR_ORDER
        agv.waiting_since = self.clock
        self._raise_decision()

    def _try_ib_to_pu(self, station: StationSpec) -> None:
        ib = self.units[(station.id, "IB")]
        pu = self.units[(station.id, "PU")]
        if ib.busy or not ib.parts or pu.busy or pu.parts or pu.inflight:
            return
        ib.action_state = UnitActionState.TRANSFERRING_OUT
        pu.action_state = UnitActionState.TRANSFERRING_IN
        pu.inflight = 1
        done = self.clock + self._noisy(self.config.transfer_time, "transfer")
        self.queue.schedule(done, EventKind.TRANSFER_DONE,
                            {"move": "ib_pu", "station": station.id})

    def _finish_ib_to_pu(self, station_id: str) -> None:
        station = self.config.station(station_id)
        ib = self.units[(station_id, "IB")]
        pu = self.units[(station_id, "PU")]
        part = ib.parts.popleft()
        ib.settle()
        pu.inflight = 0
        pu.parts.append(part)
        part.arrived_at = self.clock
        pu.action_state = UnitActionState.PROCESSING
        done = self.clock + self._noisy(station.processing_time, "processing")
        self.queue.schedule(done, EventKind.PROCESSING_DONE, {"station": station_id})
        # An input-buffer slot freed: wake the first waiting dropper.
        self._wake_drop_waiters(ib)
        self._raise_decision()

    def _on_processing_done(self, station_id: str) -> None:
        station = self.config.station(station_id)
        pu = self.units[(station_id, "PU")]
        part = pu.parts[0]
        part.actions_done += 1
        part.route_cursor += 1
        self.completion_sum += 1.0 / part.type.total_actions
        pu.action_state = UnitActionState.WAITING_TO_PICKUP
        self._try_pu_to_ob(station)

    def _try_pu_to_ob(self, station: StationSpec) -> None:
        pu = self.units[(station.id, "PU")]
        ob = self.units[(station.id, "OB")]
        if pu.action_state != UnitActionState.WAITING_TO_PICKUP or not pu.parts:
            return
        if ob.busy or ob.free_slots <= 0:
            return
        pu.action_state = UnitActionState.TRANSFERRING_OUT
        ob.action_state = UnitActionState.TRANSFERRING_IN
        ob.inflight += 1
        done = self.clock + self._noisy(self.config.transfer_time, "transfer")
        self.queue.schedule(done, EventKind.TRANSFER_DONE,
                            {"move": "pu_ob", "station": station.id})

    def _finish_pu_to_ob(self, station_id: str) -> None:
        station = self.config.station(station_id)
        pu = self.units[(station_id, "PU")]
        ob = self.units[(station_id, "OB")]
        part = pu.parts.popleft()
        pu.settle()
        ob.inflight -= 1
        ob.parts.append(part)
        part.arrived_at = self.clock
        ob.settle()
        self._wake_pickup_waiters(ob)
        self._try_ib_to_pu(station)
        self._raise_decision()  # part arrived in an output buffer

    def _wake_pickup_waiters(self, ob: UnitState) -> None:
        if ob.busy or not ob.parts:
            return
        head = ob.parts[0]
        if head.claimed_by is None:
            return
        for agv in self.agvs:
            if (agv.id == head.claimed_by
                    and agv.action_state == AgvActionState.WAITING_TO_PICKUP):
                self._try_start_pickup(agv)
                return

    def _wake_drop_waiters(self, ib: UnitState) -> None:
        queue = self._wtd_queues[ib.id]
        while queue and not ib.busy and ib.free_slots > 0:
            agv = queue.popleft()
            started = self._try_start_drop(agv)
            assert started

    # ------------------------------------------------------------------
    # deadlock detection

    def detect_deadlock(self) -> bool:
        """True iff the plant can provably never progress again.

        An AGV stuck waiting to drop is doomed when its destination input
        buffer can never accept: the buffer is full, the production unit
        cannot clear, and the output buffer can neither drain by itself nor
        ever be served by an AGV.  AGVs not currently stuck count as
        potential servers (optimistically - if they later get stuck, the
        check reruns on that transition).  With an empty event queue the
        plant is additionally dead when no idle AGV has any feasible job.
        """
        live = {
            a.index for a in self.agvs
            if a.action_state != AgvActionState.WAITING_TO_DROPDOWN
        }
        stuck = [a for a in self.agvs if a.index not in live]
        changed = True
        while changed:
            changed = False
            for agv in stuck:
                if agv.index in live:
                    continue
                if self._ib_accepting(agv.job.dest_station_id, live):
                    live.add(agv.index)
                    changed = True
        if any(a.index not in live for a in stuck):
            return True

        if len(self.queue) == 0:
            parts_in_system = (
                self.parts_released > self.parts_completed
            )
            if not parts_in_system:
                return False
            for station, _ in self.stations_with_waiting_parts():
                part = self._oldest_unclaimed(station.id)
                dest = part.next_station_id(self.config.sink.id)
                if any(a.idle for a in self.agvs) and self._ib_accepting(dest, live):
                    return False
            return True
        return False

    def _ib_accepting(self, station_id: str, live_agvs: set[int]) -> bool:
        station = self.config.station(station_id)
        if station.kind == SINK:
            return True
        ib = self.units[(station_id, "IB")]
        if ib.free_slots > 0 or ib.busy:
            return True
        pu = self.units[(station_id, "PU")]
        if pu.action_state in (UnitActionState.TRANSFERRING_IN,
                               UnitActionState.TRANSFERRING_OUT):
            return True
        if not pu.parts and not pu.inflight:
            return True
        # Production unit occupied: it needs the output buffer.
        ob = self.units[(station_id, "OB")]
        if ob.free_slots > 0 or ob.action_state == UnitActionState.TRANSFERRING_OUT:
            return True
        if ob.parts and ob.parts[0].claimed_by is not None:
            return True  # the claimer always completes its pickup
        return bool(live_agvs)

    # ------------------------------------------------------------------
    # debugging / test support

    def parts_in_system(self) -> list[Part]:
        parts = [a.carried for a in self.agvs if a.carried is not None]
        for unit in self.units.values():
            parts.extend(unit.parts)
        return parts

    def check_invariants(self) -> None:
        for unit in self.units.values():
            assert len(unit.parts) + unit.inflight <= unit.capacity, (
                f"{unit.id} over capacity"
            )
        carrying = [a for a in self.agvs if a.carried is not None]
        assert all(a.carried is not None for a in carrying)
        in_system = len(self.parts_in_system())
        assert self.parts_released == in_system + self.parts_completed, (
            "part conservation violated"
        )
        for part in self.parts_in_system():
            route = list(part.type.route)
            assert part.visited == route[: len(part.visited)], (
                f"part {part.uid} visited {part.visited} off route {route}"
            )
        assert self.completion_sum >= self.parts_completed - 1e-9
