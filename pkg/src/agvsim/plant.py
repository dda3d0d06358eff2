"""Static plant description: waypoint graph, stations, part types, AGVs.

A plant is loaded from a single JSON document, validated, and then shared
read-only by any number of simulation instances.  All-pairs shortest paths
over the waypoint graph are precomputed at load time; plant graphs are tiny
(well under 50 nodes), so the cache is cheap and lookups are O(1).
"""

from __future__ import annotations

import hashlib
import heapq
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union


class ConfigError(ValueError):
    """Structural problem in a plant config document (bad keys, types, refs)."""


class UnreachableError(Exception):
    """No directed path exists between the requested nodes."""

    def __init__(self, src: str, dst: str):
        super().__init__(f"no path from {src!r} to {dst!r}")
        self.src = src
        self.dst = dst


SOURCE = "source"
SINK = "sink"
MACHINE = "machine"
STATION_KINDS = (SOURCE, SINK, MACHINE)

# Relative tolerance for stored edge weights against the node coordinates.
WEIGHT_RTOL = 1e-9


@dataclass(frozen=True)
class Node:
    id: str
    x: float
    y: float


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    directed: bool = False
    weight: float = 0.0


@dataclass(frozen=True)
class PathResult:
    distance: float
    nodes: tuple[str, ...]


class WaypointGraph:
    """Weighted graph of plant locations.

    Bidirectional edges behave as two directed edges of equal weight.  Among
    equal-length paths the lexicographically smallest node-id sequence is
    returned, which keeps every downstream consumer deterministic.
    """

    def __init__(self, nodes: Sequence[Node], edges: Sequence[Edge]):
        ids = [n.id for n in nodes]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ConfigError(f"duplicate node ids: {dupes}")
        self.nodes: tuple[Node, ...] = tuple(nodes)
        self.edges: tuple[Edge, ...] = tuple(edges)
        self._by_id = {n.id: n for n in nodes}
        adjacency: dict[str, list[tuple[str, float]]] = {n.id: [] for n in nodes}
        for e in edges:
            if e.src not in self._by_id or e.dst not in self._by_id:
                raise ConfigError(f"edge {e.src!r}->{e.dst!r} references unknown node")
            if e.src == e.dst:
                continue  # self-loops are useless for routing
            adjacency[e.src].append((e.dst, e.weight))
            if not e.directed:
                adjacency[e.dst].append((e.src, e.weight))
        self.adjacency = {k: tuple(sorted(v)) for k, v in adjacency.items()}
        self._paths: dict[str, dict[str, PathResult]] = {
            n.id: self._single_source(n.id) for n in nodes
        }

    def node(self, node_id: str) -> Node:
        return self._by_id[node_id]

    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes)

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._by_id

    def _single_source(self, origin: str) -> dict[str, PathResult]:
        # Dijkstra keyed on (distance, path); the path in the key makes the
        # lexicographic tie-break fall out of the heap order.
        best: dict[str, PathResult] = {}
        heap: list[tuple[float, tuple[str, ...]]] = [(0.0, (origin,))]
        while heap:
            dist, path = heapq.heappop(heap)
            node = path[-1]
            if node in best:
                continue
            best[node] = PathResult(dist, path)
            for nbr, w in self.adjacency[node]:
                if nbr in best or nbr in path:
                    continue
                heapq.heappush(heap, (dist + w, path + (nbr,)))
        return best

    def shortest_path(self, src: str, dst: str) -> PathResult:
        if src not in self._by_id or dst not in self._by_id:
            raise KeyError(f"unknown node in query {src!r}->{dst!r}")
        result = self._paths[src].get(dst)
        if result is None:
            raise UnreachableError(src, dst)
        return result

    def distance(self, src: str, dst: str) -> float:
        return self.shortest_path(src, dst).distance

    def has_path(self, src: str, dst: str) -> bool:
        return dst in self._paths.get(src, {})


def euclidean(a: Node, b: Node) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def drive_duration(distance: float, speed: float) -> float:
    """Seconds to cover `distance` meters at `speed` m/s."""
    if speed <= 0:
        raise ValueError(f"speed must be positive, got {speed}")
    if distance < 0:
        raise ValueError(f"distance must be nonnegative, got {distance}")
    return distance / speed


@dataclass(frozen=True)
class StationSpec:
    id: str
    kind: str
    input_node: Optional[str] = None
    output_node: Optional[str] = None
    buffer_capacity: int = 1
    processing_time: Optional[float] = None


@dataclass(frozen=True)
class PartTypeSpec:
    id: str
    route: tuple[str, ...]

    @property
    def total_actions(self) -> int:
        # Drives: source -> each route stop -> sink, plus one processing
        # step per route stop.
        return 2 * len(self.route) + 1


@dataclass(frozen=True)
class AgvSpec:
    id: str
    speed: float
    start_node: str


@dataclass(frozen=True)
class NoiseSpec:
    """Multiplicative jitter: each duration is scaled by U[1-d, 1+d]."""

    drive: float = 0.0
    transfer: float = 0.0
    processing: float = 0.0
    source_clock: float = 0.0

    @property
    def enabled(self) -> bool:
        return any((self.drive, self.transfer, self.processing, self.source_clock))


@dataclass(frozen=True)
class PlantConfig:
    graph: WaypointGraph
    stations: tuple[StationSpec, ...]
    part_types: tuple[PartTypeSpec, ...]
    agvs: tuple[AgvSpec, ...]
    transfer_time: float
    source_clock: float
    noise: Optional[NoiseSpec] = None

    def station(self, station_id: str) -> StationSpec:
        for s in self.stations:
            if s.id == station_id:
                return s
        raise KeyError(station_id)

    @property
    def source(self) -> StationSpec:
        return next(s for s in self.stations if s.kind == SOURCE)

    @property
    def sink(self) -> StationSpec:
        return next(s for s in self.stations if s.kind == SINK)

    @property
    def machines(self) -> tuple[StationSpec, ...]:
        return tuple(s for s in self.stations if s.kind == MACHINE)

    def station_index(self, station_id: str) -> int:
        for i, s in enumerate(self.stations):
            if s.id == station_id:
                return i
        raise KeyError(station_id)

    def with_agv_count(self, n: int) -> "PlantConfig":
        if not 1 <= n <= len(self.agvs):
            raise ConfigError(
                f"requested {n} AGVs but config defines {len(self.agvs)}"
            )
        return replace(self, agvs=self.agvs[:n])

    def with_source_clock(self, seconds: float) -> "PlantConfig":
        if seconds < 0:
            raise ConfigError(f"source clock must be >= 0, got {seconds}")
        return replace(self, source_clock=float(seconds))


def validate_config(config: PlantConfig) -> list[str]:
    """Collect every invariant violation; an empty list means usable."""
    violations: list[str] = []
    graph = config.graph

    for e in graph.edges:
        want = euclidean(graph.node(e.src), graph.node(e.dst))
        if not math.isclose(e.weight, want, rel_tol=WEIGHT_RTOL, abs_tol=1e-12):
            violations.append(
                f"edge {e.src}->{e.dst} weight {e.weight} does not match "
                f"euclidean distance {want}"
            )

    sources = [s for s in config.stations if s.kind == SOURCE]
    sinks = [s for s in config.stations if s.kind == SINK]
    if len(sources) != 1:
        violations.append(f"exactly one source required, found {len(sources)}")
    if len(sinks) != 1:
        violations.append(f"exactly one sink required, found {len(sinks)}")

    seen_station_ids = set()
    buffer_nodes: dict[str, str] = {}
    for s in config.stations:
        if s.id in seen_station_ids:
            violations.append(f"duplicate station id {s.id!r}")
        seen_station_ids.add(s.id)
        if s.kind not in STATION_KINDS:
            violations.append(f"station {s.id!r} has unknown kind {s.kind!r}")
            continue
        if s.buffer_capacity < 1:
            violations.append(f"station {s.id!r} buffer capacity must be >= 1")
        if s.kind == SOURCE and (s.input_node is not None or s.output_node is None):
            violations.append(f"source {s.id!r} must have an output node only")
        if s.kind == SINK and (s.output_node is not None or s.input_node is None):
            violations.append(f"sink {s.id!r} must have an input node only")
        if s.kind == MACHINE:
            if s.input_node is None or s.output_node is None:
                violations.append(f"machine {s.id!r} needs input and output nodes")
            if s.processing_time is None or s.processing_time <= 0:
                violations.append(f"machine {s.id!r} needs a positive processing time")
        for node_id in (s.input_node, s.output_node):
            if node_id is None:
                continue
            if node_id not in graph:
                violations.append(f"station {s.id!r} references unknown node {node_id!r}")
            elif node_id in buffer_nodes:
                violations.append(
                    f"node {node_id!r} shared by two buffers "
                    f"({buffer_nodes[node_id]} and {s.id})"
                )
            else:
                buffer_nodes[node_id] = s.id

    machine_ids = {s.id for s in config.stations if s.kind == MACHINE}
    seen_type_ids = set()
    for pt in config.part_types:
        if pt.id in seen_type_ids:
            violations.append(f"duplicate part type id {pt.id!r}")
        seen_type_ids.add(pt.id)
        if not pt.route:
            violations.append(f"part type {pt.id!r} has an empty route")
        for step in pt.route:
            if step not in machine_ids:
                violations.append(
                    f"part type {pt.id!r} routes through {step!r}, not a machine"
                )
    if not config.part_types:
        violations.append("at least one part type required")

    seen_agv_ids = set()
    for a in config.agvs:
        if a.id in seen_agv_ids:
            violations.append(f"duplicate AGV id {a.id!r}")
        seen_agv_ids.add(a.id)
        if a.speed <= 0:
            violations.append(f"AGV {a.id!r} speed must be positive")
        if a.start_node not in graph:
            violations.append(f"AGV {a.id!r} starts at unknown node {a.start_node!r}")
    if not config.agvs:
        violations.append("at least one AGV required")

    if config.transfer_time < 0:
        violations.append("transfer time must be >= 0")
    if config.source_clock < 0:
        violations.append("source clock must be >= 0")
    if config.noise is not None:
        for name in ("drive", "transfer", "processing", "source_clock"):
            delta = getattr(config.noise, name)
            if not 0.0 <= delta < 1.0:
                violations.append(f"noise.{name} must be in [0, 1), got {delta}")

    # Reachability of every transport leg each part type will request.
    if len(sources) == 1 and len(sinks) == 1 and not violations:
        src_out = sources[0].output_node
        sink_in = sinks[0].input_node
        stations = {s.id: s for s in config.stations}
        for pt in config.part_types:
            hops = [(src_out, stations[pt.route[0]].input_node)]
            for a, b in zip(pt.route, pt.route[1:]):
                hops.append((stations[a].output_node, stations[b].input_node))
            hops.append((stations[pt.route[-1]].output_node, sink_in))
            for a, b in hops:
                if not graph.has_path(a, b):
                    violations.append(
                        f"part type {pt.id!r}: no path from {a!r} to {b!r}"
                    )
        pickup_nodes = [s.output_node for s in config.stations if s.output_node]
        for agv in config.agvs:
            for node_id in pickup_nodes:
                if not graph.has_path(agv.start_node, node_id):
                    violations.append(
                        f"AGV {agv.id!r} cannot reach pickup node {node_id!r}"
                    )

    return violations


# ---------------------------------------------------------------------------
# JSON loading

_TOP_KEYS = {
    "nodes", "edges", "stations", "part_types", "agvs",
    "transfer_time_s", "source_clock_s", "noise",
}
_REQUIRED_TOP = _TOP_KEYS - {"noise"}


def _check_keys(obj: dict, allowed: set[str], required: set[str], context: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"{context}: missing keys {sorted(missing)}")


def load_plant_config(source: Union[str, Path, dict]) -> PlantConfig:
    """Parse and validate a plant config JSON document (path or dict)."""
    if isinstance(source, (str, Path)):
        doc = json.loads(Path(source).read_text())
        context = str(source)
    else:
        doc = source
        context = "<dict>"
    if not isinstance(doc, dict):
        raise ConfigError(f"{context}: top level must be an object")
    _check_keys(doc, _TOP_KEYS, _REQUIRED_TOP, context)

    nodes = []
    for item in doc["nodes"]:
        _check_keys(item, {"id", "x", "y"}, {"id", "x", "y"}, f"{context} node")
        nodes.append(Node(str(item["id"]), float(item["x"]), float(item["y"])))
    by_id = {n.id: n for n in nodes}

    edges = []
    for item in doc["edges"]:
        _check_keys(
            item, {"from", "to", "bidirectional", "weight"}, {"from", "to"},
            f"{context} edge",
        )
        src, dst = str(item["from"]), str(item["to"])
        if src not in by_id or dst not in by_id:
            raise ConfigError(f"{context}: edge {src!r}->{dst!r} references unknown node")
        weight = item.get("weight")
        if weight is None:
            weight = euclidean(by_id[src], by_id[dst])
        edges.append(
            Edge(src, dst, directed=not item.get("bidirectional", True),
                 weight=float(weight))
        )

    stations = []
    for item in doc["stations"]:
        _check_keys(
            item,
            {"id", "kind", "input_node", "output_node", "buffer_capacity",
             "processing_time_s"},
            {"id", "kind", "buffer_capacity"},
            f"{context} station",
        )
        stations.append(StationSpec(
            id=str(item["id"]),
            kind=str(item["kind"]),
            input_node=item.get("input_node"),
            output_node=item.get("output_node"),
            buffer_capacity=int(item["buffer_capacity"]),
            processing_time=(
                float(item["processing_time_s"])
                if item.get("processing_time_s") is not None else None
            ),
        ))

    part_types = []
    for item in doc["part_types"]:
        _check_keys(item, {"id", "route"}, {"id", "route"}, f"{context} part_type")
        part_types.append(PartTypeSpec(str(item["id"]), tuple(str(r) for r in item["route"])))

    agvs = []
    for item in doc["agvs"]:
        _check_keys(
            item, {"id", "speed_mps", "start_node"},
            {"id", "speed_mps", "start_node"}, f"{context} agv",
        )
        agvs.append(AgvSpec(str(item["id"]), float(item["speed_mps"]),
                            str(item["start_node"])))

    noise = None
    if "noise" in doc and doc["noise"] is not None:
        item = doc["noise"]
        allowed = {"drive", "transfer", "processing", "source_clock"}
        _check_keys(item, allowed, set(), f"{context} noise")
        noise = NoiseSpec(**{k: float(v) for k, v in item.items()})

    return PlantConfig(
        graph=WaypointGraph(nodes, edges),
        stations=tuple(stations),
        part_types=tuple(part_types),
        agvs=tuple(agvs),
        transfer_time=float(doc["transfer_time_s"]),
        source_clock=float(doc["source_clock_s"]),
        noise=noise,
    )


def config_fingerprint(config: PlantConfig) -> str:
    """Stable hash of the effective config, for checkpoint headers."""
    doc = {
        "nodes": [(n.id, n.x, n.y) for n in config.graph.nodes],
        "edges": [(e.src, e.dst, e.directed, e.weight) for e in config.graph.edges],
        "stations": [
            (s.id, s.kind, s.input_node, s.output_node, s.buffer_capacity,
             s.processing_time)
            for s in config.stations
        ],
        "part_types": [(p.id, list(p.route)) for p in config.part_types],
        "agvs": [(a.id, a.speed, a.start_node) for a in config.agvs],
        "transfer_time": config.transfer_time,
        "source_clock": config.source_clock,
        "noise": None if config.noise is None else [
            config.noise.drive, config.noise.transfer,
            config.noise.processing, config.noise.source_clock,
        ],
    }
    blob = json.dumps(doc, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()
