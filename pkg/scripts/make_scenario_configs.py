"""Regenerate the shipped plant configs under src/agvsim/configs/.

Geometry conventions: AGV speed 1 m/s, transfer time 2 s, buffer capacity 2,
machine processing time 20 s (23 s for the grid family so that the saturated
throughput plateau sits below the source-rate bound).  Edge weights are left
out of the JSON; the loader derives them from the node coordinates.
"""

import json
import math
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "agvsim" / "configs"


def write(name: str, doc: dict) -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    path = OUT / f"{name}.json"
    path.write_text(json.dumps(doc, indent=2) + "\n")
    print("wrote", path)


def node(nid: str, x: float, y: float) -> dict:
    return {"id": nid, "x": round(x, 9), "y": round(y, 9)}


def edge(a: str, b: str) -> dict:
    return {"from": a, "to": b, "bidirectional": True}


def machine(mid: str, proc: float) -> dict:
    return {
        "id": mid, "kind": "machine",
        "input_node": f"n_{mid.lower()}_in", "output_node": f"n_{mid.lower()}_out",
        "buffer_capacity": 2, "processing_time_s": proc,
    }


def mayer() -> dict:
    # Six buffer nodes on a ring; every hop of the single loop is 5 m.
    names = ["n_src_out", "n_m1_in", "n_m1_out", "n_m2_in", "n_m2_out", "n_sink_in"]
    radius = 5.0  # hexagon side equals the radius
    nodes = [
        node(n, radius * math.cos(k * math.pi / 3), radius * math.sin(k * math.pi / 3))
        for k, n in enumerate(names)
    ]
    edges = [edge(names[i], names[(i + 1) % 6]) for i in range(6)]
    return {
        "nodes": nodes,
        "edges": edges,
        "stations": [
            {"id": "source", "kind": "source", "output_node": "n_src_out",
             "buffer_capacity": 2},
            machine("M1", 20.0),
            machine("M2", 20.0),
            {"id": "sink", "kind": "sink", "input_node": "n_sink_in",
             "buffer_capacity": 2},
        ],
        "part_types": [{"id": "PT1", "route": ["M1", "M2"]}],
        "agvs": [{"id": "AGV1", "speed_mps": 1.0, "start_node": "n_src_out"}],
        "transfer_time_s": 2.0,
        "source_clock_s": 0.0,
    }


def one_machine_big() -> dict:
    # Short hops source->machine input and machine output->sink; very long
    # hops across.  Two AGVs can split into two short loops.
    nodes = [
        node("n_src_out", 0, 0),
        node("n_m1_in", 5, 0),
        node("n_m1_out", 5, 120),
        node("n_sink_in", 0, 120),
    ]
    edges = [
        edge("n_src_out", "n_m1_in"),
        edge("n_m1_in", "n_m1_out"),
        edge("n_m1_out", "n_sink_in"),
        edge("n_sink_in", "n_src_out"),
    ]
    return {
        "nodes": nodes,
        "edges": edges,
        "stations": [
            {"id": "source", "kind": "source", "output_node": "n_src_out",
             "buffer_capacity": 2},
            machine("M1", 20.0),
            {"id": "sink", "kind": "sink", "input_node": "n_sink_in",
             "buffer_capacity": 2},
        ],
        "part_types": [{"id": "PT1", "route": ["M1"]}],
        "agvs": [
            {"id": "AGV1", "speed_mps": 1.0, "start_node": "n_src_out"},
            {"id": "AGV2", "speed_mps": 1.0, "start_node": "n_m1_out"},
        ],
        "transfer_time_s": 2.0,
        "source_clock_s": 0.0,
    }


def three_machines_loop() -> dict:
    # Route revisits M1, the classic deadlock generator.
    nodes = [
        node("n_src_out", 0, 0),
        node("n_m1_in", 30, 0), node("n_m1_out", 35, 0),
        node("n_m2_in", 65, 0), node("n_m2_out", 70, 0),
        node("n_m3_in", 35, 25), node("n_m3_out", 30, 25),
        node("n_sink_in", 0, 25),
    ]
    edges = [
        edge("n_src_out", "n_m1_in"),
        edge("n_m1_in", "n_m1_out"),
        edge("n_m1_out", "n_m2_in"),
        edge("n_m2_in", "n_m2_out"),
        edge("n_m2_out", "n_m1_in"),
        edge("n_m1_out", "n_m3_in"),
        edge("n_m3_in", "n_m3_out"),
        edge("n_m3_out", "n_sink_in"),
        edge("n_sink_in", "n_src_out"),
    ]
    return {
        "nodes": nodes,
        "edges": edges,
        "stations": [
            {"id": "source", "kind": "source", "output_node": "n_src_out",
             "buffer_capacity": 2},
            machine("M1", 20.0),
            machine("M2", 20.0),
            machine("M3", 20.0),
            {"id": "sink", "kind": "sink", "input_node": "n_sink_in",
             "buffer_capacity": 2},
        ],
        "part_types": [{"id": "PT1", "route": ["M1", "M2", "M1", "M3"]}],
        "agvs": [
            {"id": "AGV1", "speed_mps": 1.0, "start_node": "n_src_out"},
            {"id": "AGV2", "speed_mps": 1.0, "start_node": "n_m1_out"},
            {"id": "AGV3", "speed_mps": 1.0, "start_node": "n_m3_out"},
        ],
        "transfer_time_s": 2.0,
        "source_clock_s": 0.0,
    }


def grid(n_machines: int) -> dict:
    # Shared 2x3 grid layout; scenarios differ in which machines host
    # buffers and in the two part routes.
    cols = {1: 20, 3: 50, 5: 80}
    nodes = [node("n_src_out", 0, 10)]
    for m, x in cols.items():
        nodes += [node(f"n_m{m}_in", x, 0), node(f"n_m{m}_out", x + 10, 0)]
        nodes += [node(f"n_m{m+1}_in", x, 20), node(f"n_m{m+1}_out", x + 10, 20)]
    nodes.append(node("n_sink_in", 110, 10))

    edges = [edge("n_src_out", "n_m1_in"), edge("n_src_out", "n_m2_in")]
    for m in range(1, 7):
        edges.append(edge(f"n_m{m}_in", f"n_m{m}_out"))
    edges += [
        edge("n_m1_out", "n_m3_in"), edge("n_m3_out", "n_m5_in"),
        edge("n_m2_out", "n_m4_in"), edge("n_m4_out", "n_m6_in"),
    ]
    for a, b in ((1, 2), (2, 1), (3, 4), (4, 3), (5, 6), (6, 5)):
        edges.append(edge(f"n_m{a}_out", f"n_m{b}_in"))
    edges += [
        edge("n_m5_out", "n_sink_in"), edge("n_m6_out", "n_sink_in"),
        edge("n_sink_in", "n_src_out"),
    ]

    routes = {
        2: (["M1", "M2"], ["M2", "M1"]),
        4: (["M1", "M3", "M2", "M4"], ["M2", "M4", "M1", "M3"]),
        6: (["M1", "M3", "M5", "M2", "M4", "M6"],
            ["M2", "M4", "M6", "M1", "M3", "M5"]),
    }[n_machines]
    used = sorted({m for route in routes for m in route})
    return {
        "nodes": nodes,
        "edges": edges,
        "stations": [
            {"id": "source", "kind": "source", "output_node": "n_src_out",
             "buffer_capacity": 2},
            *[machine(m, 23.0) for m in used],
            {"id": "sink", "kind": "sink", "input_node": "n_sink_in",
             "buffer_capacity": 2},
        ],
        "part_types": [
            {"id": "PTA", "route": routes[0]},
            {"id": "PTB", "route": routes[1]},
        ],
        "agvs": [
            {"id": "AGV1", "speed_mps": 1.0, "start_node": "n_src_out"},
            {"id": "AGV2", "speed_mps": 1.0, "start_node": "n_sink_in"},
            {"id": "AGV3", "speed_mps": 1.0, "start_node": "n_m1_out"},
            {"id": "AGV4", "speed_mps": 1.0, "start_node": "n_m2_out"},
        ],
        "transfer_time_s": 2.0,
        "source_clock_s": 0.0,
    }


if __name__ == "__main__":
    write("mayer", mayer())
    write("one_machine_big", one_machine_big())
    write("three_machines_loop", three_machines_loop())
    for n in (2, 4, 6):
        write(f"grid_{n}", grid(n))
