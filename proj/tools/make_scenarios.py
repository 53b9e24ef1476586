#!/usr/bin/env python3
"""Regenerate the bundled scenarios in ../scenarios.

Output is deterministic: rerunning produces byte-identical files.
"""

import json
import math
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "scenarios"


def box(x0, y0, x1, y1):
    return [[x0, y0, x1, y0], [x1, y0, x1, y1], [x1, y1, x0, y1], [x0, y1, x0, y0]]


def seg_dist(px, py, s):
    ax, ay, bx, by = s
    ex, ey = bx - ax, by - ay
    t = ((px - ax) * ex + (py - ay) * ey) / (ex * ex + ey * ey)
    t = min(1.0, max(0.0, t))
    return math.hypot(px - ax - t * ex, py - ay - t * ey)


def scatter(rng, count, region, walls, radius, gap, taken):
    """Rejection-sample `count` non-overlapping points clear of the walls."""
    x0, y0, x1, y1 = region
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > 200000:
            raise RuntimeError("could not place agents")
        x = round(rng.uniform(x0, x1), 3)
        y = round(rng.uniform(y0, y1), 3)
        if any(seg_dist(x, y, s) < radius + gap for s in walls):
            continue
        if any(math.hypot(x - qx, y - qy) < 2 * radius + gap for qx, qy in taken):
            continue
        taken.append((x, y))
        out.append((x, y))
    return out


def write(name, doc):
    path = OUT / f"{name}.json"
    path.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {path}")


def minimal():
    return {
        "name": "minimal",
        "agents": [
            {"id": 0, "kind": "pedestrian", "x": 0.0, "y": 0.0,
             "targets": [{"type": "point", "x": 5.0, "y": 0.0}]},
        ],
    }


def room():
    return {
        "name": "room",
        "bounds": [-0.5, -0.5, 10.5, 10.5],
        "obstacles": box(0.0, 0.0, 10.0, 10.0),
        "agents": [{"id": 1, "kind": "robot", "x": 5.0, "y": 5.0, "heading": 0.0}],
    }


def hall(rng):
    """200 pedestrians criss-crossing a 40 x 40 m hall between random spots."""
    size = 40.0
    walls = box(0.0, 0.0, size, size) + [[12.0, 12.0, 16.0, 12.0], [24.0, 28.0, 28.0, 28.0],
                                          [12.0, 28.0, 12.0, 24.0], [28.0, 12.0, 28.0, 16.0]]
    pts = scatter(rng, 200, (1.0, 1.0, size - 1.0, size - 1.0), walls, 0.2, 0.3, [])
    agents = []
    for i, (x, y) in enumerate(pts):
        goals = []
        while len(goals) < 3:
            gx, gy = round(rng.uniform(2.0, size - 2.0), 2), round(rng.uniform(2.0, size - 2.0), 2)
            if all(seg_dist(gx, gy, s) > 1.0 for s in walls):
                goals.append((gx, gy))
        agents.append({
            "id": i, "kind": "pedestrian", "x": x, "y": y,
            "pref_speed": round(rng.uniform(1.1, 1.5), 2),
            "targets": [{"type": "point", "x": gx, "y": gy, "tol": 0.5} for gx, gy in goals],
            "cycle": True,
        })
    return {
        "name": "hall_200",
        "bounds": [-0.5, -0.5, size + 0.5, size + 0.5],
        "obstacles": walls,
        "agents": agents,
        "config": {"seed": 200, "planner_params": {"resolution": 0.5}},
    }


def trade_show(rng):
    """1000 visitors touring booths laid out in a 6 x 4 grid with aisles."""
    width, height = 80.0, 50.0
    walls = box(0.0, 0.0, width, height)
    booths = []
    for col in range(6):
        for row in range(4):
            x0 = 6.0 + col * 12.0
            y0 = 5.0 + row * 11.0
            walls += [[x0, y0, x0 + 6.0, y0], [x0 + 6.0, y0, x0 + 6.0, y0 + 5.0],
                      [x0 + 6.0, y0 + 5.0, x0, y0 + 5.0]]
            # Open side faces west; visitors stop just in front of it.
            booths.append((x0 - 1.0, y0 + 2.5))
    # The open west side of each booth is part of its footprint for placement.
    keep_out = walls + [[b[0] + 1.0, b[1] - 2.5, b[0] + 1.0, b[1] + 2.5] for b in booths]
    pts = scatter(rng, 1000, (1.0, 1.0, width - 1.0, height - 1.0), keep_out, 0.2, 0.15, [])
    agents = []
    for i, (x, y) in enumerate(pts):
        tour = rng.sample(booths, 3)
        agents.append({
            "id": i, "kind": "pedestrian", "x": x, "y": y,
            "pref_speed": round(rng.uniform(0.9, 1.4), 2),
            "targets": [{"type": "point", "x": bx, "y": by, "tol": 0.8} for bx, by in tour],
            "cycle": True,
        })
    return {
        "name": "trade_show_1000",
        "bounds": [-0.5, -0.5, width + 0.5, height + 0.5],
        "obstacles": walls,
        "agents": agents,
        "config": {"seed": 1000, "planner_params": {"resolution": 0.5}},
    }


def hall_social(rng):
    """The hall crowd under social forces, with interaction strength set for
    pedestrians walking at 1.1 to 1.5 m/s."""
    doc = hall(rng)
    doc["name"] = "hall_200_social"
    doc["config"]["avoidance"] = "social_force"
    doc["config"]["avoidance_params"] = {"A": 10.0, "B": 0.3, "wall_A": 10.0, "wall_B": 0.1}
    return doc


def main():
    OUT.mkdir(exist_ok=True)
    write("minimal", minimal())
    write("room", room())
    write("hall_200", hall(random.Random(200)))
    write("hall_200_social", hall_social(random.Random(200)))
    write("trade_show_1000", trade_show(random.Random(1000)))


if __name__ == "__main__":
    main()
