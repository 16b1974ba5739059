#!/usr/bin/env python3
"""Generates the bundled intersection and roundabout maps.

Right-hand traffic, 3.5 m lanes. Each map has four two-lane arms joined to a
central junction; the end of each arm is connected to the start of its
neighbour by a 270 degree loop road so that traffic can circulate indefinitely.

Usage: gen_maps.py OUTDIR
"""

import json
import math
import sys

W = 3.5
HALF = W / 2.0
ARM_END = 60.0


def rot(p, a):
    c, s = math.cos(a), math.sin(a)
    return (c * p[0] - s * p[1], s * p[0] + c * p[1])


def line(a, b, step=1.0):
    n = max(1, math.ceil(math.dist(a, b) / step))
    return [(a[0] + (b[0] - a[0]) * k / n, a[1] + (b[1] - a[1]) * k / n) for k in range(n + 1)]


def arc(center, radius, a0, a1, step=1.0):
    """Arc from angle a0 to a1 (radians, signed sweep)."""
    n = max(2, math.ceil(abs(a1 - a0) * radius / step))
    return [(center[0] + radius * math.cos(a0 + (a1 - a0) * k / n),
             center[1] + radius * math.sin(a0 + (a1 - a0) * k / n)) for k in range(n + 1)]


def join(*parts):
    out = []
    for part in parts:
        for p in part:
            if out and math.dist(out[-1], p) < 1e-6:
                continue
            out.append(p)
    return out


def rnd(pts):
    return [[round(x, 6), round(y, 6)] for x, y in pts]


def lane(lid, pts, left, right, succ):
    return {"id": lid, "centerline": rnd(pts), "width": W, "marking_left": left,
            "marking_right": right, "successors": succ}


ARMS = ["e", "n", "w", "s"]


def psi(k):
    return k * math.pi / 2.0


def loops():
    """One-way 270 degree right-turning loops from the end of each arm to the start of the previous arm."""
    lanes = []
    for k in range(4):
        a, p = ARMS[k], ARMS[(k - 1) % 4]
        ua = rot((1.0, 0.0), psi(k))
        up = rot((1.0, 0.0), psi(k - 1))
        c = (ARM_END * (ua[0] + up[0]), ARM_END * (ua[1] + up[1]))
        start = psi(k) + math.pi / 2.0
        lanes.append(lane(f"loop_{a}{p}", arc(c, ARM_END - HALF, start, start - 1.5 * math.pi),
                          "white", "white", [f"in_{p}"]))
    return lanes


def spawn_points(lanes, names, spacing):
    pts = []
    for l in lanes:
        if l["id"] not in names:
            continue
        length = sum(math.dist(p, q) for p, q in zip(l["centerline"], l["centerline"][1:]))
        s = spacing / 2.0
        while s < length - 5.0:
            pts.append({"lane": l["id"], "s": round(s, 3)})
            s += spacing
    return pts


def intersection():
    box = 10.0
    lanes = []
    lights = []
    green, yellow, all_red = 6.0, 2.0, 4.0
    period = green + yellow + all_red
    cycle = 4 * period
    for k, a in enumerate(ARMS):
        u = rot((1.0, 0.0), psi(k))
        n = (-u[1], u[0])
        out_start = (box * u[0] - HALF * n[0], box * u[1] - HALF * n[1])
        out_end = (ARM_END * u[0] - HALF * n[0], ARM_END * u[1] - HALF * n[1])
        in_start = (ARM_END * u[0] + HALF * n[0], ARM_END * u[1] + HALF * n[1])
        in_end = (box * u[0] + HALF * n[0], box * u[1] + HALF * n[1])
        b_next = ARMS[(k + 1) % 4]
        b_prev = ARMS[(k - 1) % 4]
        lanes.append(lane(f"out_{a}", line(out_start, out_end), "yellow", "white", [f"loop_{a}{b_prev}"]))
        lanes.append(lane(f"in_{a}", line(in_start, in_end), "yellow", "white",
                          [f"{a}_straight", f"{a}_left", f"{a}_right"]))
        lights.append({"id": f"light_{a}", "stop_point": [round(in_end[0], 6), round(in_end[1], 6)],
                       "governed_lanes": [f"in_{a}"], "cycle": [green, yellow, cycle - green - yellow],
                       "phase_offset": (cycle - k * period) % cycle})
        # connectors from arm a (heading -u) to the other three arms
        opp = ARMS[(k + 2) % 4]
        uo = rot((1.0, 0.0), psi(k + 2))
        no = (-uo[1], uo[0])
        lanes.append(lane(f"{a}_straight", line(in_end, (box * uo[0] - HALF * no[0], box * uo[1] - HALF * no[1])),
                          "none", "none", [f"out_{opp}"]))
        # right turn to arm k+1, left turn to arm k-1 (counter-clockwise numbering)
        ur = rot((1.0, 0.0), psi(k + 1))
        cr = (box * (u[0] + ur[0]), box * (u[1] + ur[1]))
        a0 = math.atan2(in_end[1] - cr[1], in_end[0] - cr[0])
        lanes.append(lane(f"{a}_right", arc(cr, box - HALF, a0, a0 - math.pi / 2.0), "none", "none",
                          [f"out_{b_next}"]))
        ul = rot((1.0, 0.0), psi(k - 1))
        cl = (box * (u[0] + ul[0]), box * (u[1] + ul[1]))
        a0 = math.atan2(in_end[1] - cl[1], in_end[0] - cl[0])
        lanes.append(lane(f"{a}_left", arc(cl, box + HALF, a0, a0 + math.pi / 2.0), "none", "none",
                          [f"out_{b_prev}"]))
    lanes += loops()
    names = {l["id"] for l in lanes if l["id"].startswith("loop_")} | {f"out_{a}" for a in ARMS}
    return {"lanes": lanes, "traffic_lights": lights, "yields": [],
            "spawn_points": spawn_points(lanes, names, 24.0)}


def roundabout():
    ring = 20.0
    r_turn = 10.0
    cy = HALF + r_turn
    cx = math.sqrt((ring + r_turn) ** 2 - cy ** 2)
    tangent = math.atan2(cy, cx)  # ring angle of the entry tangency, measured from the arm axis
    lanes = []
    yields = []
    for k, a in enumerate(ARMS):
        base = psi(k)
        nxt = ARMS[(k + 1) % 4]
        prv = ARMS[(k - 1) % 4]
        # entry: straight westbound (in the arm frame) then a right-hand arc onto the ring
        c_in = rot((cx, cy), base)
        straight = [rot(p, base) for p in line((ARM_END, HALF), (cx, HALF))]
        a_start = base - math.pi / 2.0
        a_end = base + math.pi + tangent  # direction from entry centre toward the ring centre
        entry_arc = arc(c_in, r_turn, a_start, a_end - 2.0 * math.pi)
        lanes.append(lane(f"in_{a}", join(straight, entry_arc), "yellow", "white", [f"ring_{a}"]))
        # exit: arc off the ring then straight eastbound
        c_out = rot((cx, -cy), base)
        x0 = base + math.pi - tangent
        exit_arc = arc(c_out, r_turn, x0, base + math.pi / 2.0)
        out_straight = [rot(p, base) for p in line((cx, -HALF), (ARM_END, -HALF))]
        lanes.append(lane(f"out_{a}", join(exit_arc, out_straight), "yellow", "white", [f"loop_{a}{prv}"]))
        # ring pieces: entry of a -> exit of next arm, exit of next arm -> entry of next arm
        e_ang = base + tangent
        x_ang = base + math.pi / 2.0 - tangent
        lanes.append(lane(f"ring_{a}", arc((0.0, 0.0), ring, e_ang, x_ang), "white", "white",
                          [f"out_{nxt}", f"ringx_{a}"]))
        lanes.append(lane(f"ringx_{a}", arc((0.0, 0.0), ring, x_ang, base + math.pi / 2.0 + tangent),
                          "white", "white", [f"ring_{nxt}"]))
        stop = rot((cx, HALF), base)
        up_len = ring * (2.0 * tangent)        # ringx_{prev}: exit of this arm -> entry of this arm
        prev_len = ring * (math.pi / 2.0 - 2.0 * tangent)  # ring_{prev}
        yields.append({"id": f"yield_{a}", "lane": f"in_{a}", "stop_point": [round(stop[0], 6), round(stop[1], 6)],
                       "zones": [{"lane": f"ringx_{prv}", "s_from": 0.0, "s_to": round(up_len + 1.0, 3)},
                                 {"lane": f"ring_{prv}", "s_from": round(max(0.0, prev_len - 14.0), 3),
                                  "s_to": round(prev_len + 1.0, 3)},
                                 {"lane": f"ring_{a}", "s_from": 0.0, "s_to": 8.0}]})
    lanes += loops()
    names = {l["id"] for l in lanes if l["id"].startswith("loop_")}
    return {"lanes": lanes, "traffic_lights": [], "yields": yields,
            "spawn_points": spawn_points(lanes, names, 24.0)}


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "maps"
    for name, data in (("intersection", intersection()), ("roundabout", roundabout())):
        with open(f"{out}/{name}.json", "w") as f:
            json.dump(data, f, separators=(",", ":"))
            f.write("\n")


if __name__ == "__main__":
    main()
