"""Regenerate the bundled track fixtures in src/raceline/tracks/.

Three synthetic layouts: a stadium oval and an open S-curve at 1/10 scale,
and a twisty closed circuit at 1/43 scale (rounded polygon with a chicane
notch). Closed tracks repeat the first point in the last row so the loader
detects closure.
"""

import math
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "raceline" / "tracks"


def straight(start, heading, length, step):
    n = max(1, int(math.ceil(length / step)))
    ds = length / n
    pts = []
    x, y = start
    for _ in range(n):
        x += ds * math.cos(heading)
        y += ds * math.sin(heading)
        pts.append((x, y))
    return pts, (x, y), heading


def arc(start, heading, radius, angle, step):
    """Arc of signed sweep ``angle`` (positive = left turn) with radius |radius|."""
    sign = 1.0 if angle >= 0 else -1.0
    r = abs(radius)
    cx = start[0] - sign * r * math.sin(heading)
    cy = start[1] + sign * r * math.cos(heading)
    n = max(2, int(math.ceil(r * abs(angle) / step)))
    pts = []
    for i in range(1, n + 1):
        phi = heading + angle * i / n
        pts.append((cx + sign * r * math.sin(phi), cy - sign * r * math.cos(phi)))
    return pts, pts[-1], heading + angle


def build(segments, step, start=(0.0, 0.0), heading=0.0):
    pts = [start]
    pos, h = start, heading
    for kind, *args in segments:
        if kind == "s":
            new, pos, h = straight(pos, h, args[0], step)
        else:
            new, pos, h = arc(pos, h, args[0], args[1], step)
        pts.extend(new)
    return np.asarray(pts)


def rounded_polygon(vertices, radii, step):
    """Sample a rounded polygon: straights between fillet arcs at each vertex."""
    verts = np.asarray(vertices, dtype=float)
    n = verts.shape[0]
    tangents_in, tangents_out, arcs = [], [], []
    for i in range(n):
        prev_v = verts[(i - 1) % n]
        v = verts[i]
        next_v = verts[(i + 1) % n]
        u = (v - prev_v) / np.linalg.norm(v - prev_v)
        w = (next_v - v) / np.linalg.norm(next_v - v)
        theta = math.atan2(u[0] * w[1] - u[1] * w[0], float(u @ w))
        r = radii[i]
        d = r * math.tan(abs(theta) / 2.0)
        p_in = v - u * d
        p_out = v + w * d
        side = 1.0 if theta >= 0 else -1.0
        normal = side * np.array([-u[1], u[0]])
        center = p_in + r * normal
        phi0 = math.atan2(p_in[1] - center[1], p_in[0] - center[0])
        arcs.append((center, r, phi0, theta))
        tangents_in.append(p_in)
        tangents_out.append(p_out)

    pts = []
    for i in range(n):
        center, r, phi0, theta = arcs[i]
        n_arc = max(2, int(math.ceil(abs(r * theta) / step)))
        for j in range(n_arc + 1):
            phi = phi0 + theta * j / n_arc
            pts.append(center + r * np.array([math.cos(phi), math.sin(phi)]))
        p0 = tangents_out[i]
        p1 = tangents_in[(i + 1) % n]
        length = np.linalg.norm(p1 - p0)
        n_str = max(1, int(math.ceil(length / step)))
        for j in range(1, n_str):
            pts.append(p0 + (p1 - p0) * j / n_str)
        pts.append(p1)

    out = [pts[0]]
    for p in pts[1:]:
        if np.linalg.norm(p - out[-1]) > 1e-9:
            out.append(p)
    if np.linalg.norm(out[-1] - out[0]) < 1e-9:
        out = out[:-1]
    return np.asarray(out)


def write_track(path, pts, width, closed, comment):
    with open(path, "w") as fh:
        fh.write(f"# {comment}\n")
        fh.write("x_m,y_m,width_m\n")
        for x, y in pts:
            fh.write(f"{x:.6f},{y:.6f},{width:.6f}\n")
        if closed:
            fh.write(f"{pts[0][0]:.6f},{pts[0][1]:.6f},{width:.6f}\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)

    oval = build([("s", 8.0), ("a", 2.5, math.pi), ("s", 8.0), ("a", 2.5, math.pi)],
                 step=0.25)
    # drop the duplicated closing point; write_track re-adds it
    if np.linalg.norm(oval[0] - oval[-1]) < 1e-9:
        oval = oval[:-1]
    write_track(OUT / "oval.csv", oval, width=1.2, closed=True,
                comment="stadium oval, 1/10 scale: 8 m straights, 2.5 m end radii")

    scurve = build([("s", 6.0), ("a", 4.0, math.pi / 3), ("a", 4.0, -math.pi / 3),
                    ("s", 6.0)], step=0.25)
    write_track(OUT / "scurve.csv", scurve, width=1.2, closed=False,
                comment="open S-curve, 1/10 scale: 6 m straights around two 4 m arcs")

    verts = [(0.0, 0.0), (3.8, 0.0), (3.8, 1.25), (2.3, 1.25), (2.3, 2.55),
             (3.8, 2.55), (3.8, 3.8), (1.5, 3.8), (0.0, 2.8)]
    radii = [0.60] * 9
    circuit = rounded_polygon(verts, radii, step=0.05)
    write_track(OUT / "ethz1_like.csv", circuit, width=0.37, closed=True,
                comment="twisty 1/43-scale closed circuit with a chicane notch")

    for name in ("oval.csv", "scurve.csv", "ethz1_like.csv"):
        data = np.loadtxt(OUT / name, delimiter=",", skiprows=2)
        seg = np.linalg.norm(np.diff(data[:, :2], axis=0), axis=1)
        print(f"{name}: {data.shape[0]} points, length {seg.sum():.3f} m, "
              f"min spacing {seg.min():.4f} m")


if __name__ == "__main__":
    main()
