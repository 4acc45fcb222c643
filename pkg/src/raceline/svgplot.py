"""Small self-contained SVG writer for the CLI artifacts.

Produces the track/racing-line plot (speed-colored), the GG diagram, and the
convergence comparison chart without any plotting dependency. Plots are
always derived from already-written numeric data, never the other way round.
"""

from __future__ import annotations

import numpy as np

_VIRIDIS = np.array([
    (0.267, 0.005, 0.329),
    (0.254, 0.265, 0.530),
    (0.164, 0.471, 0.558),
    (0.135, 0.659, 0.518),
    (0.478, 0.821, 0.318),
    (0.993, 0.906, 0.144),
])

_METHOD_COLORS = {"random": "#888888", "ei": "#1f77b4", "nei": "#ff7f0e"}


def _color(value: float, vmin: float, vmax: float) -> str:
    span = vmax - vmin
    t = 0.5 if span <= 0 else (value - vmin) / span
    t = min(max(t, 0.0), 1.0) * (len(_VIRIDIS) - 1)
    i = min(int(t), len(_VIRIDIS) - 2)
    frac = t - i
    rgb = (1 - frac) * _VIRIDIS[i] + frac * _VIRIDIS[i + 1]
    return "#%02x%02x%02x" % tuple(int(round(255 * c)) for c in rgb)


class SvgCanvas:
    """Maps data coordinates into a margined SVG viewport (y axis up)."""

    def __init__(self, width: int = 760, height: int = 560, margin: int = 64):
        self.width, self.height, self.margin = width, height, margin
        self._parts: list[str] = []
        self._view = (0.0, 1.0, 0.0, 1.0)
        self._scale = (1.0, 1.0)

    def set_view(self, xmin, xmax, ymin, ymax, equal_aspect=False, pad=0.05):
        dx = (xmax - xmin) or 1.0
        dy = (ymax - ymin) or 1.0
        xmin, xmax = xmin - pad * dx, xmax + pad * dx
        ymin, ymax = ymin - pad * dy, ymax + pad * dy
        sx = (self.width - 2 * self.margin) / (xmax - xmin)
        sy = (self.height - 2 * self.margin) / (ymax - ymin)
        if equal_aspect:
            s = min(sx, sy)
            cx, cy = 0.5 * (xmin + xmax), 0.5 * (ymin + ymax)
            half_w = 0.5 * (self.width - 2 * self.margin) / s
            half_h = 0.5 * (self.height - 2 * self.margin) / s
            xmin, xmax = cx - half_w, cx + half_w
            ymin, ymax = cy - half_h, cy + half_h
            sx = sy = s
        self._view = (xmin, xmax, ymin, ymax)
        self._scale = (sx, sy)

    def _px(self, x: float, y: float) -> tuple[float, float]:
        xmin, _, ymin, ymax = self._view
        sx, sy = self._scale
        return self.margin + (x - xmin) * sx, self.height - self.margin - (y - ymin) * sy

    def _pts(self, xs, ys) -> str:
        return " ".join(f"{px:.2f},{py:.2f}" for px, py in (self._px(x, y) for x, y in zip(xs, ys)))

    def polyline(self, xs, ys, stroke="#000", width=1.5, dash=None, opacity=1.0):
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self._parts.append(
            f'<polyline points="{self._pts(xs, ys)}" fill="none" stroke="{stroke}" '
            f'stroke-width="{width}" opacity="{opacity}"{dash_attr} stroke-linejoin="round"/>'
        )

    def polygon(self, xs, ys, fill="#ccc", opacity=0.3):
        self._parts.append(
            f'<polygon points="{self._pts(xs, ys)}" fill="{fill}" opacity="{opacity}" stroke="none"/>'
        )

    def colored_polyline(self, xs, ys, values, vmin, vmax, width=3.0):
        for i in range(len(xs) - 1):
            seg_val = 0.5 * (values[i] + values[i + 1])
            self.polyline(xs[i:i + 2], ys[i:i + 2], stroke=_color(seg_val, vmin, vmax),
                          width=width)

    def scatter(self, xs, ys, r=2.0, fill="#1f77b4", opacity=0.6):
        for x, y in zip(xs, ys):
            px, py = self._px(x, y)
            self._parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="{r}" '
                               f'fill="{fill}" opacity="{opacity}"/>')

    def text(self, x_px: float, y_px: float, s: str, size=13, anchor="start", rotate=None,
             color="#222"):
        rot = f' transform="rotate({rotate} {x_px:.1f} {y_px:.1f})"' if rotate is not None else ""
        self._parts.append(
            f'<text x="{x_px:.1f}" y="{y_px:.1f}" font-size="{size}" fill="{color}" '
            f'font-family="sans-serif" text-anchor="{anchor}"{rot}>{s}</text>'
        )

    def axes(self, xlabel="", ylabel="", title="", n_ticks=5):
        xmin, xmax, ymin, ymax = self._view
        m = self.margin
        self._parts.append(
            f'<rect x="{m}" y="{m}" width="{self.width - 2 * m}" '
            f'height="{self.height - 2 * m}" fill="none" stroke="#444" stroke-width="1"/>'
        )
        for xv in np.linspace(xmin, xmax, n_ticks):
            px, _ = self._px(xv, ymin)
            self._parts.append(f'<line x1="{px:.1f}" y1="{self.height - m}" x2="{px:.1f}" '
                               f'y2="{self.height - m + 5}" stroke="#444"/>')
            self.text(px, self.height - m + 18, f"{xv:.3g}", size=11, anchor="middle")
        for yv in np.linspace(ymin, ymax, n_ticks):
            _, py = self._px(xmin, yv)
            self._parts.append(f'<line x1="{m - 5}" y1="{py:.1f}" x2="{m}" y2="{py:.1f}" '
                               f'stroke="#444"/>')
            self.text(m - 8, py + 4, f"{yv:.3g}", size=11, anchor="end")
        if xlabel:
            self.text(self.width / 2, self.height - m + 38, xlabel, anchor="middle")
        if ylabel:
            self.text(m - 44, self.height / 2, ylabel, anchor="middle", rotate=-90)
        if title:
            self.text(self.width / 2, m - 16, title, size=15, anchor="middle")

    def colorbar(self, vmin: float, vmax: float, label: str, steps=40):
        x0 = self.width - self.margin + 14
        y0, y1 = self.margin, self.height - self.margin
        h = (y1 - y0) / steps
        for i in range(steps):
            val = vmax - (vmax - vmin) * (i + 0.5) / steps
            self._parts.append(
                f'<rect x="{x0}" y="{y0 + i * h:.2f}" width="12" height="{h + 0.5:.2f}" '
                f'fill="{_color(val, vmin, vmax)}"/>'
            )
        self.text(x0 + 16, y0 + 10, f"{vmax:.3g}", size=11)
        self.text(x0 + 16, y1, f"{vmin:.3g}", size=11)
        self.text(x0 + 6, y0 - 8, label, size=11)

    def to_string(self) -> str:
        body = "\n".join(self._parts)
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
            f'<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n'
        )

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_string())


def _boundaries(center) -> tuple[np.ndarray, np.ndarray]:
    from .track import _polyline_normals

    pts, width = center.points, center.width
    normals = _polyline_normals(pts, center.closed)
    left = pts + 0.5 * width[:, None] * normals
    right = pts - 0.5 * width[:, None] * normals
    if center.closed:
        left = np.vstack([left, left[:1]])
        right = np.vstack([right, right[:1]])
    return left, right


def track_svg(center, line_points: np.ndarray, speeds: np.ndarray, out,
              title: str = "") -> None:
    """Track boundaries, dashed center line, and the racing line colored by speed."""
    left, right = _boundaries(center)
    allx = np.concatenate([left[:, 0], right[:, 0]])
    ally = np.concatenate([left[:, 1], right[:, 1]])

    canvas = SvgCanvas()
    canvas.set_view(allx.min(), allx.max(), ally.min(), ally.max(), equal_aspect=True)
    canvas.polyline(left[:, 0], left[:, 1], stroke="#333", width=1.5)
    canvas.polyline(right[:, 0], right[:, 1], stroke="#333", width=1.5)
    cpts = center.points
    if center.closed:
        cpts = np.vstack([cpts, cpts[:1]])
    canvas.polyline(cpts[:, 0], cpts[:, 1], stroke="#999", width=1.0, dash="5,5")
    vmin, vmax = float(np.min(speeds)), float(np.max(speeds))
    canvas.colored_polyline(line_points[:, 0], line_points[:, 1], speeds, vmin, vmax)
    canvas.axes(xlabel="x (m)", ylabel="y (m)", title=title)
    canvas.colorbar(vmin, vmax, "v (m/s)")
    canvas.write(out)


def gg_svg(gg: np.ndarray, friction_radius: float, drive_cap: float, out,
           title: str = "GG diagram") -> None:
    """Acceleration scatter with the friction-circle boundary and drive cap."""
    lim = 1.15 * friction_radius
    canvas = SvgCanvas(width=620, height=620)
    canvas.set_view(-lim, lim, -lim, lim, equal_aspect=True)
    theta = np.linspace(0.0, 2.0 * np.pi, 181)
    canvas.polyline(friction_radius * np.cos(theta), friction_radius * np.sin(theta),
                    stroke="#cc3333", width=1.5, dash="6,4")
    canvas.polyline([-lim, lim], [drive_cap, drive_cap], stroke="#3366cc", width=1.2,
                    dash="3,4")
    canvas.scatter(gg[:, 0], gg[:, 1], r=2.2)
    canvas.axes(xlabel="lateral acceleration (m/s^2)",
                ylabel="longitudinal acceleration (m/s^2)", title=title)
    canvas.write(out)


def convergence_svg(plot_data: dict, out, title: str = "Best lap time vs evaluations") -> None:
    """Mean best-so-far curves with shaded 95% bands, one color per method."""
    methods = plot_data["methods"]
    n = max(len(m["mean"]) for m in methods)
    evals = np.arange(1, n + 1)
    ymin = min(min(m["lower"]) for m in methods)
    ymax = max(max(m["upper"]) for m in methods)

    canvas = SvgCanvas()
    canvas.set_view(1, n, ymin, ymax)
    for m in methods:
        color = _METHOD_COLORS.get(m["name"], "#2ca02c")
        xs = evals[: len(m["mean"])]
        band_x = np.concatenate([xs, xs[::-1]])
        band_y = np.concatenate([m["upper"], m["lower"][::-1]])
        canvas.polygon(band_x, band_y, fill=color, opacity=0.18)
        canvas.polyline(xs, m["mean"], stroke=color, width=2.0)
    canvas.axes(xlabel="evaluations", ylabel="best lap time (s)", title=title)
    x0 = canvas.width - canvas.margin - 130
    for i, m in enumerate(methods):
        color = _METHOD_COLORS.get(m["name"], "#2ca02c")
        y = canvas.margin + 18 + 18 * i
        canvas._parts.append(f'<line x1="{x0}" y1="{y}" x2="{x0 + 26}" y2="{y}" '
                             f'stroke="{color}" stroke-width="2.5"/>')
        canvas.text(x0 + 32, y + 4, m["name"], size=12)
    canvas.write(out)
