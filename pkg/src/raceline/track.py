"""Track geometry: center-line loading, node placement, and candidate paths.

A track is described by its center line (waypoints plus local width). A
candidate trajectory is an n-vector of lateral offsets, one per optimization
node; offsets are turned into waypoints, joined by a C2 cubic spline, and
resampled near-uniformly in arc length for the speed solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import BoundsError, TrackFormatError, ValidationError

MIN_NODES = 4
MAX_NODES = 30
MIN_RESAMPLE = 50

# Node-density knob: density ~ 1 + CURVATURE_WEIGHT * |kappa| * track_length,
# so placement degenerates to uniform on straights and clusters in corners.
# Clipping the density to [mean/DENSITY_CAP, mean*DENSITY_CAP] bounds the
# node-gap ratio; unbounded density starves the straights, and a spline
# entering a multi-meter gap between tightly packed waypoints can swing far
# outside the offset box.
CURVATURE_WEIGHT = 5.0
DENSITY_CAP = 2.5


@dataclass(frozen=True)
class CenterLine:
    """Ordered center-line waypoints with per-point track width.

    ``points`` never repeats the closing point; for a closed track the list
    is treated as periodic and ``total_length`` includes the wrap segment.
    """

    points: np.ndarray            # (N, 2) positions in meters
    width: np.ndarray             # (N,) full track width w_T in meters
    cumulative_arc_length: np.ndarray  # (N,) polyline arc length, starts at 0
    closed: bool

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 4:
            raise ValidationError("center line needs at least 4 2D points")
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(seg <= 0.0):
            raise ValidationError("consecutive center-line points must be distinct")
        if self.closed and np.linalg.norm(pts[-1] - pts[0]) <= 0.0:
            raise ValidationError("closed center line must not repeat the start point")
        width = np.asarray(self.width, dtype=float)
        if width.shape != (pts.shape[0],) or np.any(width <= 0.0):
            raise ValidationError("track width must be positive at every point")
        arc = np.asarray(self.cumulative_arc_length, dtype=float)
        if arc.shape != (pts.shape[0],) or arc[0] != 0.0 or np.any(np.diff(arc) <= 0.0):
            raise ValidationError("cumulative arc length must start at 0 and increase")

    @property
    def total_length(self) -> float:
        """Polyline length, including the wrap segment on closed tracks."""
        length = float(self.cumulative_arc_length[-1])
        if self.closed:
            length += float(np.linalg.norm(self.points[0] - self.points[-1]))
        return length


@dataclass(frozen=True)
class NodeSet:
    """Optimization nodes: fixed stations on the center line."""

    arc_positions: np.ndarray   # (n,) arc-length stations in meters
    base_points: np.ndarray     # (n, 2) positions on the center line
    normals: np.ndarray         # (n, 2) unit normals (tangent rotated +90 deg)
    half_widths: np.ndarray     # (n,) w_T/2 at each node in meters
    closed: bool
    track_length: float

    def __post_init__(self):
        n = self.node_count
        if not MIN_NODES <= n <= MAX_NODES:
            raise ValidationError(f"node count must be in [{MIN_NODES}, {MAX_NODES}], got {n}")
        s = self.arc_positions
        if np.any(np.diff(s) <= 0.0) or s[0] < 0.0:
            raise ValidationError("node arc positions must be strictly increasing from >= 0")
        limit = self.track_length if not self.closed else np.nextafter(self.track_length, 0.0)
        if s[-1] > limit:
            raise ValidationError("node arc positions exceed the track length")
        norms = np.linalg.norm(self.normals, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValidationError("node normals must have unit norm")

    @property
    def node_count(self) -> int:
        return int(self.arc_positions.shape[0])


@dataclass(frozen=True)
class SampledPath:
    """Finely resampled smooth trajectory, ready for the speed solver.

    For a closed path there are K points and K segment lengths (the last one
    wraps back to the first point); open paths have K-1 segments.
    """

    points: np.ndarray          # (K, 2)
    tangent_angles: np.ndarray  # (K,) radians
    curvature: np.ndarray       # (K,) signed, 1/m
    segment_lengths: np.ndarray  # (K,) closed / (K-1,) open
    closed: bool

    def __post_init__(self):
        k = self.points.shape[0]
        if k < MIN_RESAMPLE:
            raise ValidationError(f"resampled path needs at least {MIN_RESAMPLE} points")
        expected = k if self.closed else k - 1
        if self.segment_lengths.shape != (expected,):
            raise ValidationError("segment length count does not match point count")
        if np.any(self.segment_lengths <= 0.0):
            raise ValidationError("all segment lengths must be positive")

    @property
    def total_length(self) -> float:
        return float(np.sum(self.segment_lengths))


class _SplinePath:
    """Centripetal (sqrt-chord) parameterized cubic spline through 2D waypoints.

    Periodic end conditions for closed paths, natural for open ones. The
    centripetal knot spacing keeps the spline from swinging wide where
    waypoint spacing is uneven. Arc length is tabulated on a dense parameter
    grid so positions and derivatives can be queried at (approximately)
    uniform arc stations.
    """

    def __init__(self, waypoints: np.ndarray, closed: bool, dense: int = 4096):
        pts = np.asarray(waypoints, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValidationError("spline needs at least 2 distinct 2D waypoints")
        if closed:
            pts = np.vstack([pts, pts[:1]])
        chords = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(chords <= 0.0):
            raise ValidationError("duplicate adjacent waypoints")
        t = np.concatenate(([0.0], np.cumsum(np.sqrt(chords))))
        bc = "periodic" if closed else "natural"
        self._spline = CubicSpline(t, pts, bc_type=bc, axis=0)
        self.closed = closed

        t_dense = np.linspace(t[0], t[-1], dense)
        p_dense = self._spline(t_dense)
        seg = np.linalg.norm(np.diff(p_dense, axis=0), axis=1)
        self._arc_table = np.concatenate(([0.0], np.cumsum(seg)))
        self._t_table = t_dense

    @property
    def length(self) -> float:
        return float(self._arc_table[-1])

    def param_at_arc(self, s: np.ndarray) -> np.ndarray:
        return np.interp(s, self._arc_table, self._t_table)

    def eval_at_arc(self, s: np.ndarray):
        """Return positions, first and second parameter derivatives at s."""
        t = self.param_at_arc(np.asarray(s, dtype=float))
        return self._spline(t), self._spline(t, 1), self._spline(t, 2)


def _curvature_from_derivatives(d1: np.ndarray, d2: np.ndarray) -> np.ndarray:
    # Parameterization-invariant signed curvature from spline derivatives.
    num = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
    den = np.power(d1[..., 0] ** 2 + d1[..., 1] ** 2, 1.5)
    return num / den


def load_track(path) -> CenterLine:
    """Load a center line from CSV.

    The file must have a header with columns ``x_m``, ``y_m`` and either
    ``width_m`` or the pair ``w_left_m``/``w_right_m``. Lines starting with
    ``#`` are comments. Asymmetric widths are summed to the full width and
    the center is shifted halfway toward the wider side. A track whose first
    and last points coincide is treated as closed (the duplicate is dropped).
    """
    header: list[str] | None = None
    rows: list[list[float]] = []
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if header is None:
                header = cells
                continue
            if len(cells) != len(header):
                raise TrackFormatError(
                    f"{path}: line {lineno}: expected {len(header)} columns, got {len(cells)}"
                )
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise TrackFormatError(f"{path}: line {lineno}: non-numeric value") from None

    if header is None:
        raise TrackFormatError(f"{path}: empty file")
    cols = {name: i for i, name in enumerate(header)}
    if "x_m" not in cols or "y_m" not in cols:
        raise TrackFormatError(f"{path}: header must contain x_m and y_m")
    asymmetric = "w_left_m" in cols and "w_right_m" in cols
    if not asymmetric and "width_m" not in cols:
        raise TrackFormatError(f"{path}: header must contain width_m or w_left_m,w_right_m")

    data = np.asarray(rows, dtype=float)
    if data.shape[0] < 4:
        raise ValidationError(f"{path}: need at least 4 center-line points, got {data.shape[0]}")
    pts = data[:, [cols["x_m"], cols["y_m"]]]

    closed = bool(np.linalg.norm(pts[0] - pts[-1]) < 1e-9)
    if closed:
        pts = pts[:-1]
        data = data[:-1]
        if pts.shape[0] < 4:
            raise ValidationError(f"{path}: need at least 4 distinct points on a closed track")

    if asymmetric:
        w_left = data[:, cols["w_left_m"]]
        w_right = data[:, cols["w_right_m"]]
        if np.any(w_left < 0.0) or np.any(w_right < 0.0) or np.any(w_left + w_right <= 0.0):
            raise ValidationError(f"{path}: widths must be nonnegative with positive sum")
        width = w_left + w_right
        normals = _polyline_normals(pts, closed)
        pts = pts + (0.5 * (w_left - w_right))[:, None] * normals
    else:
        width = data[:, cols["width_m"]].copy()

    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    if np.any(seg <= 0.0):
        raise ValidationError(f"{path}: consecutive center-line points must be distinct")
    arc = np.concatenate(([0.0], np.cumsum(seg)))
    return CenterLine(points=pts, width=width, cumulative_arc_length=arc, closed=closed)


def _polyline_normals(pts: np.ndarray, closed: bool) -> np.ndarray:
    """Unit left normals of a polyline (central differences, wrapped if closed)."""
    if closed:
        tang = np.roll(pts, -1, axis=0) - np.roll(pts, 1, axis=0)
    else:
        tang = np.empty_like(pts)
        tang[1:-1] = pts[2:] - pts[:-2]
        tang[0] = pts[1] - pts[0]
        tang[-1] = pts[-1] - pts[-2]
    tang /= np.linalg.norm(tang, axis=1)[:, None]
    return np.column_stack([-tang[:, 1], tang[:, 0]])


def center_spline(center: CenterLine) -> _SplinePath:
    """Smooth spline through the center-line points (shared by node placement)."""
    return _SplinePath(center.points, center.closed)


def select_nodes(center: CenterLine, n: int) -> NodeSet:
    """Place n nodes along the center line, denser where curvature is higher.

    Node stations are the inverse-CDF samples of the density
    1 + CURVATURE_WEIGHT * |kappa(s)| * L, which is uniform on straights and
    concentrates nodes in corners. Node 1 sits on the start line (s = 0).
    """
    if not MIN_NODES <= n <= MAX_NODES:
        raise ValidationError(f"node count must be in [{MIN_NODES}, {MAX_NODES}], got {n}")

    spline = center_spline(center)
    length = spline.length
    s_grid = np.linspace(0.0, length, 4097)
    _, d1, d2 = spline.eval_at_arc(s_grid)
    density = 1.0 + CURVATURE_WEIGHT * np.abs(_curvature_from_derivatives(d1, d2)) * length
    mean_density = float(np.mean(density))
    density = np.clip(density, mean_density / DENSITY_CAP, mean_density * DENSITY_CAP)
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(s_grid))))

    if center.closed:
        targets = cdf[-1] * np.arange(n) / n
    else:
        targets = cdf[-1] * np.arange(n) / (n - 1)
    s_nodes = np.interp(targets, cdf, s_grid)

    base, d1n, _ = spline.eval_at_arc(s_nodes)
    tang = d1n / np.linalg.norm(d1n, axis=1)[:, None]
    normals = np.column_stack([-tang[:, 1], tang[:, 0]])

    # Widths are defined at the original center points; index them by arc
    # fraction so the small spline-vs-polyline length mismatch cancels.
    stations = center.cumulative_arc_length
    widths = center.width
    if center.closed:
        stations = np.concatenate([stations, [center.total_length]])
        widths = np.concatenate([widths, widths[:1]])
    frac_total = stations[-1]
    half = 0.5 * np.interp(s_nodes / length * frac_total, stations, widths)

    return NodeSet(
        arc_positions=s_nodes,
        base_points=base,
        normals=normals,
        half_widths=half,
        closed=center.closed,
        track_length=length,
    )


def offsets_to_waypoints(nodes: NodeSet, w: np.ndarray) -> np.ndarray:
    """Displace each node laterally by its offset; returns (n, 2) waypoints."""
    w = np.asarray(w, dtype=float)
    if w.shape != (nodes.node_count,):
        raise ValidationError(f"expected {nodes.node_count} offsets, got shape {w.shape}")
    limit = nodes.half_widths
    if np.any(np.abs(w) > limit + 1e-12):
        worst = int(np.argmax(np.abs(w) - limit))
        raise BoundsError(
            f"offset {w[worst]:.6g} m at node {worst} exceeds half width {limit[worst]:.6g} m"
        )
    return nodes.base_points + w[:, None] * nodes.normals


def fit_and_resample(waypoints: np.ndarray, closed: bool, K: int = 100) -> SampledPath:
    """Fit a cubic spline through waypoints and resample it uniformly in arc length.

    Periodic end conditions for closed paths, natural otherwise. Curvature is
    evaluated analytically from the spline derivatives rather than by finite
    differences of the resampled points.
    """
    if K < MIN_RESAMPLE:
        raise ValidationError(f"resample count must be >= {MIN_RESAMPLE}, got {K}")
    pts = np.asarray(waypoints, dtype=float)
    if closed and pts.shape[0] >= 2 and np.linalg.norm(pts[0] - pts[-1]) < 1e-12:
        pts = pts[:-1]

    spline = _SplinePath(pts, closed, dense=max(4096, 16 * K))
    length = spline.length
    if closed:
        s_targets = length * np.arange(K) / K
    else:
        s_targets = length * np.arange(K) / (K - 1)

    positions, d1, d2 = spline.eval_at_arc(s_targets)
    angles = np.arctan2(d1[:, 1], d1[:, 0])
    kappa = _curvature_from_derivatives(d1, d2)

    diffs = np.diff(positions, axis=0)
    if closed:
        diffs = np.vstack([diffs, positions[:1] - positions[-1:]])
    seg = np.linalg.norm(diffs, axis=1)

    return SampledPath(
        points=positions,
        tangent_angles=angles,
        curvature=kappa,
        segment_lengths=seg,
        closed=closed,
    )
