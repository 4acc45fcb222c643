"""Shared fixtures: synthetic center lines and bundled-track paths."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from raceline.track import CenterLine, SampledPath, fit_and_resample

TRACKS_DIR = Path(__file__).resolve().parents[1] / "src" / "raceline" / "tracks"


def circle_centerline(radius=10.0, n=100, width=4.0) -> CenterLine:
    theta = 2.0 * np.pi * np.arange(n) / n
    pts = radius * np.column_stack([np.cos(theta), np.sin(theta)])
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    arc = np.concatenate(([0.0], np.cumsum(seg)))
    return CenterLine(points=pts, width=np.full(n, width),
                      cumulative_arc_length=arc, closed=True)


def straight_centerline(length=100.0, n=21, width=4.0) -> CenterLine:
    pts = np.column_stack([np.linspace(0.0, length, n), np.zeros(n)])
    arc = np.linspace(0.0, length, n)
    return CenterLine(points=pts, width=np.full(n, width),
                      cumulative_arc_length=arc, closed=False)


def l_track_centerline(leg=50.0, radius=5.0, width=4.0) -> CenterLine:
    """Open L-shape: straight, quarter turn, straight."""
    step = 1.0
    pts = [np.array([0.0, 0.0])]
    x = np.arange(step, leg + 1e-9, step)
    pts.extend(np.column_stack([x, np.zeros_like(x)]))
    n_arc = int(np.ceil(radius * np.pi / 2 / step))
    for i in range(1, n_arc + 1):
        phi = 0.5 * np.pi * i / n_arc
        pts.append(np.array([leg + radius * np.sin(phi), radius * (1 - np.cos(phi))]))
    start = pts[-1]
    y = np.arange(step, leg + 1e-9, step)
    pts.extend(np.column_stack([np.full_like(y, start[0]), start[1] + y]))
    pts = np.asarray(pts)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    arc = np.concatenate(([0.0], np.cumsum(seg)))
    return CenterLine(points=pts, width=np.full(len(pts), width),
                      cumulative_arc_length=arc, closed=False)


def wiggly_path(seed: int, n_waypoints=12, k=56, closed=False) -> SampledPath:
    """Random smooth open path via the real spline machinery."""
    rng = np.random.default_rng(seed)
    heading = rng.uniform(0, 2 * np.pi)
    pos = np.zeros(2)
    pts = [pos.copy()]
    for _ in range(n_waypoints - 1):
        heading += rng.uniform(-0.35, 0.35)
        step = rng.uniform(2.5, 4.5)
        pos = pos + step * np.array([np.cos(heading), np.sin(heading)])
        pts.append(pos.copy())
    return fit_and_resample(np.asarray(pts), closed=closed, K=k)


def circle_path(radius=10.0, k=100) -> SampledPath:
    theta = 2.0 * np.pi * np.arange(12) / 12
    wp = radius * np.column_stack([np.cos(theta), np.sin(theta)])
    return fit_and_resample(wp, closed=True, K=k)


def exact_circle_path(radius=10.0, k=100) -> SampledPath:
    """Closed path with exactly constant curvature (no spline wobble)."""
    theta = 2.0 * np.pi * np.arange(k) / k
    pts = radius * np.column_stack([np.cos(theta), np.sin(theta)])
    seg = np.linalg.norm(np.diff(np.vstack([pts, pts[:1]]), axis=0), axis=1)
    return SampledPath(
        points=pts,
        tangent_angles=theta + np.pi / 2,
        curvature=np.full(k, 1.0 / radius),
        segment_lengths=seg,
        closed=True,
    )


def straight_path(length=100.0, k=100) -> SampledPath:
    wp = np.column_stack([np.linspace(0.0, length, 8), np.zeros(8)])
    return fit_and_resample(wp, closed=False, K=k)


@pytest.fixture(scope="session")
def ethz_track_file() -> Path:
    return TRACKS_DIR / "ethz1_like.csv"


@pytest.fixture(scope="session")
def ethz_config_file() -> Path:
    return TRACKS_DIR / "ethz1_like.toml"
