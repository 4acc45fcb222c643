"""Minimum-time speed profile on a fixed path under a friction-circle model.

The vehicle can use a total tire force of at most mu_s*m*g in any direction;
propulsion is additionally capped at the rear-wheel-drive fraction
l_f/(l_f+l_r) of that budget, while braking is friction-limited only. On a
fixed path the time-optimal profile is the pointwise cornering cap refined by
a forward acceleration pass and a backward braking pass over v^2; both passes
evaluate force limits at the segment's departure station, which makes the
reconstructed per-station forces respect the friction circle exactly.

The two sweeps are the hot kernels: they are sequential recurrences executed
once per candidate trajectory, so they carry numba @njit with an interpreted
fallback (see raceline._jit).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._jit import njit
from .errors import DegeneratePathError, InfeasibleStartError, ValidationError
from .track import SampledPath

V_FLOOR = 1e-3  # m/s, keeps the standing-start segment time finite
_KAPPA_TINY = 1e-12


@dataclass(frozen=True)
class VehicleParams:
    """Friction-circle vehicle: mass, CG position, grip, and a speed cap.

    ``v_cap`` bounds the otherwise unbounded straight-line speed; it stands in
    for drivetrain limits without adding model parameters.
    """

    m: float = 1.0        # kg
    l_f: float = 0.5      # m, CG to front axle
    l_r: float = 0.5      # m, CG to rear axle
    mu_s: float = 1.0     # static friction coefficient
    g: float = 9.81       # m/s^2
    v_cap: float = 50.0   # m/s, speed cap on zero-curvature sections

    def __post_init__(self):
        if self.m <= 0 or self.l_f <= 0 or self.l_r <= 0:
            raise ValidationError("mass and axle distances must be positive")
        if not 0.0 < self.mu_s <= 2.0:
            raise ValidationError("mu_s must be in (0, 2]")
        if self.g <= 0 or self.v_cap <= 0:
            raise ValidationError("g and v_cap must be positive")

    @property
    def drive_fraction(self) -> float:
        """Fraction of the friction budget available for propulsion."""
        return self.l_f / (self.l_f + self.l_r)


@dataclass(frozen=True)
class SpeedProfile:
    """Speeds, forces, and timestamps along the stations of a fixed path.

    For a closed path the stations are the K path points plus the return to
    the start, so all arrays have K+1 entries; open paths have K stations.
    """

    s: np.ndarray            # (S,) arc-length stations, m
    points: np.ndarray       # (S, 2) station positions
    speeds: np.ndarray       # (S,) m/s
    times: np.ndarray        # (S,) cumulative, s
    long_force: np.ndarray   # (S,) N, force of the segment leaving the station
    lat_force: np.ndarray    # (S,) N, signed by curvature
    long_accel: np.ndarray   # (S,) m/s^2
    lat_accel: np.ndarray    # (S,) m/s^2
    lap_time: float          # s

    def __len__(self) -> int:
        return int(self.speeds.shape[0])


@njit(cache=True)
def _forward_pass(u, ubar, kappa, ds, a_cap, f_max):
    """Refine u (speed^2 per station) so each speed is reachable from the last.

    Drive force is the lesser of the propulsion cap and what the friction
    circle leaves over after cornering at the departure station.
    """
    for k in range(ds.shape[0]):
        lat2 = kappa[k] * kappa[k] * u[k] * u[k]
        avail = f_max * f_max - lat2
        if avail < 0.0:
            avail = 0.0
        a = math.sqrt(avail)
        if a > a_cap:
            a = a_cap
        reach = u[k] + 2.0 * ds[k] * a
        if reach < u[k + 1]:
            u[k + 1] = reach


@njit(cache=True)
def _backward_pass(u, kappa, ds, f_max):
    """Refine u so every deceleration fits the friction-limited braking force.

    The brake limit is evaluated at the segment's departure station, which
    makes the bound implicit in the unknown speed; the quadratic solves in
    closed form.
    """
    for k in range(ds.shape[0] - 1, -1, -1):
        c = u[k + 1]
        if u[k] > c:
            b = 2.0 * ds[k]
            k2 = kappa[k] * kappa[k]
            t = 1.0 + b * b * k2
            disc = f_max * f_max * t - k2 * c * c
            if disc < 0.0:
                disc = 0.0
            bound = (c + b * math.sqrt(disc)) / t
            if bound < u[k]:
                u[k] = bound


def max_cornering_speed(kappa: float, params: VehicleParams) -> float:
    """Highest speed holding a curvature with zero longitudinal force.

    sqrt(mu_s*g/|kappa|), capped at ``params.v_cap`` (which also covers the
    zero-curvature case). Sign of the curvature is irrelevant.
    """
    ak = abs(kappa)
    if ak < _KAPPA_TINY:
        return params.v_cap
    return min(params.v_cap, math.sqrt(params.mu_s * params.g / ak))


def _station_arrays(path: SampledPath):
    """Unroll a path into station arrays; closed paths gain the return station."""
    pts = path.points
    kappa = path.curvature
    ds = path.segment_lengths
    if path.closed:
        pts = np.vstack([pts, pts[:1]])
        kappa = np.concatenate([kappa, kappa[:1]])
    s = np.concatenate(([0.0], np.cumsum(ds)))
    return s, pts, kappa, np.ascontiguousarray(ds, dtype=float)


def solve_speed_profile(path: SampledPath, params: VehicleParams, v0: float = 0.0) -> SpeedProfile:
    """Time-optimal speed profile for a fixed path.

    Three passes over v^2: the pointwise cornering cap, a forward pass limited
    by the available drive force, and a backward pass limited by braking.
    Segment times use the trapezoidal mean speed. Mass does not affect the
    speeds (forces scale with m); it only scales the reported forces.
    """
    if v0 < 0.0:
        raise ValidationError("initial speed must be nonnegative")
    s, pts, kappa, ds = _station_arrays(path)
    if not np.all(np.isfinite(kappa)):
        raise DegeneratePathError("path curvature is not finite")

    f_max = params.mu_s * params.g            # total accel budget, m/s^2
    a_cap = params.drive_fraction * f_max     # propulsion cap, m/s^2

    with np.errstate(divide="ignore"):
        ubar = np.minimum(params.v_cap**2, f_max / np.maximum(np.abs(kappa), _KAPPA_TINY))
    if np.any(ubar <= 0.0):
        raise DegeneratePathError("path has a point with no feasible speed")

    u = ubar.copy()
    if v0 * v0 > ubar[0] * (1.0 + 1e-9):
        raise InfeasibleStartError(
            f"initial speed {v0:.6g} m/s exceeds the cornering cap "
            f"{math.sqrt(ubar[0]):.6g} m/s at the first point"
        )
    u[0] = min(v0 * v0, ubar[0])

    _forward_pass(u, ubar, kappa, ds, a_cap, f_max)
    _backward_pass(u, kappa, ds, f_max)
    if u[0] < v0 * v0 * (1.0 - 1e-9):
        raise InfeasibleStartError(
            f"initial speed {v0:.6g} m/s cannot brake in time for the path ahead"
        )

    v = np.sqrt(u)
    dt = ds / np.maximum(V_FLOOR, 0.5 * (v[:-1] + v[1:]))
    times = np.concatenate(([0.0], np.cumsum(dt)))

    a_long = np.zeros_like(v)
    a_long[:-1] = (u[1:] - u[:-1]) / (2.0 * ds)
    a_lat = u * kappa

    return SpeedProfile(
        s=s,
        points=pts,
        speeds=v,
        times=times,
        long_force=params.m * a_long,
        lat_force=params.m * a_lat,
        long_accel=a_long,
        lat_accel=a_lat,
        lap_time=float(times[-1]),
    )


def gg_points(profile: SpeedProfile) -> np.ndarray:
    """Per-station (lateral, longitudinal) acceleration pairs in m/s^2."""
    return np.column_stack([profile.lat_accel, profile.long_accel])


def write_profile_csv(profile: SpeedProfile, path) -> None:
    """Write the profile as CSV with SI-unit column names."""
    with open(path, "w", newline="") as fh:
        fh.write("s_m,x_m,y_m,v_mps,t_s,a_long_mps2,a_lat_mps2\n")
        for i in range(len(profile)):
            row = (
                profile.s[i], profile.points[i, 0], profile.points[i, 1],
                profile.speeds[i], profile.times[i],
                profile.long_accel[i], profile.lat_accel[i],
            )
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
