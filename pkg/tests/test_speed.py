"""Minimum-time speed solver: closed forms, DP oracle, and invariants."""

import dataclasses
import math
import time

import numpy as np
import pytest

from raceline.errors import DegeneratePathError, InfeasibleStartError, ValidationError
from raceline.speed import (
    VehicleParams,
    _backward_pass,
    _forward_pass,
    gg_points,
    max_cornering_speed,
    solve_speed_profile,
    write_profile_csv,
)
from raceline.track import SampledPath

from conftest import exact_circle_path, straight_path, wiggly_path
from oracles import dp_min_time

PARAMS = VehicleParams(m=1.0, l_f=0.5, l_r=0.5, mu_s=1.0, g=9.81, v_cap=12.0)


def stations(path: SampledPath):
    """Unrolled (kappa, ds) station arrays, independent of solver internals."""
    kappa = path.curvature
    if path.closed:
        kappa = np.concatenate([kappa, kappa[:1]])
    return kappa, path.segment_lengths


class TestMaxCorneringSpeed:
    def test_closed_form(self):
        v = max_cornering_speed(0.1, VehicleParams(mu_s=1.0, v_cap=50.0))
        np.testing.assert_allclose(v, math.sqrt(98.1), rtol=1e-12)

    def test_zero_curvature_returns_cap(self):
        assert max_cornering_speed(0.0, VehicleParams(v_cap=50.0)) == 50.0
        assert max_cornering_speed(0.0, VehicleParams(v_cap=7.5)) == 7.5

    def test_sign_independent(self):
        p = VehicleParams()
        assert max_cornering_speed(-0.1, p) == max_cornering_speed(0.1, p)


class TestStraightLaunch:
    def test_analytic_lap_time(self):
        path = straight_path(length=100.0, k=100)
        params = VehicleParams(m=1.0, l_f=0.4, l_r=0.4, mu_s=1.0, g=9.81, v_cap=50.0)
        a_max = 0.5 * 9.81
        expected = math.sqrt(2 * 100.0 / a_max)
        profile = solve_speed_profile(path, params, v0=0.0)
        assert abs(profile.lap_time - expected) / expected < 0.005

    def test_runtime_under_10ms(self):
        path = straight_path(length=100.0, k=100)
        solve_speed_profile(path, PARAMS, 0.0)  # warm the jitted kernels
        t0 = time.perf_counter()
        n = 20
        for _ in range(n):
            solve_speed_profile(path, PARAMS, 0.0)
        per_call = (time.perf_counter() - t0) / n
        print(f"solve_speed_profile: {per_call * 1e3:.3f} ms per call")
        assert per_call < 0.010

    def test_launch_gg_on_longitudinal_axis(self):
        path = straight_path(length=100.0, k=100)
        profile = solve_speed_profile(path, PARAMS, 0.0)
        gg = gg_points(profile)
        assert np.max(np.abs(gg[:, 0])) < 1e-9  # lateral ~ 0


class TestCircle:
    def test_speeds_capped_and_converge(self):
        radius = 10.0
        path = exact_circle_path(radius=radius, k=100)
        profile = solve_speed_profile(path, PARAMS, v0=0.0)
        bound = math.sqrt(PARAMS.mu_s * PARAMS.g * radius)
        assert np.all(profile.speeds <= bound * (1 + 1e-6))
        # After the launch transient the profile rides the cornering bound.
        reached = np.nonzero(profile.speeds >= 0.99 * bound)[0]
        assert reached.size > 0
        steady = profile.speeds[reached[0]:]
        np.testing.assert_allclose(steady, bound, rtol=0.01)
        assert steady.size >= 30

    def test_steady_state_gg_at_friction_limit(self):
        path = exact_circle_path(radius=10.0, k=100)
        profile = solve_speed_profile(path, PARAMS, v0=0.0)
        gg = gg_points(profile)
        mu_g = PARAMS.mu_s * PARAMS.g
        steady = np.abs(profile.speeds - math.sqrt(mu_g * 10.0)) < 1e-9
        assert np.all(np.abs(np.abs(gg[steady, 0]) - mu_g) < 1e-6)


class TestSolverErrors:
    def test_infeasible_start(self):
        path = exact_circle_path(radius=10.0, k=100)
        with pytest.raises(InfeasibleStartError):
            solve_speed_profile(path, PARAMS, v0=11.0)  # cap is ~9.9 m/s

    def test_degenerate_curvature(self):
        path = straight_path(length=50.0, k=100)
        bad = dataclasses.replace(path, curvature=path.curvature.copy())
        bad.curvature[10] = np.inf
        with pytest.raises(DegeneratePathError):
            solve_speed_profile(bad, PARAMS, 0.0)

    def test_negative_v0(self):
        path = straight_path()
        with pytest.raises(ValidationError):
            solve_speed_profile(path, PARAMS, v0=-1.0)


class TestDPOracle:
    @pytest.mark.parametrize("seed", range(15))
    def test_open_wiggly_paths(self, seed):
        path = wiggly_path(seed, n_waypoints=12, k=56)
        profile = solve_speed_profile(path, PARAMS, v0=0.0)
        kappa, ds = stations(path)
        dp = dp_min_time(kappa, ds, PARAMS.mu_s, PARAMS.g, PARAMS.drive_fraction,
                         PARAMS.v_cap, v0=0.0)
        assert abs(profile.lap_time - dp) / dp < 0.01

    @pytest.mark.parametrize("seed", [100, 101, 102, 103, 104])
    def test_closed_wiggly_paths(self, seed):
        rng = np.random.default_rng(seed)
        theta = 2 * np.pi * np.arange(10) / 10
        radii = 9.0 + rng.uniform(-1.0, 1.0, 10)
        wp = radii[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
        from raceline.track import fit_and_resample
        path = fit_and_resample(wp, closed=True, K=60)
        profile = solve_speed_profile(path, PARAMS, v0=0.0)
        kappa, ds = stations(path)
        # Sampling must resolve the curvature (|kappa|*ds small) for the
        # station-wise force model to approximate the continuum.
        assert np.max(np.abs(kappa[:-1]) * ds) < 0.45
        dp = dp_min_time(kappa, ds, PARAMS.mu_s, PARAMS.g, PARAMS.drive_fraction,
                         PARAMS.v_cap, v0=0.0)
        assert abs(profile.lap_time - dp) / dp < 0.01


class TestInvariants:
    def test_fixed_point_of_passes(self):
        path = wiggly_path(7, n_waypoints=12, k=60)
        profile = solve_speed_profile(path, PARAMS, v0=0.0)
        kappa, ds = stations(path)
        u = profile.speeds**2
        f_max = PARAMS.mu_s * PARAMS.g
        before = u.copy()
        _forward_pass(u, before.copy(), kappa, ds, PARAMS.drive_fraction * f_max, f_max)
        assert np.max(np.abs(np.sqrt(u) - np.sqrt(before))) < 1e-9
        _backward_pass(u, kappa, ds, f_max)
        assert np.max(np.abs(np.sqrt(u) - np.sqrt(before))) < 1e-9

    def test_monotone_in_curvature(self):
        path = wiggly_path(11, k=60)
        base = solve_speed_profile(path, PARAMS, 0.0).lap_time
        worse = dataclasses.replace(path, curvature=path.curvature * 1.25)
        assert solve_speed_profile(worse, PARAMS, 0.0).lap_time >= base - 1e-12

    def test_monotone_in_length(self):
        path = wiggly_path(12, k=60)
        base = solve_speed_profile(path, PARAMS, 0.0).lap_time
        longer = dataclasses.replace(path, segment_lengths=path.segment_lengths * 1.1)
        assert solve_speed_profile(longer, PARAMS, 0.0).lap_time >= base - 1e-12

    def test_more_grip_never_slower(self):
        path = wiggly_path(13, k=60)
        lap_1 = solve_speed_profile(path, PARAMS, 0.0).lap_time
        grippier = dataclasses.replace(PARAMS, mu_s=2.0)
        lap_2 = solve_speed_profile(path, grippier, 0.0).lap_time
        assert lap_2 <= lap_1 + 1e-12

    def test_mass_invariance(self):
        path = wiggly_path(14, k=60)
        light = solve_speed_profile(path, dataclasses.replace(PARAMS, m=1.0), 0.0)
        heavy = solve_speed_profile(path, dataclasses.replace(PARAMS, m=5.0), 0.0)
        np.testing.assert_array_equal(light.speeds, heavy.speeds)
        np.testing.assert_allclose(heavy.long_force, 5.0 * light.long_force, rtol=1e-12)

    @pytest.mark.parametrize("seed", [21, 22, 23])
    def test_friction_circle_and_drive_cap(self, seed):
        path = wiggly_path(seed, k=80)
        profile = solve_speed_profile(path, PARAMS, 0.0)
        f_max = PARAMS.mu_s * PARAMS.m * PARAMS.g
        total = np.hypot(profile.long_force, profile.lat_force)
        assert np.all(total <= f_max * (1 + 1e-6))
        assert np.all(profile.long_force <= PARAMS.drive_fraction * f_max * (1 + 1e-6))

    def test_profile_bookkeeping(self):
        path = wiggly_path(31, k=60)
        profile = solve_speed_profile(path, PARAMS, v0=0.5)
        assert profile.speeds[0] == 0.5
        assert np.all(profile.speeds >= 0.0)
        assert np.all(np.diff(profile.times) >= 0.0)
        assert profile.lap_time == profile.times[-1]

    def test_closed_path_station_count(self):
        path = exact_circle_path(radius=8.0, k=120)
        profile = solve_speed_profile(path, PARAMS, 0.0)
        assert len(profile) == 121
        np.testing.assert_array_equal(profile.points[-1], profile.points[0])


class TestExport:
    def test_profile_csv_columns_and_roundtrip(self, tmp_path):
        path = wiggly_path(40, k=60)
        profile = solve_speed_profile(path, PARAMS, 0.0)
        out = tmp_path / "profile.csv"
        write_profile_csv(profile, out)
        lines = out.read_text().splitlines()
        assert lines[0] == "s_m,x_m,y_m,v_mps,t_s,a_long_mps2,a_lat_mps2"
        assert len(lines) == 1 + len(profile)
        got = np.loadtxt(out, delimiter=",", skiprows=1)
        np.testing.assert_array_equal(got[:, 3], profile.speeds)  # repr round-trips
