"""Independent oracles the tests check the library against.

These deliberately avoid the library's own code paths: the speed solver is
checked against dynamic programming over a dense (station, v^2) grid, GP
predictions against a plain dense solve, likelihood gradients against finite
differences, and expected improvement against Monte Carlo.
"""

from __future__ import annotations

import numpy as np

V_FLOOR = 1e-3


def dp_min_time_once(kappa, ds, mu_s, g, drive_frac, v_cap, v0=0.0, n_grid=800,
                     chunk=256) -> float:
    """Minimum traversal time by DP over a dense speed grid per station.

    Stations are the unrolled path points (closed paths already include the
    return station). Force limits are evaluated at each segment's departure
    station; segment times use the trapezoidal mean speed. The grid restricts
    station speeds, so the result converges to the optimum from above.
    """
    kappa = np.asarray(kappa, dtype=float)
    ds = np.asarray(ds, dtype=float)
    f = mu_s * g
    a_cap = drive_frac * f
    vbar = np.minimum(v_cap, np.sqrt(f / np.maximum(np.abs(kappa), 1e-12)))

    v_grid = np.linspace(0.0, vbar.max(), n_grid)
    u_grid = v_grid**2

    # Station 0 is the exact scalar start speed; expand onto the grid after
    # the first segment.
    if v0 > vbar[0] * (1.0 + 1e-12):
        raise ValueError("infeasible start speed")
    u0 = v0 * v0
    lat0 = (u0 * kappa[0]) ** 2
    drive0 = min(a_cap, np.sqrt(max(0.0, f * f - lat0)))
    brake0 = np.sqrt(max(0.0, f * f - lat0))
    a = (u_grid - u0) / (2.0 * ds[0])
    ok = (a <= drive0) & (a >= -brake0) & (v_grid <= vbar[1])
    t = np.where(ok, ds[0] / np.maximum(V_FLOOR, 0.5 * (v0 + v_grid)), np.inf)

    for k in range(1, ds.shape[0]):
        dep_ok = v_grid <= vbar[k]
        lat = (u_grid * kappa[k]) ** 2
        room = np.sqrt(np.maximum(0.0, f * f - lat))
        drive = np.minimum(a_cap, room)
        brake = room
        t_dep = np.where(dep_ok, t, np.inf)

        t_new = np.full(n_grid, np.inf)
        arr_ok = v_grid <= vbar[k + 1]
        for c0 in range(0, n_grid, chunk):
            c1 = min(c0 + chunk, n_grid)
            a = (u_grid[None, c0:c1] - u_grid[:, None]) / (2.0 * ds[k])
            ok = (a <= drive[:, None]) & (a >= -brake[:, None]) & arr_ok[None, c0:c1]
            dt = ds[k] / np.maximum(V_FLOOR, 0.5 * (v_grid[:, None] + v_grid[None, c0:c1]))
            total = np.where(ok, t_dep[:, None] + dt, np.inf)
            t_new[c0:c1] = np.min(total, axis=0)
        t = t_new

    best = np.min(t)
    if not np.isfinite(best):
        raise ValueError("DP found no feasible profile")
    return float(best)


def dp_min_time(kappa, ds, mu_s, g, drive_frac, v_cap, v0=0.0, rel_tol=0.002,
                start_grid=400, max_doublings=4) -> float:
    """DP time with the grid refined until two resolutions agree to rel_tol."""
    n = start_grid
    prev = dp_min_time_once(kappa, ds, mu_s, g, drive_frac, v_cap, v0, n_grid=n)
    for _ in range(max_doublings):
        n *= 2
        cur = dp_min_time_once(kappa, ds, mu_s, g, drive_frac, v_cap, v0, n_grid=n)
        if abs(cur - prev) <= rel_tol * cur:
            return cur
        prev = cur
    return prev


def se_kernel_value(a, b, lengthscales, signal_variance) -> float:
    """Plain squared-exponential covariance, written independently."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    quad = 0.0
    for d in range(a.shape[0]):
        quad += ((a[d] - b[d]) / lengthscales[d]) ** 2
    return signal_variance * np.exp(-0.5 * quad)


def gp_predict_dense(inputs, outputs, lengthscales, signal_variance, noise_variance,
                     query, jitter_rel=1e-8):
    """Posterior mean and latent variance by an explicit dense solve.

    Mirrors the model definition (standardized outputs, zero prior mean in
    standardized space, proportional diagonal jitter, latent query variance)
    but shares no code or factorization with the library.
    """
    x = np.asarray(inputs, dtype=float)
    y = np.asarray(outputs, dtype=float)
    n = x.shape[0]

    y_mean = float(np.mean(y))
    y_std = float(np.std(y))
    if y_std < 1e-12:
        y_std = 1.0
    z = (y - y_mean) / y_std

    gram = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            gram[i, j] = se_kernel_value(x[i], x[j], lengthscales, signal_variance)
    gram += (noise_variance + jitter_rel * signal_variance) * np.eye(n)

    k_star = np.array([se_kernel_value(query, x[i], lengthscales, signal_variance)
                       for i in range(n)])
    sol = np.linalg.solve(gram, z)
    mean_std = float(k_star @ sol)
    var_std = float(signal_variance - k_star @ np.linalg.solve(gram, k_star))

    return y_mean + y_std * mean_std, y_std**2 * max(var_std, 0.0)


def lml_finite_difference_grad(lml_fn, theta_log, step=1e-5) -> np.ndarray:
    """Central-difference gradient of a log-likelihood in log-parameter space."""
    grad = np.empty_like(theta_log)
    for i in range(theta_log.shape[0]):
        up = theta_log.copy()
        dn = theta_log.copy()
        up[i] += step
        dn[i] -= step
        grad[i] = (lml_fn(up) - lml_fn(dn)) / (2.0 * step)
    return grad


def ei_monte_carlo(mean, sigma, tau_best, n_draws=1_000_000, seed=0):
    """Monte-Carlo expected improvement and its standard error."""
    rng = np.random.default_rng(seed)
    draws = mean + sigma * rng.standard_normal(n_draws)
    gains = np.maximum(tau_best - draws, 0.0)
    return float(np.mean(gains)), float(np.std(gains) / np.sqrt(n_draws))
