"""Compiled velocity-Verlet kernels.

Numba JIT is used when available; a vectorized numpy fallback keeps the
package importable without it (at a substantial speed cost for long runs).
All loops use fixed summation order, so trajectories are bit-reproducible.
"""
from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except Exception:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return deco


@njit(cache=True)
def _uprime(xi, c, p, xs):
    if xi > xs:
        return 0.0
    if p == 2.0:
        val = c * (xs / (xi * xi) - 1.0 / xs)
    else:
        val = c * (xs * xi ** (-p) - xs ** (1.0 - p))
    return val if val > 0.0 else 0.0


@njit(cache=True)
def _fill_forces(q, f, n, c_r, p, xs, c_w, wall_left, wall_right):
    """f_j = U'(gap_left/eps) - U'(gap_right/eps), walls via c_w."""
    inv_eps = float(n)
    g = (q[0] - wall_left) * inv_eps
    if g <= 0.0:
        return False
    f_prev = _uprime(g, c_w, p, xs)
    for j in range(n):
        if j < n - 1:
            g = (q[j + 1] - q[j]) * inv_eps
            if g <= 0.0:
                return False
            w = _uprime(g, c_r, p, xs)
        else:
            g = (wall_right - q[j]) * inv_eps
            if g <= 0.0:
                return False
            w = _uprime(g, c_w, p, xs)
        f[j] = f_prev - w
        f_prev = w
    return True


@njit(cache=True)
def _verlet_steps(q, v, f, nsteps, dt, n, m_total, c_r, p, xs, c_w,
                  wall_left, wall_right):
    """Advance nsteps in place; f must hold forces for the incoming q.

    Returns the number of completed steps (== nsteps unless the ordering
    degenerated, in which case stepping stops early).
    """
    coef = float(n) / m_total  # acceleration = f * N / M  (mass eps*M each)
    half = 0.5 * dt
    for step in range(nsteps):
        for j in range(n):
            v[j] += half * coef * f[j]
            q[j] += dt * v[j]
        ok = _fill_forces(q, f, n, c_r, p, xs, c_w, wall_left, wall_right)
        if not ok:
            return step
        for j in range(n):
            v[j] += half * coef * f[j]
    return nsteps


def _fill_forces_numpy(q, f, n, c_r, p, xs, c_w, wall_left, wall_right):
    inv_eps = float(n)
    gaps = np.empty(n + 1)
    gaps[0] = q[0] - wall_left
    gaps[1:-1] = q[1:] - q[:-1]
    gaps[-1] = wall_right - q[-1]
    if np.any(gaps <= 0.0):
        return False
    xi = gaps * inv_eps
    stiff = np.full(n + 1, c_r)
    stiff[0] = c_w
    stiff[-1] = c_w
    if p == 2.0:
        raw = stiff * (xs / (xi * xi) - 1.0 / xs)
    else:
        raw = stiff * (xs * xi ** (-p) - xs ** (1.0 - p))
    w = np.where(xi <= xs, np.maximum(raw, 0.0), 0.0)
    f[:] = w[:-1] - w[1:]
    return True


def _verlet_steps_numpy(q, v, f, nsteps, dt, n, m_total, c_r, p, xs, c_w,
                        wall_left, wall_right):
    coef = float(n) / m_total
    half = 0.5 * dt
    for step in range(nsteps):
        v += half * coef * f
        q += dt * v
        ok = _fill_forces_numpy(q, f, n, c_r, p, xs, c_w, wall_left, wall_right)
        if not ok:
            return step
        v += half * coef * f
    return nsteps


if not HAVE_NUMBA:  # pragma: no cover
    _fill_forces = _fill_forces_numpy
    _verlet_steps = _verlet_steps_numpy


def fill_forces(q, f, n, c_r, p, xs, c_w, wall_left, wall_right):
    return _fill_forces(q, f, n, c_r, p, xs, c_w, wall_left, wall_right)


def verlet_steps(q, v, f, nsteps, dt, n, m_total, c_r, p, xs, c_w,
                 wall_left, wall_right):
    return _verlet_steps(q, v, f, nsteps, dt, n, m_total, c_r, p, xs, c_w,
                         wall_left, wall_right)
