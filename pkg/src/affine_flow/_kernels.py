"""Compiled fixed-step loops used by :func:`affine_flow.dynamics.integrate`.

Each runner returns sampled states plus a status index: ``-1`` on success,
otherwise the step number at which det A fell below the floor.
"""

import math

import numba
import numpy as np

from .mat3 import cof3, det3, matmul3, trace3

COMPRESSIBLE = 0
INCOMPRESSIBLE = 1


@numba.njit(cache=True)
def comp_force(a, gamma):
    d = det3(a)
    return cof3(a) * d ** (-gamma)


@numba.njit(cache=True)
def incomp_accel(a, v):
    d = det3(a)
    c = cof3(a)
    ainv = c.T / d
    el = matmul3(v, ainv)
    num = trace3(matmul3(el, el))
    den = 0.0
    for i in range(3):
        for j in range(3):
            den += (c[i, j] / d) ** 2
    return c * ((num / den) / d)


@numba.njit(cache=True)
def _accel(a, v, regime, gamma):
    if regime == COMPRESSIBLE:
        return comp_force(a, gamma)
    return incomp_accel(a, v)


@numba.njit(cache=True)
def _n_samples(n_steps, stride):
    n = n_steps // stride + 1
    if n_steps % stride != 0:
        n += 1
    return n


@numba.njit(cache=True)
def verlet_run(a0, v0, gamma, h, n_steps, stride, det_floor):
    m = _n_samples(n_steps, stride)
    a_out = np.empty((m, 3, 3))
    v_out = np.empty((m, 3, 3))
    steps = np.empty(m, dtype=np.int64)
    a = a0.copy()
    v = v0.copy()
    f = comp_force(a, gamma)
    a_out[0] = a
    v_out[0] = v
    steps[0] = 0
    j = 1
    for k in range(1, n_steps + 1):
        v = v + (0.5 * h) * f
        a = a + h * v
        if not det3(a) > det_floor:
            return a_out[:j], v_out[:j], steps[:j], k
        f = comp_force(a, gamma)
        v = v + (0.5 * h) * f
        if k % stride == 0 or k == n_steps:
            a_out[j] = a
            v_out[j] = v
            steps[j] = k
            j += 1
    return a_out, v_out, steps, -1


@numba.njit(cache=True)
def rk4_run(a0, v0, regime, gamma, h, n_steps, stride, project, det_floor):
    m = _n_samples(n_steps, stride)
    a_out = np.empty((m, 3, 3))
    v_out = np.empty((m, 3, 3))
    steps = np.empty(m, dtype=np.int64)
    proj_det = np.zeros(m)
    proj_tr = np.zeros(m)
    a = a0.copy()
    v = v0.copy()
    a_out[0] = a
    v_out[0] = v
    steps[0] = 0
    j = 1
    wd = 0.0
    wt = 0.0
    for k in range(1, n_steps + 1):
        k1a = v
        k1v = _accel(a, v, regime, gamma)
        a2 = a + (0.5 * h) * k1a
        v2 = v + (0.5 * h) * k1v
        k2a = v2
        k2v = _accel(a2, v2, regime, gamma)
        a3 = a + (0.5 * h) * k2a
        v3 = v + (0.5 * h) * k2v
        k3a = v3
        k3v = _accel(a3, v3, regime, gamma)
        a4 = a + h * k3a
        v4 = v + h * k3v
        k4a = v4
        k4v = _accel(a4, v4, regime, gamma)
        a = a + (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        d = det3(a)
        if not d > det_floor:
            return a_out[:j], v_out[:j], steps[:j], proj_det[:j], proj_tr[:j], k
        if project:
            a = a / math.pow(d, 1.0 / 3.0)
            ainv = cof3(a).T / det3(a)
            tr = trace3(matmul3(v, ainv))
            v = v - (tr / 3.0) * a
            wd = max(wd, abs(d - 1.0))
            wt = max(wt, abs(tr))
        if k % stride == 0 or k == n_steps:
            a_out[j] = a
            v_out[j] = v
            steps[j] = k
            proj_det[j] = wd
            proj_tr[j] = wt
            wd = 0.0
            wt = 0.0
            j += 1
    return a_out, v_out, steps, proj_det, proj_tr, -1
