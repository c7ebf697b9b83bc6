"""Compiled inner loops: the Bell objective and a Nelder-Mead simplex search.

Angle vectors use the layout ``[theta_A1, phi_A1, theta_A2, phi_A2, ...]``.
Weights are flattened over interleaved (setting, outcome) pairs with party A
most significant, i.e. flat index ``sum_p (2*s_p + m_p) * 4**(n-1-p)``.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _local_bras(x, n):
    # u[p, 2*s + m, q] = <v_m(theta, phi)|q>
    u = np.empty((n, 4, 2), dtype=np.complex128)
    for p in range(n):
        for s in range(2):
            half = 0.5 * x[4 * p + 2 * s]
            phi = x[4 * p + 2 * s + 1]
            c, sn = math.cos(half), math.sin(half)
            e = complex(math.cos(phi), -math.sin(phi))
            u[p, 2 * s, 0] = c
            u[p, 2 * s, 1] = e * sn
            u[p, 2 * s + 1, 0] = sn
            u[p, 2 * s + 1, 1] = -e * c
    return u


@njit(cache=True)
def probabilities(x, comps, comp_weights, n):
    """Born probabilities for every interleaved (setting, outcome) code."""
    u = _local_bras(x, n)
    size = 1 << (2 * n)
    probs = np.zeros(size)
    cur = np.empty(size, dtype=np.complex128)
    nxt = np.empty(size, dtype=np.complex128)
    for k in range(comps.shape[0]):
        length = 1 << n
        for b in range(length):
            cur[b] = comps[k, b]
        # contract the last remaining qubit and prepend its 4-valued code
        for p in range(n - 1, -1, -1):
            half = length // 2
            for xcode in range(4):
                u0, u1 = u[p, xcode, 0], u[p, xcode, 1]
                for r in range(half):
                    nxt[xcode * half + r] = u0 * cur[2 * r] + u1 * cur[2 * r + 1]
            length = 4 * half
            for i in range(length):
                cur[i] = nxt[i]
        w = comp_weights[k]
        for i in range(size):
            probs[i] += w * (cur[i].real ** 2 + cur[i].imag ** 2)
    return probs


@njit(cache=True)
def bell_value(x, comps, comp_weights, weights, n):
    probs = probabilities(x, comps, comp_weights, n)
    total = 0.0
    for i in range(probs.shape[0]):
        total += weights[i] * probs[i]
    return total


@njit(cache=True)
def neg_bell_value(x, comps, comp_weights, weights, n):
    return -bell_value(x, comps, comp_weights, weights, n)


@njit(cache=True)
def nelder_mead(x0, step, max_iterations, fatol, xatol, comps, comp_weights, weights, n):
    """Maximize the Bell value from ``x0`` (by minimizing its negative).

    Reflection, expansion, outside/inside contraction and shrink steps with
    the dimension-adapted coefficients of Gao and Han.  Stops when both the
    simplex value spread and coordinate spread fall below tolerance.
    Returns ``(x_best, f_best, converged, iterations)``.
    """
    d = x0.shape[0]
    alpha, chi = 1.0, 1.0 + 2.0 / d
    psi, sigma = 0.75 - 0.5 / d, 1.0 - 1.0 / d
    sim = np.empty((d + 1, d))
    f = np.empty(d + 1)
    for i in range(d + 1):
        sim[i] = x0
        if i > 0:
            sim[i, i - 1] += step
        f[i] = neg_bell_value(sim[i], comps, comp_weights, weights, n)
        if not np.isfinite(f[i]):
            f[i] = np.inf
    converged = False
    it = 0
    while it < max_iterations:
        order = np.argsort(f, kind="mergesort")
        sim = sim[order]
        f = f[order]
        if not np.isfinite(f[0]):
            break
        spread_x = 0.0
        for i in range(1, d + 1):
            for j in range(d):
                spread_x = max(spread_x, abs(sim[i, j] - sim[0, j]))
        spread_f = np.max(np.abs(f[1:] - f[0]))
        if spread_x <= xatol and spread_f <= fatol:
            converged = True
            break
        xbar = sim[:d].sum(axis=0) / d
        xr = xbar + alpha * (xbar - sim[d])
        fr = neg_bell_value(xr, comps, comp_weights, weights, n)
        if not np.isfinite(fr):
            fr = np.inf
        shrink = False
        if fr < f[0]:
            xe = xbar + chi * (xr - xbar)
            fe = neg_bell_value(xe, comps, comp_weights, weights, n)
            if fe < fr:
                sim[d], f[d] = xe, fe
            else:
                sim[d], f[d] = xr, fr
        elif fr < f[d - 1]:
            sim[d], f[d] = xr, fr
        elif fr < f[d]:
            xc = xbar + psi * (xr - xbar)
            fc = neg_bell_value(xc, comps, comp_weights, weights, n)
            if fc <= fr:
                sim[d], f[d] = xc, fc
            else:
                shrink = True
        else:
            xcc = xbar - psi * (xbar - sim[d])
            fcc = neg_bell_value(xcc, comps, comp_weights, weights, n)
            if fcc < f[d]:
                sim[d], f[d] = xcc, fcc
            else:
                shrink = True
        if shrink:
            for i in range(1, d + 1):
                sim[i] = sim[0] + sigma * (sim[i] - sim[0])
                f[i] = neg_bell_value(sim[i], comps, comp_weights, weights, n)
                if not np.isfinite(f[i]):
                    f[i] = np.inf
        it += 1
    best = np.argmin(f)
    return sim[best].copy(), f[best], converged, it
