"""Jitted per-sample geometry and the explicit RK4 stepper.

Every array argument is a (n, d) float64 array of samples (d=2 for the
intrinsic surfaces, d=3 for the ambient ones). ``kind`` and ``fkind`` are the
integer codes below; the public modules translate their enums to these.
"""

import numpy as np
from numba import njit

PLANE, TORUS, SPHERE, HYPERBOLOID = 0, 1, 2, 3
CONSTANT, EXACT = 0, 1

STATUS_OK = 0
STATUS_RETRACTION = 1
STATUS_NONFINITE = 2
STATUS_SPEED_LIMIT = 3


@njit(cache=True, error_model="numpy")
def project_rows(kind, P, V, out):
    n, d = V.shape
    if kind == PLANE or kind == TORUS:
        for i in range(n):
            for j in range(d):
                out[i, j] = V[i, j]
    elif kind == SPHERE:
        for i in range(n):
            vp = V[i, 0] * P[i, 0] + V[i, 1] * P[i, 1] + V[i, 2] * P[i, 2]
            pp = P[i, 0] * P[i, 0] + P[i, 1] * P[i, 1] + P[i, 2] * P[i, 2]
            c = vp / pp
            for j in range(3):
                out[i, j] = V[i, j] - c * P[i, j]
    else:
        for i in range(n):
            vp = V[i, 0] * P[i, 0] - V[i, 1] * P[i, 1] - V[i, 2] * P[i, 2]
            pp = P[i, 0] * P[i, 0] - P[i, 1] * P[i, 1] - P[i, 2] * P[i, 2]
            c = vp / pp
            for j in range(3):
                out[i, j] = V[i, j] - c * P[i, j]


@njit(cache=True, error_model="numpy")
def correction_rows(kind, P, V, out):
    n, d = V.shape
    if kind == PLANE or kind == TORUS:
        for i in range(n):
            for j in range(d):
                out[i, j] = 0.0
    elif kind == SPHERE:
        for i in range(n):
            vv = V[i, 0] * V[i, 0] + V[i, 1] * V[i, 1] + V[i, 2] * V[i, 2]
            for j in range(3):
                out[i, j] = vv * P[i, j]
    else:
        # Minkowski square of a tangent vector is -|v|^2_g
        for i in range(n):
            vv = V[i, 0] * V[i, 0] - V[i, 1] * V[i, 1] - V[i, 2] * V[i, 2]
            for j in range(3):
                out[i, j] = vv * P[i, j]


@njit(cache=True, error_model="numpy")
def lorentz_rows(kind, fkind, B0, eps, P, V, out):
    n = V.shape[0]
    if kind == PLANE or kind == TORUS:
        for i in range(n):
            if fkind == EXACT:
                b = -eps * np.cos(P[i, 1])
            else:
                b = B0
            v0 = V[i, 0]
            v1 = V[i, 1]
            out[i, 0] = b * v1
            out[i, 1] = -b * v0
    elif kind == SPHERE:
        for i in range(n):
            c0 = P[i, 1] * V[i, 2] - P[i, 2] * V[i, 1]
            c1 = P[i, 2] * V[i, 0] - P[i, 0] * V[i, 2]
            c2 = P[i, 0] * V[i, 1] - P[i, 1] * V[i, 0]
            out[i, 0] = B0 * c0
            out[i, 1] = B0 * c1
            out[i, 2] = B0 * c2
    else:
        # -B0 * J (p x v), J = diag(1, -1, -1)
        for i in range(n):
            c0 = P[i, 1] * V[i, 2] - P[i, 2] * V[i, 1]
            c1 = P[i, 2] * V[i, 0] - P[i, 0] * V[i, 2]
            c2 = P[i, 0] * V[i, 1] - P[i, 1] * V[i, 0]
            out[i, 0] = -B0 * c0
            out[i, 1] = B0 * c1
            out[i, 2] = B0 * c2


@njit(cache=True, error_model="numpy")
def metric_rows(kind, V, W, out):
    n, d = V.shape
    if kind == HYPERBOLOID:
        for i in range(n):
            out[i] = -V[i, 0] * W[i, 0] + V[i, 1] * W[i, 1] + V[i, 2] * W[i, 2]
    else:
        for i in range(n):
            s = 0.0
            for j in range(d):
                s += V[i, j] * W[i, j]
            out[i] = s


@njit(cache=True, error_model="numpy")
def retract_rows(kind, P):
    """Normalise rows onto the surface in place; False if undefined."""
    n = P.shape[0]
    if kind == SPHERE:
        for i in range(n):
            r2 = P[i, 0] * P[i, 0] + P[i, 1] * P[i, 1] + P[i, 2] * P[i, 2]
            if not (r2 > 0.0) or not np.isfinite(r2):
                return False
            r = np.sqrt(r2)
            for j in range(3):
                P[i, j] /= r
    elif kind == HYPERBOLOID:
        for i in range(n):
            q = P[i, 0] * P[i, 0] - P[i, 1] * P[i, 1] - P[i, 2] * P[i, 2]
            if not (q > 0.0) or not (P[i, 0] > 0.0) or not np.isfinite(q):
                return False
            r = np.sqrt(q)
            for j in range(3):
                P[i, j] /= r
    return True


@njit(cache=True, error_model="numpy")
def _neighbours(Y, deck, i, j):
    n = Y.shape[0]
    if i == n - 1:
        nxt = Y[0, j] + deck[j]
    else:
        nxt = Y[i + 1, j]
    if i == 0:
        prv = Y[n - 1, j] - deck[j]
    else:
        prv = Y[i - 1, j]
    return prv, nxt


@njit(cache=True, error_model="numpy")
def velocity_ws(kind, Y, deck, h, raw, out):
    n, d = Y.shape
    c = 0.5 / h
    for j in range(d):
        prv, nxt = _neighbours(Y, deck, 0, j)
        raw[0, j] = (nxt - prv) * c
        prv, nxt = _neighbours(Y, deck, n - 1, j)
        raw[n - 1, j] = (nxt - prv) * c
    for i in range(1, n - 1):
        for j in range(d):
            raw[i, j] = (Y[i + 1, j] - Y[i - 1, j]) * c
    project_rows(kind, Y, raw, out)


@njit(cache=True, error_model="numpy")
def tension_ws(kind, Y, deck, h, V, raw, out):
    n, d = Y.shape
    c = 1.0 / (h * h)
    for j in range(d):
        prv, nxt = _neighbours(Y, deck, 0, j)
        raw[0, j] = (nxt - 2.0 * Y[0, j] + prv) * c
        prv, nxt = _neighbours(Y, deck, n - 1, j)
        raw[n - 1, j] = (nxt - 2.0 * Y[n - 1, j] + prv) * c
    for i in range(1, n - 1):
        for j in range(d):
            raw[i, j] = (Y[i + 1, j] - 2.0 * Y[i, j] + Y[i - 1, j]) * c
    if kind == SPHERE or kind == HYPERBOLOID:
        sgn = 1.0 if kind == SPHERE else -1.0
        for i in range(n):
            vv = V[i, 0] * V[i, 0] + sgn * (V[i, 1] * V[i, 1] + V[i, 2] * V[i, 2])
            for j in range(3):
                raw[i, j] += vv * Y[i, j]
    project_rows(kind, Y, raw, out)


@njit(cache=True, error_model="numpy")
def velocity(kind, Y, deck, h, out):
    velocity_ws(kind, Y, deck, h, np.empty_like(out), out)


@njit(cache=True, error_model="numpy")
def tension(kind, Y, deck, h, V, out):
    tension_ws(kind, Y, deck, h, V, np.empty_like(out), out)


@njit(cache=True, error_model="numpy")
def rhs(kind, fkind, B0, eps, Y, deck, h, V, T, ZV, F, G):
    """F = tau - Z(gamma'); returns (sum g(F,F) h, sum g(F,Z(gamma')) h, max g(V,V)).

    G and T double as scratch space.
    """
    n, d = Y.shape
    velocity_ws(kind, Y, deck, h, ZV, V)
    tension_ws(kind, Y, deck, h, V, ZV, T)
    lorentz_rows(kind, fkind, B0, eps, Y, V, ZV)
    diss = 0.0
    flux = 0.0
    vmax = 0.0
    hyp = kind == HYPERBOLOID
    for i in range(n):
        ff = 0.0
        fz = 0.0
        vv = 0.0
        for j in range(d):
            f = T[i, j] - ZV[i, j]
            F[i, j] = f
            if hyp and j == 0:
                ff -= f * f
                fz -= f * ZV[i, j]
                vv -= V[i, j] * V[i, j]
            else:
                ff += f * f
                fz += f * ZV[i, j]
                vv += V[i, j] * V[i, j]
        diss += ff
        flux += fz
        if vv > vmax:
            vmax = vv
    return diss * h, flux * h, vmax


@njit(cache=True, error_model="numpy")
def rk4_advance(kind, fkind, B0, eps, Y, deck, h, dt, nsteps, acc, speed2_limit):
    """Advance Y in place by up to ``nsteps`` RK4 steps.

    ``acc`` holds (dissipation, flux) and is updated with Simpson weights over
    the four stages. Returns (status, steps_done); on failure Y and acc hold
    the last valid state.
    """
    n, d = Y.shape
    V = np.empty_like(Y)
    T = np.empty_like(Y)
    ZV = np.empty_like(Y)
    G = np.empty(n)
    k1 = np.empty_like(Y)
    k2 = np.empty_like(Y)
    k3 = np.empty_like(Y)
    k4 = np.empty_like(Y)
    S = np.empty_like(Y)
    for step in range(nsteps):
        d1, f1, vmax = rhs(kind, fkind, B0, eps, Y, deck, h, V, T, ZV, k1, G)
        if vmax >= speed2_limit:
            return STATUS_SPEED_LIMIT, step
        for i in range(n):
            for j in range(d):
                S[i, j] = Y[i, j] + 0.5 * dt * k1[i, j]
        if not retract_rows(kind, S):
            return STATUS_RETRACTION, step
        d2, f2, _ = rhs(kind, fkind, B0, eps, S, deck, h, V, T, ZV, k2, G)
        for i in range(n):
            for j in range(d):
                S[i, j] = Y[i, j] + 0.5 * dt * k2[i, j]
        if not retract_rows(kind, S):
            return STATUS_RETRACTION, step
        d3, f3, _ = rhs(kind, fkind, B0, eps, S, deck, h, V, T, ZV, k3, G)
        for i in range(n):
            for j in range(d):
                S[i, j] = Y[i, j] + dt * k3[i, j]
        if not retract_rows(kind, S):
            return STATUS_RETRACTION, step
        d4, f4, _ = rhs(kind, fkind, B0, eps, S, deck, h, V, T, ZV, k4, G)
        finite = True
        for i in range(n):
            for j in range(d):
                S[i, j] = Y[i, j] + dt / 6.0 * (
                    k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j]
                )
                if not np.isfinite(S[i, j]):
                    finite = False
        if not finite:
            return STATUS_NONFINITE, step
        if not retract_rows(kind, S):
            return STATUS_RETRACTION, step
        diss_inc = dt / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
        flux_inc = dt / 6.0 * (f1 + 2.0 * f2 + 2.0 * f3 + f4)
        if not (np.isfinite(diss_inc) and np.isfinite(flux_inc)):
            return STATUS_NONFINITE, step
        for i in range(n):
            for j in range(d):
                Y[i, j] = S[i, j]
        acc[0] += diss_inc
        acc[1] += flux_inc
    return STATUS_OK, nsteps


@njit(cache=True, error_model="numpy")
def diameter(Y):
    n, d = Y.shape
    best = 0.0
    for i in range(n):
        for k in range(i + 1, n):
            s = 0.0
            for j in range(d):
                t = Y[i, j] - Y[k, j]
                s += t * t
            if s > best:
                best = s
    return np.sqrt(best)
