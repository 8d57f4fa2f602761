"""Closed-form flows and one-dimensional latitude oracles.

Flat torus, field strength B, Fourier data (a cos ks, b sin ks): the sum and
difference of the two amplitudes decouple and decay at rates k^2 + kB and
k^2 - kB. Latitude circles on the sphere and hyperboloid stay latitude
circles, and their polar angle solves a scalar ODE.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NoClosedOrbitError, UndefinedRateError


@dataclass(frozen=True)
class TorusModeParams:
    k: int
    a: float
    b: float
    B0: float

    def __post_init__(self):
        if int(self.k) != self.k or self.k == 0:
            raise ValueError("k must be a nonzero integer")

    @property
    def rates(self) -> tuple[float, float]:
        """Decay rates of the (a+b) and (a-b) amplitudes."""
        k, B = self.k, self.B0
        return k * k + k * B, k * k - k * B


def _decay(rate, t):
    """exp(-rate * t), with the t = inf limit taken explicitly."""
    if math.isinf(t):
        if rate > 0:
            return 0.0
        return 1.0 if rate == 0 else math.inf
    return math.exp(-rate * t)


def torus_amplitudes(params: TorusModeParams, t: float) -> tuple[float, float]:
    r_sum, r_diff = params.rates
    plus = 0.5 * (params.a + params.b) * _decay(r_sum, t)
    minus = 0.5 * (params.a - params.b)
    minus = minus * _decay(r_diff, t) if minus != 0 else 0.0
    return plus + minus, plus - minus


def torus_mode(params: TorusModeParams, s, t: float):
    """(phi, z) of the Fourier-mode solution; ``t`` may be ``math.inf``."""
    A, C = torus_amplitudes(params, t)
    s = np.asarray(s, dtype=float)
    with np.errstate(invalid="ignore"):  # inf * 0 at the nodes of an unbounded mode
        return A * np.cos(params.k * s), C * np.sin(params.k * s)


def torus_magnetic_term(params: TorusModeParams, T: float) -> float:
    """Accumulated magnetic flux term of the Fourier-mode solution up to T."""
    k, a, b, B = params.k, params.a, params.b, params.B0
    kB = k * B
    slow = _decay(2 * (k * k - kB), T)
    fast = _decay(2 * (k * k + kB), T)
    out = -math.pi * a * b * kB
    if (b - a) != 0 and kB != 0:
        out -= 0.25 * math.pi * (b - a) ** 2 * kB * slow
    if (b + a) != 0 and kB != 0:
        out += 0.25 * math.pi * (b + a) ** 2 * kB * fast
    return out


def torus_drift(mu: float, B0: float, s, t: float):
    """(phi, z) of the flow from the graph (s, mu cos s) wrapping once in phi."""
    s = np.asarray(s, dtype=float)
    grow = math.exp((B0 - 1.0) * t)
    fast = math.exp(-(B0 + 1.0) * t)
    phi = s + 0.5 * mu * np.sin(s) * (grow - fast)
    z = B0 * t + 0.5 * mu * np.cos(s) * (grow + fast)
    return phi, z


def torus_drift_magnetic_term(mu: float, B0: float, T: float) -> float:
    return -2 * math.pi * B0 * B0 * T + B0 * (math.pi * mu * mu / 4) * (
        math.exp(-2 * (B0 + 1) * T) - math.exp(2 * (B0 - 1) * T)
    )


class Geometry(str, Enum):
    SPHERE = "Sphere"
    HYPERBOLOID = "Hyperboloid"


@dataclass(frozen=True)
class LatitudeOdeState:
    theta: float
    B0: float
    geometry: Geometry = Geometry.SPHERE

    def __post_init__(self):
        object.__setattr__(self, "geometry", Geometry(self.geometry))
        if self.geometry is Geometry.SPHERE and not 0 <= self.theta <= math.pi:
            raise ValueError("sphere latitude must lie in [0, pi]")
        if self.geometry is Geometry.HYPERBOLOID and self.theta < 0:
            raise ValueError("hyperbolic latitude must be >= 0")


def latitude_rhs(theta, B0: float, geometry: Geometry = Geometry.SPHERE):
    if Geometry(geometry) is Geometry.SPHERE:
        return np.sin(theta) * (B0 - np.cos(theta))
    return np.sinh(theta) * (B0 - np.cosh(theta))


def latitude_fixed_points(B0: float, geometry: Geometry = Geometry.SPHERE) -> list[float]:
    if Geometry(geometry) is Geometry.SPHERE:
        pts = [0.0, math.pi]
        if abs(B0) <= 1:
            pts.insert(1, math.acos(B0))
        return sorted(set(pts))
    return [0.0] + ([math.acosh(B0)] if B0 >= 1 else [])


def latitude_ode_solve(state0: LatitudeOdeState, t_end: float, dt: float):
    """Classical RK4 on the latitude ODE; returns (times, thetas)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    steps = max(1, int(math.ceil(t_end / dt - 1e-12)))
    times = np.linspace(0.0, steps * dt, steps + 1)
    theta = np.empty(steps + 1)
    theta[0] = th = state0.theta
    B, g = state0.B0, state0.geometry
    for i in range(steps):
        k1 = latitude_rhs(th, B, g)
        k2 = latitude_rhs(th + 0.5 * dt * k1, B, g)
        k3 = latitude_rhs(th + 0.5 * dt * k2, B, g)
        k4 = latitude_rhs(th + dt * k3, B, g)
        th = th + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        theta[i + 1] = th
    return times, theta


def latitude_rate(geometry: Geometry, theta0: float, B0: float) -> float:
    if Geometry(geometry) is Geometry.SPHERE:
        c = math.cos(theta0)
        if abs(c) < 1e-15:
            raise UndefinedRateError("cos(theta0) = 0: the equator has no magnetic rate")
        return B0 / c
    return B0 / math.cosh(theta0)


def latitude_geodesic(geometry: Geometry, theta0: float, B0: float, s):
    """Latitude circle traversed at the rate that makes it a magnetic geodesic."""
    w = latitude_rate(geometry, theta0, B0)
    s = np.asarray(s, dtype=float)
    ws = w * s
    if Geometry(geometry) is Geometry.SPHERE:
        r, h = math.sin(theta0), math.cos(theta0)
        pts = [r * np.cos(ws), r * np.sin(ws), np.full_like(ws, h)]
    else:
        r, h = math.sinh(theta0), math.cosh(theta0)
        pts = [np.full_like(ws, h), r * np.cos(ws), r * np.sin(ws)]
    return np.stack(pts, axis=-1)


def plane_circle(B0: float, speed: float, s, center=(0.0, 0.0)):
    """Planar magnetic geodesic: radius speed/|B0|, angular rate -B0."""
    if B0 == 0:
        raise NoClosedOrbitError("B0 = 0: planar trajectories are straight lines")
    r = speed / abs(B0)
    s = np.asarray(s, dtype=float)
    ang = -B0 * s
    return np.stack([center[0] + r * np.cos(ang), center[1] + r * np.sin(ang)], axis=-1)
