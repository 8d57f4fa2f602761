import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgflow import analytic as A
from mgflow.analysis import geodesic_residual
from mgflow.errors import NoClosedOrbitError, UndefinedRateError
from mgflow.loops import DiscreteLoop
from mgflow.surfaces import MagneticField, SurfaceModel

S = np.arange(64) * 2 * math.pi / 64


def test_torus_mode_limits():
    p = A.TorusModeParams(1, 1.0, 1.0, 1.0)
    phi, z = A.torus_mode(p, S, math.inf)
    assert np.all(phi == 0) and np.all(z == 0)
    phi, z = A.torus_mode(A.TorusModeParams(1, 2.0, 1.0, 1.0), S, math.inf)
    assert np.allclose(phi, 0.5 * np.cos(S)) and np.allclose(z, -0.5 * np.sin(S))
    phi, z = A.torus_mode(A.TorusModeParams(2, 0.3, 0.7, 0.4), S, 0.0)
    assert np.allclose(phi, 0.3 * np.cos(2 * S)) and np.allclose(z, 0.7 * np.sin(2 * S))
    with pytest.raises(ValueError):
        A.TorusModeParams(0, 1, 1, 1)


def test_torus_mode_unbounded_above_threshold():
    phi, _ = A.torus_mode(A.TorusModeParams(1, 2.0, 1.0, 2.0), S, math.inf)
    assert np.isinf(np.abs(phi)).any()


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.floats(-2, 2), st.floats(-2, 2), st.floats(-3, 3), st.floats(0, 2))
def test_torus_mode_solves_flow(k, a, b, B, t):
    # phi_t = phi'' - B z' and z_t = z'' + B phi' on the mode amplitudes
    p = A.TorusModeParams(k, a, b, B)
    d = 1e-6
    A0, C0 = A.torus_amplitudes(p, t)
    A1, C1 = A.torus_amplitudes(p, t + d)
    dA, dC = (A1 - A0) / d, (C1 - C0) / d
    scale = 1 + abs(A0) + abs(C0)
    assert dA == pytest.approx(-k * k * A0 - B * k * C0, abs=1e-4 * scale * (1 + k * k + abs(B) * k))
    assert dC == pytest.approx(-k * k * C0 - B * k * A0, abs=1e-4 * scale * (1 + k * k + abs(B) * k))


def test_torus_magnetic_term():
    p = A.TorusModeParams(1, 1.0, 1.0, 1.0)
    assert A.torus_magnetic_term(p, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert A.torus_magnetic_term(p, math.inf) == pytest.approx(-math.pi)
    for k, B in [(1, 0.5), (2, 1.9), (1, 1.0)]:
        assert math.isfinite(A.torus_magnetic_term(A.TorusModeParams(k, 1.0, 0.5, B), math.inf))
    assert math.isinf(A.torus_magnetic_term(A.TorusModeParams(1, 1.0, 0.5, 1.5), math.inf))


def test_torus_drift():
    phi, z = A.torus_drift(0.0, 0.7, S, 2.0)
    assert np.allclose(phi, S) and np.allclose(z, 1.4)
    phi, z = A.torus_drift(0.3, 0.7, S, 0.0)
    assert np.allclose(phi, S) and np.allclose(z, 0.3 * np.cos(S))
    assert A.torus_drift_magnetic_term(0.3, 0.7, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_latitude_ode():
    ts, th = A.latitude_ode_solve(A.LatitudeOdeState(math.acos(0.5), 0.5), 5.0, 1e-3)
    assert np.allclose(th, math.acos(0.5), atol=1e-12)
    ts, th = A.latitude_ode_solve(A.LatitudeOdeState(1.2, 0.5), 20.0, 1e-3)
    assert np.all(np.diff(th) >= 0) and th[-1] == pytest.approx(math.pi, abs=1e-4)
    assert ts[-1] == pytest.approx(20.0)
    _, th = A.latitude_ode_solve(A.LatitudeOdeState(1.0, 2.0, "Hyperboloid"), 20.0, 1e-3)
    assert th[-1] == pytest.approx(math.acosh(2.0), abs=1e-6)
    assert math.acosh(2.0) == pytest.approx(1.316958, abs=1e-6)
    with pytest.raises(ValueError):
        A.LatitudeOdeState(4.0, 0.5)
    with pytest.raises(ValueError):
        A.latitude_ode_solve(A.LatitudeOdeState(1.0, 0.5), 1.0, 0.0)


@pytest.mark.parametrize("geometry", ["Sphere", "Hyperboloid"])
@pytest.mark.parametrize("B0", [-0.5, 0.0, 0.3, 1.0, 2.5])
def test_fixed_points_are_zeros(geometry, B0):
    for th in A.latitude_fixed_points(B0, geometry):
        assert abs(A.latitude_rhs(th, B0, geometry)) <= 1e-12


def test_latitude_geodesic():
    pts = A.latitude_geodesic("Sphere", math.pi / 3, 0.5, S)
    assert np.allclose(pts[:, 2], 0.5) and np.allclose(np.linalg.norm(pts, axis=1), 1)
    hyp = A.latitude_geodesic("Hyperboloid", 1.0, 2.0, S)
    assert np.allclose(hyp[:, 0] ** 2 - hyp[:, 1] ** 2 - hyp[:, 2] ** 2, 1)
    with pytest.raises(UndefinedRateError):
        A.latitude_geodesic("Sphere", math.pi / 2, 0.5, S)
    assert issubclass(UndefinedRateError, ValueError)


def test_plane_circle():
    pts = A.plane_circle(2.0, 1.0, S)
    assert np.allclose(np.linalg.norm(pts, axis=1), 0.5)
    pts = A.plane_circle(-0.5, 2.0, S, center=(1.0, -1.0))
    assert np.allclose(np.linalg.norm(pts - [1.0, -1.0], axis=1), 4.0)
    a, b = A.plane_circle(1.0, 1.0, S), A.plane_circle(-1.0, 1.0, S)
    assert np.allclose(a[:, 1], -b[:, 1])
    with pytest.raises(NoClosedOrbitError):
        A.plane_circle(0.0, 1.0, S)


@pytest.mark.parametrize("B0", [1.0, -1.0, 2.0])
def test_plane_circle_is_magnetic_geodesic(B0):
    # integer angular rate keeps the loop closed on [0, 2 pi)
    s = np.arange(512) * 2 * math.pi / 512
    loop = DiscreteLoop(SurfaceModel.plane(), A.plane_circle(B0, abs(B0) * 0.8, s))
    assert geodesic_residual(loop, MagneticField.constant(B0)) <= 1e-3
