import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mgflow.errors import InvalidPointError, RetractionError
from mgflow.surfaces import (
    CoordMode,
    MagneticField,
    SurfaceModel,
    lorentz,
    metric_dot,
    potential_eval,
    project_tangent,
    retract,
    small_energy_threshold,
    tension_correction,
    wrap_torus,
)

PLANE = SurfaceModel.plane()
TORUS = SurfaceModel.flat_torus()
SPHERE = SurfaceModel.sphere()
HYP = SurfaceModel.hyperboloid()
ALL = [PLANE, TORUS, SPHERE, HYP]


def test_model_attributes():
    assert [s.curvature for s in ALL] == [0.0, 0.0, 1.0, -1.0]
    assert PLANE.coord_mode is CoordMode.INTRINSIC_2D
    assert HYP.coord_mode is CoordMode.AMBIENT_3D
    assert TORUS.torus_periods == (2 * math.pi, 2 * math.pi)
    with pytest.raises(ValueError):
        SurfaceModel.flat_torus((1.0, 0.0))


def test_project_tangent_examples():
    assert np.allclose(project_tangent(SPHERE, [0, 0, 1], [1, 0, 2]), [1, 0, 0])
    assert np.allclose(project_tangent(PLANE, [5, 5], [3, -4]), [3, -4])
    assert np.allclose(project_tangent(HYP, [1, 0, 0], [5, 1, 0]), [0, 1, 0])


def test_off_surface_point_rejected():
    with pytest.raises(InvalidPointError):
        project_tangent(SPHERE, [0, 0, 1.1], [1, 0, 0])
    with pytest.raises(InvalidPointError):
        project_tangent(HYP, [-1, 0, 0], [0, 1, 0])


def test_tension_correction_examples():
    assert np.allclose(tension_correction(SPHERE, [0, 0, 1], [2, 0, 0]), [0, 0, 4])
    assert np.allclose(tension_correction(TORUS, [1, 2], [3, 4]), [0, 0])
    # <v,v>_M p: the sign that makes hyperbolic geodesics tension-free
    assert np.allclose(tension_correction(HYP, [1, 0, 0], [0, 1, 0]), [-1, 0, 0])


def test_hyperbolic_geodesic_is_tension_free():
    s = 0.3
    p = np.array([math.cosh(s), math.sinh(s), 0.0])
    v = np.array([math.sinh(s), math.cosh(s), 0.0])
    raw = p  # second derivative of (cosh s, sinh s, 0)
    tau = project_tangent(HYP, p, raw + tension_correction(HYP, p, v))
    assert np.allclose(raw + tension_correction(HYP, p, v), 0)
    assert np.allclose(tau, 0)


def test_lorentz_examples():
    assert np.allclose(lorentz(MagneticField.constant(1), TORUS, [0, 0], [1, 0]), [0, -1])
    assert np.allclose(lorentz(MagneticField.constant(2), SPHERE, [0, 0, 1], [1, 0, 0]), [0, 2, 0])
    assert np.allclose(lorentz(MagneticField.constant(1), HYP, [1, 0, 0], [0, 1, 0]), [0, 0, 1])


def test_exact_field_only_on_torus():
    with pytest.raises(ValueError, match="exact potential only on FlatTorus"):
        lorentz(MagneticField.exact(0.3), SPHERE, [0, 0, 1], [1, 0, 0])


def test_retract_examples():
    assert np.allclose(retract(SPHERE, [0, 0, 2]), [0, 0, 1])
    assert np.allclose(retract(HYP, [2, 0, 0]), [1, 0, 0])
    assert np.allclose(retract(PLANE, [7, -3]), [7, -3])
    with pytest.raises(RetractionError):
        retract(SPHERE, [0, 0, 0])
    with pytest.raises(RetractionError):
        retract(HYP, [0.5, 1, 0])


def test_wrap_torus():
    assert np.allclose(wrap_torus(TORUS, [7.0, -1.0]), [7 - 2 * math.pi, 2 * math.pi - 1])


def test_metric_examples():
    assert metric_dot(SPHERE, [0, 0, 1], [1, 0, 0], [1, 0, 0]) == 1
    assert metric_dot(HYP, [1, 0, 0], [0, 1, 0], [0, 1, 0]) == 1
    assert metric_dot(TORUS, [0, 0], [1, 2], [3, -1]) == 1


def test_potential_examples():
    assert not potential_eval(MagneticField.constant(1), TORUS, [0, 0]).exists
    pv = potential_eval(MagneticField.exact(0.3), TORUS, [0, math.pi / 2])
    assert pv.exists and pv.a_phi == pytest.approx(0.3) and pv.a_z == 0
    assert not potential_eval(MagneticField.constant(1), SPHERE, [0, 0, 1]).exists
    assert potential_eval(MagneticField.constant(1), PLANE, [2, 0]).exists


def test_small_energy_threshold():
    sph = small_energy_threshold(SPHERE)
    assert sph.radius == 0.5 and sph.value == pytest.approx(1 / (64 * math.pi))
    assert small_energy_threshold(TORUS).value == pytest.approx(math.pi / 16)
    pl = small_energy_threshold(PLANE)
    assert math.isinf(pl.value) and not pl.compact


def test_exact_potential_curl_matches_lorentz():
    eps, d = 0.7, 1e-5
    field = MagneticField.exact(eps)
    for z in np.linspace(0, 2 * math.pi, 7):
        p = np.array([0.4, z])

        def a(q, i):
            return potential_eval(field, TORUS, q).components[i]

        # B = dA_z/dphi - dA_phi/dz
        B = (a(p + [d, 0], 1) - a(p - [d, 0], 1)) / (2 * d) - (a(p + [0, d], 0) - a(p - [0, d], 0)) / (2 * d)
        assert np.allclose(lorentz(field, TORUS, p, [1.0, 0.0]), [0.0, -B], atol=1e-8)


# properties

coords = st.floats(-3, 3, allow_nan=False)
vec3 = arrays(np.float64, 3, elements=coords)
strength = st.floats(-5, 5, allow_nan=False)


def _point(surface, raw):
    raw = np.asarray(raw, float)
    if surface is SPHERE:
        if np.linalg.norm(raw) < 1e-3:
            raw = raw + np.array([0, 0, 1.0])
        return retract(SPHERE, raw)
    if surface is HYP:
        return np.array([math.sqrt(1 + raw[1] ** 2 + raw[2] ** 2), raw[1], raw[2]])
    return raw[:2]


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(ALL), vec3, vec3, strength)
def test_skew_and_operator_norm(surface, raw_p, raw_v, B0):
    p = _point(surface, raw_p)
    v = project_tangent(surface, p, raw_v[: surface.dim])
    zv = lorentz(MagneticField.constant(B0), surface, p, v)
    vv = metric_dot(surface, p, v, v)
    assert abs(metric_dot(surface, p, zv, v)) <= 1e-12 * max(1.0, vv) * max(1.0, abs(B0)) * 10
    assert math.sqrt(metric_dot(surface, p, zv, zv)) == pytest.approx(abs(B0) * math.sqrt(vv), abs=1e-11)


@settings(max_examples=200, deadline=None)
@given(vec3, vec3, st.floats(-2, 2))
def test_exact_field_skew(raw_p, raw_v, eps):
    p, v = raw_p[:2], raw_v[:2]
    zv = lorentz(MagneticField.exact(eps), TORUS, p, v)
    assert abs(zv @ v) <= 1e-12 * max(1.0, v @ v)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(ALL), vec3, vec3)
def test_projection_idempotent_and_normal_free(surface, raw_p, raw_v):
    p = _point(surface, raw_p)
    v = project_tangent(surface, p, raw_v[: surface.dim])
    assert np.allclose(project_tangent(surface, p, v), v, atol=1e-12)
    if surface is SPHERE:
        assert abs(v @ p) <= 1e-12 * (1 + np.abs(raw_v).max())
    if surface is HYP:
        assert abs(v[0] * p[0] - v[1] * p[1] - v[2] * p[2]) <= 1e-11 * (1 + np.abs(raw_v).max()) * p[0]


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(ALL), vec3)
def test_retraction_idempotent(surface, raw):
    p = _point(surface, raw) * (1.3 if surface in (SPHERE, HYP) else 1.0)
    q = retract(surface, p)
    assert np.allclose(retract(surface, q), q, rtol=0, atol=1e-14 * (1 + np.abs(q).max()))
    surface.check_points(q, tol=1e-12 * (1 + np.abs(q).max() ** 2))


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(ALL), vec3, vec3, vec3)
def test_metric_symmetric_positive(surface, raw_p, a, b):
    p = _point(surface, raw_p)
    v = project_tangent(surface, p, a[: surface.dim])
    w = project_tangent(surface, p, b[: surface.dim])
    assert metric_dot(surface, p, v, w) == pytest.approx(metric_dot(surface, p, w, v))
    assert metric_dot(surface, p, v, v) >= -1e-12
