"""Model surfaces and magnetic fields.

Four constant-curvature targets are supported. The plane and the flat torus
use intrinsic coordinates (phi, z); the sphere and the hyperboloid
``p1^2 - p2^2 - p3^2 = 1`` are handled as embedded surfaces in R^3.

The Lorentz endomorphism ``Z`` is tied to the two-form by
``Omega(eta, xi) = <eta, Z(xi)>``. On the flat models a field of local strength
``B`` acts as ``Z(v) = B (v_z, -v_phi)``, i.e. ``Omega = B dphi ^ dz``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .errors import InvalidPointError, RetractionError

SURFACE_TOL = 1e-9


class SurfaceKind(str, Enum):
    PLANE = "Plane"
    FLAT_TORUS = "FlatTorus"
    SPHERE = "Sphere"
    HYPERBOLOID = "Hyperboloid"


class CoordMode(str, Enum):
    INTRINSIC_2D = "Intrinsic2D"
    AMBIENT_3D = "Ambient3D"


class FieldKind(str, Enum):
    CONSTANT_STRENGTH = "ConstantStrength"
    EXACT_POTENTIAL = "ExactPotential"


_KIND_CODE = {
    SurfaceKind.PLANE: K.PLANE,
    SurfaceKind.FLAT_TORUS: K.TORUS,
    SurfaceKind.SPHERE: K.SPHERE,
    SurfaceKind.HYPERBOLOID: K.HYPERBOLOID,
}


@dataclass(frozen=True)
class SurfaceModel:
    kind: SurfaceKind
    torus_periods: tuple[float, float] = (2 * math.pi, 2 * math.pi)

    def __post_init__(self):
        object.__setattr__(self, "kind", SurfaceKind(self.kind))
        periods = tuple(float(x) for x in self.torus_periods)
        if len(periods) != 2 or min(periods) <= 0:
            raise ValueError("torus_periods must be two positive lengths")
        object.__setattr__(self, "torus_periods", periods)

    @classmethod
    def plane(cls):
        return cls(SurfaceKind.PLANE)

    @classmethod
    def flat_torus(cls, periods=(2 * math.pi, 2 * math.pi)):
        return cls(SurfaceKind.FLAT_TORUS, tuple(periods))

    @classmethod
    def sphere(cls):
        return cls(SurfaceKind.SPHERE)

    @classmethod
    def hyperboloid(cls):
        return cls(SurfaceKind.HYPERBOLOID)

    @property
    def code(self) -> int:
        return _KIND_CODE[self.kind]

    @property
    def curvature(self) -> float:
        return {SurfaceKind.SPHERE: 1.0, SurfaceKind.HYPERBOLOID: -1.0}.get(self.kind, 0.0)

    @property
    def coord_mode(self) -> CoordMode:
        if self.kind in (SurfaceKind.PLANE, SurfaceKind.FLAT_TORUS):
            return CoordMode.INTRINSIC_2D
        return CoordMode.AMBIENT_3D

    @property
    def dim(self) -> int:
        return 2 if self.coord_mode is CoordMode.INTRINSIC_2D else 3

    @property
    def is_compact(self) -> bool:
        return self.kind in (SurfaceKind.FLAT_TORUS, SurfaceKind.SPHERE)

    @property
    def injectivity_radius(self) -> float:
        if self.kind is SurfaceKind.SPHERE:
            return math.pi
        if self.kind is SurfaceKind.FLAT_TORUS:
            return 0.5 * min(self.torus_periods)
        return math.inf

    def constraint_defect(self, p) -> np.ndarray:
        """Signed violation of the surface equation, per row."""
        p = np.atleast_2d(np.asarray(p, dtype=float))
        if self.kind is SurfaceKind.SPHERE:
            return np.einsum("ij,ij->i", p, p) - 1.0
        if self.kind is SurfaceKind.HYPERBOLOID:
            q = p[:, 0] ** 2 - p[:, 1] ** 2 - p[:, 2] ** 2 - 1.0
            # the lower sheet is never within tolerance
            return np.where(p[:, 0] >= 1.0 - SURFACE_TOL, q, np.inf)
        return np.zeros(p.shape[0])

    def check_points(self, p, tol=SURFACE_TOL) -> np.ndarray:
        p = np.atleast_2d(np.asarray(p, dtype=float))
        if p.shape[1] != self.dim:
            raise InvalidPointError(
                f"{self.kind.value} points have {self.dim} coordinates, got {p.shape[1]}"
            )
        if not np.all(np.isfinite(p)):
            raise InvalidPointError("non-finite coordinates")
        bad = np.abs(self.constraint_defect(p)) > tol
        if np.any(bad):
            i = int(np.argmax(bad))
            raise InvalidPointError(
                f"point {p[i].tolist()} is off the {self.kind.value} (tolerance {tol:g})"
            )
        return p


@dataclass(frozen=True)
class MagneticField:
    """Constant-strength field, or the exact torus field ``A = eps sin(z) dphi``."""

    kind: FieldKind = FieldKind.CONSTANT_STRENGTH
    B0: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", FieldKind(self.kind))
        object.__setattr__(self, "B0", float(self.B0))
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @classmethod
    def constant(cls, B0):
        return cls(FieldKind.CONSTANT_STRENGTH, B0=B0)

    @classmethod
    def exact(cls, epsilon):
        return cls(FieldKind.EXACT_POTENTIAL, epsilon=epsilon)

    @property
    def code(self) -> int:
        return K.EXACT if self.kind is FieldKind.EXACT_POTENTIAL else K.CONSTANT

    @property
    def sup_norm(self) -> float:
        """|Z|_{L^inf} as an operator norm."""
        if self.kind is FieldKind.EXACT_POTENTIAL:
            return abs(self.epsilon)
        return abs(self.B0)

    def scaled(self, lam: float) -> "MagneticField":
        return MagneticField(self.kind, B0=self.B0 * lam, epsilon=self.epsilon * lam)

    def check_surface(self, surface: SurfaceModel):
        if (
            self.kind is FieldKind.EXACT_POTENTIAL
            and surface.kind is not SurfaceKind.FLAT_TORUS
        ):
            raise ValueError("exact potential only on FlatTorus")


class PotentialValue(NamedTuple):
    """Global one-form potential at a point.

    ``components`` are intrinsic (a_phi, a_z) on the flat models and ambient
    covector components on the hyperboloid.
    """

    exists: bool
    components: tuple = ()

    @property
    def a_phi(self) -> float:
        return self.components[0] if self.exists else math.nan

    @property
    def a_z(self) -> float:
        return self.components[1] if self.exists else math.nan


class SmallEnergyThreshold(NamedTuple):
    value: float
    radius: float
    compact: bool


def _rows(surface, p, v=None):
    P = np.ascontiguousarray(np.atleast_2d(np.asarray(p, dtype=float)))
    surface.check_points(P)
    if v is None:
        return P
    V = np.ascontiguousarray(np.atleast_2d(np.asarray(v, dtype=float)))
    if V.shape[1] != surface.dim:
        raise ValueError(f"vectors must have {surface.dim} components")
    P, V = np.broadcast_arrays(P, V)
    return np.ascontiguousarray(P), np.ascontiguousarray(V)


def _shape_like(out, p, v):
    single = np.ndim(p) == 1 and (v is None or np.ndim(v) == 1)
    return out[0] if single else out


def project_tangent(surface: SurfaceModel, p, v):
    P, V = _rows(surface, p, v)
    out = np.empty_like(V)
    K.project_rows(surface.code, P, V, out)
    return _shape_like(out, p, v)


def tension_correction(surface: SurfaceModel, p, v):
    """Normal term that makes the raw second derivative tangential.

    Sphere: ``|v|^2 p``. Hyperboloid: ``<v,v>_M p = -|v|^2 p``. Flat: zero.
    """
    P, V = _rows(surface, p, v)
    out = np.empty_like(V)
    K.correction_rows(surface.code, P, V, out)
    return _shape_like(out, p, v)


def lorentz(field: MagneticField, surface: SurfaceModel, p, v):
    field.check_surface(surface)
    P, V = _rows(surface, p, v)
    out = np.empty_like(V)
    K.lorentz_rows(surface.code, field.code, field.B0, field.epsilon, P, V, out)
    return _shape_like(out, p, v)


def metric_dot(surface: SurfaceModel, p, v, w):
    P, V = _rows(surface, p, v)
    _, W = _rows(surface, p, w)
    V, W = np.broadcast_arrays(V, W)
    out = np.empty(V.shape[0])
    K.metric_rows(surface.code, np.ascontiguousarray(V), np.ascontiguousarray(W), out)
    if np.ndim(p) == 1 and np.ndim(v) == 1 and np.ndim(w) == 1:
        return float(out[0])
    return out


def retract(surface: SurfaceModel, p_raw):
    """Map ambient points back onto the surface.

    The torus is left on its universal cover; see :func:`wrap_torus` for the
    fundamental-domain representative used in output files.
    """
    P = np.array(np.atleast_2d(np.asarray(p_raw, dtype=float)), order="C")
    if P.shape[1] != surface.dim:
        raise ValueError(f"points must have {surface.dim} coordinates")
    if not K.retract_rows(surface.code, P):
        raise RetractionError(f"retraction undefined on the {surface.kind.value}")
    return P[0] if np.ndim(p_raw) == 1 else P


def wrap_torus(surface: SurfaceModel, p):
    p = np.asarray(p, dtype=float)
    if surface.kind is not SurfaceKind.FLAT_TORUS:
        return p
    periods = np.asarray(surface.torus_periods)
    return np.mod(p, periods)


def potential_eval(field: MagneticField, surface: SurfaceModel, p) -> PotentialValue:
    p = np.asarray(p, dtype=float)
    kind = surface.kind
    if field.kind is FieldKind.EXACT_POTENTIAL:
        field.check_surface(surface)
        return PotentialValue(True, (field.epsilon * math.sin(p[1]), 0.0))
    if kind is SurfaceKind.PLANE:
        # A = B0 x dy
        return PotentialValue(True, (0.0, field.B0 * p[0]))
    if kind is SurfaceKind.HYPERBOLOID:
        # A = -B0 (cosh(theta) - 1) dphi about the p1 axis
        c = -field.B0 / (1.0 + p[0])
        return PotentialValue(True, (0.0, -c * p[2], c * p[1]))
    if field.B0 == 0.0:
        return PotentialValue(True, (0.0,) * surface.dim)
    # nonzero total flux on a compact surface
    return PotentialValue(False)


def potential_rows(field: MagneticField, surface: SurfaceModel, P):
    """Vectorised potential covectors, or None when no global potential exists."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    out = np.zeros_like(P)
    if field.kind is FieldKind.EXACT_POTENTIAL:
        field.check_surface(surface)
        out[:, 0] = field.epsilon * np.sin(P[:, 1])
        return out
    if surface.kind is SurfaceKind.PLANE:
        out[:, 1] = field.B0 * P[:, 0]
        return out
    if surface.kind is SurfaceKind.HYPERBOLOID:
        c = -field.B0 / (1.0 + P[:, 0])
        out[:, 1] = -c * P[:, 2]
        out[:, 2] = c * P[:, 1]
        return out
    if field.B0 == 0.0:
        return out
    return None


def small_energy_threshold(surface: SurfaceModel) -> SmallEnergyThreshold:
    """Kinetic-energy bound r(N)^2/(16 pi) below which the small-loop
    convergence criterion applies; infinite on the non-compact models."""
    if not surface.is_compact:
        return SmallEnergyThreshold(math.inf, math.inf, False)
    r = surface.injectivity_radius
    kappa = surface.curvature
    if kappa > 0:
        r = min(r, 1.0 / (2.0 * math.sqrt(kappa)))
    return SmallEnergyThreshold(r * r / (16.0 * math.pi), r, True)


def small_radius(surface: SurfaceModel) -> float:
    return small_energy_threshold(surface).radius
