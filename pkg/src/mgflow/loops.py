"""Discrete closed curves and their periodic calculus.

A loop is ``n`` samples of a curve on the circle of length ``circle_length``
at the uniform parameters ``s_i = i h``. On the flat torus the samples live on
the universal cover and ``deck`` is the lattice translation taking
``samples[0]`` to the (virtual) ``samples[n]``.

Pointwise quantities (velocity, tension, residuals) use second-order central
differences. Integrated quantities (energies) differentiate spectrally, which
on a uniform periodic grid is exact for band-limited curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

import numpy as np

from . import _kernels as K
from .errors import InconsistentLoopError, LoopConstructionError
from .surfaces import MagneticField, SurfaceKind, SurfaceModel, potential_rows

DEFAULT_N = 256
WINDING_TOL = 1e-6
_CLOSURE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DiscreteLoop:
    surface: SurfaceModel
    samples: np.ndarray
    circle_length: float = 2 * math.pi
    deck: np.ndarray | None = None

    def __post_init__(self):
        Y = np.array(self.samples, dtype=float, order="C")
        if Y.ndim != 2 or Y.shape[1] != self.surface.dim:
            raise LoopConstructionError(
                f"samples must have shape (n, {self.surface.dim}), got {Y.shape}"
            )
        if Y.shape[0] < 8:
            raise LoopConstructionError(f"need n >= 8 samples, got {Y.shape[0]}")
        if not self.circle_length > 0:
            raise LoopConstructionError("circle_length must be positive")
        try:
            self.surface.check_points(Y)
        except ValueError as exc:
            raise LoopConstructionError(str(exc)) from exc
        deck = np.zeros(self.surface.dim) if self.deck is None else np.array(self.deck, float)
        if deck.shape != (self.surface.dim,):
            raise LoopConstructionError("deck translation has the wrong dimension")
        if np.any(deck != 0) and self.surface.kind is not SurfaceKind.FLAT_TORUS:
            raise LoopConstructionError("only torus loops may carry a deck translation")
        Y.setflags(write=False)
        deck.setflags(write=False)
        object.__setattr__(self, "samples", Y)
        object.__setattr__(self, "deck", deck)
        object.__setattr__(self, "circle_length", float(self.circle_length))

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def h(self) -> float:
        return self.circle_length / self.n

    @property
    def parameters(self) -> np.ndarray:
        return np.arange(self.n) * self.h

    def with_samples(self, samples) -> "DiscreteLoop":
        return DiscreteLoop(self.surface, samples, self.circle_length, self.deck)

    def with_circle_length(self, circle_length) -> "DiscreteLoop":
        return DiscreteLoop(self.surface, self.samples, circle_length, self.deck)

    def __repr__(self):
        return (
            f"DiscreteLoop({self.surface.kind.value}, n={self.n}, "
            f"circle_length={self.circle_length:.6g})"
        )


class GeneratorKind(str, Enum):
    FOURIER_MODE = "FourierMode"
    TORUS_GRAPH = "TorusGraph"
    SPHERE_LATITUDE = "SphereLatitude"
    HYPERBOLIC_LATITUDE = "HyperbolicLatitude"
    PLANE_CIRCLE = "PlaneCircle"
    EXPLICIT_SAMPLES = "ExplicitSamples"


@dataclass(frozen=True)
class LoopGenerator:
    kind: GeneratorKind
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", GeneratorKind(self.kind))

    @classmethod
    def fourier_mode(cls, k, a, b, center=(0.0, 0.0)):
        return cls(GeneratorKind.FOURIER_MODE, {"k": k, "a": a, "b": b, "center": tuple(center)})

    @classmethod
    def torus_graph(cls, mu):
        return cls(GeneratorKind.TORUS_GRAPH, {"mu": mu})

    @classmethod
    def sphere_latitude(cls, theta0, rate=1.0):
        return cls(GeneratorKind.SPHERE_LATITUDE, {"theta0": theta0, "rate": rate})

    @classmethod
    def hyperbolic_latitude(cls, theta0, rate=1.0):
        return cls(GeneratorKind.HYPERBOLIC_LATITUDE, {"theta0": theta0, "rate": rate})

    @classmethod
    def plane_circle(cls, radius, center=(0.0, 0.0), rate=1.0):
        return cls(
            GeneratorKind.PLANE_CIRCLE,
            {"radius": radius, "center": tuple(center), "rate": rate},
        )

    @classmethod
    def explicit(cls, samples, deck=None):
        return cls(GeneratorKind.EXPLICIT_SAMPLES, {"samples": samples, "deck": deck})


_DEFAULT_SURFACE = {
    GeneratorKind.FOURIER_MODE: SurfaceModel.flat_torus,
    GeneratorKind.TORUS_GRAPH: SurfaceModel.flat_torus,
    GeneratorKind.SPHERE_LATITUDE: SurfaceModel.sphere,
    GeneratorKind.HYPERBOLIC_LATITUDE: SurfaceModel.hyperboloid,
    GeneratorKind.PLANE_CIRCLE: SurfaceModel.plane,
}

_ALLOWED_SURFACES = {
    GeneratorKind.FOURIER_MODE: {SurfaceKind.PLANE, SurfaceKind.FLAT_TORUS},
    GeneratorKind.TORUS_GRAPH: {SurfaceKind.FLAT_TORUS},
    GeneratorKind.SPHERE_LATITUDE: {SurfaceKind.SPHERE},
    GeneratorKind.HYPERBOLIC_LATITUDE: {SurfaceKind.HYPERBOLOID},
    GeneratorKind.PLANE_CIRCLE: {SurfaceKind.PLANE, SurfaceKind.FLAT_TORUS},
}


def _require_closed(freq, circle_length, what):
    turns = freq * circle_length / (2 * math.pi)
    if abs(turns - round(turns)) > _CLOSURE_TOL:
        raise LoopConstructionError(
            f"{what}: frequency {freq} does not close on a circle of length {circle_length}"
        )


def make_loop(
    gen: LoopGenerator,
    n: int = DEFAULT_N,
    circle_length: float = 2 * math.pi,
    surface: SurfaceModel | None = None,
) -> DiscreteLoop:
    """Sample a generator family at ``s_i = i * circle_length / n``."""
    kind = gen.kind
    p = dict(gen.params)
    if surface is None:
        if kind is GeneratorKind.EXPLICIT_SAMPLES:
            raise LoopConstructionError("explicit samples need a surface")
        surface = _DEFAULT_SURFACE[kind]()
    allowed = _ALLOWED_SURFACES.get(kind)
    if allowed is not None and surface.kind not in allowed:
        raise LoopConstructionError(f"{kind.value} loops are not defined on the {surface.kind.value}")
    if int(n) != n or n < 8:
        raise LoopConstructionError(f"need an integer n >= 8, got {n}")
    n = int(n)
    s = np.arange(n) * (circle_length / n)
    deck = None

    if kind is GeneratorKind.FOURIER_MODE:
        k = p["k"]
        if int(k) != k or k == 0:
            raise LoopConstructionError("FourierMode needs a nonzero integer k")
        _require_closed(k, circle_length, "FourierMode")
        cx, cz = p.get("center", (0.0, 0.0))
        Y = np.column_stack([cx + p["a"] * np.cos(k * s), cz + p["b"] * np.sin(k * s)])
    elif kind is GeneratorKind.TORUS_GRAPH:
        _require_closed(1, circle_length, "TorusGraph")
        Y = np.column_stack([s, p["mu"] * np.cos(s)])
        deck = (circle_length, 0.0)
    elif kind is GeneratorKind.SPHERE_LATITUDE:
        th, w = p["theta0"], p.get("rate", 1.0)
        if not 0 < th < math.pi:
            raise LoopConstructionError("SphereLatitude needs theta0 in (0, pi)")
        _require_closed(w, circle_length, "SphereLatitude")
        Y = np.column_stack(
            [math.sin(th) * np.cos(w * s), math.sin(th) * np.sin(w * s), np.full(n, math.cos(th))]
        )
    elif kind is GeneratorKind.HYPERBOLIC_LATITUDE:
        th, w = p["theta0"], p.get("rate", 1.0)
        if not th > 0:
            raise LoopConstructionError("HyperbolicLatitude needs theta0 > 0")
        _require_closed(w, circle_length, "HyperbolicLatitude")
        Y = np.column_stack(
            [np.full(n, math.cosh(th)), math.sinh(th) * np.cos(w * s), math.sinh(th) * np.sin(w * s)]
        )
    elif kind is GeneratorKind.PLANE_CIRCLE:
        r, w = p["radius"], p.get("rate", 1.0)
        if r < 0:
            raise LoopConstructionError("PlaneCircle needs radius >= 0")
        _require_closed(w, circle_length, "PlaneCircle")
        cx, cy = p.get("center", (0.0, 0.0))
        Y = np.column_stack([cx + r * np.cos(w * s), cy + r * np.sin(w * s)])
    else:
        Y = np.asarray(p["samples"], dtype=float)
        if Y.shape[0] != n:
            raise LoopConstructionError(f"expected {n} explicit samples, got {Y.shape[0]}")
        deck = p.get("deck")
    return DiscreteLoop(surface, Y, circle_length, deck)


def velocity(loop: DiscreteLoop) -> np.ndarray:
    """Projected central difference of the samples."""
    out = np.empty_like(loop.samples)
    K.velocity(loop.surface.code, loop.samples, loop.deck, loop.h, out)
    return out


def tension(loop: DiscreteLoop, vel=None) -> np.ndarray:
    if vel is None:
        vel = velocity(loop)
    out = np.empty_like(loop.samples)
    K.tension(loop.surface.code, loop.samples, loop.deck, loop.h, vel, out)
    return out


def metric_norm2(surface: SurfaceModel, V, W=None) -> np.ndarray:
    V = np.ascontiguousarray(V, dtype=float)
    W = V if W is None else np.ascontiguousarray(W, dtype=float)
    out = np.empty(V.shape[0])
    K.metric_rows(surface.code, V, W, out)
    return out


def spectral_derivatives(loop: DiscreteLoop):
    """Spectrally accurate (velocity, tension) of the trigonometric interpolant."""
    Y = loop.samples
    n, L = loop.n, loop.circle_length
    lin = np.outer(loop.parameters / L, loop.deck)
    coeffs = np.fft.rfft(Y - lin, axis=0)
    w = 2 * np.pi * np.fft.rfftfreq(n, d=1.0 / n) / L
    d1 = 1j * w[:, None] * coeffs
    if n % 2 == 0:
        d1[-1] = 0.0
    D1 = np.fft.irfft(d1, n, axis=0) + loop.deck / L
    D2 = np.fft.irfft(-(w**2)[:, None] * coeffs, n, axis=0)
    code = loop.surface.code
    V = np.empty_like(Y)
    K.project_rows(code, Y, np.ascontiguousarray(D1), V)
    corr = np.empty_like(Y)
    K.correction_rows(code, Y, V, corr)
    T = np.empty_like(Y)
    K.project_rows(code, Y, np.ascontiguousarray(D2 + corr), T)
    return V, T


def kinetic_energy(loop: DiscreteLoop) -> float:
    """(1/2) * integral of |gamma'|^2 over the circle."""
    V, _ = spectral_derivatives(loop)
    return 0.5 * float(np.sum(metric_norm2(loop.surface, V))) * loop.h


def magnetic_energy(loop: DiscreteLoop, field: MagneticField) -> float | None:
    """Integral of the pulled-back potential; None without a global potential."""
    A = potential_rows(field, loop.surface, loop.samples)
    if A is None:
        return None
    V, _ = spectral_derivatives(loop)
    return float(np.sum(A * V)) * loop.h


def winding(loop: DiscreteLoop) -> tuple[int, int] | int:
    if loop.surface.kind is not SurfaceKind.FLAT_TORUS:
        return 0
    turns = np.asarray(loop.deck) / np.asarray(loop.surface.torus_periods)
    rounded = np.round(turns)
    if np.any(np.abs(turns - rounded) > WINDING_TOL):
        raise InconsistentLoopError(f"non-integer winding {turns.tolist()}")
    return int(rounded[0]), int(rounded[1])


def is_contractible(loop: DiscreteLoop) -> bool:
    w = winding(loop)
    return w == 0 or w == (0, 0)


def diameter(loop: DiscreteLoop) -> float:
    """Largest pairwise coordinate distance (ambient for embedded surfaces)."""
    return float(K.diameter(loop.samples))


def speed_stats(loop: DiscreteLoop, vel=None) -> tuple[float, float]:
    if vel is None:
        vel = velocity(loop)
    speed = np.sqrt(np.maximum(metric_norm2(loop.surface, vel), 0.0))
    return float(speed.min()), float(speed.max())


def write_loop_csv(path, loop: DiscreteLoop, wrap: bool = True):
    """Snapshot CSV: ``s, x1, x2[, x3]``; torus points reduced to one period."""
    from .surfaces import wrap_torus

    Y = wrap_torus(loop.surface, loop.samples) if wrap else loop.samples
    cols = ["s"] + [f"x{j + 1}" for j in range(loop.surface.dim)]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for s, row in zip(loop.parameters, Y):
            fh.write(",".join(f"{v:.17g}" for v in (s, *row)) + "\n")


def read_loop_csv(path, surface: SurfaceModel, circle_length: float = 2 * math.pi) -> DiscreteLoop:
    """Inverse of :func:`write_loop_csv`; torus samples are unwrapped by continuity."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    Y = data[:, 1:]
    deck = None
    if surface.kind is SurfaceKind.FLAT_TORUS:
        periods = np.asarray(surface.torus_periods)
        Y = np.column_stack([np.unwrap(Y[:, j], period=periods[j]) for j in range(2)])
        deck = periods * np.round((Y[-1] - Y[0]) / periods)
    return DiscreteLoop(surface, Y, circle_length, deck)
