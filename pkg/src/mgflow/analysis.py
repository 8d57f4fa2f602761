"""Diagnostics of loops and flow runs.

The functions here accept any object with ``loop``, ``time``, ``dissipation``
and ``magnetic_flux_term`` attributes as a flow state, so this module does not
depend on the integrator.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels as K
from .loops import (
    DiscreteLoop,
    diameter,
    kinetic_energy,
    magnetic_energy,
    metric_norm2,
    spectral_derivatives,
    speed_stats,
    tension,
    velocity,
    winding,
)
from .surfaces import MagneticField, SurfaceModel, small_radius

CSV_COLUMNS = (
    "time",
    "kinetic",
    "magnetic",
    "dissipation",
    "flux_term",
    "residual_l2",
    "speed_min",
    "speed_max",
    "diameter",
    "ottarsson_lhs",
    "ottarsson_rhs",
)


@dataclass(frozen=True)
class DiagnosticsRecord:
    time: float
    kinetic: float
    magnetic: float | None
    dissipation: float
    flux_term: float
    residual_l2: float
    speed_min: float
    speed_max: float
    diameter: float
    ottarsson_lhs: float
    ottarsson_rhs: float

    @property
    def energy(self) -> float | None:
        return None if self.magnetic is None else self.kinetic + self.magnetic

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> "DiagnosticsRecord":
        return cls(**{f.name: d[f.name] for f in fields(cls)})


def _lorentz(loop: DiscreteLoop, field: MagneticField, V):
    out = np.empty_like(V)
    K.lorentz_rows(
        loop.surface.code, field.code, field.B0, field.epsilon, loop.samples, V, out
    )
    return out


def residual_field(loop: DiscreteLoop, field: MagneticField) -> np.ndarray:
    """Per-sample ``tau - Z(gamma')`` (equal to gamma_dot)."""
    V = velocity(loop)
    return tension(loop, V) - _lorentz(loop, field, V)


def geodesic_residual(loop: DiscreteLoop, field: MagneticField) -> float:
    F = residual_field(loop, field)
    return math.sqrt(max(float(np.sum(metric_norm2(loop.surface, F))) * loop.h, 0.0))


def diagnostics(state, field: MagneticField) -> DiagnosticsRecord:
    loop = state.loop
    V = velocity(loop)
    F = tension(loop, V) - _lorentz(loop, field, V)
    vmin, vmax = speed_stats(loop, V)
    Vs, Ts = spectral_derivatives(loop)
    h = loop.h
    return DiagnosticsRecord(
        time=float(state.time),
        kinetic=0.5 * float(np.sum(metric_norm2(loop.surface, Vs))) * h,
        magnetic=magnetic_energy(loop, field),
        dissipation=float(state.dissipation),
        flux_term=float(state.magnetic_flux_term),
        residual_l2=math.sqrt(max(float(np.sum(metric_norm2(loop.surface, F))) * h, 0.0)),
        speed_min=vmin,
        speed_max=vmax,
        diameter=diameter(loop),
        ottarsson_lhs=float(np.sum(metric_norm2(loop.surface, Vs))) * h,
        ottarsson_rhs=float(np.sum(metric_norm2(loop.surface, Ts))) * h,
    )


def default_slack(dt: float, h: float) -> float:
    return 10.0 * (dt + h * h)


def energy_identity_defect(
    series: Sequence[DiagnosticsRecord], E0_kinetic: float | None = None, relative=False
) -> float:
    """max_t |E_kin(t) + dissipation(t) + flux_term(t) - E_kin(0)|.

    With ``relative`` the defect is divided by max(1, max_t E_kin(t)), the
    natural scale for runs whose energy grows without bound.
    """
    if not series:
        return 0.0
    e0 = series[0].kinetic if E0_kinetic is None else E0_kinetic
    worst = max(abs(r.kinetic + r.dissipation + r.flux_term - e0) for r in series)
    if relative:
        worst /= max(1.0, max(r.kinetic for r in series))
    return worst


class OttarssonResult(NamedTuple):
    lhs: float
    rhs: float
    quarter_pi_squared: bool
    constant_one: bool


def ottarsson_check(loop: DiscreteLoop, rtol: float = 1e-9) -> OttarssonResult:
    """Poincare-type bound int|gamma'|^2 <= C int|tau|^2 for C = 4 pi^2 and C = 1."""
    V, T = spectral_derivatives(loop)
    lhs = float(np.sum(metric_norm2(loop.surface, V))) * loop.h
    rhs = float(np.sum(metric_norm2(loop.surface, T))) * loop.h
    tol = rtol * max(1.0, lhs, rhs)
    return OttarssonResult(
        lhs, rhs, lhs / (4 * math.pi**2) <= rhs + tol, lhs <= rhs + tol
    )


class BoundCheck(NamedTuple):
    applicable: bool
    holds: bool
    max_violation: float
    equality_case: bool = False


def kinetic_decay_check(
    series: Sequence[DiagnosticsRecord],
    z_sup: float,
    constant: float = 1.0 / (4 * math.pi**2),
    surface: SurfaceModel | None = None,
    slack: float = 0.0,
) -> BoundCheck:
    """int|gamma'_t|^2 <= exp((|Z|^2 - constant) t) int|gamma'_0|^2 + slack.

    With a surface, the small-loop hypothesis is gated by
    diameter(gamma_0) < r(N); an ungated loop is reported as not applicable.
    """
    if not series:
        return BoundCheck(False, True, 0.0)
    first = series[0]
    if surface is not None and not first.diameter < small_radius(surface):
        return BoundCheck(False, True, 0.0)
    rate = z_sup * z_sup - constant
    worst = -math.inf
    for r in series:
        bound = math.exp(rate * (r.time - first.time)) * first.ottarsson_lhs + slack
        worst = max(worst, r.ottarsson_lhs - bound)
    return BoundCheck(True, worst <= 0.0, max(worst, 0.0))


def sup_bound_check(
    series: Sequence[DiagnosticsRecord], z_sup: float, slack: float = 0.0, rate_tol=0.05
) -> BoundCheck:
    """max|gamma'_t|^2 <= max|gamma'_0|^2 exp(|Z|^2 t / 2) + slack.

    ``equality_case`` flags runs whose late-time growth rate of max|gamma'|^2
    matches the allowed exponent.
    """
    if not series:
        return BoundCheck(True, True, 0.0)
    first = series[0]
    allowed = 0.5 * z_sup * z_sup
    worst = -math.inf
    for r in series:
        bound = first.speed_max**2 * math.exp(allowed * (r.time - first.time)) + slack
        worst = max(worst, r.speed_max**2 - bound)
    equality = False
    late = [r for r in series[len(series) // 2 :] if r.speed_max > 0]
    if len(late) >= 2 and late[-1].time > late[0].time:
        slope = (math.log(late[-1].speed_max**2) - math.log(late[0].speed_max**2)) / (
            late[-1].time - late[0].time
        )
        equality = abs(slope - allowed) <= rate_tol * max(allowed, 1.0)
    return BoundCheck(True, worst <= 0.0, max(worst, 0.0), equality)


def energy_monotonicity_violation(series: Sequence[DiagnosticsRecord]) -> float:
    """Largest increase of kinetic + magnetic energy between any two records."""
    worst, running_min = 0.0, math.inf
    for r in series:
        e = r.energy
        if e is None:
            raise ValueError("total energy needs a global potential")
        worst = max(worst, e - running_min)
        running_min = min(running_min, e)
    return worst


def bochner1_residual(states, field: MagneticField) -> float:
    """Sup norm of d_t e - e'' + |tau|^2 - <Z(gamma'), tau>, e = |gamma'|^2 / 2.

    ``states`` are three equally spaced states of one run; the middle one is
    the evaluation time.
    """
    s0, s1, s2 = states
    dt = s1.time - s0.time
    if not dt > 0 or abs((s2.time - s1.time) - dt) > 1e-9 * dt:
        raise ValueError("states must be equally spaced in time")

    def e(loop):
        return 0.5 * metric_norm2(loop.surface, velocity(loop))

    loop = s1.loop
    h = loop.h
    e1 = e(loop)
    e_t = (e(s2.loop) - e(s0.loop)) / (2 * dt)
    e_ss = (np.roll(e1, -1) - 2 * e1 + np.roll(e1, 1)) / (h * h)
    V = velocity(loop)
    T = tension(loop, V)
    ZV = _lorentz(loop, field, V)
    res = e_t - e_ss + metric_norm2(loop.surface, T) - metric_norm2(loop.surface, ZV, T)
    return float(np.max(np.abs(res)))


def _project(surface, P, V):
    out = np.empty_like(V)
    K.project_rows(surface.code, P, np.ascontiguousarray(V), out)
    return out


def second_variation(loop: DiscreteLoop, field: MagneticField, eta) -> float:
    """Second variation of the magnetic energy at ``loop`` in direction ``eta``.

    Integrand |D eta|^2 - K(|eta|^2 |gamma'|^2 - <eta, gamma'>^2)
    + <(D_eta Z) gamma', eta> + <Z(D eta), eta>. The field derivative is a
    central difference along retracted displacements, so the form is exactly
    even in ``eta``.
    """
    surface = loop.surface
    P = loop.samples
    eta = _project(surface, P, np.asarray(eta, dtype=float))
    V = velocity(loop)
    h = loop.h
    D_eta = _project(surface, P, (np.roll(eta, -1, axis=0) - np.roll(eta, 1, axis=0)) / (2 * h))

    def g(a, b):
        return metric_norm2(surface, a, b)

    kappa = surface.curvature
    curv = kappa * (g(eta, eta) * g(V, V) - g(eta, V) ** 2) if kappa else 0.0

    eps = 1e-5 * (1.0 + np.linalg.norm(P, axis=1))[:, None]
    dZ = np.zeros_like(P)
    if field.sup_norm != 0.0:
        zs = []
        for sign in (1.0, -1.0):
            Q = np.array(P + sign * eps * eta, order="C")
            K.retract_rows(surface.code, Q)
            xi = _project(surface, Q, V)
            zs.append(_lorentz_at(surface, field, Q, xi))
        dZ = _project(surface, P, (zs[0] - zs[1]) / (2 * eps))
    ZD = _lorentz(loop, field, np.ascontiguousarray(D_eta))
    integrand = g(D_eta, D_eta) - curv + g(dZ, eta) + g(ZD, eta)
    return float(np.sum(integrand)) * h


def _lorentz_at(surface, field, Q, V):
    out = np.empty_like(V)
    K.lorentz_rows(surface.code, field.code, field.B0, field.epsilon, Q, np.ascontiguousarray(V), out)
    return out


class LimitReport(NamedTuple):
    trivial: bool
    winding: object
    residual: float
    speed_variation: float
    diameter: float


def classify_limit(outcome, field: MagneticField | None = None) -> LimitReport:
    """Summary of a converged run's final loop."""
    final = outcome.series[-1]
    loop = outcome.final.loop
    residual = final.residual_l2 if field is None else geodesic_residual(loop, field)
    return LimitReport(
        trivial=outcome.classification.value == "ConvergedPoint",
        winding=winding(loop),
        residual=residual,
        speed_variation=final.speed_max - final.speed_min,
        diameter=final.diameter,
    )


def _fmt(x):
    return "NA" if x is None else f"{x:.17g}"


def write_diagnostics_csv(path, series: Sequence[DiagnosticsRecord]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in series:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])


def read_diagnostics_csv(path) -> list[DiagnosticsRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            vals = {k: (None if v == "NA" else float(v)) for k, v in row.items()}
            out.append(DiagnosticsRecord(**vals))
    return out
