"""Explicit time integration of the magnetic heat flow.

Each sample moves by ``gamma_dot = tau(gamma) - Z(gamma')``. Steps are classical
RK4 with every stage state retracted onto the surface; the dissipation and
flux integrals of the energy identity are accumulated alongside with the same
stage weights.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field, replace
from enum import Enum
from pathlib import Path
from typing import Callable

import numpy as np

from . import _kernels as K
from .analysis import DiagnosticsRecord, diagnostics
from .errors import NumericalBlowup
from .loops import DiscreteLoop, is_contractible
from .surfaces import FieldKind, MagneticField, SurfaceKind, SurfaceModel

CHECKPOINT_FORMAT = "mgflow-checkpoint/1"
_DT_MARGIN = 1.0001


@dataclass(frozen=True)
class FlowState:
    loop: DiscreteLoop
    time: float = 0.0
    dissipation: float = 0.0
    magnetic_flux_term: float = 0.0
    steps: int = 0

    @property
    def flux_term(self) -> float:
        return self.magnetic_flux_term


class DtPolicy(str, Enum):
    FIXED_CFL = "FixedCFL"
    EXPLICIT = "Explicit"


@dataclass(frozen=True)
class FlowConfig:
    dt_policy: DtPolicy = DtPolicy.FIXED_CFL
    safety: float = 0.9
    dt: float | None = None
    t_max: float = 50.0
    tol_residual: float = 1e-3
    tol_point: float = 1e-3
    divergence_threshold: float = 1e6
    record_stride: int = 100

    def __post_init__(self):
        object.__setattr__(self, "dt_policy", DtPolicy(self.dt_policy))
        if not 0 < self.safety <= 1:
            raise ValueError("safety must lie in (0, 1]")
        if self.dt_policy is DtPolicy.EXPLICIT and not (self.dt and self.dt > 0):
            raise ValueError("an explicit dt policy needs dt > 0")
        for name in ("t_max", "tol_residual", "tol_point", "divergence_threshold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")

    def resolve_dt(self, loop: DiscreteLoop) -> float:
        if self.dt_policy is DtPolicy.EXPLICIT:
            return float(self.dt)
        return stable_dt(loop, self.safety)


class Classification(str, Enum):
    CONVERGED_NONTRIVIAL = "ConvergedNontrivial"
    CONVERGED_POINT = "ConvergedPoint"
    DIVERGED = "Diverged"
    TIMEOUT = "Timeout"


@dataclass
class FlowOutcome:
    classification: Classification
    final: FlowState
    series: list[DiagnosticsRecord]
    dt: float
    blowup: bool = False
    note: str = ""

    @property
    def converged(self) -> bool:
        return self.classification in (
            Classification.CONVERGED_NONTRIVIAL,
            Classification.CONVERGED_POINT,
        )


def stable_dt(loop: DiscreteLoop, safety: float = 1.0) -> float:
    """Parabolic step limit ``safety * h^2 / 4``."""
    return safety * loop.h * loop.h / 4.0


_STATUS_TEXT = {
    K.STATUS_RETRACTION: "retraction failed",
    K.STATUS_NONFINITE: "non-finite state",
    K.STATUS_SPEED_LIMIT: "speed limit reached",
}


def _advance(state: FlowState, field: MagneticField, dt: float, nsteps: int, speed2_limit=math.inf):
    loop = state.loop
    Y = np.array(loop.samples, order="C")
    acc = np.array([state.dissipation, state.magnetic_flux_term])
    status, done = K.rk4_advance(
        loop.surface.code,
        field.code,
        field.B0,
        field.epsilon,
        Y,
        loop.deck,
        loop.h,
        dt,
        int(nsteps),
        acc,
        speed2_limit,
    )
    if done == 0:
        new = state
    else:
        steps = state.steps + done
        new = FlowState(loop.with_samples(Y), steps * dt, float(acc[0]), float(acc[1]), steps)
    return new, status


def evolve(state: FlowState, field: MagneticField, dt: float, nsteps: int) -> FlowState:
    """Take ``nsteps`` RK4 steps; raises :class:`NumericalBlowup` on failure."""
    field.check_surface(state.loop.surface)
    if dt > stable_dt(state.loop) * _DT_MARGIN:
        raise ValueError(f"dt={dt:g} exceeds the stable step {stable_dt(state.loop):g}")
    new, status = _advance(state, field, dt, nsteps)
    if status != K.STATUS_OK:
        raise NumericalBlowup(_STATUS_TEXT[status], last_state=new)
    return new


def step(state: FlowState, field: MagneticField, dt: float) -> FlowState:
    return evolve(state, field, dt, 1)


def rescale(loop: DiscreteLoop, field: MagneticField, lam: float):
    """Reindex onto a circle of length L/lam and multiply the field by lam."""
    if not lam > 0:
        raise ValueError("rescaling factor must be positive")
    if lam == 1:
        return loop, field
    return loop.with_circle_length(loop.circle_length / lam), field.scaled(lam)


def _classify(rec: DiagnosticsRecord, config: FlowConfig, t_end: float):
    if not np.isfinite(rec.speed_max) or rec.speed_max**2 >= config.divergence_threshold:
        return Classification.DIVERGED
    if rec.diameter <= config.tol_point:
        return Classification.CONVERGED_POINT
    scale = min(1.0, math.sqrt(2.0 * rec.kinetic))
    if rec.residual_l2 <= config.tol_residual * scale:
        return Classification.CONVERGED_NONTRIVIAL
    if rec.time >= t_end:
        return Classification.TIMEOUT
    return None


def run(
    initial: DiscreteLoop,
    field: MagneticField,
    config: FlowConfig = FlowConfig(),
    *,
    start: FlowState | None = None,
    series: list[DiagnosticsRecord] | None = None,
    on_record: Callable[[FlowState, DiagnosticsRecord], None] | None = None,
) -> FlowOutcome:
    """Integrate until convergence, divergence or ``t_max``.

    ``start``/``series`` resume an earlier run from a record boundary; the
    result is then identical to the uninterrupted run.
    """
    field.check_surface(initial.surface)
    dt = config.resolve_dt(initial)
    if dt > stable_dt(initial) * _DT_MARGIN:
        raise ValueError(f"dt={dt:g} exceeds the stable step {stable_dt(initial):g}")
    total_steps = int(math.ceil(config.t_max / dt - 1e-9))
    t_end = total_steps * dt
    stride = int(config.record_stride)

    series = list(series or [])
    state = start if start is not None else FlowState(initial)
    if start is None or not series:
        rec = diagnostics(state, field)
        series.append(rec)
        if on_record:
            on_record(state, rec)
    else:
        rec = series[-1]

    blowup = False
    note = ""
    verdict = _classify(rec, config, t_end)
    while verdict is None:
        target = min((state.steps // stride + 1) * stride, total_steps)
        state, status = _advance(
            state, field, dt, target - state.steps, config.divergence_threshold
        )
        rec = diagnostics(state, field)
        series.append(rec)
        if on_record:
            on_record(state, rec)
        if status != K.STATUS_OK:
            blowup = status != K.STATUS_SPEED_LIMIT
            note = _STATUS_TEXT[status]
            verdict = Classification.DIVERGED
            break
        verdict = _classify(rec, config, t_end)

    if verdict is Classification.TIMEOUT and not is_contractible(state.loop):
        note = "non-contractible loop without convergence (drifting along the torus)"
    return FlowOutcome(verdict, state, series, dt, blowup, note)


def trajectory(initial: DiscreteLoop, field: MagneticField, dt: float, record_steps):
    """States after each step count in the increasing sequence ``record_steps``."""
    state = FlowState(initial)
    out = []
    for target in record_steps:
        state = evolve(state, field, dt, int(target) - state.steps)
        out.append(state)
    return out


# checkpoints


def _field_dict(field: MagneticField):
    return {"kind": field.kind.value, "B0": field.B0, "epsilon": field.epsilon}


def _surface_dict(surface: SurfaceModel):
    return {"kind": surface.kind.value, "periods": list(surface.torus_periods)}


def checkpoint_dict(state: FlowState, field: MagneticField, series=None) -> dict:
    loop = state.loop
    return {
        "format": CHECKPOINT_FORMAT,
        "surface": _surface_dict(loop.surface),
        "field": _field_dict(field),
        "n": loop.n,
        "circle_length": loop.circle_length,
        "deck": loop.deck.tolist(),
        "samples": loop.samples.tolist(),
        "time": state.time,
        "steps": state.steps,
        "dissipation": state.dissipation,
        "magnetic_flux_term": state.magnetic_flux_term,
        "series": [r.as_dict() for r in (series or [])],
    }


def save_checkpoint(path, state: FlowState, field: MagneticField, series=None):
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(checkpoint_dict(state, field, series)))
    tmp.replace(path)


def load_checkpoint(path):
    """Returns (state, field, series)."""
    data = json.loads(Path(path).read_text())
    if data.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format {data.get('format')!r}")
    surface = SurfaceModel(data["surface"]["kind"], tuple(data["surface"]["periods"]))
    f = data["field"]
    field = MagneticField(FieldKind(f["kind"]), B0=f["B0"], epsilon=f["epsilon"])
    loop = DiscreteLoop(surface, np.array(data["samples"]), data["circle_length"], data["deck"])
    if loop.n != data["n"]:
        raise ValueError("checkpoint sample count mismatch")
    state = FlowState(
        loop, data["time"], data["dissipation"], data["magnetic_flux_term"], data["steps"]
    )
    series = [DiagnosticsRecord.from_dict(r) for r in data.get("series", [])]
    return state, field, series
