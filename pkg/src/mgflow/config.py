"""Scenario files: JSON documents describing one flow run."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import ConfigError, LoopConstructionError
from .flow import DtPolicy, FlowConfig
from .loops import DiscreteLoop, GeneratorKind, LoopGenerator, make_loop
from .surfaces import FieldKind, MagneticField, SurfaceKind, SurfaceModel

TWO_PI = 2 * math.pi


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SurfaceBlock(_Block):
    kind: SurfaceKind
    periods: tuple[float, float] = (TWO_PI, TWO_PI)


class FieldBlock(_Block):
    kind: FieldKind = FieldKind.CONSTANT_STRENGTH
    B0: float = 0.0
    epsilon: float = 0.0


class InitialBlock(_Block):
    kind: GeneratorKind
    k: Optional[int] = None
    a: Optional[float] = None
    b: Optional[float] = None
    center: Optional[tuple[float, float]] = None
    mu: Optional[float] = None
    theta0: Optional[float] = None
    rate: Optional[float] = None
    radius: Optional[float] = None
    samples: Optional[tuple[tuple[float, ...], ...]] = None
    deck: Optional[tuple[float, ...]] = None


class DiscretizationBlock(_Block):
    n: int = Field(256, ge=8)
    circle_length: float = Field(TWO_PI, gt=0)
    dt_policy: DtPolicy = DtPolicy.FIXED_CFL
    safety: float = Field(0.9, gt=0, le=1)
    dt: Optional[float] = Field(None, gt=0)


class RunBlock(_Block):
    t_max: float = Field(50.0, gt=0)
    tol_residual: float = Field(1e-3, gt=0)
    tol_point: float = Field(1e-3, gt=0)
    divergence_threshold: float = Field(1e6, gt=0)
    record_stride: int = Field(100, ge=1)


class OutputBlock(_Block):
    directory: Optional[str] = None
    stride: int = Field(10, ge=1, description="records between loop snapshots")
    formats: tuple[Literal["csv", "json"], ...] = ("csv",)


class ScenarioConfig(_Block):
    name: str = "scenario"
    surface: SurfaceBlock
    field: FieldBlock = FieldBlock()
    initial: InitialBlock
    discretization: DiscretizationBlock = DiscretizationBlock()
    run: RunBlock = RunBlock()
    output: OutputBlock = OutputBlock()

    def to_dict(self) -> dict:
        return self.model_dump(mode="json")

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def surface_model(self) -> SurfaceModel:
        return SurfaceModel(self.surface.kind, self.surface.periods)

    def magnetic_field(self) -> MagneticField:
        f = self.field
        return MagneticField(f.kind, B0=f.B0, epsilon=f.epsilon)

    def generator(self) -> LoopGenerator:
        params = self.initial.model_dump(exclude_none=True, exclude={"kind"})
        return LoopGenerator(self.initial.kind, params)

    def initial_loop(self) -> DiscreteLoop:
        d = self.discretization
        return make_loop(self.generator(), d.n, d.circle_length, self.surface_model())

    def flow_config(self) -> FlowConfig:
        d, r = self.discretization, self.run
        return FlowConfig(
            dt_policy=d.dt_policy,
            safety=d.safety,
            dt=d.dt,
            t_max=r.t_max,
            tol_residual=r.tol_residual,
            tol_point=r.tol_point,
            divergence_threshold=r.divergence_threshold,
            record_stride=r.record_stride,
        )


_REQUIRED = {
    GeneratorKind.FOURIER_MODE: ("k", "a", "b"),
    GeneratorKind.TORUS_GRAPH: ("mu",),
    GeneratorKind.SPHERE_LATITUDE: ("theta0",),
    GeneratorKind.HYPERBOLIC_LATITUDE: ("theta0",),
    GeneratorKind.PLANE_CIRCLE: ("radius",),
    GeneratorKind.EXPLICIT_SAMPLES: ("samples",),
}

_BOUND_WORDS = {
    "greater_than_equal": ("≥", "ge"),
    "greater_than": (">", "gt"),
    "less_than_equal": ("≤", "le"),
}


def _pointer(loc) -> str:
    return "/" + "/".join(str(x) for x in loc)


def _message(err) -> str:
    dotted = ".".join(str(x) for x in err["loc"])
    kind = err["type"]
    if kind in _BOUND_WORDS:
        sym, key = _BOUND_WORDS[kind]
        return f"{dotted} {sym} {err['ctx'][key]}"
    return f"{dotted}: {err['msg']}"


def _semantic_violations(cfg: ScenarioConfig):
    out = []
    if cfg.field.kind is FieldKind.EXACT_POTENTIAL and cfg.surface.kind is not SurfaceKind.FLAT_TORUS:
        out.append(("/field/kind", "exact potential only on FlatTorus"))
    if cfg.discretization.dt_policy is DtPolicy.EXPLICIT and cfg.discretization.dt is None:
        out.append(("/discretization/dt", "explicit dt policy needs discretization.dt"))
    missing = [p for p in _REQUIRED[cfg.initial.kind] if getattr(cfg.initial, p) is None]
    for p in missing:
        out.append((f"/initial/{p}", f"{cfg.initial.kind.value} needs initial.{p}"))
    if min(cfg.surface.periods) <= 0:
        out.append(("/surface/periods", "surface.periods must be positive"))
    if not out:
        try:
            cfg.initial_loop()
        except (LoopConstructionError, ValueError) as exc:
            out.append(("/initial", str(exc)))
    return out


def validate_config(data) -> ScenarioConfig:
    """Validate a decoded JSON document; raises ConfigError listing every violation."""
    try:
        cfg = ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        violations = [(_pointer(e["loc"]), _message(e)) for e in exc.errors()]
        # the cross-block rules can still be checked on the raw document
        if isinstance(data, dict):
            s = (data.get("surface") or {}).get("kind")
            f = (data.get("field") or {}).get("kind")
            if f == FieldKind.EXACT_POTENTIAL.value and s not in (None, SurfaceKind.FLAT_TORUS.value):
                violations.append(("/field/kind", "exact potential only on FlatTorus"))
        raise ConfigError(violations) from None
    violations = _semantic_violations(cfg)
    if violations:
        raise ConfigError(violations)
    return cfg


def parse_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([("", f"cannot read {path}: {exc.strerror or exc}")]) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("", f"malformed JSON at line {exc.lineno}: {exc.msg}")]) from None
    return validate_config(data)


def set_pointer(data: dict, pointer: str, value):
    """Return a copy of ``data`` with the numeric leaf at ``pointer`` replaced.

    Accepts ``/field/B0`` or ``field.B0``. Raises ConfigError if the target
    exists and is not numeric.
    """
    parts = [p for p in pointer.replace(".", "/").split("/") if p]
    if not parts:
        raise ConfigError([(pointer, "empty parameter path")])
    out = json.loads(json.dumps(data))
    node = out
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError([(pointer, "path does not address a config field")])
    leaf = parts[-1]
    current = node.get(leaf)
    if current is not None and (isinstance(current, bool) or not isinstance(current, (int, float))):
        raise ConfigError([(_pointer(parts), "target is not numeric")])
    if isinstance(current, int) and float(value).is_integer():
        value = int(value)
    node[leaf] = value
    return out
