"""Run configuration shared by the command-line front end and config files."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Any

from .bell import DEFAULT_GRID_STEP, DEFAULT_REFINE_TOL, ExactN, FractionThreshold, Window
from .errors import MultiBellError
from .loss import LossChannel
from .sources import DEFAULT_EPS, IdealSpin, Qiopa, VacuumPDC, nearest_flux_integer

SOURCES = ("spin", "vacuum", "qiopa")
RULES = ("fraction", "exact-n", "window")
OBJECTIVES = ("strong", "weak")
WINDOW_FORMS = ("text", "caption")


class ConfigError(MultiBellError, ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class RunConfig:
    source: str = "spin"
    n: int | None = None
    r: float | None = None
    rule: str = "fraction"
    f: float = 1.0
    xm: int | None = None
    delta: int = 0
    delta_max: int | None = None
    t: float = 1.0
    t_min: float | None = None
    t_max: float | None = None
    t_steps: int | None = None
    psi: str = "optimize"
    objective: str = "strong"
    window_form: str = "text"
    eps: float = DEFAULT_EPS
    grid_step: float = DEFAULT_GRID_STEP
    refine_tol: float = DEFAULT_REFINE_TOL
    out: str | None = None

    # ------------------------------------------------------------------
    # serialisation

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def emit(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(unknown[0], "unknown configuration field")
        values = {}
        for name, value in data.items():
            values[name] = _coerce(name, value)
        return cls(**values).validated()

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config", "expected a JSON object")
        return cls.from_dict(data)

    def updated(self, **changes) -> "RunConfig":
        return replace(self, **{k: _coerce(k, v) for k, v in changes.items()}).validated()

    # ------------------------------------------------------------------
    # validation and model construction

    def validated(self) -> "RunConfig":
        _choice("source", self.source, SOURCES)
        _choice("rule", self.rule, RULES)
        _choice("objective", self.objective, OBJECTIVES)
        _choice("window_form", self.window_form, WINDOW_FORMS)
        if self.source == "spin":
            if self.n is None:
                raise ConfigError("n", "the spin source needs --n")
        elif self.r is None:
            raise ConfigError("r", f"the {self.source} source needs --r")
        if self.n is not None and self.n < 0:
            raise ConfigError("n", "must be >= 0")
        if self.r is not None:
            if not (math.isfinite(self.r) and self.r >= 0):
                raise ConfigError("r", "must be finite and >= 0")
            if self.source == "qiopa" and self.r == 0:
                raise ConfigError("r", "the qiopa source needs r > 0")
        if not 0.0 <= self.f <= 1.0:
            raise ConfigError("f", "must lie in [0, 1]")
        if self.rule == "window":
            if self.xm is None and self.r is None:
                raise ConfigError("xm", "window rule needs --xm or a gain --r")
            if self.xm is not None and self.xm < 1:
                raise ConfigError("xm", "must be >= 1")
        if self.delta < 0:
            raise ConfigError("delta", "must be >= 0")
        if self.delta_max is not None and self.delta_max < 0:
            raise ConfigError("delta_max", "must be >= 0")
        for name in ("t", "t_min", "t_max"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ConfigError(name, "transmission must lie in [0, 1]")
        if self.t_steps is not None and self.t_steps < 1:
            raise ConfigError("t_steps", "must be >= 1")
        if self.psi != "optimize":
            try:
                value = float(self.psi)
            except ValueError:
                raise ConfigError("psi", "expected 'optimize' or an angle in radians") from None
            if not math.isfinite(value):
                raise ConfigError("psi", "angle must be finite")
        if not 0 < self.eps < 1:
            raise ConfigError("eps", "must lie in (0, 1)")
        if not self.grid_step > 0:
            raise ConfigError("grid_step", "must be positive")
        if not self.refine_tol > 0:
            raise ConfigError("refine_tol", "must be positive")
        return self

    def source_model(self):
        if self.source == "spin":
            return IdealSpin(self.n)
        if self.source == "vacuum":
            return VacuumPDC(self.r)
        return Qiopa(self.r)

    def window_xm(self) -> int:
        return self.xm if self.xm is not None else nearest_flux_integer(self.r)

    def outcome_rule(self, delta: int | None = None):
        # only subcommands that score outcomes need a rule, so check n here
        if self.rule in ("fraction", "exact-n") and self.n is None:
            raise ConfigError("n", f"rule {self.rule} needs --n")
        if self.rule == "fraction":
            return FractionThreshold(self.f, self.n)
        if self.rule == "exact-n":
            return ExactN(self.n)
        return Window(self.window_xm(), self.delta if delta is None else delta, self.window_form)

    def channel(self, t: float | None = None) -> LossChannel:
        return LossChannel(self.t if t is None else t, self.eps)

    def transmissions(self) -> list[float]:
        if self.t_steps is None:
            return [self.t]
        lo = 0.0 if self.t_min is None else self.t_min
        hi = 1.0 if self.t_max is None else self.t_max
        if self.t_steps == 1:
            return [hi]
        step = (hi - lo) / (self.t_steps - 1)
        return [lo + i * step for i in range(self.t_steps)]

    def fixed_psi(self) -> float | None:
        return None if self.psi == "optimize" else float(self.psi)


_INT_FIELDS = {"n", "xm", "delta", "delta_max", "t_steps"}
_FLOAT_FIELDS = {"r", "f", "t", "t_min", "t_max", "eps", "grid_step", "refine_tol"}


def _coerce(name: str, value):
    if value is None:
        return None
    try:
        if name in _INT_FIELDS:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if name in _FLOAT_FIELDS:
            return float(value)
        if name == "psi":
            return value if value == "optimize" else repr(float(value))
    except (TypeError, ValueError):
        raise ConfigError(name, f"invalid value {value!r}") from None
    return str(value)


def _choice(name: str, value: str, options) -> None:
    if value not in options:
        raise ConfigError(name, f"expected one of {', '.join(options)}, got {value!r}")
