"""JSON scenario documents shared by every CLI subcommand.

Top-level keys: ``model``, ``params``, ``initial``, ``integration``,
``analysis``, ``investment``, ``stochastic``, ``sweep``. Every problem is
reported as :class:`ConfigError` with a dotted path to the offending field.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .integrator import IntegrationOptions
from .investment import FAMILIES, InvestmentProblem, build_family
from .models import AsirParams, AsirState, AsisParams, SisParams

MODELS = ("sis", "asis", "asir")
SWEEP_PARAMS = ("beta", "beta_a", "alpha", "x_a", "M", "s_a0")
SWEEP_OUTPUTS = ("lambda_plus", "regime", "f", "L", "a_star", "b_star", "i_pk")
TOP_LEVEL = ("model", "params", "initial", "integration", "analysis", "investment", "stochastic", "sweep")


class ConfigError(ValueError):
    pass


def _get(block: dict, key: str, where: str, *, default: Any = ..., kind=float):
    if key not in block:
        if default is ...:
            raise ConfigError(f"{where}.{key}: required field missing")
        return default
    value = block[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(f"{where}.{key}: expected a finite number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}.{key}: expected an integer, got {value!r}")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}.{key}: expected true/false, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}.{key}: expected a string, got {value!r}")
        return value
    raise TypeError(kind)


def _block(doc: dict, key: str, *, required: bool = False) -> Optional[dict]:
    if key not in doc or doc[key] is None:
        if required:
            raise ConfigError(f"{key}: required block missing")
        return None
    if not isinstance(doc[key], dict):
        raise ConfigError(f"{key}: expected an object")
    return doc[key]


def _unknown(block: dict, allowed, where: str) -> None:
    extra = sorted(set(block) - set(allowed))
    if extra:
        raise ConfigError(f"{where}.{extra[0]}: unknown field")


@dataclass(frozen=True)
class InvestmentSpec:
    family: str
    constants: dict
    M: float

    def problem(self, beta: float, alpha: float, M: Optional[float] = None) -> InvestmentProblem:
        h, g = build_family(self.family, **self.constants)
        return InvestmentProblem(h, g, self.M if M is None else M, beta, alpha)


@dataclass(frozen=True)
class StochasticSpec:
    N: int
    replicates: int
    seed: int
    t_end: float
    sample_interval: float
    initial_counts: Optional[tuple[int, int]] = None


@dataclass(frozen=True)
class SweepSpec:
    param: str
    lo: float
    hi: float
    count: int
    outputs: tuple[str, ...]

    def values(self) -> list[float]:
        step = (self.hi - self.lo) / (self.count - 1)
        return [self.lo + k * step for k in range(self.count - 1)] + [self.hi]


@dataclass(frozen=True)
class Scenario:
    model: str
    params: Any
    initial: tuple
    integration: IntegrationOptions
    analysis: dict = field(default_factory=dict)
    investment: Optional[InvestmentSpec] = None
    stochastic: Optional[StochasticSpec] = None
    sweep: Optional[SweepSpec] = None
    raw: dict = field(default_factory=dict, compare=False, repr=False)


def _params(model: str, block: dict):
    where = "params"
    try:
        if model == "sis":
            _unknown(block, ("beta", "alpha"), where)
            return SisParams(_get(block, "beta", where), _get(block, "alpha", where))
        if model == "asis":
            _unknown(block, ("beta", "beta_a", "alpha", "x_a"), where)
            vals = [_get(block, k, where) for k in ("beta", "beta_a", "alpha", "x_a")]
            return AsisParams(*vals)
        _unknown(block, ("beta", "beta_a", "alpha"), where)
        return AsirParams(*[_get(block, k, where) for k in ("beta", "beta_a", "alpha")])
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        name = str(exc).split()[0]
        raise ConfigError(f"{where}.{name}: {exc}") from None


def _initial(model: str, params, block: Optional[dict]) -> tuple:
    where = "initial"
    if block is None:
        raise ConfigError("initial: required block missing")
    if model == "sis":
        _unknown(block, ("i",), where)
        i = _get(block, "i", where)
        if not 0 <= i <= 1:
            raise ConfigError("initial.i: must lie in [0, 1]")
        return (i,)
    if model == "asis":
        _unknown(block, ("i_a", "i_r"), where)
        i_a, i_r = _get(block, "i_a", where), _get(block, "i_r", where)
        if not 0 <= i_a <= params.x_a:
            raise ConfigError(f"initial.i_a: must lie in [0, x_a={params.x_a}]")
        if not 0 <= i_r <= 1 - params.x_a:
            raise ConfigError(f"initial.i_r: must lie in [0, 1 - x_a={1 - params.x_a}]")
        return (i_a, i_r)
    _unknown(block, ("s_a0", "i_0", "i_a0"), where)
    s_a0, i_0 = _get(block, "s_a0", where), _get(block, "i_0", where)
    i_a0 = _get(block, "i_a0", where, default=None)
    if not 0 < i_0 < 1:
        raise ConfigError("initial.i_0: must lie in (0, 1)")
    if not 0 <= s_a0 <= 1 - i_0:
        raise ConfigError("initial.s_a0: must lie in [0, 1 - i_0]")
    if i_a0 is not None and not 0 <= i_a0 <= i_0:
        raise ConfigError("initial.i_a0: must lie in [0, i_0]")
    return tuple(AsirState.from_initial(s_a0, i_0, i_a0))


def _integration(block: Optional[dict]) -> IntegrationOptions:
    where = "integration"
    if block is None:
        raise ConfigError("integration: required block missing")
    keys = ("t_end", "rel_tol", "abs_tol", "sample_interval", "equilibrium_eps", "method")
    _unknown(block, keys, where)
    kw: dict[str, Any] = {"t_end": _get(block, "t_end", where)}
    for k in keys[1:5]:
        if k in block:
            kw[k] = _get(block, k, where)
    if "method" in block:
        kw["method"] = _get(block, "method", where, kind=str)
    try:
        return IntegrationOptions(**kw)
    except ValueError as exc:
        msg = str(exc)
        name = next((k for k in keys if msg.startswith(k)), "method")
        raise ConfigError(f"{where}.{name}: {msg}") from None


def _investment(block: dict) -> InvestmentSpec:
    where = "investment"
    family = _get(block, "family", where, kind=str)
    if family not in FAMILIES:
        raise ConfigError(f"{where}.family: unknown family {family!r}; choose from {sorted(FAMILIES)}")
    keys = FAMILIES[family][0]
    _unknown(block, ("family", "M") + keys, where)
    consts = {}
    for k in keys:
        consts[k] = _get(block, k, where)
        if not consts[k] > 0:
            raise ConfigError(f"{where}.{k}: must be > 0")
    M = _get(block, "M", where)
    if not M > 0:
        raise ConfigError(f"{where}.M: must be > 0")
    return InvestmentSpec(family, consts, M)


def _stochastic(block: dict) -> StochasticSpec:
    where = "stochastic"
    _unknown(block, ("N", "replicates", "seed", "t_end", "sample_interval", "initial_counts"), where)
    N = _get(block, "N", where, kind=int)
    if N < 1:
        raise ConfigError(f"{where}.N: must be a positive integer")
    reps = _get(block, "replicates", where, default=1, kind=int)
    if reps < 1:
        raise ConfigError(f"{where}.replicates: must be >= 1")
    seed = _get(block, "seed", where, default=0, kind=int)
    if seed < 0:
        raise ConfigError(f"{where}.seed: must be >= 0")
    t_end = _get(block, "t_end", where)
    if not t_end > 0:
        raise ConfigError(f"{where}.t_end: must be > 0")
    dt = _get(block, "sample_interval", where, default=min(1.0, t_end))
    if not 0 < dt <= t_end:
        raise ConfigError(f"{where}.sample_interval: must lie in (0, t_end]")
    counts = block.get("initial_counts")
    if counts is not None:
        if (
            not isinstance(counts, list)
            or len(counts) != 2
            or not all(isinstance(c, int) and not isinstance(c, bool) and c >= 0 for c in counts)
        ):
            raise ConfigError(f"{where}.initial_counts: expected [n_ia, n_ir] non-negative integers")
        counts = tuple(counts)
    return StochasticSpec(N, reps, seed, t_end, dt, counts)


def _sweep(block: dict, model: str) -> SweepSpec:
    where = "sweep"
    _unknown(block, ("param", "min", "max", "count", "outputs"), where)
    param = _get(block, "param", where, kind=str)
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"{where}.param: must be one of {list(SWEEP_PARAMS)}")
    lo, hi = _get(block, "min", where), _get(block, "max", where)
    count = _get(block, "count", where, kind=int)
    if count < 2:
        raise ConfigError(f"{where}.count: must be >= 2")
    if not lo < hi:
        raise ConfigError(f"{where}.min: must be < max")
    if param == "x_a" and (lo < 0 or hi > 1):
        raise ConfigError(f"{where}.min: x_a grid must lie in [0, 1]")
    if param == "alpha" and lo <= 0:
        raise ConfigError(f"{where}.min: alpha must stay > 0")
    if param in ("beta", "beta_a", "s_a0") and lo < 0:
        raise ConfigError(f"{where}.min: {param} must stay >= 0")
    if param == "M" and lo <= 0:
        raise ConfigError(f"{where}.min: M must stay > 0")
    if param == "x_a" and model != "asis" or param == "s_a0" and model != "asir" or (
        param == "beta_a" and model == "sis"
    ):
        raise ConfigError(f"{where}.param: {param} does not apply to model {model!r}")
    defaults = {
        "sis": ("regime", "L"),
        "asis": ("lambda_plus", "regime", "f", "L"),
        "asir": ("i_pk",),
    }[model]
    outputs = block.get("outputs", list(defaults))
    if not isinstance(outputs, list) or not outputs:
        raise ConfigError(f"{where}.outputs: expected a non-empty list")
    for o in outputs:
        if o not in SWEEP_OUTPUTS:
            raise ConfigError(f"{where}.outputs: unknown output {o!r}")
    return SweepSpec(param, lo, hi, count, tuple(outputs))


def parse_scenario(doc: Any) -> Scenario:
    if not isinstance(doc, dict):
        raise ConfigError("scenario: expected a JSON object at top level")
    _unknown(doc, TOP_LEVEL, "scenario")
    model = _get(doc, "model", "scenario", kind=str)
    if model not in MODELS:
        raise ConfigError(f"model: must be one of {list(MODELS)}, got {model!r}")
    params = _params(model, _block(doc, "params", required=True))
    initial = _initial(model, params, _block(doc, "initial"))
    integration = _integration(_block(doc, "integration"))

    analysis = _block(doc, "analysis") or {}
    _unknown(analysis, ("classify", "lyapunov", "nullclines", "nullcline_points", "grid", "peak"), "analysis")
    for k in ("classify", "lyapunov", "nullclines", "peak"):
        if k in analysis:
            _get(analysis, k, "analysis", kind=bool)
    for k in ("nullcline_points", "grid"):
        if k in analysis and _get(analysis, k, "analysis", kind=int) < 2:
            raise ConfigError(f"analysis.{k}: must be >= 2")

    inv = _block(doc, "investment")
    investment = _investment(inv) if inv is not None else None
    if investment is not None and model == "asir":
        raise ConfigError("investment: only applies to sis/asis models")
    sto = _block(doc, "stochastic")
    stochastic = _stochastic(sto) if sto is not None else None
    if stochastic is not None and model != "asis":
        raise ConfigError("stochastic: only the asis model has a stochastic oracle")
    sw = _block(doc, "sweep")
    sweep = _sweep(sw, model) if sw is not None else None
    if sweep is not None and sweep.param == "M" and investment is None:
        raise ConfigError("sweep.param: sweeping M needs an investment block")
    return Scenario(model, params, initial, integration, analysis, investment, stochastic, sweep, doc)


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"scenario: cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario: malformed JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_scenario(doc)

