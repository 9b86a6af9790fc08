"""Parameter/state types and exact vector fields for SIS, A-SIS and A-SIR.

Validating entry points (``sis_field``, ``asis_field``, ``asir_field``) check
their inputs against the state box inflated by ``STATE_TOL``. The ``*_rhs``
builders return unchecked closures on numpy arrays for use by the integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

STATE_TOL = 1e-9

Field = Callable[[np.ndarray], np.ndarray]


class StateError(ValueError):
    """State lies outside its admissible box by more than ``STATE_TOL``."""


def _check_rate(name: str, value: float, *, strict: bool) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    if strict and value <= 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")
    if not strict and value < 0:
        raise ValueError(f"{name} must be >= 0, got {value!r}")
    return value


@dataclass(frozen=True)
class SisParams:
    beta: float
    alpha: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta", _check_rate("beta", self.beta, strict=False))
        object.__setattr__(self, "alpha", _check_rate("alpha", self.alpha, strict=True))


@dataclass(frozen=True)
class AsisParams:
    """Rates of the A-SIS model plus the active-defender fraction ``x_a``.

    ``beta`` and ``beta_a`` may be zero so that the degenerate reductions
    (no infection, no active cleanup) can be exercised.
    """

    beta: float
    beta_a: float
    alpha: float
    x_a: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta", _check_rate("beta", self.beta, strict=False))
        object.__setattr__(self, "beta_a", _check_rate("beta_a", self.beta_a, strict=False))
        object.__setattr__(self, "alpha", _check_rate("alpha", self.alpha, strict=True))
        x_a = float(self.x_a)
        if not 0.0 <= x_a <= 1.0:
            raise ValueError(f"x_a must lie in [0, 1], got {x_a!r}")
        object.__setattr__(self, "x_a", x_a)

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.zeros(2), np.array([self.x_a, 1.0 - self.x_a])


@dataclass(frozen=True)
class AsirParams:
    beta: float
    beta_a: float
    alpha: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta", _check_rate("beta", self.beta, strict=False))
        object.__setattr__(self, "beta_a", _check_rate("beta_a", self.beta_a, strict=False))
        object.__setattr__(self, "alpha", _check_rate("alpha", self.alpha, strict=True))

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.zeros(5), np.ones(5)


class AsisState(NamedTuple):
    i_a: float
    i_r: float

    @property
    def infected(self) -> float:
        return self.i_a + self.i_r


class AsirState(NamedTuple):
    s_a: float
    s_r: float
    i_a: float
    i_r: float
    r: float = 0.0

    @property
    def infected(self) -> float:
        return self.i_a + self.i_r

    @classmethod
    def from_initial(
        cls, s_a0: float, i_0: float, i_a0: float | None = None
    ) -> "AsirState":
        """Start with no recovered nodes; infection split proportionally by default."""
        s_0 = 1.0 - i_0
        if s_a0 < -STATE_TOL or s_a0 > s_0 + STATE_TOL:
            raise StateError(f"s_a0={s_a0} must lie in [0, 1 - i_0]")
        if i_a0 is None:
            i_a0 = i_0 * s_a0 / s_0 if s_0 > 0 else 0.0
        return cls(s_a0, s_0 - s_a0, i_a0, i_0 - i_a0, 0.0)


def check_box(
    values: Sequence[float], lower: Sequence[float], upper: Sequence[float], names: Sequence[str]
) -> None:
    for v, lo, hi, name in zip(values, lower, upper, names):
        if not (lo - STATE_TOL <= v <= hi + STATE_TOL):
            raise StateError(f"{name}={v!r} outside [{lo}, {hi}]")


def check_asis_state(p: AsisParams, s: Sequence[float]) -> AsisState:
    st = AsisState(*map(float, s))
    check_box(st, (0.0, 0.0), (p.x_a, 1.0 - p.x_a), ("i_a", "i_r"))
    return st


def check_asir_state(s: Sequence[float]) -> AsirState:
    st = AsirState(*map(float, s))
    check_box(st, (0.0,) * 5, (1.0,) * 5, AsirState._fields)
    total = math.fsum(st)
    if abs(total - 1.0) > STATE_TOL:
        raise StateError(f"A-SIR compartments sum to {total!r}, expected 1")
    return st


# Vector fields. The raw helpers are pure arithmetic so they broadcast over
# numpy grids as well as scalars.


def _sis(beta, alpha, i):
    return beta * i * (1.0 - i) - alpha * i


def _asis(beta, beta_a, alpha, x_a, i_a, i_r):
    i = i_a + i_r
    s_a = x_a - i_a
    s_r = 1.0 - x_a - i_r
    f_a = beta * s_a * i - beta_a * s_a * i_a - alpha * i_a
    f_r = beta * s_r * i - beta_a * s_a * i_r - alpha * i_r
    return f_a, f_r


def _asir(beta, beta_a, alpha, s_a, s_r, i_a, i_r):
    i = i_a + i_r
    inf_a = beta * s_a * i
    inf_r = beta * s_r * i
    out_a = beta_a * s_a * i_a + alpha * i_a
    out_r = beta_a * s_a * i_r + alpha * i_r
    return -inf_a, -inf_r, inf_a - out_a, inf_r - out_r, out_a + out_r


def sis_field(p: SisParams, i: float) -> float:
    """di/dt = beta*i*(1-i) - alpha*i."""
    i = float(i)
    check_box((i,), (0.0,), (1.0,), ("i",))
    return _sis(p.beta, p.alpha, i)


def asis_field(p: AsisParams, s: Sequence[float]) -> tuple[float, float]:
    st = check_asis_state(p, s)
    return _asis(p.beta, p.beta_a, p.alpha, p.x_a, st.i_a, st.i_r)


def asir_field(p: AsirParams, s: Sequence[float]) -> tuple[float, float, float, float, float]:
    """Derivatives of (s_a, s_r, i_a, i_r, r); every outflow is booked as an inflow."""
    st = check_asir_state(s)
    return _asir(p.beta, p.beta_a, p.alpha, st.s_a, st.s_r, st.i_a, st.i_r)


def sis_rhs(p: SisParams) -> Field:
    beta, alpha = p.beta, p.alpha

    def rhs(y: np.ndarray) -> np.ndarray:
        return np.array([_sis(beta, alpha, y[0])])

    return rhs


def asis_rhs(p: AsisParams) -> Field:
    beta, beta_a, alpha, x_a = p.beta, p.beta_a, p.alpha, p.x_a

    def rhs(y: np.ndarray) -> np.ndarray:
        return np.array(_asis(beta, beta_a, alpha, x_a, y[0], y[1]))

    return rhs


def asir_rhs(p: AsirParams) -> Field:
    beta, beta_a, alpha = p.beta, p.beta_a, p.alpha

    def rhs(y: np.ndarray) -> np.ndarray:
        return np.array(_asir(beta, beta_a, alpha, y[0], y[1], y[2], y[3]))

    return rhs


def asis_infected(y: np.ndarray) -> float:
    return float(y[0] + y[1])


def asir_infected(y: np.ndarray) -> float:
    return float(y[2] + y[3])
