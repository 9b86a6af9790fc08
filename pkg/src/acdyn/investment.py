"""Optimal split of a defence budget between defender coverage and strength.

Spending ``a`` on coverage buys an active fraction ``h(a)`` and spending ``b``
on effectiveness buys a cleanup rate ``g(b)``. The long-run infected fraction
is minimized subject to ``a + b <= M``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .analysis import limiting_infected

BISECTION_TOL = 1e-12
BISECTION_MAX_ITER = 200
GOLDEN_TOL = 1e-12
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class InvestmentError(RuntimeError):
    """The first-order condition could not be bracketed or solved."""


class ReturnFunctionError(ValueError):
    """A return function fails the concavity/monotonicity audit."""


class Family(str, enum.Enum):
    GENERAL_D = "GENERAL_D"
    SATURATING = "SATURATING"


class SolutionCase(str, enum.Enum):
    INTERIOR_FOC = "INTERIOR_FOC"
    SATURATION = "SATURATION"
    ERADICATION = "ERADICATION"


@dataclass(frozen=True)
class ReturnFunction:
    """Concave return on investment.

    For ``SATURATING`` functions ``value``/``derivative`` describe the raw
    curve and the function itself is ``min(value(x), 1)``, saturating at
    ``saturation`` (``inf`` if never reached).
    """

    value: Callable[[float], float]
    derivative: Callable[[float], float]
    family: Family = Family.GENERAL_D
    saturation: float = math.inf
    name: str = "custom"

    def __call__(self, x: float) -> float:
        v = self.value(x)
        return min(v, 1.0) if self.family is Family.SATURATING else v

    def slope(self, x: float) -> float:
        """Left derivative; zero beyond the saturation point."""
        if self.family is Family.SATURATING and x > self.saturation:
            return 0.0
        return self.derivative(x)

    def audit(self, upto: float, n: int = 1000) -> None:
        """Sample ``[0, upto]`` and check value(0)=0, growth and concavity."""
        if abs(self.value(0.0)) > 1e-12:
            raise ReturnFunctionError(f"{self.name}: value(0) = {self.value(0.0)} != 0")
        xs = np.linspace(0.0, upto, n)
        if self.family is Family.SATURATING and math.isfinite(self.saturation):
            xs = xs[xs <= self.saturation]
        vals = np.array([self.value(x) for x in xs])
        ders = np.array([self.derivative(x) for x in xs])
        if not np.all(np.isfinite(vals)) or not np.all(np.isfinite(ders)):
            raise ReturnFunctionError(f"{self.name}: non-finite values on [0, {upto}]")
        if np.any(np.diff(vals) <= 0):
            raise ReturnFunctionError(f"{self.name}: not strictly increasing on [0, {upto}]")
        if np.any(ders <= 0):
            raise ReturnFunctionError(f"{self.name}: derivative not positive on [0, {upto}]")
        if np.any(np.diff(ders) > 1e-12 * np.maximum(1.0, np.abs(ders[:-1]))):
            raise ReturnFunctionError(f"{self.name}: derivative increases (not concave)")


def saturation_point(value: Callable[[float], float], cap: float = 1e6) -> float:
    """Smallest ``a`` with ``value(a) = 1`` by bisection; ``inf`` if not reached by ``cap``."""
    if value(cap) < 1.0:
        return math.inf
    lo, hi = 0.0, cap
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if value(mid) >= 1.0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= BISECTION_TOL * max(1.0, hi):
            break
    return hi


def saturating(value, derivative, saturation: float | None = None, name: str = "custom"):
    t = saturation_point(value) if saturation is None else saturation
    return ReturnFunction(value, derivative, Family.SATURATING, t, name)


def linear_h(c1: float) -> ReturnFunction:
    return ReturnFunction(
        lambda a: c1 * a, lambda a: c1, Family.SATURATING, 1.0 / c1, f"linear_h(c1={c1})"
    )


def linear_g(c2: float) -> ReturnFunction:
    return ReturnFunction(lambda b: c2 * b, lambda b: c2, name=f"linear_g(c2={c2})")


def hyperbolic_h(c1: float) -> ReturnFunction:
    return ReturnFunction(
        lambda a: a / (a + c1),
        lambda a: c1 / (a + c1) ** 2,
        Family.SATURATING,
        math.inf,
        f"hyperbolic_h(c1={c1})",
    )


def hyperbolic_g(c2: float, beta_bar: float) -> ReturnFunction:
    return ReturnFunction(
        lambda b: beta_bar * b / (b + c2),
        lambda b: beta_bar * c2 / (b + c2) ** 2,
        name=f"hyperbolic_g(c2={c2}, beta_bar={beta_bar})",
    )


FAMILIES = {
    "linear": (("c_1", "c_2"), lambda c_1, c_2: (linear_h(c_1), linear_g(c_2))),
    "hyperbolic": (
        ("c_1", "c_2", "beta_bar"),
        lambda c_1, c_2, beta_bar: (hyperbolic_h(c_1), hyperbolic_g(c_2, beta_bar)),
    ),
}


def build_family(name: str, **constants: float) -> tuple[ReturnFunction, ReturnFunction]:
    """``(h, g)`` for a built-in family; constants must all be positive."""
    if name not in FAMILIES:
        raise KeyError(f"unknown family {name!r}; choose from {sorted(FAMILIES)}")
    keys, make = FAMILIES[name]
    missing = [k for k in keys if k not in constants]
    if missing:
        raise KeyError(f"family {name!r} needs constants {missing}")
    for k in keys:
        if not constants[k] > 0:
            raise ValueError(f"{k} must be > 0")
    return make(**{k: float(constants[k]) for k in keys})


@dataclass(frozen=True)
class InvestmentProblem:
    h: ReturnFunction
    g: ReturnFunction
    M: float
    beta: float
    alpha: float
    audit: bool = True

    def __post_init__(self) -> None:
        if not self.M > 0:
            raise ValueError(f"budget M must be > 0, got {self.M}")
        if not self.alpha > 0 or not self.beta > self.alpha:
            raise ValueError("need beta > alpha > 0 (otherwise zero investment already eradicates)")
        if self.h.family is not Family.SATURATING:
            raise ValueError("h must be a SATURATING return function")
        if self.audit:
            self.h.audit(self.M)
            self.g.audit(self.M)

    def limiting(self, a: float) -> float:
        """Limiting infected fraction when ``a`` goes to coverage and ``M - a`` to strength."""
        return limiting_infected(self.beta, self.alpha, self.h(a), self.g(self.M - a))


@dataclass(frozen=True)
class InvestmentSolution:
    a_star: float
    b_star: float
    foc_residual: float
    predicted_L: float
    eradication_feasible: bool
    case: SolutionCase


class EradicationCheck(NamedTuple):
    feasible: bool
    best_product: float
    argmax: float


def _residual(prob: InvestmentProblem, a: float) -> float:
    b = prob.M - a
    return prob.g(b) * prob.h.slope(a) - prob.g.slope(b) * prob.h(a)


def foc_residual(prob: InvestmentProblem, a: float) -> float:
    """g(M-a) h'(a) - g'(M-a) h(a); strictly decreasing below the saturation point."""
    if not 0.0 < a < prob.M:
        raise ValueError(f"a must lie in (0, M={prob.M}), got {a}")
    return _residual(prob, a)


def bisect_decreasing(fn: Callable[[float], float], lo: float, hi: float) -> float:
    """Root of a decreasing function on ``[lo, hi]``."""
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if not (f_lo > 0 > f_hi):
        raise InvestmentError(
            f"residual does not bracket a root on [{lo}, {hi}] (signs {f_lo:+.3g}, {f_hi:+.3g});"
            " check the return functions against the concavity assumptions"
        )
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        if f_mid == 0:
            return mid
        if f_mid > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= BISECTION_TOL:
            return 0.5 * (lo + hi)
    raise InvestmentError("bisection did not reach tolerance within the iteration cap")


def golden_max(fn: Callable[[float], float], lo: float, hi: float, tol: float = GOLDEN_TOL) -> float:
    """Argmax of a unimodal function on ``[lo, hi]`` by golden-section search."""
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = fn(c), fn(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = fn(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = fn(d)
    return 0.5 * (lo + hi)


def eradication_check(prob: InvestmentProblem) -> EradicationCheck:
    """Best product g(M-a) h(a) over the budget line, found on its (concave) logarithm."""

    def log_product(a: float) -> float:
        p = prob.g(prob.M - a) * prob.h(a)
        return math.log(p) if p > 0 else -math.inf

    a = golden_max(log_product, 0.0, prob.M)
    best = prob.g(prob.M - a) * prob.h(a)
    return EradicationCheck(best >= prob.beta - prob.alpha, best, a)


def solve(prob: InvestmentProblem) -> InvestmentSolution:
    """Unique minimizer of the limiting infected fraction over the budget line."""
    M, h, g = prob.M, prob.h, prob.g
    erad = eradication_check(prob)
    if erad.feasible:
        a = erad.argmax
        return InvestmentSolution(
            a, M - a, _residual(prob, a), 0.0, True, SolutionCase.ERADICATION
        )

    t = h.saturation
    if t >= M:
        a = bisect_decreasing(lambda x: _residual(prob, x), 0.0, M)
        case = SolutionCase.INTERIOR_FOC
    elif g.slope(M - t) >= g(M - t) * h.derivative(t):
        a = bisect_decreasing(lambda x: _residual(prob, x), 0.0, t)
        case = SolutionCase.INTERIOR_FOC
    else:
        a = t
        case = SolutionCase.SATURATION
    return InvestmentSolution(a, M - a, _residual(prob, a), prob.limiting(a), False, case)


def solve_by_golden(prob: InvestmentProblem, tol: float = GOLDEN_TOL) -> float:
    """Independent route: golden-section minimization of L along the budget line.

    L is very flat at its minimum when it sits near 1, so a value-comparing
    search in double precision only resolves the argmin to about 1e-6. The
    search therefore runs in extended precision (``np.longdouble``).
    """
    lo, hi = np.longdouble(0.0), np.longdouble(prob.M)
    return float(golden_max(lambda a: -prob.limiting(a), lo, hi, tol))


def hyperbolic_closed_form(c1: float, c2: float, M: float) -> float:
    """Interior optimum for the hyperbolic family (independent of beta_bar)."""
    if c1 == c2:
        return M / 2.0
    k = c1 * (M + c2) / (c1 - c2)
    return k * (1.0 - math.sqrt(1.0 - (c1 - c2) * M / (c1 * (M + c2))))
