"""Closed-form analysis of the A-SIS and A-SIR models.

Thresholds and eigenvalues at the infection-free equilibrium, the endemic
equilibrium, both nullclines, the Jacobian, the two max-separable Lyapunov
functions together with grid certification, and the A-SIR peak formula.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .models import (
    AsirParams,
    AsisParams,
    SisParams,
    StateError,
    _asis,
    check_asis_state,
)


class Regime(str, enum.Enum):
    IFE_GAS = "IFE_GAS"
    ENDEMIC = "ENDEMIC"


class PeakCase(str, enum.Enum):
    FORMULA = "FORMULA"
    MONOTONE = "MONOTONE"


@dataclass(frozen=True)
class SpectralInfo:
    lambda_plus: float
    lambda_minus: float


@dataclass(frozen=True)
class RegimeReport:
    spectral: SpectralInfo
    regime: Regime
    endemic: Optional[tuple[float, float]]
    f: Optional[float]
    limiting_infected: float


@dataclass(frozen=True)
class RWindow:
    """Admissible Lyapunov weights for the endemic certificate.

    Either a half-open interval ``[lower, upper)`` with
    ``upper = min(inverse_slope_bound, cone_bound)``, or a fixed weight.
    """

    lower: Optional[float] = None
    inverse_slope_bound: Optional[float] = None
    cone_bound: Optional[float] = None
    fixed: Optional[float] = None

    @property
    def upper(self) -> Optional[float]:
        if self.fixed is not None:
            return None
        return min(self.inverse_slope_bound, self.cone_bound)

    @property
    def is_empty(self) -> bool:
        return self.fixed is None and not self.lower < self.upper

    def pick(self) -> float:
        """Fixed weight, or the midpoint of the interval."""
        if self.fixed is not None:
            return self.fixed
        if self.is_empty:
            raise ValueError(f"empty admissible window [{self.lower}, {self.upper})")
        return 0.5 * (self.lower + self.upper)

    def contains(self, R: float) -> bool:
        if self.fixed is not None:
            return R == self.fixed
        return self.lower <= R < self.upper


@dataclass(frozen=True)
class LyapunovCertificate:
    kind: Regime
    samples_checked: int
    max_violation: float
    R: Optional[float] = None
    R_window: Optional[RWindow] = None
    sign_failures: int = 0

    @property
    def passed(self) -> bool:
        return self.max_violation < 0 and self.sign_failures == 0


@dataclass(frozen=True)
class AsirPeakReport:
    case: PeakCase
    i_pk: float
    threshold_rhs: float


class LyapunovValue(NamedTuple):
    value: float
    region: str


# --- thresholds and equilibria ------------------------------------------------


def sis_classify(p: SisParams) -> tuple[Regime, float]:
    """SIS regime and its limiting infected fraction 1 - alpha/beta."""
    if p.beta <= p.alpha:
        return Regime.IFE_GAS, 0.0
    return Regime.ENDEMIC, 1.0 - p.alpha / p.beta


def spectral(p: AsisParams) -> SpectralInfo:
    return SpectralInfo(
        lambda_plus=p.beta - p.beta_a * p.x_a - p.alpha,
        lambda_minus=-(p.beta_a * p.x_a + p.alpha),
    )


def endemic_fraction(p: AsisParams) -> float:
    lp = spectral(p).lambda_plus
    if lp <= 0:
        raise ValueError(f"no endemic equilibrium: lambda_plus={lp} <= 0")
    return lp / (lp + p.alpha)


def limiting_infected(beta: float, alpha: float, x_a: float, beta_a: float) -> float:
    """Long-run total infected fraction as a function of defender fraction and strength."""
    eff = beta - beta_a * x_a
    if beta_a * x_a < beta - alpha:
        return 1.0 - alpha / eff
    return 0.0


def classify(p: AsisParams) -> RegimeReport:
    sp = spectral(p)
    L = limiting_infected(p.beta, p.alpha, p.x_a, p.beta_a)
    if sp.lambda_plus <= 0:
        return RegimeReport(sp, Regime.IFE_GAS, None, None, L)
    f = sp.lambda_plus / (sp.lambda_plus + p.alpha)
    return RegimeReport(sp, Regime.ENDEMIC, (p.x_a * f, (1.0 - p.x_a) * f), f, L)


def jacobian(p: AsisParams, s) -> np.ndarray:
    ia, ir = check_asis_state(p, s)
    b, ba, al, xa = p.beta, p.beta_a, p.alpha, p.x_a
    return np.array(
        [
            [(b - ba) * (xa - 2 * ia) - b * ir - al, b * (xa - ia)],
            [ba * ir + b * (1 - xa - ir), b * (1 - xa - 2 * ir - ia) - ba * (xa - ia) - al],
        ]
    )


# --- nullclines -----------------------------------------------------------------


def nullcline_d(p: AsisParams) -> float:
    return p.alpha + p.beta_a * p.x_a - p.beta * (1.0 - p.x_a)


def nullcline_a(p: AsisParams, i_a):
    """i_r value on the a-nullcline above ``i_a``; singular at ``i_a = x_a``."""
    ia = np.asarray(i_a, dtype=float)
    if p.beta <= 0:
        raise ValueError("a-nullcline needs beta > 0")
    if np.any(ia < 0) or np.any(ia >= p.x_a):
        raise ValueError(f"i_a must lie in [0, x_a={p.x_a})")
    out = (p.alpha / (p.beta * (p.x_a - ia)) - (1.0 - p.beta_a / p.beta)) * ia
    return float(out) if out.ndim == 0 else out


def nullcline_r(p: AsisParams, i_r):
    """i_a value on the r-nullcline beside ``i_r`` (the r-nullcline as a graph over i_r)."""
    ir = np.asarray(i_r, dtype=float)
    s_r = 1.0 - p.x_a - ir
    out = (p.alpha - p.beta * s_r + p.beta_a * p.x_a) / (p.beta * s_r + p.beta_a * ir) * ir
    return float(out) if out.ndim == 0 else out


def nullcline_r_inverse(p: AsisParams, i_a):
    """r-nullcline written as i_r over i_a: the '+' root of its quadratic."""
    ia = np.asarray(i_a, dtype=float)
    if p.beta <= 0:
        raise ValueError("r-nullcline inverse needs beta > 0")
    if np.any(ia < -1e-12) or np.any(ia > p.x_a + 1e-12):
        raise ValueError(f"i_a must lie in [0, x_a={p.x_a}]")
    u = (nullcline_d(p) + ia * (p.beta - p.beta_a)) / p.beta
    out = 0.5 * (-u + np.sqrt(u * u + 4.0 * ia * (1.0 - p.x_a)))
    return float(out) if out.ndim == 0 else out


def nullcline_r_inverse_slope(p: AsisParams, i_a: float) -> float:
    """Closed-form derivative of :func:`nullcline_r_inverse` in ``i_a``."""
    b, ba, xa = p.beta, p.beta_a, p.x_a
    w = nullcline_d(p) + i_a * (b - ba)
    root = math.sqrt(w * w / b**2 + 4.0 * i_a * (1.0 - xa))
    return 0.5 * (ba / b - 1.0 + (2.0 * (b - ba) * w / b**2 + 4.0 * (1.0 - xa)) / (2.0 * root))


# --- Lyapunov functions -----------------------------------------------------------


def _require_interior(p: AsisParams) -> None:
    if not 0.0 < p.x_a < 1.0:
        raise ValueError(
            f"Lyapunov functions need x_a in (0, 1), got {p.x_a}; use the SIS reduction"
        )


def lyapunov_ife(p: AsisParams, s) -> float:
    _require_interior(p)
    ia, ir = check_asis_state(p, s)
    return max((1.0 - p.x_a) / p.x_a * ia, ir)


def ife_descent_rate(p: AsisParams, i_a, i_r):
    """dV/dt via the indicator form: F_r where i_r dominates, else F_a. Broadcasts."""
    f_a, f_r = _asis(p.beta, p.beta_a, p.alpha, p.x_a, i_a, i_r)
    return np.where(i_r > (1.0 - p.x_a) / p.x_a * i_a, f_r, f_a)


def _endemic_centre(p: AsisParams) -> tuple[float, float]:
    lp = spectral(p).lambda_plus
    if lp <= 0:
        raise ValueError(f"endemic Lyapunov function needs lambda_plus > 0, got {lp}")
    f = lp / (lp + p.alpha)
    return p.x_a * f, (1.0 - p.x_a) * f


def lyapunov_endemic(p: AsisParams, s, R: float) -> LyapunovValue:
    """Weighted max-distance to the endemic point, with the region that attains it.

    Region labels are ``"a<"``, ``"a>="``, ``"r<"`` and ``"r>="``; ties go to the
    a-term.
    """
    _require_interior(p)
    if not R > 0:
        raise ValueError("R must be > 0")
    ca, cr = _endemic_centre(p)
    ia, ir = check_asis_state(p, s)
    da, dr = ia - ca, ir - cr
    va, vr = abs(da), R * abs(dr)
    if va >= vr:
        return LyapunovValue(va, "a<" if da < 0 else "a>=")
    return LyapunovValue(vr, "r<" if dr < 0 else "r>=")


def endemic_descent_rate(p: AsisParams, i_a, i_r, R: float, tie_tol: float = 1e-12):
    """Upper Dini derivative of V_R along the flow; broadcasts over grids.

    Where both terms attain the max (within ``tie_tol``) the larger of the two
    one-sided rates is taken.
    """
    ca, cr = _endemic_centre(p)
    f_a, f_r = _asis(p.beta, p.beta_a, p.alpha, p.x_a, i_a, i_r)
    da, dr = i_a - ca, i_r - cr
    va, vr = np.abs(da), R * np.abs(dr)
    rate_a = np.where(da < 0, -f_a, f_a)
    rate_r = np.where(dr < 0, -R * f_r, R * f_r)
    a_active = va >= vr - tie_tol
    r_active = vr >= va - tie_tol
    return np.maximum(np.where(a_active, rate_a, -np.inf), np.where(r_active, rate_r, -np.inf))


def endemic_sign_failures(p: AsisParams, i_a, i_r, R: float) -> int:
    """Grid points violating the four regional sign conditions on F_a, F_r."""
    ca, cr = _endemic_centre(p)
    f_a, f_r = _asis(p.beta, p.beta_a, p.alpha, p.x_a, i_a, i_r)
    da, dr = i_a - ca, i_r - cr
    va, vr = np.abs(da), R * np.abs(dr)
    in_a, in_r = va >= vr, vr >= va
    at_eq = (da == 0) & (dr == 0)
    bad = (
        (in_a & (da < 0) & ~(f_a > 0))
        | (in_a & (da >= 0) & ~((f_a < 0) | ((f_a == 0) & (da == 0))))
        | (in_r & (dr < 0) & ~(f_r > 0))
        | (in_r & (dr >= 0) & ~((f_r < 0) | ((f_r == 0) & (dr == 0))))
    )
    return int(np.count_nonzero(bad & ~at_eq))


def admissible_R(p: AsisParams) -> RWindow:
    """Weights R for which V_R certifies the endemic equilibrium.

    Below the defender-fraction threshold ``(beta - alpha) / (beta + beta_a)``
    this is an interval. Above it a single weight is returned: the interval's
    lower end ``x_a / (1 - x_a)``. A unit weight matches it only at
    ``x_a = 1/2``; elsewhere in this branch V_1 can increase along
    trajectories, while ``x_a / (1 - x_a)`` keeps V_R decreasing.
    """
    rep = classify(p)
    if rep.regime is not Regime.ENDEMIC:
        raise ValueError("admissible R only exists when lambda_plus > 0")
    _require_interior(p)
    b, ba, al, xa = p.beta, p.beta_a, p.alpha, p.x_a
    if xa > (b - al) / (b + ba):
        return RWindow(fixed=xa / (1.0 - xa))
    f = rep.f
    slope = nullcline_r_inverse_slope(p, rep.endemic[0])
    cone = b * xa * f / (nullcline_d(p) + b * f * (1.0 - xa))
    return RWindow(lower=xa / (1.0 - xa), inverse_slope_bound=1.0 / slope, cone_bound=cone)


def _grid(p: AsisParams, n: int) -> tuple[np.ndarray, np.ndarray]:
    ia = np.linspace(0.0, p.x_a, n)
    ir = np.linspace(0.0, 1.0 - p.x_a, n)
    return np.meshgrid(ia, ir, indexing="ij")


def certify_ife(p: AsisParams, n: int = 200, eps: float = 1e-12) -> LyapunovCertificate:
    """Evaluate dV/dt on an n-by-n grid over the state box, skipping the IFE itself."""
    _require_interior(p)
    ia, ir = _grid(p, n)
    rate = ife_descent_rate(p, ia, ir)
    keep = np.maximum((1.0 - p.x_a) / p.x_a * ia, ir) > eps
    return LyapunovCertificate(
        kind=Regime.IFE_GAS,
        samples_checked=int(keep.sum()),
        max_violation=float(rate[keep].max()),
    )


def certify_endemic(
    p: AsisParams, R: Optional[float] = None, n: int = 200, eps: float = 1e-12
) -> LyapunovCertificate:
    """Grid certificate for V_R; ``R`` defaults to the admissible window's pick.

    The IFE, an unstable equilibrium in this regime, is excluded along with the
    endemic point.
    """
    window = admissible_R(p)
    R = window.pick() if R is None else float(R)
    ia, ir = _grid(p, n)
    ca, cr = _endemic_centre(p)
    keep = (np.maximum(np.abs(ia - ca), R * np.abs(ir - cr)) > eps) & ((ia > 0) | (ir > 0))
    rate = endemic_descent_rate(p, ia[keep], ir[keep], R)
    return LyapunovCertificate(
        kind=Regime.ENDEMIC,
        samples_checked=int(keep.sum()),
        max_violation=float(rate.max()),
        R=R,
        R_window=window,
        sign_failures=endemic_sign_failures(p, ia[keep], ir[keep], R),
    )


# --- A-SIR peak ---------------------------------------------------------------------


def _check_asir_start(s_a0: float, i_0: float) -> float:
    if not 0.0 < i_0 < 1.0:
        raise StateError(f"i_0 must lie in (0, 1), got {i_0}")
    if s_a0 < 0 or s_a0 + i_0 > 1.0 + 1e-12:
        raise StateError(f"need 0 <= s_a0 <= 1 - i_0, got s_a0={s_a0}, i_0={i_0}")
    return 1.0 - i_0


def asir_peak(p: AsirParams, s_a0: float, i_0: float) -> AsirPeakReport:
    """Peak total infection of an A-SIR run starting with no recovered nodes."""
    s_0 = _check_asir_start(s_a0, i_0)
    b, ba, al = p.beta, p.beta_a, p.alpha
    growth = b * s_0 - ba * s_a0
    if ba > 0:
        rhs = (b * s_0 - al) / ba
    else:
        rhs = math.copysign(math.inf, b * s_0 - al)
    if growth > al:
        i_pk = 1.0 - al / b - (ba / b) * s_a0 + (al / b) * math.log(al / growth)
        return AsirPeakReport(PeakCase.FORMULA, i_pk, rhs)
    return AsirPeakReport(PeakCase.MONOTONE, i_0, rhs)


def asir_i_of_sa(p: AsirParams, s_a0: float, i_0: float, s_a):
    """Total infected fraction along a run, as a function of the active-susceptible fraction."""
    s_0 = _check_asir_start(s_a0, i_0)
    if s_a0 <= 0:
        raise ValueError("i(s_a) is undefined for s_a0 = 0; use asir_peak instead")
    sa = np.asarray(s_a, dtype=float)
    if np.any(sa <= 0) or np.any(sa > s_a0 * (1 + 1e-12)):
        raise ValueError("s_a must lie in (0, s_a0]")
    A = p.beta * s_0 / s_a0 - p.beta_a
    out = i_0 - (A / p.beta) * (sa - s_a0) + (p.alpha / p.beta) * np.log(sa / s_a0)
    return float(out) if out.ndim == 0 else out


def asir_peak_location(p: AsirParams, s_a0: float, i_0: float) -> float:
    """Active-susceptible fraction at which i(s_a) is stationary."""
    s_0 = _check_asir_start(s_a0, i_0)
    A = p.beta * s_0 / s_a0 - p.beta_a
    if A <= 0:
        return math.inf
    return p.alpha / A
