"""Adaptive explicit Runge-Kutta integration with box clamping and peak tracking.

Three stepping schemes are available through ``IntegrationOptions.method``:

* ``"dopri45"``: Dormand-Prince 5(4) embedded pair with FSAL (default).
* ``"rk4-doubling"``: classical RK4 with step-doubling error control, used as a
  fallback when an embedded estimate is not wanted.
* ``"rk4"``: fixed-step classical RK4, for debugging.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

Field = Callable[[np.ndarray], np.ndarray]
Projection = Callable[[np.ndarray], float]


class IntegrationError(RuntimeError):
    """Step-size underflow, non-finite dynamics or an out-of-box excursion."""


@dataclass(frozen=True)
class IntegrationOptions:
    t_end: float
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    sample_interval: Optional[float] = None
    equilibrium_eps: float = 1e-10
    method: str = "dopri45"
    fixed_step: float = 1e-2
    max_step: Optional[float] = None
    clip_limit: float = 1e-7

    def __post_init__(self) -> None:
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ValueError(f"t_end must be positive and finite, got {self.t_end!r}")
        for name in ("rel_tol", "abs_tol", "equilibrium_eps", "fixed_step", "clip_limit"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.sample_interval is None:
            object.__setattr__(self, "sample_interval", min(1.0, self.t_end))
        if not 0 < self.sample_interval <= self.t_end:
            raise ValueError("sample_interval must lie in (0, t_end]")
        if self.method not in _STEPPERS:
            raise ValueError(f"unknown method {self.method!r}; choose from {sorted(_STEPPERS)}")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    converged: bool
    running_max_infected: Optional[tuple[float, float]] = None
    n_steps: int = 0
    n_rejected: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def t_final(self) -> float:
        return float(self.times[-1])

    def __len__(self) -> int:
        return len(self.times)


# Dormand-Prince 5(4) tableau
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B5 - _B4


_A_ROWS = [np.array(row) for row in _A]


def _dopri_step(f, y, k1, h):
    K = np.empty((7, y.size))
    K[0] = k1
    for i in range(1, 7):
        K[i] = f(y + h * (_A_ROWS[i] @ K[:i]))
    y_new = y + h * (_B5 @ K)
    err = h * (_E @ K)
    # order of the lower member drives step control
    return y_new, err, K[6], 4


def _rk4(f, y, k1, h):
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _rk4_doubling_step(f, y, k1, h):
    full = _rk4(f, y, k1, h)
    half = _rk4(f, y, k1, 0.5 * h)
    two_half = _rk4(f, half, f(half), 0.5 * h)
    err = (two_half - full) / 15.0
    y_new = two_half + err
    return y_new, err, f(y_new), 4


_STEPPERS = {"dopri45": _dopri_step, "rk4-doubling": _rk4_doubling_step, "rk4": None}


def _error_norm(err, y, y_new, rel_tol, abs_tol):
    scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(f, y, f0, rel_tol, abs_tol, order, t_span):
    """Starting step from the usual two-probe heuristic."""
    scale = abs_tol + rel_tol * np.abs(y)
    d0 = np.sqrt(np.mean((y / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t_span)
    f1 = f(y + h0 * f0)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (order + 1))
    return min(100 * h0, h1, t_span)


def integrate(
    field: Field,
    s0,
    opts: IntegrationOptions,
    *,
    lower=None,
    upper=None,
    infected: Optional[Projection] = None,
) -> Trajectory:
    """Integrate ``dy/dt = field(y)`` from ``s0`` over ``[0, opts.t_end]``.

    States are sampled every ``opts.sample_interval`` (the step is shortened to
    land exactly on each sample time). After every accepted step the state is
    clipped into ``[lower, upper]``; a clip larger than ``opts.clip_limit``
    raises :class:`IntegrationError`. Integration stops early, with
    ``converged=True``, once the field norm drops below ``opts.equilibrium_eps``.

    If ``infected`` is given, its running maximum over every accepted step is
    recorded in ``Trajectory.running_max_infected`` as ``(value, time)``.
    """
    y = np.atleast_1d(np.asarray(s0, dtype=float)).copy()
    n = y.size
    lo = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    hi = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("initial state must be finite")
    if np.any(y < lo - opts.clip_limit) or np.any(y > hi + opts.clip_limit):
        raise ValueError(f"initial state {y} outside the valid box")
    y = np.clip(y, lo, hi)

    t = 0.0
    t_end = float(opts.t_end)
    dt_s = float(opts.sample_interval)
    n_samples = int(math.floor(t_end / dt_s + 1e-9))
    sample_times = [k * dt_s for k in range(1, n_samples + 1)]
    if not sample_times or t_end - sample_times[-1] > 1e-12 * t_end:
        sample_times.append(t_end)
    next_idx = 0

    times = [0.0]
    states = [y.copy()]
    peak = None
    if infected is not None:
        peak = (infected(y), 0.0)

    k1 = field(y)
    if not np.all(np.isfinite(k1)):
        raise IntegrationError("non-finite field at the initial state")
    if float(np.max(np.abs(k1), initial=0.0)) < opts.equilibrium_eps:
        return Trajectory(np.array(times), np.array(states), True, peak)

    stepper = _STEPPERS[opts.method]
    max_step = opts.max_step if opts.max_step is not None else dt_s
    if stepper is None:
        h = min(opts.fixed_step, max_step)
    else:
        h = min(_initial_step(field, y, k1, opts.rel_tol, opts.abs_tol, 4, t_end), max_step)

    converged = False
    n_steps = n_rejected = 0
    while True:
        target = sample_times[next_idx]
        h_try = min(h, target - t)
        lands = h_try >= target - t
        if stepper is None:
            y_new = _rk4(field, y, k1, h_try)
            k_new = None
            accepted = bool(np.all(np.isfinite(y_new)))
            if not accepted:
                raise IntegrationError(f"non-finite state at t={t + h_try}")
        else:
            y_new, err, k_new, order = stepper(field, y, k1, h_try)
            enorm = _error_norm(err, y, y_new, opts.rel_tol, opts.abs_tol)
            if not math.isfinite(enorm):
                accepted = False
                factor = 0.2
            else:
                accepted = enorm <= 1.0
                factor = 5.0 if enorm == 0 else min(5.0, max(0.2, 0.9 * enorm ** (-1.0 / (order + 1))))
            if not accepted:
                n_rejected += 1
                h = h_try * min(factor, 0.9)
                if h < 1e-14 * max(1.0, t):
                    raise IntegrationError(f"step size underflow at t={t} (non-finite or stiff dynamics)")
                continue
            # a step shortened to hit a sample time says nothing about the next one
            h = min(max(h_try * factor, h) if lands else h_try * factor, max_step)

        n_steps += 1
        t = target if lands else t + h_try
        clipped = np.clip(y_new, lo, hi)
        excess = float(np.max(np.abs(clipped - y_new)))
        if excess > opts.clip_limit:
            raise IntegrationError(f"state left the valid box by {excess:.3g} at t={t}")
        if excess > 0 or k_new is None:
            k_new = field(clipped)
        y, k1 = clipped, k_new
        if not np.all(np.isfinite(k1)):
            raise IntegrationError(f"non-finite field at t={t}")

        if infected is not None:
            v = infected(y)
            if v > peak[0]:
                peak = (v, t)

        at_eq = float(np.max(np.abs(k1))) < opts.equilibrium_eps
        if lands or at_eq:
            times.append(t)
            states.append(y.copy())
        if lands:
            next_idx += 1
        if at_eq:
            converged = True
            break
        if next_idx >= len(sample_times):
            break

    return Trajectory(
        np.array(times), np.array(states), converged, peak, n_steps=n_steps, n_rejected=n_rejected
    )


def track_peak(traj: Trajectory, projection: Projection) -> tuple[float, float]:
    """Maximum of ``projection`` over the samples, refined by a 3-point quadratic fit."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    values = np.array([projection(s) for s in traj.states])
    k = int(np.argmax(values))
    best = (float(values[k]), float(traj.times[k]))
    if k == 0 or k == len(values) - 1:
        return best
    t0, t1, t2 = traj.times[k - 1 : k + 2]
    v0, v1, v2 = values[k - 1 : k + 2]
    # divided differences of the interpolating parabola
    d01 = (v1 - v0) / (t1 - t0)
    d12 = (v2 - v1) / (t2 - t1)
    curv = (d12 - d01) / (t2 - t0)
    if curv >= 0:
        return best
    slope_at_t1 = d01 + curv * (t1 - t0)
    t_star = t1 - slope_at_t1 / (2 * curv)
    t_star = min(max(t_star, t0), t2)
    v_star = v1 + slope_at_t1 * (t_star - t1) + curv * (t_star - t1) ** 2
    if v_star < best[0]:
        return best
    return float(v_star), float(t_star)
