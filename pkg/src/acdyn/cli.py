"""``acdyn`` command-line front end.

    acdyn simulate|analyze|optimize|peak|sweep|stochastic SCENARIO.json
          [--out DIR] [--seed N] [--workers K]

Exit codes: 0 success, 2 configuration error, 3 numerical/feasibility failure.
Outputs are staged in a temporary directory and moved into ``--out`` only
when the command succeeds.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import shutil
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import analysis as an
from .integrator import IntegrationError, integrate, track_peak
from .investment import InvestmentError, ReturnFunctionError, eradication_check, solve
from .models import (
    AsirState,
    AsisParams,
    SisParams,
    asir_infected,
    asir_rhs,
    asis_infected,
    asis_rhs,
    sis_rhs,
)
from .scenario import ConfigError, Scenario, load_scenario
from .stochastic import PopulationConfig, simulate_ctmc, summarize, uniform_grid

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

STATE_COLUMNS = {
    "sis": ("i",),
    "asis": ("i_a", "i_r"),
    "asir": AsirState._fields,
}


class NumericalFailure(RuntimeError):
    pass


# --- output helpers -------------------------------------------------------------


def fmt(x: Any) -> str:
    """CSV cell: 12 significant digits for floats."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return str(x)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def json_text(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


class Outputs:
    """Files staged in memory and written atomically on :meth:`commit`."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str) -> None:
        self.files[name] = text

    def commit(self) -> list[Path]:
        parent = self.out_dir.resolve().parent
        parent.mkdir(parents=True, exist_ok=True)
        staging = Path(tempfile.mkdtemp(prefix=".acdyn-", dir=parent))
        try:
            for name, text in self.files.items():
                (staging / name).write_text(text)
            self.out_dir.mkdir(parents=True, exist_ok=True)
            written = []
            for name in self.files:
                target = self.out_dir / name
                os.replace(staging / name, target)
                written.append(target)
            return written
        finally:
            shutil.rmtree(staging, ignore_errors=True)


# --- model plumbing ----------------------------------------------------------------


def _system(sc: Scenario, params=None, initial=None):
    """(rhs, s0, lower, upper, infected) for the scenario's model."""
    p = sc.params if params is None else params
    s0 = np.array(sc.initial if initial is None else initial, dtype=float)
    if sc.model == "sis":
        return sis_rhs(p), s0, [0.0], [1.0], lambda y: float(y[0])
    if sc.model == "asis":
        lo, hi = p.bounds
        return asis_rhs(p), s0, lo, hi, asis_infected
    lo, hi = p.bounds
    return asir_rhs(p), s0, lo, hi, asir_infected


def _run(sc: Scenario, params=None, initial=None, opts=None):
    rhs, s0, lo, hi, infected = _system(sc, params, initial)
    try:
        traj = integrate(rhs, s0, opts or sc.integration, lower=lo, upper=hi, infected=infected)
    except IntegrationError as exc:
        raise NumericalFailure(str(exc)) from None
    return traj, infected


def _integrated_peak(traj, infected) -> tuple[float, float]:
    refined = track_peak(traj, infected)
    running = traj.running_max_infected
    return max(refined, running) if running is not None else refined


def _ab(sc: Scenario) -> tuple[float, float]:
    return sc.params.beta, sc.params.alpha


# --- subcommands ---------------------------------------------------------------------


def cmd_simulate(sc: Scenario, out: Outputs, args) -> None:
    traj, infected = _run(sc)
    cols = STATE_COLUMNS[sc.model]
    header = ("t",) + tuple(cols) + (() if sc.model == "sis" else ("i",))
    rows = []
    for t, s in zip(traj.times, traj.states):
        extra = () if sc.model == "sis" else (infected(s),)
        rows.append((t, *s, *extra))
    out.add("trajectory.csv", csv_text(header, rows))
    peak, t_peak = _integrated_peak(traj, infected)
    out.add(
        "summary.json",
        json_text(
            {
                "model": sc.model,
                "t_final": traj.t_final,
                "final_state": dict(zip(cols, traj.final_state)),
                "final_i": infected(traj.final_state),
                "converged": traj.converged,
                "peak": {"i": peak, "t": t_peak},
                "steps": traj.n_steps,
                "rejected_steps": traj.n_rejected,
            }
        ),
    )


def _window_dict(w: an.RWindow | None):
    if w is None:
        return None
    return {
        "lower": w.lower,
        "upper": w.upper,
        "inverse_slope_bound": w.inverse_slope_bound,
        "cone_bound": w.cone_bound,
        "fixed": w.fixed,
    }


def cmd_analyze(sc: Scenario, out: Outputs, args) -> None:
    opts = sc.analysis
    if sc.model == "asir":
        raise ConfigError("model: analyze needs an sis or asis scenario (use 'peak' for asir)")
    if sc.model == "sis":
        regime, L = an.sis_classify(sc.params)
        out.add(
            "regime.json",
            json_text(
                {
                    "model": "sis",
                    "regime": regime,
                    "beta_over_alpha": sc.params.beta / sc.params.alpha,
                    "threshold": 1.0,
                    "endemic": L if regime is an.Regime.ENDEMIC else None,
                    "limiting_infected": L,
                }
            ),
        )
        return

    p: AsisParams = sc.params
    rep = an.classify(p)
    doc: dict[str, Any] = {
        "model": "asis",
        "regime": rep.regime,
        "lambda_plus": rep.spectral.lambda_plus,
        "lambda_minus": rep.spectral.lambda_minus,
        "beta_over_alpha": p.beta / p.alpha,
        "threshold": 1.0 + p.beta_a * p.x_a / p.alpha,
        "endemic": None if rep.endemic is None else {"i_a": rep.endemic[0], "i_r": rep.endemic[1]},
        "f": rep.f,
        "limiting_infected": rep.limiting_infected,
    }
    if p.x_a == 0.0:
        regime, L = an.sis_classify(SisParams(p.beta, p.alpha))
        doc["sis_reduction"] = {
            "beta_over_alpha": p.beta / p.alpha,
            "threshold": 1.0,
            "regime": regime,
            "limiting_infected": L,
        }
    out.add("regime.json", json_text(doc))

    interior = 0.0 < p.x_a < 1.0
    if opts.get("nullclines", True) and interior and p.beta > 0:
        n = opts.get("nullcline_points", 201)
        grid = np.linspace(0.0, p.x_a, n, endpoint=False)
        rows = zip(grid, an.nullcline_a(p, grid), an.nullcline_r_inverse(p, grid))
        out.add("nullclines.csv", csv_text(("i_a", "I_a", "Ihat_r"), rows))
        ia, ir = np.meshgrid(np.linspace(0, p.x_a, 21), np.linspace(0, 1 - p.x_a, 21), indexing="ij")
        fa, fr = an._asis(p.beta, p.beta_a, p.alpha, p.x_a, ia, ir)
        rows = zip(ia.ravel(), ir.ravel(), fa.ravel(), fr.ravel())
        out.add("phase_field.csv", csv_text(("i_a", "i_r", "di_a", "di_r"), rows))

    if opts.get("lyapunov", True):
        if not interior:
            cert: dict[str, Any] = {
                "kind": rep.regime,
                "skipped": f"x_a={p.x_a}: the state box is degenerate; use the SIS reduction",
            }
        else:
            n = opts.get("grid", 200)
            if rep.regime is an.Regime.ENDEMIC:
                c = an.certify_endemic(p, n=n)
            else:
                c = an.certify_ife(p, n=n)
            cert = {
                "kind": c.kind,
                "R": c.R,
                "R_window": _window_dict(c.R_window),
                "samples_checked": c.samples_checked,
                "max_violation": c.max_violation,
                "sign_failures": c.sign_failures,
                "passed": c.passed,
            }
        out.add("certificate.json", json_text(cert))


def cmd_optimize(sc: Scenario, out: Outputs, args) -> None:
    if sc.investment is None:
        raise ConfigError("investment: required block missing")
    beta, alpha = _ab(sc)
    if not beta > alpha:
        raise ConfigError("params.beta: optimize needs beta > alpha (otherwise zero spend eradicates)")
    prob = sc.investment.problem(beta, alpha)
    sol = solve(prob)
    erad = eradication_check(prob)
    out.add(
        "solution.json",
        json_text(
            {
                "family": sc.investment.family,
                "constants": sc.investment.constants,
                "M": prob.M,
                "a_star": sol.a_star,
                "b_star": sol.b_star,
                "case": sol.case,
                "foc_residual": sol.foc_residual,
                "predicted_L": sol.predicted_L,
                "eradication_feasible": sol.eradication_feasible,
                "best_product": erad.best_product,
                "saturation_point": prob.h.saturation,
            }
        ),
    )


def cmd_peak(sc: Scenario, out: Outputs, args) -> None:
    if sc.model != "asir":
        raise ConfigError("model: peak needs an asir scenario")
    s_a, s_r, i_a, i_r, _ = sc.initial
    i_0 = i_a + i_r
    rep = an.asir_peak(sc.params, s_a, i_0)
    traj, infected = _run(sc)
    integrated, t_peak = _integrated_peak(traj, infected)
    out.add(
        "peak.json",
        json_text(
            {
                "case": rep.case,
                "i_pk": rep.i_pk,
                "threshold_rhs": rep.threshold_rhs,
                "s_a0": s_a,
                "i_0": i_0,
                "integrated_peak": integrated,
                "integrated_peak_time": t_peak,
                "delta": abs(rep.i_pk - integrated),
            }
        ),
    )


def _sweep_point(sc: Scenario, value: float) -> list[Any]:
    spec = sc.sweep
    params, initial, M = sc.params, sc.initial, None
    if spec.param in ("beta", "beta_a", "alpha", "x_a"):
        params = replace(params, **{spec.param: value})
    elif spec.param == "M":
        M = value
    else:
        i_0 = initial[2] + initial[3]
        if value > 1 - i_0:
            raise ConfigError(f"sweep.max: s_a0={value} exceeds 1 - i_0")
        initial = tuple(AsirState.from_initial(value, i_0))

    row: list[Any] = [value]
    for key in spec.outputs:
        row.append(_sweep_output(sc, key, params, initial, M))
    return row


def _sweep_output(sc: Scenario, key: str, params, initial, M):
    model = sc.model
    if key == "i_pk":
        if model != "asir":
            raise ConfigError("sweep.outputs: i_pk needs an asir scenario")
        return an.asir_peak(params, initial[0], initial[2] + initial[3]).i_pk
    if key in ("a_star", "b_star"):
        if sc.investment is None:
            raise ConfigError(f"sweep.outputs: {key} needs an investment block")
        if not params.beta > params.alpha:
            return None
        sol = solve(sc.investment.problem(params.beta, params.alpha, M))
        return sol.a_star if key == "a_star" else sol.b_star
    if model == "asir":
        raise ConfigError(f"sweep.outputs: {key} needs an sis or asis scenario")
    if model == "sis":
        regime, L = an.sis_classify(params)
        return {
            "lambda_plus": params.beta - params.alpha,
            "regime": regime.value,
            "f": L if regime is an.Regime.ENDEMIC else None,
            "L": L,
        }[key]
    rep = an.classify(params)
    return {
        "lambda_plus": rep.spectral.lambda_plus,
        "regime": rep.regime.value,
        "f": rep.f,
        "L": rep.limiting_infected,
    }[key]


def cmd_sweep(sc: Scenario, out: Outputs, args) -> None:
    if sc.sweep is None:
        raise ConfigError("sweep: required block missing")
    values = sc.sweep.values()
    # fail fast on configuration problems before spinning up workers
    _sweep_point(sc, values[0])
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_point, [sc] * len(values), values))
    else:
        rows = [_sweep_point(sc, v) for v in values]
    out.add("sweep.csv", csv_text((sc.sweep.param,) + sc.sweep.outputs, rows))


def cmd_stochastic(sc: Scenario, out: Outputs, args) -> None:
    spec = sc.stochastic
    if spec is None:
        raise ConfigError("stochastic: required block missing")
    seed = spec.seed if args.seed is None else args.seed
    p: AsisParams = sc.params
    try:
        if spec.initial_counts is not None:
            cfg = PopulationConfig(spec.N, p, *spec.initial_counts, seed=seed, t_end=spec.t_end,
                                   replicates=spec.replicates)
        else:
            cfg = PopulationConfig.from_fractions(spec.N, p, *sc.initial, seed=seed,
                                                  t_end=spec.t_end, replicates=spec.replicates)
    except ValueError as exc:
        raise ConfigError(f"stochastic.initial_counts: {exc}") from None
    grid = uniform_grid(spec.t_end, spec.sample_interval)
    summary = summarize(simulate_ctmc(cfg, grid=grid, workers=args.workers), grid)
    rows = zip(summary.t, summary.mean_ia, summary.mean_ir, summary.sd_ia, summary.sd_ir)
    out.add("ensemble.csv", csv_text(("t", "mean_ia", "mean_ir", "sd_ia", "sd_ir"), rows))

    # mean field from the realized composition and initial fractions
    p_real = replace(p, x_a=cfg.realized_x_a)
    s0 = (cfg.n_ia / cfg.N, cfg.n_ir / cfg.N)
    mf_opts = replace(sc.integration, t_end=spec.t_end, sample_interval=spec.t_end)
    traj, _ = _run(sc, params=p_real, initial=s0, opts=mf_opts)
    mf_ia, mf_ir = traj.final_state
    end = {"i_a": summary.mean_ia[-1], "i_r": summary.mean_ir[-1], "i": summary.mean_infected[-1]}
    mf = {"i_a": mf_ia, "i_r": mf_ir, "i": mf_ia + mf_ir}
    rep = an.classify(p_real)
    out.add(
        "stochastic.json",
        json_text(
            {
                "N": cfg.N,
                "replicates": cfg.replicates,
                "seed": seed,
                "t_end": spec.t_end,
                "realized_x_a": cfg.realized_x_a,
                "initial_counts": [cfg.n_ia, cfg.n_ir],
                "extinction_fraction": summary.extinction_fraction,
                "mean_at_t_end": end,
                "mean_field_at_t_end": mf,
                "delta_at_t_end": {k: end[k] - mf[k] for k in end},
                "regime": rep.regime,
                "endemic_fraction": rep.f,
            }
        ),
    )


COMMANDS = {
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "optimize": cmd_optimize,
    "peak": cmd_peak,
    "sweep": cmd_sweep,
    "stochastic": cmd_stochastic,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="acdyn", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("scenario", type=Path)
    parser.add_argument("--out", type=Path, default=Path("out"))
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=1)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    out = Outputs(args.out)
    try:
        sc = load_scenario(args.scenario)
        COMMANDS[args.command](sc, out, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, IntegrationError, InvestmentError, ReturnFunctionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in out.commit():
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
