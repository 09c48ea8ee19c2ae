"""Run orchestration: execute a configuration, write artifacts, judge checks.

Artifacts per run directory:
    config_echo.json   canonical parsed configuration
    trace.csv          per-step norms and ledger columns
    snapshot_###.csv   requested field snapshots
    report_<check>.json one machine-readable report per configured check
    plot.dat, plot.gp  data file plus a gnuplot script (never rendered here)

All floats are written with repr, so identical inputs give identical bytes.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ledger as lg
from .config import ExperimentConfig, config_to_dict
from .data import Gaussian, Indicator, MollifiedDirac, PowerTail, sample
from .integrate import RunResult, SolverAbort, StepControl, run
from .problem import make_grid

__all__ = ["CheckOutcome", "HarnessResult", "execute_config", "scale_datum"]

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_SOLVER_ABORT = 3


@dataclass
class CheckOutcome:
    name: str
    passed: bool
    report: dict


@dataclass
class HarnessResult:
    exit_code: int
    outcomes: list[CheckOutcome]
    run_result: RunResult | None
    out_dir: Path

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.outcomes)


def scale_datum(datum, factor: float):
    """Scale the datum's amplitude-like parameter by `factor`."""
    if isinstance(datum, Gaussian):
        return dataclasses.replace(datum, amplitude=datum.amplitude * factor)
    if isinstance(datum, PowerTail):
        return dataclasses.replace(datum, amplitude=datum.amplitude * factor)
    if isinstance(datum, MollifiedDirac):
        return dataclasses.replace(datum, mass=datum.mass * factor)
    if isinstance(datum, Indicator):
        return dataclasses.replace(datum, height=datum.height * factor)
    raise TypeError(f"cannot scale datum of type {type(datum).__name__}")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    raise TypeError(f"not serializable: {type(obj)!r}")


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + "\n")


def write_trace_csv(trace: lg.NormTrace, path: Path) -> None:
    orders = sorted(trace.ledgers)
    headers = ["t", "l1", "l2", "sup", "grad_lq"]
    for r in orders:
        tag = f"{r:g}"
        headers += [f"mass_{tag}", f"diss_grad_{tag}", f"diss_visc_{tag}", f"residual_{tag}"]
    lines = [",".join(headers)]
    for i, t in enumerate(trace.times):
        row = [repr(t), repr(trace.l1[i]), repr(trace.l2[i]), repr(trace.sup[i]),
               repr(trace.grad_lq[i])]
        for r in orders:
            led = trace.ledgers[r]
            row += [repr(led.mass[i]), repr(led.diss_grad[i]),
                    repr(led.diss_visc[i]), repr(led.residual[i])]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def read_trace_csv(path: Path) -> dict[str, np.ndarray]:
    lines = Path(path).read_text().strip().splitlines()
    headers = lines[0].split(",")
    data = np.array([[float(x) for x in line.split(",")] for line in lines[1:]])
    return {h: data[:, i] for i, h in enumerate(headers)}


def _write_plot_files(trace: lg.NormTrace, out_dir: Path) -> None:
    lines = ["# t l1 l2 sup grad_lq"]
    for i, t in enumerate(trace.times):
        lines.append(
            f"{trace.times[i]!r} {trace.l1[i]!r} {trace.l2[i]!r} "
            f"{trace.sup[i]!r} {trace.grad_lq[i]!r}"
        )
    (out_dir / "plot.dat").write_text("\n".join(lines) + "\n")
    script = (
        "set logscale xy\n"
        "set xlabel 't'\n"
        "set ylabel 'norm'\n"
        "set key left bottom\n"
        "plot 'plot.dat' using 1:2 with lines title 'L1', \\\n"
        "     'plot.dat' using 1:4 with lines title 'sup'\n"
    )
    (out_dir / "plot.gp").write_text(script)


# --- check evaluation -------------------------------------------------------


def _check_energy_ledger(cfg: ExperimentConfig, result: RunResult, params: dict) -> CheckOutcome:
    tol = float(params.get("tol", 1e-3))
    orders = params.get("r", [1, 2])
    orders = orders if isinstance(orders, list) else [orders]
    residuals = {}
    ok = True
    for r in orders:
        led = result.trace.ledgers[float(r)]
        rel = led.relative_residual()
        residuals[f"{float(r):g}"] = rel
        ok = ok and rel < tol
    return CheckOutcome(
        "energy_ledger",
        ok,
        {
            "check": "energy_ledger",
            "paper_ref": "lr-energy-balance",
            "passed": ok,
            "tolerance": tol,
            "relative_residuals": residuals,
        },
    )


def _check_decay_fit(cfg: ExperimentConfig, result: RunResult, params: dict) -> CheckOutcome:
    norm = params.get("norm", "sup")
    window = params.get("window")
    if window is None:
        raise ValueError("decay_fit needs a window")
    fit = lg.fit_decay(result.trace, norm, (float(window[0]), float(window[1])))
    report = {
        "check": "decay_fit",
        "paper_ref": "power-law-decay-slope",
        "norm": str(norm),
        "window": [fit.window[0], fit.window[1]],
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "n_samples": fit.n_samples,
    }
    passed = True
    if "expect" in params:
        expect = float(params["expect"])
        rtol = float(params.get("rtol", 0.1))
        passed = abs(fit.slope - expect) <= rtol * abs(expect)
        report.update({"expected_slope": expect, "rtol": rtol})
    report["passed"] = passed
    return CheckOutcome("decay_fit", passed, report)


def _check_gradient_bound(cfg: ExperimentConfig, result: RunResult, params: dict) -> CheckOutcome:
    max_ratio = float(params.get("max_ratio", 1.1))
    rep = lg.gradient_bound_check(result, cfg.spec)
    passed = rep.worst_ratio <= max_ratio
    return CheckOutcome(
        "gradient_bound",
        passed,
        {
            "check": "gradient_bound",
            "paper_ref": rep.paper_ref,
            "passed": passed,
            "worst_ratio": rep.worst_ratio,
            "max_ratio": max_ratio,
            "per_snapshot": rep.per_snapshot,
        },
    )


def _check_far_field(cfg: ExperimentConfig, result: RunResult, params: dict) -> CheckOutcome:
    r = float(params.get("r", 1.0))
    window = params.get("window")
    window = (float(window[0]), float(window[1])) if window else None
    rep = lg.far_field_check(cfg.spec, cfg.datum, r, window=window)
    slope_rtol = float(params.get("slope_rtol", 0.15))
    ratio_max = float(params.get("ratio_max", 1.0 + 1e-9))
    slope_ok = abs(rep.mass_fit.slope + rep.tail_slope_prediction) <= slope_rtol * rep.tail_slope_prediction
    ratio_ok = rep.max_ratio <= ratio_max
    passed = slope_ok and ratio_ok
    return CheckOutcome(
        "far_field",
        passed,
        {
            "check": "far_field",
            "paper_ref": rep.paper_ref,
            "passed": passed,
            "a": rep.a,
            "rho": rep.rho,
            "tail_slope_prediction": rep.tail_slope_prediction,
            "measured_slope": rep.mass_fit.slope,
            "slope_rtol": slope_rtol,
            "fitted_constant": rep.fitted_constant,
            "max_ratio": rep.max_ratio,
            "ratio_max": ratio_max,
            "samples": rep.samples,
        },
    )


def _check_universal_bound(cfg: ExperimentConfig, result: RunResult, params: dict) -> CheckOutcome:
    amplitudes = params.get("amplitudes", [1.0, 10.0, 100.0])
    amplitudes = [float(a) for a in (amplitudes if isinstance(amplitudes, list) else [amplitudes])]
    window = params.get("window", [0.1, 1.0])
    window = (float(window[0]), float(window[1]))
    max_spread = float(params.get("max_spread", 2.0))
    spec = cfg.spec
    if "exponent" in params:
        expo = float(params["exponent"])
    elif spec.gamma > 0:
        expo = 1.0 / (spec.q - 1.0 + spec.lam)
    else:
        expo = 1.0 / (spec.p - 2.0)
    grid = make_grid(spec.domain, spec.dim)
    traces = []
    for amp in amplitudes:
        u0 = sample(scale_datum(cfg.datum, amp), grid)
        res = run(u0, spec, cfg.control, ledger_orders=())
        traces.append(res.trace)
    spread, values = lg.universal_bound_spread(traces, expo, window)
    passed = spread < max_spread
    return CheckOutcome(
        "universal_bound",
        passed,
        {
            "check": "universal_bound",
            "paper_ref": "universal-supnorm-bound",
            "passed": passed,
            "exponent": expo,
            "window": [window[0], window[1]],
            "amplitudes": amplitudes,
            "sup_t_scaled": values,
            "spread": spread,
            "max_spread": max_spread,
        },
    )


_CHECK_RUNNERS = {
    "energy_ledger": _check_energy_ledger,
    "decay_fit": _check_decay_fit,
    "gradient_bound": _check_gradient_bound,
    "far_field": _check_far_field,
    "universal_bound": _check_universal_bound,
}


def execute_config(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> HarnessResult:
    """Run the experiment and its checks, writing artifacts to out_dir."""
    out = Path(out_dir) if out_dir is not None else Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "config_echo.json", config_to_dict(cfg))

    ledger_orders = [1.0, 2.0]
    if "energy_ledger" in cfg.checks:
        rs = cfg.checks["energy_ledger"].get("r", [1, 2])
        rs = rs if isinstance(rs, list) else [rs]
        ledger_orders = sorted({float(r) for r in rs} | {1.0, 2.0})
    far_r = float(cfg.checks.get("far_field", {}).get("r", 1.0)) if "far_field" in cfg.checks else None

    grid = make_grid(cfg.spec.domain, cfg.spec.dim)
    u0 = sample(cfg.datum, grid, for_lr=far_r)
    try:
        result = run(u0, cfg.spec, cfg.control, ledger_orders=tuple(ledger_orders))
    except SolverAbort as e:
        write_json(out / "report_abort.json", {"error": str(e), "step_index": e.step_index})
        return HarnessResult(EXIT_SOLVER_ABORT, [], None, out)

    write_trace_csv(result.trace, out / "trace.csv")
    for i, snap in enumerate(result.snapshots):
        from .data import save_field_csv

        save_field_csv(snap, out / f"snapshot_{i:03d}.csv")
    _write_plot_files(result.trace, out)

    outcomes: list[CheckOutcome] = []
    for name, params in sorted(cfg.checks.items()):
        outcome = _CHECK_RUNNERS[name](cfg, result, params)
        outcomes.append(outcome)
        write_json(out / f"report_{name}.json", outcome.report)

    meta = {
        "steps": result.steps,
        "support_flag": result.support_flag,
        "support_fraction_max": result.support_fraction_max,
        "seed": cfg.seed,
        "checks_passed": all(c.passed for c in outcomes),
    }
    write_json(out / "run_meta.json", meta)

    code = EXIT_OK if all(c.passed for c in outcomes) else EXIT_CHECK_FAILED
    return HarnessResult(code, outcomes, result, out)
