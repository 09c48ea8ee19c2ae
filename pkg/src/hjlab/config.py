"""Experiment configuration: flat dotted key=value text or JSON.

The text form is diff-friendly and is what the pinned verification configs
use; JSON carries the same content as nested objects. A configuration names
the problem, the initial datum, the stepping control, the set of checks to
evaluate after the run, an output directory and a seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path

from .data import (
    FromFile,
    Gaussian,
    Indicator,
    InitialDatum,
    MollifiedDirac,
    PowerTail,
)
from .integrate import StepControl
from .problem import ProblemSpec, spec_from_dict, spec_to_dict, validate_spec

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "load_config", "config_to_dict"]


class ConfigError(ValueError):
    pass


_DATUM_KINDS = {
    "gaussian": (Gaussian, ("amplitude", "center", "width")),
    "power_tail": (PowerTail, ("amplitude", "tail_exponent")),
    "mollified_dirac": (MollifiedDirac, ("mass", "width")),
    "indicator": (Indicator, ("lo", "hi", "height")),
    "from_file": (FromFile, ("path",)),
}

_CHECK_NAMES = ("energy_ledger", "decay_fit", "gradient_bound", "far_field", "universal_bound")


@dataclass
class ExperimentConfig:
    spec: ProblemSpec
    datum: InitialDatum
    control: StepControl
    checks: dict[str, dict] = dc_field(default_factory=dict)
    output_dir: str = "out"
    seed: int = 0

    def validate(self) -> list[str]:
        """Spec invariants plus satisfiability of each referenced check."""
        bad = list(validate_spec(self.spec).violations)
        bad += self.control.validate(self.spec.horizon)
        for name, params in self.checks.items():
            if name not in _CHECK_NAMES:
                bad.append(f"unknown check {name!r}")
                continue
            if name == "gradient_bound":
                s = self.spec
                if not (s.nu == 1 and s.p == 2 and s.gamma == 1 and s.lam == 0 and s.q <= 2):
                    bad.append("gradient_bound needs nu=1, p=2, gamma=1, lambda=0, q<=2")
            if name == "far_field":
                if not isinstance(self.datum, PowerTail):
                    bad.append("far_field needs a power_tail datum")
                n, r = self.spec.dim, float(params.get("r", 1.0))
                if not (1 < self.spec.q < (n + 2 * r) / (n + r)):
                    bad.append("far_field needs 1 < q < (N+2r)/(N+r)")
            if name == "universal_bound":
                s = self.spec
                if s.gamma == 0 and s.p <= 2:
                    bad.append("universal_bound needs gamma > 0 or p > 2")
            if name == "energy_ledger":
                rs = params.get("r", [1.0, 2.0])
                rs = rs if isinstance(rs, list) else [rs]
                if any(float(r) < 1 for r in rs):
                    bad.append("energy_ledger orders must be >= 1")
        return bad


def _parse_scalar(text: str):
    s = text.strip()
    low = s.lower()
    if low in ("on", "true", "yes"):
        return True
    if low in ("off", "false", "no"):
        return False
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s.strip("'\"")


def _parse_value(text: str):
    if "," in text:
        return [_parse_scalar(p) for p in text.split(",") if p.strip()]
    return _parse_scalar(text)


def _kv_to_nested(text: str) -> dict:
    root: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (part.strip() for part in line.split("=", 1))
        node = root
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"line {lineno}: key {key!r} conflicts with earlier value")
        node[parts[-1]] = _parse_value(val)
    return root


def _build_datum(d: dict) -> InitialDatum:
    d = dict(d)
    kind = str(d.pop("kind", "gaussian")).lower()
    sign = str(d.pop("sign", "nonnegative"))
    if kind not in _DATUM_KINDS:
        raise ConfigError(f"unknown datum kind {kind!r} (choose from {sorted(_DATUM_KINDS)})")
    cls, fields = _DATUM_KINDS[kind]
    unknown = set(d) - set(fields)
    if unknown:
        raise ConfigError(f"unknown datum keys for {kind}: {sorted(unknown)}")
    kwargs = {k: (str(v) if k == "path" else float(v)) for k, v in d.items()}
    return cls(sign=sign, **kwargs)


def _build_control(d: dict) -> StepControl:
    d = dict(d)
    snaps = d.pop("snapshot_times", ())
    if isinstance(snaps, (int, float)):
        snaps = (float(snaps),)
    else:
        snaps = tuple(float(t) for t in snaps)
    known = {"cfl_safety", "dt_min", "dt_max"}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown control keys: {sorted(unknown)}")
    return StepControl(
        cfl_safety=float(d.get("cfl_safety", 0.4)),
        dt_min=float(d.get("dt_min", 1e-14)),
        dt_max=float(d.get("dt_max", 0.1)),
        snapshot_times=snaps,
    )


def _normalize_checks(d: dict) -> dict[str, dict]:
    checks: dict[str, dict] = {}
    for name, params in d.items():
        if params is False:
            continue
        if params is True or params is None:
            checks[name] = {}
        elif isinstance(params, dict):
            checks[name] = dict(params)
        else:
            raise ConfigError(f"check {name!r}: expected a table of parameters or on/off")
    return checks


def parse_config(text: str) -> ExperimentConfig:
    """Parse JSON (leading '{') or flat dotted key=value text."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            nested = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"bad JSON config: {e}") from e
    else:
        nested = _kv_to_nested(text)
    known_top = {"spec", "datum", "control", "checks", "output_dir", "seed"}
    unknown = set(nested) - known_top
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
    try:
        spec = spec_from_dict(nested.get("spec", {}))
    except (ValueError, KeyError) as e:
        raise ConfigError(str(e)) from e
    datum = _build_datum(nested.get("datum", {"kind": "gaussian"}))
    control = _build_control(nested.get("control", {}))
    checks = _normalize_checks(nested.get("checks", {}))
    cfg = ExperimentConfig(
        spec=spec,
        datum=datum,
        control=control,
        checks=checks,
        output_dir=str(nested.get("output_dir", "out")),
        seed=int(nested.get("seed", 0)),
    )
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Canonical nested form (what the config echo artifact records)."""
    datum = cfg.datum
    kind = next(k for k, (cls, _) in _DATUM_KINDS.items() if isinstance(datum, cls))
    _, fields = _DATUM_KINDS[kind]
    datum_dict = {"kind": kind, "sign": datum.sign}
    datum_dict.update({f: getattr(datum, f) for f in fields})
    return {
        "spec": spec_to_dict(cfg.spec),
        "datum": datum_dict,
        "control": {
            "cfl_safety": cfg.control.cfl_safety,
            "dt_min": cfg.control.dt_min,
            "dt_max": cfg.control.dt_max,
            "snapshot_times": list(cfg.control.snapshot_times),
        },
        "checks": cfg.checks,
        "output_dir": cfg.output_dir,
        "seed": cfg.seed,
    }
