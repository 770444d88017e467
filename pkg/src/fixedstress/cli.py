"""Command-line driver for omega sweeps.

Precedence: command-line flags, then the config file (flat YAML/JSON mapping
with the same keys as the long flags), then built-in defaults.
"""
from __future__ import annotations

import argparse
import logging
import re
import sys
from pathlib import Path
from typing import Any, Sequence

import yaml

from .biot import StoppingConfig
from .cases import DT, T_END, make_case, parse_case_id
from .sweep import SweepConfig, find_optimal_omega, NoConvergentOmega, run_sweep, write_reports

log = logging.getLogger(__name__)

KEYS = {
    "case": str,
    "omega-start": float,
    "omega-end": float,
    "omega-step": float,
    "mesh-n": int,
    "dt": float,
    "t-end": float,
    "tol-rel": float,
    "max-iter": int,
    "out": str,
    "workers": int,
    "variation": list,
    "timing": bool,
}


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # one machine-parsable line instead of usage text
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fixedstress", description="Sweep the fixed-stress tuning parameter.")
    p.add_argument("--config", help="YAML or JSON file with default values for the flags")
    p.add_argument("--case", help="test case id: 1a, 1b, 1c or 2")
    p.add_argument("--omega-start", type=str)
    p.add_argument("--omega-end", type=str)
    p.add_argument("--omega-step", type=str)
    p.add_argument("--mesh-n", type=str, help="cells per unit length (even)")
    p.add_argument("--dt", type=str)
    p.add_argument("--t-end", type=str)
    p.add_argument("--tol-rel", type=str)
    p.add_argument("--max-iter", type=str)
    p.add_argument("--out", help="output directory for CSV, summary and data files")
    p.add_argument("--workers", type=str)
    p.add_argument(
        "--variation",
        action="append",
        help="restrict to one variation value, e.g. nu=0.3 or k=1e0mD (repeatable)",
    )
    p.add_argument("--timing", action="store_true", default=None, help="record wall times in the CSV")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _number(key: str, raw: Any, kind: type) -> Any:
    try:
        if kind is int:
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError
            return int(raw)
        return kind(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"malformed value for {key}: {raw!r}") from None


_VARIATION = re.compile(r"^\s*(?:(?P<axis>[A-Za-z_]+)\s*=\s*)?(?P<num>[-+0-9.eE]+)\s*(?P<unit>md)?\s*$", re.I)


def parse_variation(raw: str | float, axis: str) -> float:
    if isinstance(raw, (int, float)):
        return float(raw)
    m = _VARIATION.match(str(raw))
    if not m:
        raise ConfigError(f"malformed variation {raw!r}")
    if m["axis"] and m["axis"].lower() != axis:
        raise ConfigError(f"this case varies {axis!r}, not {m['axis']!r}")
    if m["unit"] and axis != "k":
        raise ConfigError(f"unit mD only applies to permeability, got {raw!r}")
    try:
        return float(m["num"])
    except ValueError:
        raise ConfigError(f"malformed variation {raw!r}") from None


def load_config_file(path: str | Path) -> dict[str, Any]:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a flat mapping")
    out = {}
    for k, v in data.items():
        key = str(k).replace("_", "-")
        if key not in KEYS:
            raise ConfigError(f"unknown config key {k!r}")
        out[key] = v
    return out


def parse_config(argv: Sequence[str] | None = None, config_file: str | Path | None = None) -> tuple[SweepConfig, bool]:
    """Return the sweep configuration and whether wall times go into the CSV."""
    ns = build_parser().parse_args(argv)
    values: dict[str, Any] = {}
    file_path = ns.config or config_file
    if file_path:
        values.update(load_config_file(file_path))
    for key in KEYS:
        v = getattr(ns, key.replace("-", "_"), None)
        if v is not None:
            values[key] = v
    if "case" not in values:
        raise ConfigError("missing --case (valid ids: 1a, 1b, 1c, 2)")
    try:
        cid = parse_case_id(values["case"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    case = make_case(cid)
    get = lambda key, default: _number(key, values[key], KEYS[key]) if key in values else default  # noqa: E731

    variations = case.variation
    if "variation" in values:
        raw = values["variation"]
        raw = raw if isinstance(raw, list) else [raw]
        variations = tuple(parse_variation(v, case.variation_axis) for v in raw)

    step = get("omega-step", 0.01)
    if not step > 0:
        raise ConfigError(f"omega-step must be positive, got {step}")
    n = get("mesh-n", 16)
    if n < 2 or n % 2:
        raise ConfigError(f"mesh-n must be an even integer >= 2, got {n}")
    try:
        stopping = StoppingConfig(tol_rel=get("tol-rel", 1e-6), max_iter=get("max-iter", 2000))
        cfg = SweepConfig(
            case=cid,
            variations=variations,
            omega_start=get("omega-start", 0.5),
            omega_end=get("omega-end", 1.3),
            omega_step=step,
            mesh_n=n,
            dt=get("dt", DT),
            t_end=get("t-end", T_END),
            stopping=stopping,
            out=Path(values["out"]) if "out" in values else None,
            workers=get("workers", 1),
        )
        cfg.omegas  # validates the grid
        for v in variations:
            make_case(cid, **{case.variation_axis: v})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    timing = bool(values.get("timing", False))
    return cfg, timing


def main(argv: Sequence[str] | None = None) -> int:
    args = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(
        level=logging.INFO if ("-v" in args or "--verbose" in args) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg, timing = parse_config(args)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    table = run_sweep(cfg)
    axis = table.variation_axis
    for v in table.variations:
        try:
            best = find_optimal_omega(table, v)
            print(f"case {cfg.case.value} {axis}={v:g}: omega*={best.omega:g} iterations={best.iterations}")
        except NoConvergentOmega:
            print(f"case {cfg.case.value} {axis}={v:g}: no convergent omega")
    if cfg.out is not None:
        try:
            paths = write_reports(table, cfg.out, include_timing=timing)
        except OSError as exc:
            print(f"error: io: {exc}", file=sys.stderr)
            return 1
        for p in paths:
            print(f"wrote {p}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
