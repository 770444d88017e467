"""Omega sweeps over the tuning catalog, optimum search and report files."""
from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .biot import StoppingConfig, run_simulation
from .cases import DT, T_END, CaseId, make_case, parse_case_id
from .tuning import TuningSpec

log = logging.getLogger(__name__)

CSV_HEADER = ("case", "variation", "omega", "kdr_pa", "iterations", "converged", "wall_s")


def omega_grid(start: float, end: float, step: float) -> list[float]:
    """Inclusive grid start, start + step, ..., rounded to kill float drift."""
    if not step > 0:
        raise ValueError(f"omega step must be positive, got {step}")
    if end < start:
        raise ValueError(f"omega end {end} lies below start {start}")
    count = int(math.floor((end - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(count)]


@dataclass(frozen=True)
class SweepConfig:
    case: CaseId
    variations: tuple[float, ...]
    omega_start: float = 0.5
    omega_end: float = 1.3
    omega_step: float = 0.01
    mesh_n: int = 16
    dt: float = DT
    t_end: float = T_END
    stopping: StoppingConfig = field(default_factory=StoppingConfig)
    out: Path | None = None
    workers: int = 1

    @classmethod
    def for_case(cls, case: str | CaseId, **kw) -> "SweepConfig":
        cid = parse_case_id(case)
        kw.setdefault("variations", make_case(cid).variation)
        return cls(case=cid, **kw)

    @property
    def omegas(self) -> list[float]:
        return omega_grid(self.omega_start, self.omega_end, self.omega_step)


@dataclass(frozen=True)
class SweepRow:
    case: str
    variation: float
    omega: float
    kdr_pa: float
    iterations: int
    converged: bool
    wall_s: float


@dataclass
class SweepTable:
    case: CaseId
    variation_axis: str
    rows: list[SweepRow]

    def for_variation(self, value: float) -> list[SweepRow]:
        return [r for r in self.rows if r.variation == value]

    @property
    def variations(self) -> list[float]:
        return sorted({r.variation for r in self.rows})


@dataclass(frozen=True)
class OptimalOmega:
    omega: float
    iterations: int
    kdr_pa: float


class NoConvergentOmega(LookupError):
    pass


def _run_point(args: tuple) -> SweepRow:
    case_id, axis, value, omega, n, dt, t_end, stopping = args
    case = make_case(case_id, **{axis: value})
    rep = run_simulation(case, TuningSpec(case.sweep_base, omega), stopping, n=n, dt=dt, t_end=t_end)
    return SweepRow(
        case=case_id.value,
        variation=value,
        omega=omega,
        kdr_pa=rep.kdr,
        iterations=rep.accumulated_iterations,
        converged=rep.converged,
        wall_s=rep.wall_s,
    )


def run_sweep(cfg: SweepConfig) -> SweepTable:
    """Run every (variation, omega) pair; rows come back sorted by (variation, omega)."""
    axis = make_case(cfg.case).variation_axis
    tasks = [
        (cfg.case, axis, float(v), w, cfg.mesh_n, cfg.dt, cfg.t_end, cfg.stopping)
        for v in sorted(set(cfg.variations))
        for w in cfg.omegas
    ]
    log.info("case %s: %d runs on %d worker(s)", cfg.case.value, len(tasks), cfg.workers)
    if cfg.workers <= 1:
        rows = [_run_point(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (4 * cfg.workers))
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_run_point, tasks, chunksize=chunk))
    rows.sort(key=lambda r: (r.variation, r.omega))
    return SweepTable(case=cfg.case, variation_axis=axis, rows=rows)


def find_optimal_omega(table: SweepTable | Sequence[SweepRow], variation: float | None = None) -> OptimalOmega:
    """Minimal accumulated iterations among converged rows; ties go to the smaller omega."""
    rows = table.rows if isinstance(table, SweepTable) else list(table)
    if variation is not None:
        rows = [r for r in rows if r.variation == variation]
    ok = [r for r in rows if r.converged]
    if not ok:
        raise NoConvergentOmega(f"no convergent omega for variation {variation}")
    best = min(ok, key=lambda r: (r.iterations, r.omega))
    return OptimalOmega(best.omega, best.iterations, best.kdr_pa)


def _fmt(x: float) -> str:
    return repr(float(x))


def table_to_csv(table: SweepTable | Iterable[SweepRow], include_timing: bool = False) -> str:
    """CSV text with LF line endings.

    Wall times are machine noise, so unless ``include_timing`` is set the
    ``wall_s`` column holds ``nan`` and the file is reproducible byte for byte.
    """
    rows = table.rows if isinstance(table, SweepTable) else list(table)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(
            [
                r.case,
                _fmt(r.variation),
                _fmt(r.omega),
                _fmt(r.kdr_pa),
                str(r.iterations),
                "true" if r.converged else "false",
                _fmt(r.wall_s) if include_timing else "nan",
            ]
        )
    return buf.getvalue()


def parse_csv(text: str) -> list[SweepRow]:
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    if header != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {header}")
    return [
        SweepRow(
            case=c,
            variation=float(v),
            omega=float(o),
            kdr_pa=float(k),
            iterations=int(i),
            converged=conv == "true",
            wall_s=float(ws),
        )
        for c, v, o, k, i, conv, ws in reader
    ]


def _variation_label(axis: str, value: float) -> str:
    return f"k={value:g}mD" if axis == "k" else f"nu={value:g}"


def summary_markdown(table: SweepTable) -> str:
    lines = [f"# Fixed-stress sweep, case {table.case.value}", ""]
    for v in table.variations:
        label = _variation_label(table.variation_axis, v)
        rows = table.for_variation(v)
        failed = sum(not r.converged for r in rows)
        try:
            best = find_optimal_omega(rows)
        except NoConvergentOmega:
            lines.append(f"- {label}: no convergent omega ({len(rows)} runs)")
            continue
        lines.append(
            f"- {label}: omega* = {best.omega:g}, iterations = {best.iterations}, "
            f"K_dr* = {best.kdr_pa:.6e} Pa ({failed} of {len(rows)} runs nonconverged)"
        )
    return "\n".join(lines) + "\n"


def write_reports(table: SweepTable, out_dir: str | Path, include_timing: bool = False) -> list[Path]:
    """Write the CSV, the Markdown summary and one ``omega iterations`` file per variation."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"case{table.case.value}"
    paths = []
    csv_path = out / f"{stem}_sweep.csv"
    csv_path.write_bytes(table_to_csv(table, include_timing).encode())
    paths.append(csv_path)
    md_path = out / f"{stem}_summary.md"
    md_path.write_bytes(summary_markdown(table).encode())
    paths.append(md_path)
    for v in table.variations:
        label = _variation_label(table.variation_axis, v)
        dat = out / f"{stem}_{label}.dat"
        body = [f"# omega iterations ({label}; nonconverged runs omitted)"]
        body += [f"{r.omega!r} {r.iterations}" for r in table.for_variation(v) if r.converged]
        dat.write_bytes(("\n".join(body) + "\n").encode())
        paths.append(dat)
    return paths


def default_workers() -> int:
    return max(1, min(4, os.cpu_count() or 1))


def iterations_at(table: SweepTable, variation: float, omega: float) -> SweepRow:
    for r in table.for_variation(variation):
        if np.isclose(r.omega, omega, rtol=0, atol=1e-9):
            return r
    raise KeyError(f"no row for variation {variation}, omega {omega}")
