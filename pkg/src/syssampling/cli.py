"""Command-line front end.

Modes::

    theory    PRE table from summary statistics
    evaluate  first-order values against exact enumeration for a population file
    sweep     PRE of every estimator over a grid of intraclass correlations
    generate  write a synthetic population file

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Sequence, TextIO

from .errors import DataError, NumericalError, SamplingError
from .estimators import ESTIMATORS, optimal_constants
from .evaluate import (
    ARRANGEMENTS,
    REFERENCE_PRE_T4,
    compare_theory_exact,
    forest_summary,
    generate_population,
    make_grid,
    rho_sweep_t4,
)
from .population import (
    SummaryStats,
    moments_from_summary,
    population_to_text,
    read_population,
    write_population,
)
from .theory import pre_table

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

MODES = ("theory", "evaluate", "sweep", "generate")
FORMATS = ("table", "csv", "json")
SUMMARY_FLAGS = ("N", "mean_y", "mean_x", "s2_y", "s2_x", "rho")


@dataclass
class RunConfig:
    mode: str
    n: int | None = None
    input: str | None = None
    output: str | None = None
    estimators: tuple[str, ...] = ESTIMATORS
    seed: int = 0
    cap_n: int | None = None
    fmt: str = "table"
    rho_w: float | None = None
    grid: tuple[float, float, float] | None = None
    summary: dict = field(default_factory=dict)
    cv_y: float | None = None
    cv_x: float | None = None
    arrangement: str = "shuffled"
    periodic_share: float = 1.0
    target: float = REFERENCE_PRE_T4
    workers: int = 1

    def summary_stats(self, rho_w: float = 0.0) -> SummaryStats:
        s = self.summary
        return SummaryStats(
            N=s["N"],
            n=self.n,
            mean_y=s["mean_y"],
            mean_x=s["mean_x"],
            s2_y=s["s2_y"],
            s2_x=s["s2_x"],
            rho=s["rho"],
            rho_wy=rho_w,
            rho_wx=rho_w,
        )


def _grid_arg(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected lo:hi:step, got {text!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"unparsable grid {text!r}") from None
    if not step > 0:
        raise argparse.ArgumentTypeError("grid step must be positive")
    if hi < lo:
        raise argparse.ArgumentTypeError("grid hi must not be below lo")
    return lo, hi, step


def _estimators_arg(text: str) -> tuple[str, ...]:
    names = tuple(t.strip() for t in text.split(",") if t.strip())
    bad = [t for t in names if t not in ESTIMATORS]
    if bad or not names:
        raise argparse.ArgumentTypeError(
            f"unknown estimator(s) {','.join(bad) or text!r}; choose from {','.join(ESTIMATORS)}"
        )
    return names


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="syssampling",
        description="Ratio, product and exponential estimators under systematic sampling.",
    )
    p.add_argument("--mode", choices=MODES, required=True)
    p.add_argument("--input", help="population file (header y,x)")
    p.add_argument("--output", help="generate: write here instead of stdout")
    p.add_argument("--n", type=int, help="sample size")
    p.add_argument("--estimators", type=_estimators_arg, default=ESTIMATORS,
                   help="comma list from t0..t4 (default all)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", dest="fmt", choices=FORMATS, default="table")
    p.add_argument("--rho-w", type=float, help="common intraclass correlation (theory)")
    p.add_argument("--grid", type=_grid_arg,
                   help="lo:hi:step for sweep (default: just above -1/(n-1) to 0.99 by 0.001)")
    p.add_argument("--cap-n", type=int, help="shift constant of t4 (default N)")
    p.add_argument("--target", type=float, default=REFERENCE_PRE_T4,
                   help="sweep: PRE(t4) to match (default %(default)s)")
    p.add_argument("--workers", type=int, default=1, help="sweep: threads")

    g = p.add_argument_group("summary statistics")
    g.add_argument("--preset", choices=("forest",),
                   help="fill summary statistics with the 176-block forest population")
    g.add_argument("--N", type=int)
    g.add_argument("--mean-y", type=float)
    g.add_argument("--mean-x", type=float)
    g.add_argument("--s2-y", type=float)
    g.add_argument("--s2-x", type=float)
    g.add_argument("--rho", type=float)

    g = p.add_argument_group("generate")
    g.add_argument("--cv-y", type=float)
    g.add_argument("--cv-x", type=float)
    g.add_argument("--arrangement", choices=ARRANGEMENTS, default="shuffled")
    g.add_argument("--periodic-share", type=float, default=1.0)
    return p


def parse_args(argv: Sequence[str] | None = None) -> RunConfig:
    """Parse ``argv`` into a :class:`RunConfig`; usage errors exit with status 2."""
    parser = build_parser()
    a = parser.parse_args(argv)

    summary = {}
    if a.preset == "forest":
        fs = forest_summary()
        summary = {name: getattr(fs, name) for name in SUMMARY_FLAGS}
        if a.n is None:
            a.n = fs.n
    for name in SUMMARY_FLAGS:
        if getattr(a, name) is not None:
            summary[name] = getattr(a, name)

    def need(*names):
        missing = [f"--{n.replace('_', '-')}" for n in names if getattr(a, n) is None]
        if missing:
            parser.error(f"--mode {a.mode} requires {' '.join(missing)}")

    if a.n is not None and a.n < 1:
        parser.error("--n must be >= 1")
    if a.cap_n is not None and a.cap_n < 0:
        parser.error("--cap-n must be >= 0")
    if a.workers < 1:
        parser.error("--workers must be >= 1")

    if a.mode in ("theory", "sweep"):
        need("n")
        missing = [f"--{n.replace('_', '-')}" for n in SUMMARY_FLAGS if n not in summary]
        if missing:
            parser.error(f"--mode {a.mode} requires {' '.join(missing)} (or --preset)")
        if a.mode == "theory":
            need("rho_w")
    elif a.mode == "evaluate":
        need("input", "n")
    elif a.mode == "generate":
        need("N", "n", "rho", "cv_y", "cv_x")

    return RunConfig(
        mode=a.mode,
        n=a.n,
        input=a.input,
        output=a.output,
        estimators=a.estimators,
        seed=a.seed,
        cap_n=a.cap_n,
        fmt=a.fmt,
        rho_w=a.rho_w,
        grid=a.grid,
        summary=summary,
        cv_y=a.cv_y,
        cv_x=a.cv_x,
        arrangement=a.arrangement,
        periodic_share=a.periodic_share,
        target=a.target,
        workers=a.workers,
    )


def _num(v: float) -> float | None:
    return v if math.isfinite(v) else None


def _fmt_pre(v: float) -> str:
    if math.isinf(v):
        return "exact"
    if math.isnan(v):
        return "invalid"
    return f"{v:.2f}"


def _render(fmt: str, header: Sequence[str], rows: list[list], doc: dict, table_rows: list[list[str]],
            footer: Sequence[str] = ()) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])
        for line in footer:
            buf.write(f"# {line}\n")
        return buf.getvalue()
    widths = [max(len(h), *(len(r[i]) for r in table_rows)) if table_rows else len(h)
              for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in table_rows]
    lines += list(footer)
    return "\n".join(lines) + "\n"


def _run_theory(cfg: RunConfig) -> str:
    m = moments_from_summary(cfg.summary_stats(cfg.rho_w))
    cap_n = m.N if cfg.cap_n is None else cfg.cap_n
    table = [r for r in pre_table(m, cap_n) if r.estimator in cfg.estimators]
    tc = optimal_constants(m, cap_n)
    header = ["estimator", "variance_or_mse", "bias", "pre"]
    rows = [[r.estimator, r.variance_or_mse, r.bias, r.pre] for r in table]
    footer = [f"t4 constants: k1={tc.k1:.6g} k2={tc.k2:.6g} cap_n={cap_n}"] if "t4" in cfg.estimators else []
    doc = {
        "mode": "theory",
        "rho_w": cfg.rho_w,
        "cap_n": cap_n,
        "rows": [
            {"estimator": r.estimator, "variance_or_mse": r.variance_or_mse, "bias": r.bias,
             "pre": _num(r.pre), "status": r.status}
            for r in table
        ],
        "t4_constants": {"k1": tc.k1, "k2": tc.k2},
    }
    table_rows = [[r.estimator, f"{r.variance_or_mse:.6g}", f"{r.bias:.6g}", _fmt_pre(r.pre)] for r in table]
    return _render(cfg.fmt, header, rows, doc, table_rows, footer)


def _run_evaluate(cfg: RunConfig) -> str:
    pop = read_population(cfg.input)
    rows_ = compare_theory_exact(pop, cfg.n, cfg.estimators, cfg.cap_n)
    header = ["estimator", "quantity", "theory", "exact", "rel_error"]
    rows = [[r.estimator, r.quantity, r.theory_value, r.exact_value, r.rel_error] for r in rows_]
    doc = {
        "mode": "evaluate",
        "N": pop.N,
        "n": cfg.n,
        "rows": [
            {"estimator": r.estimator, "quantity": r.quantity, "theory": r.theory_value,
             "exact": r.exact_value, "rel_error": _num(r.rel_error)}
            for r in rows_
        ],
    }
    table_rows = [
        [r.estimator, r.quantity, f"{r.theory_value:.6g}", f"{r.exact_value:.6g}", f"{r.rel_error:.2e}"]
        for r in rows_
    ]
    return _render(cfg.fmt, header, rows, doc, table_rows)


def default_grid(n: int, step: float = 1e-3, hi: float = 0.99) -> list[float]:
    """Grid on ``(-1/(n-1), hi]`` whose first point is the first step multiple inside."""
    lower = -1.0 / (n - 1) if n > 1 else -1.0
    lo = (math.floor(lower / step) + 1) * step
    return make_grid(lo, hi, step)


def _run_sweep(cfg: RunConfig) -> str:
    s = cfg.summary_stats()
    grid = make_grid(*cfg.grid) if cfg.grid else default_grid(cfg.n)
    res = rho_sweep_t4(s, grid, cfg.cap_n, target=cfg.target, workers=cfg.workers)
    best = res.best
    if best is None:
        footer = ["best match: none (every grid point singular)"]
    else:
        footer = [
            f"best match: rho_w={best.rho_w:.6g} pre_t4={best.pre_t4:.2f} "
            f"(target {res.target:.2f}, rel diff {100 * (best.pre_t4 / res.target - 1):+.2f}%)"
        ]
    doc = {
        "mode": "sweep",
        "cap_n": res.cap_n,
        "target": res.target,
        "rows": [
            {"rho_w": r.rho_w, "pre_t1": _num(r.pre_t1), "pre_t2": _num(r.pre_t2),
             "pre_t3": _num(r.pre_t3), "pre_t4": _num(r.pre_t4), "status": r.status}
            for r in res.rows
        ],
        "best_match": None if best is None else {"rho_w": best.rho_w, "pre_t4": best.pre_t4},
    }
    if cfg.fmt == "csv":
        header = ["rho_w", "pre_t4"]
        rows = [[r.rho_w, r.pre_t4] for r in res.rows]
    else:
        header = ["rho_w", "pre_t1", "pre_t2", "pre_t3", "pre_t4"]
        rows = []
    table_rows = [
        [f"{r.rho_w:.4f}", *(_fmt_pre(v) for v in (r.pre_t1, r.pre_t2, r.pre_t3, r.pre_t4))]
        for r in res.rows
    ]
    return _render(cfg.fmt, header, rows, doc, table_rows, footer)


def _run_generate(cfg: RunConfig) -> str:
    kw = {}
    if "mean_y" in cfg.summary:
        kw["mean_y"] = cfg.summary["mean_y"]
    if "mean_x" in cfg.summary:
        kw["mean_x"] = cfg.summary["mean_x"]
    pop = generate_population(
        cfg.summary["N"], cfg.n, cfg.summary["rho"], cfg.cv_y, cfg.cv_x,
        cfg.arrangement, cfg.seed, periodic_share=cfg.periodic_share, **kw,
    )
    if cfg.output is None:
        return population_to_text(pop)
    write_population(pop, cfg.output)
    return f"wrote {pop.N} units to {cfg.output}\n"


def run(cfg: RunConfig, out: TextIO | None = None, err: TextIO | None = None) -> int:
    """Execute ``cfg``, writing the report to ``out``; returns the exit status."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        if cfg.mode == "theory":
            text = _run_theory(cfg)
        elif cfg.mode == "evaluate":
            text = _run_evaluate(cfg)
        elif cfg.mode == "sweep":
            text = _run_sweep(cfg)
        elif cfg.mode == "generate":
            text = _run_generate(cfg)
        else:
            err.write(f"syssampling: error: unknown mode {cfg.mode!r}\n")
            return EXIT_USAGE
    except NumericalError as exc:
        err.write(f"syssampling: numerical error: {exc}\n")
        return EXIT_NUMERIC
    except DataError as exc:
        err.write(f"syssampling: data error: {exc}\n")
        return EXIT_DATA
    except SamplingError as exc:
        err.write(f"syssampling: error: {exc}\n")
        return EXIT_DATA
    out.write(text)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    return run(parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
