"""Sweeps over E, iterated-log slope fits, CSV/SVG output and the command line.

Config files are INI-style (``configparser``) with four sections::

    [potential]
    family = power-law        ; power-law | critical | iterated-log
    c = 1.0
    delta = 1.0               ; power-law only
    N = 1                     ; iterated-log only
    a = 0.0
    eps = 1.0
    rho0 = auto               ; or a number

    [boundary]
    kind = sphere             ; sphere | torus
    n = 1                     ; sphere dimension
    lengths = 6.283           ; torus side lengths, comma separated

    [sweep]
    E_max = 0.2
    E_min = 0.03
    E_count = 8
    bc = dirichlet            ; dirichlet | neumann | both
    rtol = 1e-9
    atol = 1e-12

    [output]
    csv = sweep.csv
    svg = sweep.svg
    fit_level = 2
    timings = false           ; true fills the ms column (breaks byte identity)

    [run]
    workers = 1

Unknown sections or keys are rejected.  The worker count falls back to the
HYPCOUNT_WORKERS environment variable.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import os
import random
import sys
import time
import xml.etree.ElementTree as ET
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import stats

from .boundary_spectrum import BoundarySpectrum
from .discrete_oracle import (
    TridiagonalOperator,
    bracketing_demo,
    fd_tridiagonal,
    inertia_below,
    oracle_grid,
)
from .mode_aggregation import _log_zeta, _Prober, _search, assemble_count, cutoff_estimate
from .potential_model import BoundaryCondition, Family, PotentialSpec, RadialProblem
from .radial_oscillation import Certified, prufer_count

__all__ = [
    "ExperimentConfig",
    "ConfigError",
    "SweepRow",
    "FitResult",
    "InsufficientRowsError",
    "run_sweep",
    "fit_iterated_log_slope",
    "render_svg",
    "write_csv",
    "read_csv",
    "oracle_check",
    "bracketing_check",
    "random_instance",
    "cli_main",
    "main",
    "WORKERS_ENV",
    "CSV_SCHEMA",
]

WORKERS_ENV = "HYPCOUNT_WORKERS"
CSV_SCHEMA = "hypcount-sweep/1"
CSV_COLUMNS = ["schema", "family", "c", "delta", "N", "a", "eps", "rho0", "n", "bc", "E",
               "log10_NE", "Z0", "breakpoints", "log10_mu_upper", "probes", "ms", "flags"]


class ConfigError(ValueError):
    """Malformed or incomplete experiment configuration."""


class InsufficientRowsError(ValueError):
    """Too few rows with a defined iterated logarithm for a fit."""


# -- config ------------------------------------------------------------------------

_SCHEMA = {
    "potential": {"family": str, "c": float, "delta": float, "N": int, "a": float,
                  "eps": float, "rho0": str},
    "boundary": {"kind": str, "n": int, "lengths": str},
    "sweep": {"E_max": float, "E_min": float, "E_count": int, "bc": str,
              "rtol": float, "atol": float},
    "output": {"csv": str, "svg": str, "fit_level": int, "timings": bool},
    "run": {"workers": int},
}


@dataclass(frozen=True)
class ExperimentConfig:
    family: Family
    c: float
    delta: float = 0.0
    N: int = 1
    a: float = 0.0
    eps: float = 1.0
    rho0: float | None = None
    boundary_kind: str = "sphere"
    n: int = 1
    lengths: tuple[float, ...] = ()
    E_max: float = 0.2
    E_min: float = 0.03
    E_count: int = 6
    bcs: tuple[BoundaryCondition, ...] = (BoundaryCondition.DIRICHLET,)
    rtol: float = 1e-9
    atol: float = 1e-12
    csv_path: str | None = None
    svg_path: str | None = None
    fit_level: int = 2
    timings: bool = False
    workers: int | None = None

    def __post_init__(self):
        if not (self.E_max > 0 and self.E_min > 0 and self.E_max > self.E_min):
            raise ConfigError("need E_max > E_min > 0")
        if self.E_count < 2:
            raise ConfigError("E_count must be >= 2")
        if self.boundary_kind not in ("sphere", "torus"):
            raise ConfigError(f"unknown boundary kind {self.boundary_kind!r}")

    @property
    def E_grid(self) -> list[float]:
        """Geometric grid, strictly decreasing."""
        return [float(v) for v in np.geomspace(self.E_max, self.E_min, self.E_count)]

    def spec(self) -> PotentialSpec:
        kw = dict(a=self.a, eps=self.eps, rho0=self.rho0)
        if self.family is Family.POWER_LAW:
            return PotentialSpec.power_law(self.c, self.delta, **kw)
        if self.family is Family.CRITICAL:
            return PotentialSpec.critical(self.c, **kw)
        return PotentialSpec.iterated_log(self.N, self.c, **kw)

    def boundary(self) -> BoundarySpectrum:
        if self.boundary_kind == "sphere":
            return BoundarySpectrum.sphere(self.n)
        return BoundarySpectrum.flat_torus(self.lengths)

    @classmethod
    def from_text(cls, text: str, base_dir: str | Path = ".") -> "ExperimentConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        vals: dict[str, object] = {}
        for sec in cp.sections():
            if sec not in _SCHEMA:
                raise ConfigError(f"unknown section [{sec}]")
            for key, raw in cp.items(sec):
                typ = _SCHEMA[sec].get(key)
                if typ is None:
                    raise ConfigError(f"unknown key {key!r} in [{sec}]")
                try:
                    if typ is bool:
                        v = cp.getboolean(sec, key)
                    else:
                        v = typ(raw)
                except ValueError:
                    raise ConfigError(f"bad value for {sec}.{key}: {raw!r}") from None
                vals[f"{sec}.{key}"] = v
        if "potential.family" not in vals or "potential.c" not in vals:
            raise ConfigError("[potential] needs family and c")
        try:
            fam = Family(str(vals["potential.family"]).strip().lower())
        except ValueError:
            raise ConfigError(f"unknown family {vals['potential.family']!r}") from None
        rho0_raw = str(vals.get("potential.rho0", "auto")).strip().lower()
        rho0 = None if rho0_raw == "auto" else float(rho0_raw)
        bc_raw = str(vals.get("sweep.bc", "dirichlet")).strip().lower()
        bcs = (BoundaryCondition.DIRICHLET, BoundaryCondition.NEUMANN) if bc_raw == "both" \
            else (BoundaryCondition.parse(bc_raw),)
        lengths = tuple(float(v) for v in str(vals.get("boundary.lengths", "")).split(",") if v.strip())
        base = Path(base_dir)

        def out(key):
            v = vals.get(key)
            return None if v in (None, "") else str(base / str(v))

        kw = dict(
            family=fam, c=float(vals["potential.c"]),
            delta=float(vals.get("potential.delta", 0.0)), N=int(vals.get("potential.N", 1)),
            a=float(vals.get("potential.a", 0.0)), eps=float(vals.get("potential.eps", 1.0)),
            rho0=rho0, boundary_kind=str(vals.get("boundary.kind", "sphere")).strip().lower(),
            n=int(vals.get("boundary.n", len(lengths) or 1)), lengths=lengths,
            E_max=float(vals.get("sweep.E_max", 0.2)), E_min=float(vals.get("sweep.E_min", 0.03)),
            E_count=int(vals.get("sweep.E_count", 6)), bcs=bcs,
            rtol=float(vals.get("sweep.rtol", 1e-9)), atol=float(vals.get("sweep.atol", 1e-12)),
            csv_path=out("output.csv"), svg_path=out("output.svg"),
            fit_level=int(vals.get("output.fit_level", 2)),
            timings=bool(vals.get("output.timings", False)),
            workers=vals.get("run.workers"),
        )
        cfg = cls(**kw)
        cfg.spec()  # validate the potential now rather than inside a worker
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        return cls.from_text(p.read_text(encoding="utf-8"), p.parent)


# -- sweep -------------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass(frozen=True)
class SweepRow:
    family: str
    c: float
    delta: float | None
    N: int | None
    a: float
    eps: float
    rho0: float
    n: int
    bc: str
    E: float
    log10_NE: float
    Z0: int
    breakpoints: int
    log10_mu_upper: float
    probes: int
    ms: int | None = None
    flags: tuple[str, ...] = ()

    def cells(self) -> list[str]:
        return [CSV_SCHEMA, self.family, _fmt(self.c), _fmt(self.delta), _fmt(self.N),
                _fmt(self.a), _fmt(self.eps), _fmt(self.rho0), str(self.n), self.bc,
                _fmt(self.E), _fmt(self.log10_NE), str(self.Z0), str(self.breakpoints),
                _fmt(self.log10_mu_upper), str(self.probes), _fmt(self.ms), ";".join(self.flags)]

    @classmethod
    def from_cells(cls, row: dict) -> "SweepRow":
        if row["schema"] != CSV_SCHEMA:
            raise ValueError(f"unsupported CSV schema {row['schema']!r}")

        def opt(v, typ):
            return None if v == "" else typ(v)

        return cls(row["family"], float(row["c"]), opt(row["delta"], float), opt(row["N"], int),
                   float(row["a"]), float(row["eps"]), float(row["rho0"]), int(row["n"]),
                   row["bc"], float(row["E"]), float(row["log10_NE"]), int(row["Z0"]),
                   int(row["breakpoints"]), float(row["log10_mu_upper"]), int(row["probes"]),
                   opt(row["ms"], int), tuple(f for f in row["flags"].split(";") if f))


def _row_task(args):
    spec, boundary, E, bc, rtol, atol, timings = args
    t0 = time.perf_counter()
    p = spec.params()
    base = dict(family=p["family"], c=spec.c,
                delta=spec.delta if spec.family is Family.POWER_LAW else None,
                N=spec.N if spec.family is Family.ITERATED_LOG else None,
                a=spec.a, eps=spec.eps, rho0=spec.rho0, n=boundary.n, bc=bc.value, E=E)
    try:
        r = assemble_count(spec, boundary, E, bc, rtol=rtol, atol=atol)
        flags = list(r.flags)
        if r.precision != "exact":
            flags.append(f"log10-err-{r.log10_err:.1e}")
        row = SweepRow(**base, log10_NE=r.log10_NE, Z0=r.Z0,
                       breakpoints=len(r.breakpoints),
                       log10_mu_upper=r.cutoff.log10_mu_upper, probes=r.probes,
                       flags=tuple(flags))
    except Exception as exc:  # recorded per row, the sweep goes on
        msg = f"error:{type(exc).__name__}:{exc}".replace(";", ",").replace("\n", " ")
        row = SweepRow(**base, log10_NE=math.nan, Z0=-1, breakpoints=0,
                       log10_mu_upper=math.nan, probes=0, flags=(msg,))
    if timings:
        row = replace(row, ms=int(round(1000 * (time.perf_counter() - t0))))
    return row


def _worker_count(requested: int | None) -> int:
    if requested is None:
        env = os.environ.get(WORKERS_ENV, "").strip()
        requested = int(env) if env else 1
    if requested < 1:
        raise ValueError("worker count must be >= 1")
    return requested


def run_sweep(config: ExperimentConfig, *, workers: int | None = None) -> list[SweepRow]:
    """One row per (E, bc), in decreasing E with Dirichlet before Neumann.

    Rows are computed independently (optionally in a process pool) and
    collected in that fixed order, so output never depends on scheduling.
    """
    spec = config.spec()
    boundary = config.boundary()
    tasks = [(spec, boundary, E, bc, config.rtol, config.atol, config.timings)
             for E in config.E_grid for bc in config.bcs]
    nw = _worker_count(workers if workers is not None else config.workers)
    if nw == 1 or len(tasks) == 1:
        rows = [_row_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=nw) as ex:
            rows = list(ex.map(_row_task, tasks))
    if config.csv_path:
        write_csv(rows, config.csv_path)
    if config.svg_path:
        ok = [r for r in rows if math.isfinite(r.log10_NE)]
        try:
            render_svg(ok, config.svg_path, level=config.fit_level)
        except (ValueError, InsufficientRowsError):
            pass
    return rows


def csv_text(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def write_csv(rows: list[SweepRow], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(rows))


def read_csv(path: str | Path) -> list[SweepRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        return [SweepRow.from_cells(r) for r in csv.DictReader(fh)]


# -- slope fits ----------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    slope: float
    stderr: float
    intercept: float
    used: int
    dropped: int
    level: int

    def __iter__(self):
        return iter((self.slope, self.stderr))


def _iterate_log(v: float, times: int) -> float | None:
    for _ in range(times):
        if not v > 0:
            return None
        v = math.log(v)
    return v


def _level_value(log10_NE: float, level: int) -> float | None:
    """log_(level) N from log10 N, or None when undefined."""
    if not math.isfinite(log10_NE):
        return None
    return _iterate_log(log10_NE * math.log(10), level - 1)


def fit_iterated_log_slope(rows, level: int = 2) -> FitResult:
    """OLS of log_(level) N_E against log_(level-1) (1/E).

    Rows where the iterated logarithm is undefined (N_E too small) are
    dropped and counted.  Needs at least four usable rows.
    """
    if level < 1:
        raise ValueError("level must be >= 1")
    xs, ys = [], []
    dropped = 0
    for r in rows:
        y = _level_value(r.log10_NE, level)
        x = _iterate_log(1.0 / r.E, level - 1)
        if y is None or x is None:
            dropped += 1
            continue
        xs.append(x)
        ys.append(y)
    if len(xs) < 4:
        raise InsufficientRowsError(f"{len(xs)} usable rows at level {level} ({dropped} dropped)")
    if len(set(xs)) < 2:
        raise InsufficientRowsError("all usable rows share one E")
    res = stats.linregress(xs, ys)
    return FitResult(float(res.slope), float(res.stderr), float(res.intercept),
                     len(xs), dropped, level)


# -- svg -------------------------------------------------------------------------------


def _axis_label(level: int) -> tuple[str, str]:
    def nest(k, arg):
        s = arg
        for _ in range(k):
            s = f"log({s})" if not s.startswith("log") or "(" in s else f"log {s}"
        return s
    x = "1/E" if level == 1 else ("log(1/E)" if level == 2 else nest(level - 1, "1/E"))
    y = nest(level, "N_E")
    return x, y


def render_svg(rows, path: str | Path, *, level: int = 2, width: int = 640,
               height: int = 420) -> None:
    """Scatter of log_(level) N_E against log_(level-1)(1/E) with the OLS line."""
    rows = list(rows)
    if len(rows) < 2:
        raise ValueError("need at least two rows to plot")
    pts = []
    for r in rows:
        y = _level_value(r.log10_NE, level)
        x = _iterate_log(1.0 / r.E, level - 1)
        if x is not None and y is not None:
            pts.append((x, y))
    if len(pts) < 2:
        raise ValueError("fewer than two rows have a defined iterated logarithm")
    try:
        fit = fit_iterated_log_slope(rows, level)
    except InsufficientRowsError:
        fit = None
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    padx, pady = 0.08 * (x1 - x0), 0.08 * (y1 - y0)
    x0, x1, y0, y1 = x0 - padx, x1 + padx, y0 - pady, y1 + pady
    ml, mr, mt, mb = 70, 20, 20, 55

    def X(v):
        return ml + (v - x0) / (x1 - x0) * (width - ml - mr)

    def Y(v):
        return height - mb - (v - y0) / (y1 - y0) * (height - mt - mb)

    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(width),
                     height=str(height), viewBox=f"0 0 {width} {height}")
    ET.SubElement(svg, "rect", x="0", y="0", width=str(width), height=str(height), fill="white")
    axes = ET.SubElement(svg, "g", stroke="black", fill="none")
    ET.SubElement(axes, "line", x1=str(ml), y1=str(height - mb), x2=str(width - mr), y2=str(height - mb))
    ET.SubElement(axes, "line", x1=str(ml), y1=str(mt), x2=str(ml), y2=str(height - mb))
    ticks = ET.SubElement(svg, "g", fill="black", attrib={"font-size": "11", "font-family": "sans-serif"})
    for i in range(5):
        xv = x0 + (x1 - x0) * i / 4
        yv = y0 + (y1 - y0) * i / 4
        t = ET.SubElement(ticks, "text", x=f"{X(xv):.1f}", y=str(height - mb + 16),
                          attrib={"text-anchor": "middle"})
        t.text = f"{xv:.3g}"
        t = ET.SubElement(ticks, "text", x=str(ml - 6), y=f"{Y(yv) + 4:.1f}",
                          attrib={"text-anchor": "end"})
        t.text = f"{yv:.3g}"
    xl, yl = _axis_label(level)
    t = ET.SubElement(svg, "text", x=str((ml + width - mr) // 2), y=str(height - 12),
                      attrib={"text-anchor": "middle", "font-size": "13", "font-family": "sans-serif",
                              "class": "x-label"})
    t.text = xl
    t = ET.SubElement(svg, "text", x="16", y=str((mt + height - mb) // 2),
                      transform=f"rotate(-90 16 {(mt + height - mb) // 2})",
                      attrib={"text-anchor": "middle", "font-size": "13", "font-family": "sans-serif",
                              "class": "y-label"})
    t.text = yl
    marks = ET.SubElement(svg, "g", fill="#1f5fa8", attrib={"class": "data"})
    for x, y in pts:
        ET.SubElement(marks, "circle", cx=f"{X(x):.2f}", cy=f"{Y(y):.2f}", r="4")
    if fit is not None:
        ET.SubElement(svg, "line", x1=f"{X(x0):.2f}", y1=f"{Y(fit.intercept + fit.slope * x0):.2f}",
                      x2=f"{X(x1):.2f}", y2=f"{Y(fit.intercept + fit.slope * x1):.2f}",
                      stroke="#c0392b", attrib={"stroke-width": "1.5", "class": "fit"})
        t = ET.SubElement(svg, "text", x=str(ml + 10), y=str(mt + 14),
                          attrib={"font-size": "12", "font-family": "sans-serif"})
        t.text = f"slope {fit.slope:.3f} +- {fit.stderr:.3f} ({fit.used} points, {fit.dropped} dropped)"
    ET.ElementTree(svg).write(str(path), encoding="utf-8", xml_declaration=True)


# -- randomized checks ---------------------------------------------------------------


@dataclass(frozen=True)
class OracleCase:
    spec: PotentialSpec
    zeta: float
    E: float
    bc: BoundaryCondition
    Z: int
    oracle: int
    ambiguous: bool

    @property
    def match(self) -> bool:
        return self.Z == self.oracle


def random_instance(rng: random.Random):
    """(spec, zeta, E, bc) drawn from all three families with auto rho0."""
    fam = rng.choice(["power-law", "power-law", "critical", "iterated-log"])
    a = rng.choice([0.0, rng.uniform(-0.4, 0.4)])
    if fam == "power-law":
        delta = rng.choice([rng.uniform(0.2, 1.5), rng.uniform(-1.0, -0.2)])
        spec = PotentialSpec.power_law(rng.uniform(0.5, 3.0), delta, a=a)
    elif fam == "critical":
        spec = PotentialSpec.critical(rng.uniform(0.3, 4.0), a=a)
    else:
        spec = PotentialSpec.iterated_log(1, rng.uniform(0.3, 4.0))
    # biased towards small zeta and E so that most draws oscillate
    zeta = 0.0 if rng.random() < 0.4 else math.exp(rng.uniform(math.log(0.1), math.log(300.0)))
    E = math.exp(rng.uniform(math.log(0.003), math.log(0.1)))
    bc = rng.choice([BoundaryCondition.DIRICHLET, BoundaryCondition.NEUMANN])
    return spec, zeta, E, bc


def _oracle_case(args) -> OracleCase:
    spec, zeta, E, bc = args
    r = prufer_count(RadialProblem(spec, zeta, E, bc), Certified())
    L, h = oracle_grid(r.rho_stop, spec.rho0, E, points_per_unit=100)
    k = inertia_below(fd_tridiagonal(spec, zeta, L, h, bc), -E)
    return OracleCase(spec, zeta, E, bc, r.Z, k, r.ambiguous)


def oracle_check(instances: int = 200, seed: int = 7, *, workers: int | None = None
                 ) -> list[OracleCase]:
    """Prufer counts against finite-difference inertia on random instances.

    Draws until ``instances`` unambiguous cases are collected; ambiguous
    cases are returned too (flagged) but never compared.
    """
    rng = random.Random(seed)
    out: list[OracleCase] = []
    nw = _worker_count(workers)
    good = 0
    while good < instances:
        batch = [random_instance(rng) for _ in range(instances - good)]
        if nw == 1:
            cases = [_oracle_case(b) for b in batch]
        else:
            with ProcessPoolExecutor(max_workers=nw) as ex:
                cases = list(ex.map(_oracle_case, batch))
        out.extend(cases)
        good += sum(not c.ambiguous for c in cases)
    return out


def bracketing_check(instances: int = 50, seed: int = 11):
    """Random discretised potentials cut at random bonds; returns the demo tuples."""
    rng = random.Random(seed)
    out = []
    for _ in range(instances):
        spec, zeta, E, bc = random_instance(rng)
        L = spec.rho0 + rng.uniform(10.0, 80.0)
        T = fd_tridiagonal(spec, zeta, L, (L - spec.rho0) / rng.randint(200, 800), bc)
        k = rng.randint(2, T.M - 1)
        out.append(bracketing_demo(T, k, -E))
    return out


# -- command line ----------------------------------------------------------------------


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _add_spec_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", required=True, choices=[f.value for f in Family])
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--rho0", type=float, default=None)
    p.add_argument("--E", type=float, required=True)
    p.add_argument("--bc", default="dirichlet", choices=["dirichlet", "neumann", "both"])
    p.add_argument("--rtol", type=float, default=1e-9)


def _spec_from_args(a) -> PotentialSpec:
    fam = Family(a.family)
    kw = dict(a=a.a, eps=a.eps, rho0=a.rho0)
    if fam is Family.POWER_LAW:
        return PotentialSpec.power_law(a.c, a.delta, **kw)
    if fam is Family.CRITICAL:
        return PotentialSpec.critical(a.c, **kw)
    return PotentialSpec.iterated_log(a.N, a.c, **kw)


def _bcs(v: str):
    if v == "both":
        return [BoundaryCondition.DIRICHLET, BoundaryCondition.NEUMANN]
    return [BoundaryCondition.parse(v)]


def _build_parser() -> _Parser:
    p = _Parser(prog="hypcount", description="Negative eigenvalue counts on hyperbolic model ends.")
    p.add_argument("--workers", type=int, default=None,
                   help=f"worker processes (default: ${WORKERS_ENV} or 1)")
    sub = p.add_subparsers(dest="cmd", parser_class=_Parser)

    c = sub.add_parser("count", help="N_E for one E")
    _add_spec_args(c)
    c.add_argument("--boundary", default="sphere", choices=["sphere", "torus"])
    c.add_argument("--n", type=int, default=1)
    c.add_argument("--lengths", default="")
    c.add_argument("--csv", default=None)

    s = sub.add_parser("sweep", help="run a config file")
    s.add_argument("config")

    o = sub.add_parser("oracle-check", help="Prufer counts against matrix inertia")
    o.add_argument("--instances", type=int, default=200)
    o.add_argument("--seed", type=int, default=7)

    b = sub.add_parser("bracketing", help="Dirichlet/Neumann split ordering on random matrices")
    b.add_argument("--instances", type=int, default=50)
    b.add_argument("--seed", type=int, default=11)

    k = sub.add_parser("breakpoints", help="dump the step function zeta -> Z(zeta)")
    _add_spec_args(k)
    return p


def _cmd_count(a, out, workers) -> int:
    spec = _spec_from_args(a)
    if a.boundary == "sphere":
        boundary = BoundarySpectrum.sphere(a.n)
    else:
        boundary = BoundarySpectrum.flat_torus([float(v) for v in a.lengths.split(",") if v.strip()])
    rows = []
    for bc in _bcs(a.bc):
        row = _row_task((spec, boundary, a.E, bc, a.rtol, a.rtol * 1e-3, False))
        rows.append(row)
        r_err = next((f for f in row.flags if f.startswith("error:")), None)
        if r_err:
            raise RuntimeError(r_err)
        if row.log10_NE == -math.inf:
            value = "0"
        elif row.log10_NE < 15 and "dense-levels-at-breakpoint" not in row.flags:
            value = str(int(round(10 ** row.log10_NE)))
        else:
            value = f"10^{row.log10_NE:.12f}"
        print(f"{bc.value}: N_E = {value}  (Z0 = {row.Z0}, breakpoints = {row.breakpoints}, "
              f"probes = {row.probes}{', flags = ' + ';'.join(row.flags) if row.flags else ''})",
              file=out)
    if a.csv:
        write_csv(rows, a.csv)
    return 0


def _cmd_breakpoints(a, out) -> int:
    spec = _spec_from_args(a)
    for bc in _bcs(a.bc):
        probe = _Prober(spec, a.E, bc, a.rtol, a.rtol * 1e-3)
        cut = cutoff_estimate(spec, a.E)
        z0, bps, s_up, _ = _search(probe, max(cut.log_mu_upper, 1.0))
        print(f"{bc.value}: Z(0) = {z0}, log mu_upper = {cut.log_mu_upper:.6g}, probes = {probe.probes}",
              file=out)
        for bp in bps:
            print(f"  Z drops {bp.upper} -> {bp.upper - bp.drop} at log zeta = {bp.log_zeta:.15g}",
                  file=out)
    return 0


def cli_main(argv=None, *, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = _build_parser()
    try:
        a = parser.parse_args(argv)
        if a.cmd is None:
            raise _UsageError("a subcommand is required")
        workers = _worker_count(a.workers)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=err)
        return 1
    except ValueError as exc:
        print(f"usage error: {exc}", file=err)
        return 1
    try:
        if a.cmd == "count":
            return _cmd_count(a, out, workers)
        if a.cmd == "sweep":
            try:
                cfg = ExperimentConfig.from_file(a.config)
            except (ConfigError, ValueError) as exc:
                print(f"usage error: {exc}", file=err)
                return 1
            rows = run_sweep(cfg, workers=a.workers)
            print(csv_text(rows), end="", file=out)
            bad = [r for r in rows if any(f.startswith("error:") for f in r.flags)]
            try:
                fit = fit_iterated_log_slope(rows, cfg.fit_level)
                print(f"# level-{cfg.fit_level} slope {fit.slope:.4f} +- {fit.stderr:.4f} "
                      f"({fit.used} rows, {fit.dropped} dropped)", file=out)
            except InsufficientRowsError as exc:
                print(f"# no fit: {exc}", file=out)
            return 2 if bad else 0
        if a.cmd == "oracle-check":
            cases = oracle_check(a.instances, a.seed, workers=workers)
            cmp_ = [c for c in cases if not c.ambiguous]
            bad = [c for c in cmp_ if not c.match]
            print(f"{len(cmp_)} compared, {len(cases) - len(cmp_)} ambiguous skipped, "
                  f"{len(bad)} mismatches", file=out)
            for c in bad:
                print(f"  mismatch {c.spec.params()} zeta={c.zeta!r} E={c.E!r} bc={c.bc.value}: "
                      f"prufer {c.Z} vs oracle {c.oracle}", file=err)
            return 2 if bad else 0
        if a.cmd == "bracketing":
            res = bracketing_check(a.instances, a.seed)
            fails = [r for r in res if not r[3]]
            print(f"{len(res)} splits, ordering held in {len(res) - len(fails)}", file=out)
            return 2 if fails else 0
        if a.cmd == "breakpoints":
            return _cmd_breakpoints(a, out)
    except Exception as exc:
        print(f"computation failed: {type(exc).__name__}: {exc}", file=err)
        return 2
    return 1


def main() -> None:
    sys.exit(cli_main())
