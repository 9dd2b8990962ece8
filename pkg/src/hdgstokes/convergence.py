"""Convergence studies over uniformly refined meshes and their CSV output."""
import csv
import logging
import math
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

from .assembly import assemble, solve
from .forms import MethodParams
from .manufactured import compute_errors, eoc, exact_fields
from .mesh import PATTERNS, generate_structured

log = logging.getLogger(__name__)

CSV_COLUMNS = ("level", "h", "ndofs", "err_u_l2", "err_p_l2", "err_h1", "err_triple",
               "err_triple_full", "eoc_u", "eoc_p")

# Pressure errors ||p - p_h|| reported for h = 2^-1 .. 2^-8, keyed by (epsilon, pressure order).
REFERENCE_PRESSURE_ERRORS = {
    (-1, 0): (0.152296, 0.082775, 0.042620, 0.021357, 0.010676, 0.005340, 0.002671, 0.001336),
    (-1, 1): (0.077228, 0.041790, 0.020500, 0.008338, 0.003083, 0.001105, 0.000392, 0.000139),
    (1, 0): (0.159019, 0.084875, 0.043313, 0.021513, 0.010707, 0.005346, 0.002672, 0.001336),
    (1, 1): (0.090624, 0.047488, 0.009449, 0.003516, 0.001269, 0.002171, 0.000453, 0.000161),
}


@dataclass(frozen=True)
class RunConfig:
    k: int = 1
    epsilon: int = -1
    tau: float = 6.0
    nu: float = 1.0
    levels: tuple = (1, 2, 3, 4, 5, 6)
    pattern: str = "right"
    variant: str = "stabilised"
    out: str = None
    quad_degree: int = 12
    plot: bool = True

    def __post_init__(self):
        if self.variant not in ("stabilised", "baseline", "both"):
            raise ValueError(f"variant must be stabilised, baseline or both, got {self.variant!r}")
        if self.pattern not in PATTERNS:
            raise ValueError(f"pattern must be one of {PATTERNS}, got {self.pattern!r}")
        if not self.levels:
            raise ValueError("at least one level is required")
        if any(lvl < 1 for lvl in self.levels) or list(self.levels) != sorted(set(self.levels)):
            raise ValueError(f"levels must be positive and strictly ascending, got {self.levels}")
        # Validates nu, tau, epsilon, quadrature degree.
        self.method("stabilised")

    @property
    def variants(self):
        return ("stabilised", "baseline") if self.variant == "both" else (self.variant,)

    def method(self, variant):
        return MethodParams(nu=self.nu, epsilon=self.epsilon, tau=self.tau, k=self.k, variant=variant,
                            quad_degree=self.quad_degree)


@dataclass
class LevelResult:
    level: int
    h: float
    ndofs: int
    err_u_l2: float
    err_p_l2: float
    err_h1: float
    err_triple: float
    err_triple_full: float
    seconds: float = field(default=0.0, compare=False)


@dataclass
class ConvergenceTable:
    variant: str
    epsilon: int
    rows: list = field(default_factory=list)

    def column(self, name):
        return [getattr(r, name) for r in self.rows]

    def eoc(self, name):
        return list(eoc(self.column(name), self.column("h")))

    @property
    def eoc_u(self):
        return self.eoc("err_u_l2")

    @property
    def eoc_p(self):
        return self.eoc("err_p_l2")


class ConvergenceError(RuntimeError):
    def __init__(self, level, variant, cause):
        super().__init__(f"{variant} run failed at level {level}: {cause}")
        self.level = level
        self.variant = variant


def run_level(level, params, pattern="right"):
    t0 = time.perf_counter()
    mesh = generate_structured(2**level, pattern, level=level)
    exact = exact_fields(params.nu)
    system = assemble(mesh, params, exact.f, exact.g)
    solution = solve(system)
    rep = compute_errors(solution, exact, params)
    return LevelResult(level, rep.h, rep.n_dofs, rep.err_u_l2, rep.err_p_l2, rep.err_h1, rep.err_triple,
                       rep.err_triple_full, time.perf_counter() - t0)


def output_path(out, variant, config):
    path = Path(out)
    if config.variant != "both":
        return path
    return path.with_name(f"{path.stem}_{variant}{path.suffix or '.csv'}")


def run_convergence(config: RunConfig):
    """Run every requested variant over all levels; returns ``{variant: ConvergenceTable}``.

    With ``config.out`` set, each CSV is rewritten after every level so a
    failure part-way still leaves the finished levels on disk.
    """
    tables = {}
    for variant in config.variants:
        params = config.method(variant)
        table = ConvergenceTable(variant, config.epsilon)
        tables[variant] = table
        for level in config.levels:
            try:
                row = run_level(level, params, config.pattern)
            except Exception as exc:
                raise ConvergenceError(level, variant, exc) from exc
            table.rows.append(row)
            log.info("%s eps=%+d level %d: %d dofs, %.2fs", variant, config.epsilon, level, row.ndofs, row.seconds)
            if config.out:
                emit_csv(table, output_path(config.out, variant, config))
    return tables


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x)) if isinstance(x, float) else str(x)


def emit_csv(table: ConvergenceTable, path):
    path = Path(path)
    eu, ep = table.eoc_u, table.eoc_p
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for i, r in enumerate(table.rows):
                w.writerow([r.level, _fmt(r.h), r.ndofs, _fmt(r.err_u_l2), _fmt(r.err_p_l2), _fmt(r.err_h1),
                            _fmt(r.err_triple), _fmt(r.err_triple_full), _fmt(eu[i]), _fmt(ep[i])])
    except OSError as exc:
        raise OSError(f"cannot write convergence table to {path}: {exc}") from exc
    return path


def read_csv(path, variant="", epsilon=-1):
    """Parse a file written by :func:`emit_csv`; EOC columns are recomputed, not stored."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        rows = []
        for rec in reader:
            rows.append(LevelResult(int(rec["level"]), float(rec["h"]), int(rec["ndofs"]),
                                    *(float(rec[c]) for c in CSV_COLUMNS[3:8])))
    return ConvergenceTable(variant, epsilon, rows)


def format_table(table: ConvergenceTable):
    head = f"{table.variant} (epsilon={table.epsilon:+d})"
    cols = ("level", "h", "ndofs", "|u-uh|", "eoc", "|p-ph|", "eoc", "|u-uh|_1,h", "|||e|||", "|||e|||_h", "eoc")
    lines = [head, "  ".join(f"{c:>11}" for c in cols)]
    eu, ep, ef = table.eoc_u, table.eoc_p, table.eoc("err_triple_full")
    for i, r in enumerate(table.rows):
        vals = [f"{r.level:11d}", f"{r.h:11.4e}", f"{r.ndofs:11d}", f"{r.err_u_l2:11.4e}", _eoc(eu[i]),
                f"{r.err_p_l2:11.4e}", _eoc(ep[i]), f"{r.err_h1:11.4e}", f"{r.err_triple:11.4e}",
                f"{r.err_triple_full:11.4e}", _eoc(ef[i])]
        lines.append("  ".join(vals))
    return "\n".join(lines)


def _eoc(x):
    return f"{'-':>11}" if math.isnan(x) else f"{x:11.3f}"


def pressure_comparison(tables, epsilon):
    """Side-by-side pressure errors of both variants with the published values for reference."""
    base, stab = tables["baseline"], tables["stabilised"]
    lines = [f"pressure error ||p - p_h||, epsilon={epsilon:+d}",
             f"{'h':>8}  {'Q^(k-1)':>11}  {'Q^k':>11}  {'ref Q^0':>9}  {'ref Q^1':>9}"]
    for rb, rs in zip(base.rows, stab.rows):
        ref0 = _reference(epsilon, 0, rb.level)
        ref1 = _reference(epsilon, 1, rb.level)
        lines.append(f"{'2^-%d' % rb.level:>8}  {rb.err_p_l2:11.6f}  {rs.err_p_l2:11.6f}  {ref0:>9}  {ref1:>9}")
    return "\n".join(lines)


def _reference(epsilon, order, level):
    vals = REFERENCE_PRESSURE_ERRORS.get((epsilon, order))
    if vals is None or not 1 <= level <= len(vals):
        return "-"
    return f"{vals[level - 1]:.6f}"


def config_fields():
    return {f.name: f for f in fields(RunConfig)}
