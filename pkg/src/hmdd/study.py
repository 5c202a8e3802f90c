"""Batch convergence studies: configuration, sweep execution and artifacts.

Configuration is a TOML file::

    [study]
    geometry = "annulus"        # or "square"
    orders = [1]
    taus = [10.0]
    levels = [0, 4]             # inclusive range
    solver = "full"             # or "condensed"
    output_dir = "results"
    workers = 1
    rate_window = 3
    export_meshes = false
    dump_matrices = false

    [geometry]                  # optional generator parameters
    inner_half_width = 0.4      # annulus: half width of the central square
    base_cells = 2              # square: cells per side at level 0

    [quadrature]                # optional overrides, points per direction
    assembly = 5
    error = 8
    trace = 4

Level l of the square is a (base_cells 2^l)^2 grid split at x = 1/2; level l
of the annulus is the 13-cell base mesh refined l times.
"""
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .analysis import (ERROR_COLUMNS, annulus_reference, compute_errors, fit_slope,
                       manufactured_square_reference, write_csv)
from .assembly import ProblemData, assemble, dump_triplets
from .errors import ConfigurationError
from .mesh import build_annulus_mesh, build_square_mesh, write_mesh
from .plotting import Series, loglog_svg, write_svg
from .solver import RESIDUAL_TOL, solve
from .spaces import build_dofmap
from .trace import build_trace_projector

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)

GEOMETRIES = ("square", "annulus")
SOLVERS = ("full", "condensed")
CSV_COLUMNS = ("geometry", "level", "q", "tau", "h", "n_cells", "n_dofs", "solver") + ERROR_COLUMNS + (
    "q_norm", "residual", "residual_flag", "status")
PLOT_LABELS = {
    "e_u": "||u - u_h||",
    "e_q": "||q - q_h||",
    "e_div": "||div(q - q_h)||",
    "j_qn": "||[q_h . n]||",
    "j_u": "||[Pi tr u_h]||",
    "e_mu": "||mu - mu_h||",
    "e_mean": "||{Pi tr u_h} - mu_h||",
    "e_mean_exact": "||{u - Pi tr u_h}||",
}


@dataclass
class StudyConfig:
    geometry: str = "annulus"
    orders: list = field(default_factory=lambda: [1])
    taus: list = field(default_factory=lambda: [10.0])
    levels: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    solver: str = "full"
    output_dir: str = "results"
    workers: int = 1
    rate_window: int = 3
    export_meshes: bool = False
    dump_matrices: bool = False
    geometry_params: dict = field(default_factory=dict)
    quadrature: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.geometry not in GEOMETRIES:
            raise ConfigurationError("geometry must be one of %s, got %r" % (GEOMETRIES, self.geometry))
        if self.solver not in SOLVERS:
            raise ConfigurationError("solver must be one of %s, got %r" % (SOLVERS, self.solver))
        for name in ("orders", "taus", "levels"):
            if not isinstance(getattr(self, name), (list, tuple)) or not getattr(self, name):
                raise ConfigurationError("%s must be a nonempty list" % name)
        for q in self.orders:
            if not isinstance(q, int) or isinstance(q, bool) or q < 0:
                raise ConfigurationError("orders must be integers >= 0, got %r" % (q,))
        for t in self.taus:
            if isinstance(t, bool) or not isinstance(t, (int, float)) or not math.isfinite(t) or t < 0:
                raise ConfigurationError("taus must be finite and >= 0, got %r" % (t,))
        for lev in self.levels:
            if not isinstance(lev, int) or isinstance(lev, bool) or lev < 0:
                raise ConfigurationError("levels must be integers >= 0, got %r" % (lev,))
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigurationError("workers must be a positive integer")
        if not isinstance(self.rate_window, int) or self.rate_window < 2:
            raise ConfigurationError("rate_window must be an integer >= 2")
        allowed = {"square": {"base_cells"}, "annulus": {"inner_half_width"}}[self.geometry]
        extra = set(self.geometry_params) - allowed
        if extra:
            raise ConfigurationError("unknown geometry parameters for %s: %s" % (self.geometry, sorted(extra)))
        n = self.geometry_params.get("base_cells", 2)
        if not isinstance(n, int) or isinstance(n, bool) or n < 2 or n % 2:
            raise ConfigurationError("base_cells must be an even integer >= 2, got %r" % (n,))
        w = self.geometry_params.get("inner_half_width", 0.4)
        if isinstance(w, bool) or not isinstance(w, (int, float)) or not 0 < w < 0.7:
            raise ConfigurationError("inner_half_width must lie in (0, 0.7), got %r" % (w,))
        extra = set(self.quadrature) - {"assembly", "error", "trace"}
        if extra:
            raise ConfigurationError("unknown quadrature keys: %s" % sorted(extra))
        for k, v in self.quadrature.items():
            if not isinstance(v, int) or v < 1:
                raise ConfigurationError("quadrature.%s must be a positive integer" % k)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        study = dict(data.pop("study", {}))
        geometry_params = data.pop("geometry", {})
        quadrature = data.pop("quadrature", {})
        if data:
            raise ConfigurationError("unknown top-level tables: %s" % sorted(data))
        levels = study.pop("levels", [0, 4])
        if not isinstance(levels, list) or len(levels) != 2:
            raise ConfigurationError("levels must be an inclusive range [first, last]")
        if not all(isinstance(v, int) for v in levels) or levels[0] > levels[1]:
            raise ConfigurationError("levels must be two integers with first <= last")
        known = {"geometry", "orders", "taus", "solver", "output_dir", "workers", "rate_window",
                 "export_meshes", "dump_matrices"}
        extra = set(study) - known
        if extra:
            raise ConfigurationError("unknown study keys: %s" % sorted(extra))
        taus = study.pop("taus", [10.0])
        if isinstance(taus, list):
            taus = [float(t) if isinstance(t, int) and not isinstance(t, bool) else t for t in taus]
        return cls(levels=list(range(levels[0], levels[1] + 1)), taus=taus,
                   geometry_params=dict(geometry_params), quadrature=dict(quadrature), **study)

    @classmethod
    def from_toml(cls, path):
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigurationError("cannot read config %s: %s" % (path, exc)) from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError("invalid TOML in %s: %s" % (path, exc)) from exc
        return cls.from_dict(data)


def build_mesh(config, level):
    if config.geometry == "square":
        n = int(config.geometry_params.get("base_cells", 2)) * 2 ** level
        if n % 2:
            raise ConfigurationError("square base_cells must be even so that x = 1/2 is a mesh line")
        return build_square_mesh(n, x_splits=(0.5,))
    return build_annulus_mesh(level, float(config.geometry_params.get("inner_half_width", 0.4)))


def reference_for(geometry):
    return manufactured_square_reference() if geometry == "square" else annulus_reference()


def run_single(config, level, q, tau):
    """One (level, q, tau) solve; returns a CSV row dict (never raises on solver failure)."""
    row = {"geometry": config.geometry, "level": level, "q": q, "tau": float(tau), "solver": config.solver}
    t0 = time.perf_counter()
    try:
        mesh = build_mesh(config, level)
        ref = reference_for(config.geometry)
        dofmap = build_dofmap(mesh, q)
        proj = build_trace_projector(mesh, dofmap, moment_quadrature_points=config.quadrature.get("trace"))
        system = assemble(mesh, dofmap, proj, ProblemData(ref.kappa, ref.f, tau),
                          quadrature_points=config.quadrature.get("assembly"))
        if config.dump_matrices:
            dump_triplets(system.matrix(), os.path.join(
                config.output_dir, "matrix_%s_l%d_q%d_tau%s.txt" % (config.geometry, level, q, _tau_tag(tau))))
        sol, rep = solve(system, config.solver)
        err = compute_errors(sol, ref, proj, quadrature_points=config.quadrature.get("error"),
                             tau=tau, residual=rep.relative_residual)
        row.update({c: getattr(err, c) for c in ERROR_COLUMNS + ("q_norm", "h", "residual")})
        row.update(n_cells=mesh.n_cells, n_dofs=dofmap.n_total,
                   residual_flag=not rep.relative_residual <= RESIDUAL_TOL, status="ok")
    except ConfigurationError:
        raise
    except Exception as exc:  # recorded per run, the study continues
        log.error("run geometry=%s level=%d q=%d tau=%g failed: %s", config.geometry, level, q, tau, exc)
        row.update(status="failed: %s" % str(exc).replace("\n", " "), residual_flag=True)
    log.info("level=%d q=%d tau=%g done in %.2fs", level, q, tau, time.perf_counter() - t0)
    return row


def _run_star(args):
    return run_single(*args)


def _tau_tag(tau):
    return ("%g" % tau).replace("+", "")


EXPECTED_RATES = {
    # column: (lower, upper) rate as functions of (q, tau); None means not rate-checked
    "e_u": lambda q, tau: (q + 1.0, q + 1.0),
    "e_mu": lambda q, tau: (q + 1.0, q + 1.0),
    "e_q": lambda q, tau: (q + 0.5, q + 1.0),
    "e_div": lambda q, tau: (q - 0.5, q + 1.0),
    "j_qn": lambda q, tau: None if tau == 0 else (float(q), q + 1.0),
    "j_u": lambda q, tau: (float(q), q + 1.0),
}
RATE_SLACK = 0.2
ROUNDOFF = 1e-12


def summarize(rows, window):
    """Rate table per (q, tau) with pass/fail against the expected-rate model.

    The model bounds each error from above by a combination of powers of h,
    so a column passes when its fitted slope is at least the lowest expected
    rate minus 0.2. Columns at roundoff level are reported as exact.
    """
    lines = []
    ok = [r for r in rows if r.get("status") == "ok"]
    groups = sorted({(r["q"], r["tau"]) for r in ok})
    all_pass = True
    for q, tau in groups:
        rs = sorted((r for r in ok if r["q"] == q and r["tau"] == tau), key=lambda r: r["level"])
        if len(rs) < 2:
            lines.append("q=%d tau=%g: single level, no rates" % (q, tau))
            continue
        win = rs[-min(window, len(rs)):]
        scale = max(max(r["q_norm"] for r in rs), 1.0)
        parts = []
        for col in ERROR_COLUMNS:
            vals = [r[col] for r in win]
            if max(vals) <= ROUNDOFF * scale:
                parts.append("%s=exact" % col)
                continue
            rate = fit_slope([r["h"] for r in win], vals)
            expect = EXPECTED_RATES.get(col, lambda q, t: None)(q, tau)
            if expect is None:
                parts.append("%s=%.2f" % (col, rate))
                continue
            good = rate >= expect[0] - RATE_SLACK
            all_pass &= good
            parts.append("%s=%.2f[%s]" % (col, rate, "pass" if good else "FAIL"))
        lines.append("q=%d tau=%g levels %d-%d: %s" % (q, tau, win[0]["level"], rs[-1]["level"], " ".join(parts)))
    flagged = [r for r in rows if r.get("residual_flag")]
    failed = [r for r in rows if r.get("status") != "ok"]
    lines.append("runs: %d, failed: %d, residual flagged: %d" % (len(rows), len(failed), len(flagged)))
    lines.append("expected rates: %s" % ("all pass" if all_pass else "some FAIL"))
    return "\n".join(lines) + "\n"


def emit_plots(rows, out_dir, geometry):
    """Error-vs-h plots per column (series per (q, tau)) and error-vs-tau plots
    per column (series per (q, level)) when more than one tau was run."""
    ok = [r for r in rows if r.get("status") == "ok"]
    files = []
    orders = sorted({r["q"] for r in ok})
    taus = sorted({r["tau"] for r in ok})
    slopes = sorted({s for q in orders for s in (q + 0.5, q + 1.0)})
    for col in ERROR_COLUMNS:
        series = []
        for q in orders:
            for tau in taus:
                rs = sorted((r for r in ok if r["q"] == q and r["tau"] == tau), key=lambda r: r["level"])
                if rs:
                    series.append(Series("q=%d tau=%g" % (q, tau), [r["h"] for r in rs], [r[col] for r in rs]))
        if not series:
            continue
        path = os.path.join(out_dir, "%s_%s_vs_h.svg" % (geometry, col))
        write_svg(path, loglog_svg(series, "%s: %s" % (geometry, PLOT_LABELS[col]), "h", PLOT_LABELS[col],
                                   reference_slopes=slopes))
        files.append(path)
        if len(taus) > 1:
            series = []
            for q in orders:
                for lev in sorted({r["level"] for r in ok}):
                    rs = sorted((r for r in ok if r["q"] == q and r["level"] == lev), key=lambda r: r["tau"])
                    if rs:
                        series.append(Series("q=%d level %d" % (q, lev), [r["tau"] for r in rs],
                                             [r[col] for r in rs]))
            path = os.path.join(out_dir, "%s_%s_vs_tau.svg" % (geometry, col))
            write_svg(path, loglog_svg(series, "%s: %s" % (geometry, PLOT_LABELS[col]), "tau",
                                       PLOT_LABELS[col], fit=False))
            files.append(path)
    return files


@dataclass
class StudyResult:
    rows: list
    csv_path: str
    plots: list
    summary: str
    summary_path: str

    @property
    def n_failed(self):
        return sum(1 for r in self.rows if r.get("status") != "ok")


def run_study(config):
    """Run every (level, q, tau) combination and write CSV, SVG and summary files."""
    os.makedirs(config.output_dir, exist_ok=True)
    if config.export_meshes:
        for lev in config.levels:
            write_mesh(build_mesh(config, lev),
                       os.path.join(config.output_dir, "mesh_%s_l%d.txt" % (config.geometry, lev)))
    jobs = [(config, lev, q, tau) for q in config.orders for tau in config.taus for lev in config.levels]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            rows = list(pool.map(_run_star, jobs))
    else:
        rows = [_run_star(j) for j in jobs]
    rows.sort(key=lambda r: (r["q"], r["tau"], r["level"]))
    csv_path = os.path.join(config.output_dir, "%s.csv" % config.geometry)
    write_csv(csv_path, rows, CSV_COLUMNS)
    plots = emit_plots(rows, config.output_dir, config.geometry)
    summary = summarize(rows, config.rate_window)
    summary_path = os.path.join(config.output_dir, "%s_summary.txt" % config.geometry)
    with open(summary_path, "w") as fh:
        fh.write(summary)
    return StudyResult(rows, csv_path, plots, summary, summary_path)
