"""Reference solutions, error norms and convergence rates."""
import csv
import math
import warnings
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import ConfigurationError
from .quadrature import gauss_rule, legendre_eval, tensor_rule
from .spaces import Solution, q_reference_basis, rt_reference_basis
from .trace import all_projected_traces, trace_values

ERROR_QUADRATURE_OFFSET = 7  # q + 3 of the assembly plus 4


@dataclass
class ReferenceSolution:
    """Exact solution of -div(kappa grad u) = f with u = 0 on the boundary.

    ``u``, ``q`` (= kappa grad u), ``f`` and ``kappa`` evaluate on arrays of
    points with trailing dimension 2. ``region`` labels each point with the
    smooth piece it belongs to; ``interior_samples`` and ``boundary_samples``
    draw points for :meth:`check`.
    """

    name: str
    u: object
    q: object
    f: object
    kappa: object
    region: object
    interior_samples: object
    boundary_samples: object
    smoothness: str = "analytic on each region"

    def mu(self, x):
        return self.u(x)

    def div_q(self, x):
        return -self.f(x)

    def pde_residual(self, points, step=1e-4):
        """max |div q + f| / max(1, |f|) with fourth-order central differences of q."""
        x = np.asarray(points, dtype=float)
        coef = np.array([1.0, -8.0, 8.0, -1.0]) / (12.0 * step)
        shifts = np.array([-2.0, -1.0, 1.0, 2.0]) * step
        div = np.zeros(x.shape[:-1])
        for a in range(2):
            e = np.zeros(2)
            e[a] = 1.0
            for c, s in zip(coef, shifts):
                div += c * self.q(x + s * e)[..., a]
        f = self.f(x)
        return float(np.max(np.abs(div + f) / np.maximum(1.0, np.abs(f))))

    def check(self, n=400, seed=0, pde_tol=1e-8, bc_tol=1e-10):
        """Validate the PDE and boundary condition at sampled points; raise if violated."""
        rng = np.random.default_rng(seed)
        pts = self.interior_samples(rng, n)
        res = self.pde_residual(pts)
        if not res <= pde_tol:
            raise ConfigurationError("reference %s rejected: PDE residual %.3e" % (self.name, res))
        bc = float(np.max(np.abs(self.u(self.boundary_samples(rng, n)))))
        if not bc <= bc_tol:
            raise ConfigurationError("reference %s rejected: boundary value %.3e" % (self.name, bc))
        return res, bc


def manufactured_square_reference():
    """u = sin(pi x) sin(pi y) on the unit square, kappa = 1."""
    pi = np.pi

    def u(x):
        return np.sin(pi * x[..., 0]) * np.sin(pi * x[..., 1])

    def q(x):
        sx, sy = np.sin(pi * x[..., 0]), np.sin(pi * x[..., 1])
        cx, cy = np.cos(pi * x[..., 0]), np.cos(pi * x[..., 1])
        return np.stack([pi * cx * sy, pi * sx * cy], axis=-1)

    def f(x):
        return 2.0 * pi ** 2 * u(x)

    def kappa(x):
        return np.ones(np.shape(x)[:-1])

    def region(x):
        return (np.asarray(x)[..., 0] > 0.5).astype(int)

    def interior(rng, n):
        p = rng.uniform(0.01, 0.99, (n, 2))
        keep = np.abs(p[:, 0] - 0.5) > 1e-3
        return p[keep]

    def boundary(rng, n):
        t = rng.uniform(0.0, 1.0, n)
        side = rng.integers(0, 4, n)
        pts = np.stack([t, t], axis=1)
        pts[side == 0, 1] = 0.0
        pts[side == 1, 0] = 1.0
        pts[side == 2, 1] = 1.0
        pts[side == 3, 0] = 0.0
        return pts

    return ReferenceSolution("square", u, q, f, kappa, region, interior, boundary)


# sqrt(2+sqrt2) sin(phi) - sqrt(2-sqrt2) cos(phi) = 2 sin(phi - pi/8)
_PHASE = np.pi / 8.0
_KAPPA_IN, _KAPPA_OUT = 16.0, 1.0


def _polar(x):
    x = np.asarray(x, dtype=float)
    r = np.hypot(x[..., 0], x[..., 1])
    phi = np.arctan2(x[..., 1], x[..., 0])
    return r, phi


def annulus_reference():
    """Disk of radius 2 with kappa = 16 for r < 1 and 1 for r > 1.

    The source is 1 + 2 c r sin(phi - pi/8) with c = 47/2 inside and 1
    outside. Matching u and kappa du/dr at r = 1 and u(2) = 0 mode by mode
    gives

        r < 1:  u = 49/64 - r^2/64 + (143/128 r - 47/128 r^3) s
        r > 1:  u = (1 - r^2/4)(1 + r s),     s = sin(phi - pi/8).
    """

    def pieces(x):
        r, phi = _polar(x)
        s, c = np.sin(phi - _PHASE), np.cos(phi - _PHASE)
        inner = r < 1.0
        return r, phi, s, c, inner

    def u(x):
        r, _, s, _, inner = pieces(x)
        ui = 49.0 / 64 - r ** 2 / 64 + (143.0 / 128 * r - 47.0 / 128 * r ** 3) * s
        uo = (1.0 - r ** 2 / 4) * (1.0 + r * s)
        return np.where(inner, ui, uo)

    def q(x):
        r, phi, s, c, inner = pieces(x)
        rs = np.where(r > 0, r, 1.0)
        # radial derivative and (1/r) angular derivative per region
        dr_i = -r / 32 + (143.0 / 128 - 141.0 / 128 * r ** 2) * s
        dp_i = (143.0 / 128 - 47.0 / 128 * r ** 2) * c
        dr_o = -r / 2 * (1.0 + r * s) + (1.0 - r ** 2 / 4) * s
        dp_o = (1.0 - r ** 2 / 4) * c
        dr = np.where(inner, _KAPPA_IN * dr_i, _KAPPA_OUT * dr_o)
        dp = np.where(inner, _KAPPA_IN * dp_i, _KAPPA_OUT * dp_o)
        cp, sp_ = np.asarray(x)[..., 0] / rs, np.asarray(x)[..., 1] / rs
        cp = np.where(r > 0, cp, 1.0)
        sp_ = np.where(r > 0, sp_, 0.0)
        return np.stack([dr * cp - dp * sp_, dr * sp_ + dp * cp], axis=-1)

    def f(x):
        r, _, s, _, inner = pieces(x)
        return 1.0 + np.where(inner, 47.0, 2.0) * r * s

    def kappa(x):
        r, _ = _polar(x)
        return np.where(r < 1.0, _KAPPA_IN, _KAPPA_OUT)

    def region(x):
        return (_polar(x)[0] > 1.0).astype(int)

    def interior(rng, n):
        r = np.concatenate([rng.uniform(0.05, 0.99, n // 2), rng.uniform(1.01, 1.99, n - n // 2)])
        t = rng.uniform(-np.pi, np.pi, n)
        return np.stack([r * np.cos(t), r * np.sin(t)], axis=1)

    def boundary(rng, n):
        t = rng.uniform(-np.pi, np.pi, n)
        return 2.0 * np.stack([np.cos(t), np.sin(t)], axis=1)

    return ReferenceSolution("annulus", u, q, f, kappa, region, interior, boundary,
                             "analytic for r < 1 and 1 < r < 2, kink at r = 1")


@dataclass
class ErrorReport:
    e_u: float
    e_q: float
    e_div: float
    j_qn: float
    j_u: float
    e_mu: float
    e_mean: float
    e_mean_exact: float
    q_norm: float
    h: float
    q: int
    tau: float
    residual: float = float("nan")

    def __post_init__(self):
        for f in ERROR_COLUMNS + ("q_norm",):
            v = getattr(self, f)
            if not (v >= 0):
                raise ValueError("error %s must be nonnegative, got %r" % (f, v))


ERROR_COLUMNS = ("e_u", "e_q", "e_div", "j_qn", "j_u", "e_mu", "e_mean", "e_mean_exact")


def _skeleton_rule(q, quadrature_points):
    return gauss_rule(q + ERROR_QUADRATURE_OFFSET if quadrature_points is None else quadrature_points)


def compute_errors(solution, reference, projector, quadrature_points=None, tau=float("nan"),
                   residual=float("nan")):
    """All error norms of a discrete solution against a reference.

    Cell integrals use a tensor Gauss rule and skeleton integrals a Gauss rule
    with q+7 points per direction unless ``quadrature_points`` is given.
    """
    d = solution.dofmap
    mesh = solution.mesh
    q = d.q
    n = q + ERROR_QUADRATURE_OFFSET if quadrature_points is None else int(quadrature_points)
    rule = tensor_rule(n)
    v = solution.on_cells(rule.points)
    dx = v["det"] * rule.weights
    x = v["x"]
    e_u = np.sum((v["u"] - reference.u(x)) ** 2 * dx)
    e_q = np.sum(np.sum((v["q"] - reference.q(x)) ** 2, axis=-1) * dx)
    e_div = np.sum((v["div_q"] - reference.div_q(x)) ** 2 * dx)
    q_norm = np.sum(np.sum(v["q"] ** 2, axis=-1) * dx)

    g = _skeleton_rule(q, quadrature_points)
    L = legendre_eval(q, g.points)
    traces = all_projected_traces(projector, d, solution.uh)  # (ns, 2, q+1)
    j_qn = j_u = e_mu = e_mean = e_mean_exact = 0.0
    for s, fid in enumerate(d.skeleton):
        xf, _, arc, _ = mesh.facets[fid].facet_map.eval(g.points)
        ds = arc * g.weights
        qn = [solution.flux_density(s, side, g.points) / arc for side in (0, 1)]
        pt = traces[s] @ L                   # (2, n)
        mu_h = solution.mu_on_facet(s, g.points)
        mu = reference.mu(xf)
        avg = 0.5 * (pt[0] + pt[1])
        j_qn += np.sum((qn[0] - qn[1]) ** 2 * ds)
        j_u += np.sum((pt[0] - pt[1]) ** 2 * ds)
        e_mu += np.sum((mu - mu_h) ** 2 * ds)
        e_mean += np.sum((avg - mu_h) ** 2 * ds)
        e_mean_exact += np.sum((mu - avg) ** 2 * ds)
    r = np.sqrt
    return ErrorReport(float(r(e_u)), float(r(e_q)), float(r(e_div)), float(r(j_qn)), float(r(j_u)),
                       float(r(e_mu)), float(r(e_mean)), float(r(e_mean_exact)), float(r(q_norm)),
                       mesh.h, q, float(tau), float(residual))


def l2_project(mesh, dofmap, func, quadrature_points=None):
    """Cellwise L2 projection I_h onto the mapped scalar space; global coefficients."""
    q = dofmap.q
    rule = tensor_rule(q + ERROR_QUADRATURE_OFFSET if quadrature_points is None else quadrature_points)
    x, _, det = mesh.geometry(rule.points)
    phi = q_reference_basis(q).values(rule.points)
    # v_i = phi_i / det, dx = det dx_hat
    M = np.einsum("in,jn,cn->cij", phi, phi, rule.weights / det)
    b = np.einsum("cn,in,n->ci", func(x), phi, rule.weights)
    loc = np.linalg.solve(M, b[..., None])[..., 0]
    out = np.zeros(dofmap.n_u)
    out[dofmap.u] = loc
    return out


def interpolate(dofmap, u, q_field, mu=None):
    """Canonical discrete triple of exact fields.

    Fluxes by the RT moment functionals of the pulled-back field
    det J^{-1} q(Phi(x_hat)), scalars by :func:`l2_project`, hybrid unknowns
    by the L2(0,1) projection of mu o Phi_F (``mu`` defaults to ``u``). Flux
    moments shared by two cells are averaged.
    """
    mesh = dofmap.mesh
    rt = rt_reference_basis(dofmap.q)
    qh = np.zeros(dofmap.n_q)
    hits = np.zeros(dofmap.n_q)
    for c, cell in enumerate(mesh.cells):
        def pulled(xh, cell=cell):
            x, J, det = cell.eval(np.atleast_2d(xh))
            w = np.linalg.solve(J, q_field(x)[..., None])[..., 0] * det[:, None]
            return w[None]
        loc = rt.apply_dofs(pulled)[:, 0]
        np.add.at(qh, dofmap.flux[c], dofmap.sign[c] * loc)
        np.add.at(hits, dofmap.flux[c], 1.0)
    qh /= hits
    uh = l2_project(mesh, dofmap, u)
    mu = u if mu is None else mu
    g = gauss_rule(dofmap.q + ERROR_QUADRATURE_OFFSET)
    L = legendre_eval(dofmap.q, g.points)
    scale = 2 * np.arange(dofmap.q + 1) + 1.0
    muh = np.zeros(dofmap.n_mu)
    for s, fid in enumerate(dofmap.skeleton):
        xf = mesh.facets[fid].facet_map(g.points)
        muh[dofmap.mu[s]] = scale * (L @ (mu(xf) * g.weights))
    return Solution(dofmap, qh, uh, muh)


def trace_projection_error(mesh, dofmap, projector, coeffs, quadrature_points=None):
    """(plus, minus) values of || Pi tr I_h u - tr I_h u ||_{L2(Gamma)}."""
    q = dofmap.q
    g = _skeleton_rule(q, quadrature_points)
    L = legendre_eval(q, g.points)
    traces = all_projected_traces(projector, dofmap, coeffs)
    err = np.zeros(2)
    for s, fid in enumerate(dofmap.skeleton):
        f = mesh.facets[fid]
        _, _, arc, _ = f.facet_map.eval(g.points)
        for side in range(2):
            c = projector.cells[s, side]
            exact = coeffs[dofmap.u[c]] @ trace_values(mesh, f, side, g.points, q)
            err[side] += np.sum((traces[s, side] @ L - exact) ** 2 * arc * g.weights)
    return tuple(np.sqrt(err))


def fit_slope(x, y):
    """Least-squares slope of log(y) against log(x); nonpositive y are dropped."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (y > 0) & np.isfinite(y) & (x > 0)
    if not np.all(keep):
        warnings.warn("excluding %d nonpositive or non-finite values from a rate fit"
                      % int(np.sum(~keep)), RuntimeWarning, stacklevel=2)
    x, y = x[keep], y[keep]
    if len(x) < 2:
        return float("nan")
    lx, ly = np.log(x), np.log(y)
    lx = lx - lx.mean()
    return float(np.dot(lx, ly - ly.mean()) / np.dot(lx, lx))


class ConvergenceTable:
    """Error reports over refinement levels at fixed (q, tau)."""

    def __init__(self, reports=()):
        self.reports = list(reports)

    def append(self, report):
        self.reports.append(report)

    def __len__(self):
        return len(self.reports)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.reports], dtype=float)

    def fit_rates(self, window=3, columns=ERROR_COLUMNS):
        return fit_rates(self, window, columns)


def fit_rates(table, window=3, columns=ERROR_COLUMNS):
    """Slopes of each error column against h over the last ``window`` rows."""
    if window < 2 or len(table) < 2:
        raise ConfigurationError("rate fit needs a window of at least 2 rows")
    rows = table.reports[-window:]
    h = [r.h for r in rows]
    return {c: fit_slope(h, [getattr(r, c) for r in rows]) for c in columns}


REPORT_COLUMNS = tuple(f.name for f in fields(ErrorReport))


def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else "%.17g" % v
    return str(v)


def write_csv(path, rows, columns):
    """Rows are dicts; floats are written with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_value(row.get(c, "")) for c in columns])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def report_dict(report):
    return asdict(report)
