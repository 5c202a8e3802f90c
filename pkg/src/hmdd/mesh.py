"""Curved quadrilateral meshes split into patches.

Reference cell is [0,1]^2 with local edges

    edge 0: (t, 0)    edge 1: (1, t)    edge 2: (t, 1)    edge 3: (0, t)

so every edge is parametrized in the increasing coordinate direction. Facet
normals on interior and skeleton facets point from the minus cell to the
plus cell; on boundary facets they point out of the (only, plus) cell.
Skeleton facets take the cell with the larger patch id as the plus side, which
keeps the sides fixed under refinement.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigurationError, InvalidGeometryError
from .quadrature import gauss_rule, tensor_rule

KINDS = ("affine", "bilinear", "annular_sector", "transfinite")
NPARAMS = {"affine": 6, "bilinear": 8, "annular_sector": 6, "transfinite": 36}

EDGE_START = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
EDGE_DIR = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
REF_NORMALS = np.array([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
# +1: outward normal is the tangent rotated clockwise, -1: counter-clockwise
_OUTWARD_ROT = np.array([1.0, 1.0, -1.0, -1.0])
# local corner indices (v00, v10, v11, v01) at t=0 and t=1 of each edge
EDGE_VERTICES = np.array([[0, 1], [1, 2], [3, 2], [0, 3]])

SAME, REVERSED = "same", "reversed"


def edge_point(edge, t):
    """Reference coordinates of local edge ``edge`` at parameter(s) t."""
    t = np.asarray(t, dtype=float)
    return EDGE_START[edge] + t[..., None] * EDGE_DIR[edge]


def _orient(t, orientation):
    return t if orientation == SAME else 1.0 - t


# --- vectorized mapping kernels: params (nc, np), xh (n, 2) -> x (nc,n,2), J (nc,n,2,2)

def _eval_affine(P, xh):
    xi, eta = xh[:, 0], xh[:, 1]
    o, a, b = P[:, None, 0:2], P[:, None, 2:4], P[:, None, 4:6]
    x = o + xi[None, :, None] * a + eta[None, :, None] * b
    J = np.empty(x.shape + (2,))
    J[..., 0] = np.broadcast_to(a, x.shape)
    J[..., 1] = np.broadcast_to(b, x.shape)
    return x, J


def _bilinear(v00, v10, v11, v01, xi, eta):
    xi = xi[None, :, None]
    eta = eta[None, :, None]
    x = (1 - xi) * (1 - eta) * v00 + xi * (1 - eta) * v10 + xi * eta * v11 + (1 - xi) * eta * v01
    dxi = (1 - eta) * (v10 - v00) + eta * (v11 - v01)
    deta = (1 - xi) * (v01 - v00) + xi * (v11 - v10)
    return x, dxi, deta


def _eval_bilinear(P, xh):
    v = [P[:, None, 2 * k:2 * k + 2] for k in range(4)]
    x, dxi, deta = _bilinear(*v, xh[:, 0], xh[:, 1])
    return x, np.stack([dxi, deta], axis=-1)


def _eval_annular(P, xh):
    c = P[:, None, 0:2]
    r0, r1, t0, t1 = (P[:, 2:3], P[:, 3:4], P[:, 4:5], P[:, 5:6])
    r = r0 + xh[None, :, 0] * (r1 - r0)
    th = t0 + xh[None, :, 1] * (t1 - t0)
    e_r = np.stack([np.cos(th), np.sin(th)], axis=-1)
    e_t = np.stack([-np.sin(th), np.cos(th)], axis=-1)
    x = c + r[..., None] * e_r
    J = np.stack([(r1 - r0)[..., None] * e_r, (r * (t1 - t0))[..., None] * e_t], axis=-1)
    return x, J


def _edge_curve(P, e, s):
    """Boundary curve e of a transfinite cell at parent parameter s (nc, n)."""
    a, b = EDGE_VERTICES[e]
    start = P[:, None, 2 * a:2 * a + 2]
    end = P[:, None, 2 * b:2 * b + 2]
    line = start + s[..., None] * (end - start)
    dline = np.broadcast_to(end - start, line.shape)
    ep = P[:, 12 + 6 * e:18 + 6 * e]
    is_arc = ep[:, 0] > 0.5
    if not is_arc.any():
        return line, dline
    c = ep[:, None, 1:3]
    R, ta, tb = ep[:, 3:4], ep[:, 4:5], ep[:, 5:6]
    th = ta + s * (tb - ta)
    arc = c + R[..., None] * np.stack([np.cos(th), np.sin(th)], axis=-1)
    darc = (R * (tb - ta))[..., None] * np.stack([-np.sin(th), np.cos(th)], axis=-1)
    sel = is_arc[:, None, None]
    return np.where(sel, arc, line), np.where(sel, darc, dline)


def _eval_transfinite(P, xh):
    a0, a1, b0, b1 = (P[:, 8:9], P[:, 9:10], P[:, 10:11], P[:, 11:12])
    X = a0 + xh[None, :, 0] * (a1 - a0)
    Y = b0 + xh[None, :, 1] * (b1 - b0)
    C0, dC0 = _edge_curve(P, 0, X)
    C1, dC1 = _edge_curve(P, 1, Y)
    C2, dC2 = _edge_curve(P, 2, X)
    C3, dC3 = _edge_curve(P, 3, Y)
    v00, v10, v11, v01 = [P[:, None, 2 * k:2 * k + 2] for k in range(4)]
    Xe, Ye = X[..., None], Y[..., None]
    bil = (1 - Xe) * (1 - Ye) * v00 + Xe * (1 - Ye) * v10 + Xe * Ye * v11 + (1 - Xe) * Ye * v01
    dbX = (1 - Ye) * (v10 - v00) + Ye * (v11 - v01)
    dbY = (1 - Xe) * (v01 - v00) + Xe * (v11 - v10)
    x = (1 - Ye) * C0 + Ye * C2 + (1 - Xe) * C3 + Xe * C1 - bil
    dX = (1 - Ye) * dC0 + Ye * dC2 - C3 + C1 - dbX
    dY = -C0 + C2 + (1 - Xe) * dC3 + Xe * dC1 - dbY
    J = np.stack([dX * (a1 - a0)[..., None], dY * (b1 - b0)[..., None]], axis=-1)
    return x, J


_KERNELS = {
    "affine": _eval_affine,
    "bilinear": _eval_bilinear,
    "annular_sector": _eval_annular,
    "transfinite": _eval_transfinite,
}


def eval_mappings(kind, params, xhat):
    """Evaluate many cells of one kind at the same reference points."""
    P = np.atleast_2d(np.asarray(params, dtype=float))
    xh = np.atleast_2d(np.asarray(xhat, dtype=float))
    x, J = _KERNELS[kind](P, xh)
    det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    return x, J, det


@dataclass(frozen=True)
class CellMapping:
    """Map Phi_K of the reference square onto a possibly curved cell.

    Parameter layouts (world units, angles in radians):

    * affine: origin (2), edge vectors a, b (2 + 2)
    * bilinear: corners v00, v10, v11, v01
    * annular_sector: center (2), r_in, r_out, theta0, theta1; the first
      reference coordinate is radial, the second angular
    * transfinite: corners v00, v10, v11, v01, a reference sub-box
      (a0, a1, b0, b1) of the parent square, then for each edge 0..3 the
      tuple (is_arc, cx, cy, R, theta_a, theta_b). Gordon-Hall blending of
      the four boundary curves, restricted to the sub-box.
    """

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in NPARAMS:
            raise ConfigurationError("unknown mapping kind %r" % (self.kind,))
        if len(self.params) != NPARAMS[self.kind]:
            raise ConfigurationError(
                "%s mapping needs %d parameters, got %d"
                % (self.kind, NPARAMS[self.kind], len(self.params)))

    def eval(self, xhat):
        x, J, det = eval_mappings(self.kind, [self.params], xhat)
        return x[0], J[0], det[0]

    def corners(self):
        x, _, _ = self.eval(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))
        return x

    def children(self):
        """The four cells of a bisection in reference coordinates.

        Order: (0,0), (1,0), (0,1), (1,1) lower-left reference corners.
        """
        p = self.params
        out = []
        for j in range(2):
            for i in range(2):
                lo = np.array([0.5 * i, 0.5 * j])
                if self.kind == "affine":
                    o, _, _ = self.eval(lo[None])
                    out.append(CellMapping("affine", (*o[0], p[2] / 2, p[3] / 2, p[4] / 2, p[5] / 2)))
                elif self.kind == "bilinear":
                    box = lo + 0.5 * np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
                    v, _, _ = self.eval(box)
                    out.append(CellMapping("bilinear", tuple(v.ravel())))
                elif self.kind == "annular_sector":
                    cx, cy, r0, r1, t0, t1 = p
                    rm, tm = 0.5 * (r0 + r1), 0.5 * (t0 + t1)
                    rr = (r0, rm) if i == 0 else (rm, r1)
                    tt = (t0, tm) if j == 0 else (tm, t1)
                    out.append(CellMapping("annular_sector", (cx, cy, *rr, *tt)))
                else:
                    a0, a1, b0, b1 = p[8:12]
                    am, bm = 0.5 * (a0 + a1), 0.5 * (b0 + b1)
                    aa = (a0, am) if i == 0 else (am, a1)
                    bb = (b0, bm) if j == 0 else (bm, b1)
                    out.append(CellMapping("transfinite", (*p[:8], *aa, *bb, *p[12:])))
        return out


def map_eval(cell, xhat):
    """Return (x, J, detJ) of ``cell`` at reference points ``xhat``.

    Raises InvalidGeometryError if the determinant is not positive.
    """
    xh = np.asarray(xhat, dtype=float)
    single = xh.ndim == 1
    x, J, det = cell.eval(np.atleast_2d(xh))
    if np.any(det <= 0):
        raise InvalidGeometryError("non-positive Jacobian determinant %g in %s cell"
                                   % (det.min(), cell.kind))
    if single:
        return x[0], J[0], det[0]
    return x, J, det


def transfinite_cell(corners, arcs=(None, None, None, None), box=(0.0, 1.0, 0.0, 1.0)):
    """Helper: build a transfinite CellMapping.

    ``arcs[e]`` is None for a straight edge or (cx, cy, R, theta_a, theta_b).
    """
    params = [float(c) for v in corners for c in v]
    params += [float(b) for b in box]
    for arc in arcs:
        if arc is None:
            params += [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        else:
            params += [1.0] + [float(a) for a in arc]
    return CellMapping("transfinite", tuple(params))


@dataclass(frozen=True)
class FacetMapping:
    """Phi_F: [0,1] -> F, induced by a local edge of the plus cell."""

    cell: CellMapping
    edge: int
    orientation: str
    normal_sign: float

    def eval(self, t):
        """Return points, tangents dPhi_F/dt, arc factors |Phi_F'| and unit normals."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        tl = _orient(t, self.orientation)
        x, J, _ = self.cell.eval(edge_point(self.edge, tl))
        tloc = J @ EDGE_DIR[self.edge]
        tangent = tloc if self.orientation == SAME else -tloc
        arc = np.hypot(tloc[:, 0], tloc[:, 1])
        rot = _OUTWARD_ROT[self.edge]
        outward = rot * np.column_stack([tloc[:, 1], -tloc[:, 0]]) / arc[:, None]
        return x, tangent, arc, self.normal_sign * outward

    def __call__(self, t):
        return self.eval(t)[0]


@dataclass(frozen=True)
class Facet:
    kind: str  # interior_patch | skeleton | boundary
    cell_plus: int
    cell_minus: int | None
    local_edge_plus: int
    local_edge_minus: int | None
    orientation_plus: str
    orientation_minus: str | None
    facet_map: FacetMapping = field(repr=False)


def _cell_groups(cells):
    groups = {}
    for i, c in enumerate(cells):
        groups.setdefault(c.kind, []).append(i)
    return {k: np.array(v) for k, v in groups.items()}


def eval_cells(cells, xhat):
    """Evaluate all cells at common reference points, grouped by mapping kind.

    Returns x (nc, n, 2), J (nc, n, 2, 2) and det (nc, n).
    """
    xh = np.atleast_2d(np.asarray(xhat, dtype=float))
    nc, n = len(cells), len(xh)
    x = np.empty((nc, n, 2))
    J = np.empty((nc, n, 2, 2))
    det = np.empty((nc, n))
    for kind, idx in _cell_groups(cells).items():
        P = np.array([cells[i].params for i in idx])
        x[idx], J[idx], det[idx] = eval_mappings(kind, P, xh)
    return x, J, det


def _boundary_samples(m=8):
    t = (np.arange(m) + 0.5) / m
    t = np.concatenate([[0.0], t])
    return np.concatenate([edge_point(e, t) for e in range(4)])


def _vertex_ids(points, tol=1e-9):
    tree = cKDTree(points)
    ids = -np.ones(len(points), dtype=int)
    nxt = 0
    for i in range(len(points)):
        if ids[i] >= 0:
            continue
        group = tree.query_ball_point(points[i], tol)
        ids[group] = nxt
        nxt += 1
    # representative coordinates
    verts = np.zeros((nxt, 2))
    verts[ids] = points
    return ids, verts


def _make_facet(cells, kind, plus, eplus, minus, eminus, ominus):
    fmap = FacetMapping(cells[plus], eplus, SAME, 1.0 if kind == "boundary" else -1.0)
    return Facet(kind, plus, minus, eplus, eminus, SAME, ominus, fmap)


class Mesh:
    """Conforming quadrilateral mesh with patch ids and classified facets.

    Immutable after construction. ``cell_facets[c, e]`` is the facet on local
    edge e of cell c.
    """

    def __init__(self, cells, patches, level=0, plus_choice=None):
        self.cells = tuple(cells)
        self.patches = np.asarray(patches, dtype=int)
        self.level = int(level)
        if len(self.patches) != len(self.cells):
            raise ConfigurationError("one patch id per cell required")
        nc = len(self.cells)
        corners = eval_cells(self.cells, [[0, 0], [1, 0], [1, 1], [0, 1]])[0]
        ids, self.vertices = _vertex_ids(corners.reshape(-1, 2))
        self.cell_vertices = ids.reshape(nc, 4)

        edges = {}
        order = []
        for c in range(nc):
            for e in range(4):
                a, b = self.cell_vertices[c, EDGE_VERTICES[e]]
                key = (min(a, b), max(a, b))
                if key not in edges:
                    edges[key] = []
                    order.append(key)
                edges[key].append((c, e))

        facets = []
        self.cell_facets = -np.ones((nc, 4), dtype=int)
        for key in order:
            owners = edges[key]
            if len(owners) > 2:
                raise ConfigurationError("edge %s shared by %d cells" % (key, len(owners)))
            if len(owners) == 1:
                (c, e), = owners
                f = _make_facet(self.cells, "boundary", c, e, None, None, None)
            else:
                (c1, e1), (c2, e2) = owners
                kind = "interior_patch" if self.patches[c1] == self.patches[c2] else "skeleton"
                if plus_choice is not None and key in plus_choice:
                    first = plus_choice[key] == c1
                elif kind == "skeleton":
                    first = self.patches[c1] > self.patches[c2]
                else:
                    first = True
                (p, ep), (m, em) = ((c1, e1), (c2, e2)) if first else ((c2, e2), (c1, e1))
                sp = self.cell_vertices[p, EDGE_VERTICES[ep][0]]
                sm = self.cell_vertices[m, EDGE_VERTICES[em][0]]
                f = _make_facet(self.cells, kind, p, ep, m, em, SAME if sp == sm else REVERSED)
            for c, e in owners:
                self.cell_facets[c, e] = len(facets)
            facets.append(f)
        self.facets = tuple(facets)
        self._edge_keys = order

        bx = eval_cells(self.cells, _boundary_samples())[0]
        d = np.linalg.norm(bx[:, :, None, :] - bx[:, None, :, :], axis=-1)
        self.diameters = d.max(axis=(1, 2))
        self.h = float(self.diameters.max())

    # -- queries
    def __len__(self):
        return len(self.cells)

    @property
    def n_cells(self):
        return len(self.cells)

    def facet_indices(self, kind):
        return np.array([i for i, f in enumerate(self.facets) if f.kind == kind], dtype=int)

    @property
    def skeleton(self):
        return self.facet_indices("skeleton")

    @property
    def n_patches(self):
        return len(np.unique(self.patches))

    def geometry(self, xhat):
        """(x, J, det) of all cells at reference points; validates det > 0."""
        x, J, det = eval_cells(self.cells, xhat)
        if np.any(det <= 0):
            c = int(np.argmin(det.min(axis=1)))
            raise InvalidGeometryError("non-positive Jacobian in cell %d (%s)"
                                       % (c, self.cells[c].kind))
        return x, J, det

    def cell_areas(self, n=8):
        rule = tensor_rule(n)
        _, _, det = self.geometry(rule.points)
        return det @ rule.weights

    def facet_lengths(self, idx=None, n=8):
        rule = gauss_rule(n)
        idx = range(len(self.facets)) if idx is None else idx
        return np.array([self.facets[i].facet_map.eval(rule.points)[2] @ rule.weights for i in idx])

    def with_flipped(self, facet_ids):
        """Copy of the mesh with plus/minus swapped on the given facets."""
        flip = set(int(i) for i in facet_ids)
        choice = {}
        for i, key in enumerate(self._edge_keys):
            f = self.facets[i]
            if f.kind == "boundary":
                continue
            choice[key] = f.cell_minus if i in flip else f.cell_plus
        return Mesh(self.cells, self.patches, self.level, plus_choice=choice)

    def locate(self, points, tol=1e-10):
        """Find (cell ids, reference coordinates) of world points by Newton inversion."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        bx = eval_cells(self.cells, _boundary_samples())[0]
        pad = 0.05 * self.diameters[:, None]
        lo, hi = bx.min(axis=1) - pad, bx.max(axis=1) + pad
        cells = -np.ones(len(pts), dtype=int)
        xhat = np.full((len(pts), 2), np.nan)
        for k, p in enumerate(pts):
            cand = np.nonzero(np.all((p >= lo) & (p <= hi), axis=1))[0]
            for c in cand:
                xh = np.array([0.5, 0.5])
                for _ in range(50):
                    x, J, _ = self.cells[c].eval(xh[None])
                    step = np.linalg.solve(J[0], x[0] - p)
                    xh = np.clip(xh - step, -0.5, 1.5)
                    if np.max(np.abs(step)) < 1e-14:
                        break
                if np.all(xh >= -tol) and np.all(xh <= 1 + tol):
                    cells[k], xhat[k] = c, np.clip(xh, 0.0, 1.0)
                    break
        return cells, xhat


def refine(mesh):
    """Uniform refinement: each cell bisected in both reference directions."""
    cells, patches = [], []
    for c, p in zip(mesh.cells, mesh.patches):
        kids = c.children()
        cells.extend(kids)
        patches.extend([p] * len(kids))
    return Mesh(cells, patches, mesh.level + 1)


def _split_indices(splits, n, name):
    out = []
    for s in sorted(splits):
        k = s * n
        if not (0.0 < s < 1.0) or abs(k - round(k)) > 1e-10:
            raise ConfigurationError("%s split at %r is not a mesh line of a %d-cell grid"
                                     % (name, s, n))
        out.append(int(round(k)))
    return out


def build_square_mesh(n_per_side, x_splits=(), y_splits=()):
    """Uniform affine mesh of the unit square.

    ``n_per_side`` is an int or a pair (nx, ny). Patch boundaries (the
    skeleton) are the vertical lines ``x_splits`` and horizontal lines
    ``y_splits``; both must coincide with mesh lines.
    """
    nx, ny = (n_per_side, n_per_side) if np.isscalar(n_per_side) else n_per_side
    if nx < 1 or ny < 1:
        raise ConfigurationError("n_per_side must be positive")
    xs = _split_indices(x_splits, nx, "x")
    ys = _split_indices(y_splits, ny, "y")
    cells, patches = [], []
    for j in range(ny):
        for i in range(nx):
            cells.append(CellMapping("affine", (i / nx, j / ny, 1.0 / nx, 0.0, 0.0, 1.0 / ny)))
            px = sum(i >= k for k in xs)
            py = sum(j >= k for k in ys)
            patches.append(py * (len(xs) + 1) + px)
    return Mesh(cells, patches, level=0)


def annulus_base_cells(inner_half_width=0.4, interface_radius=1.0, outer_radius=2.0):
    """Base pattern of the disk benchmark.

    A central square [-s, s]^2, four transfinite cells between the square and
    the interface circle (patch 0), and two layers of four annular sectors
    outside the circle (patch 1): 13 cells.
    """
    s = inner_half_width
    R = interface_radius
    cells = [CellMapping("affine", (-s, -s, 2 * s, 0.0, 0.0, 2 * s))]
    patches = [0]
    for k in range(4):
        phi = k * math.pi / 2
        c, sn = math.cos(phi), math.sin(phi)

        def rot(v):
            return (c * v[0] - sn * v[1], sn * v[0] + c * v[1])

        ta, tb = phi - math.pi / 4, phi + math.pi / 4
        corners = [rot((s, -s)), (R * math.cos(ta), R * math.sin(ta)),
                   (R * math.cos(tb), R * math.sin(tb)), rot((s, s))]
        cells.append(transfinite_cell(corners, arcs=(None, (0.0, 0.0, R, ta, tb), None, None)))
        patches.append(0)
    rm = 0.5 * (R + outer_radius)
    for r0, r1 in ((R, rm), (rm, outer_radius)):
        for k in range(4):
            t0 = -math.pi / 4 + k * math.pi / 2
            cells.append(CellMapping("annular_sector", (0.0, 0.0, r0, r1, t0, t0 + math.pi / 2)))
            patches.append(1)
    return cells, patches


def build_annulus_mesh(level, inner_half_width=0.4):
    """Disk of radius 2 split by the unit circle, refined ``level`` times.

    Patch 0 is the inner disk, patch 1 the outer annulus; skeleton normals
    point radially outward.
    """
    if level < 0:
        raise ConfigurationError("level must be nonnegative")
    cells, patches = annulus_base_cells(inner_half_width)
    mesh = Mesh(cells, patches, level=0)
    for _ in range(level):
        mesh = refine(mesh)
    return mesh


# --- text format

_HEADER = "# hmdd mesh v1"


def write_mesh(mesh, path):
    """Write cells (kind, patch, parameters) and the facet table as text."""
    lines = [_HEADER, "level %d" % mesh.level, "cells %d" % len(mesh.cells)]
    for c, p in zip(mesh.cells, mesh.patches):
        lines.append(" ".join([c.kind, str(int(p))] + ["%.17g" % v for v in c.params]))
    lines.append("facets %d" % len(mesh.facets))
    for f in mesh.facets:
        lines.append("%s %d %d %s %d %d %s" % (
            f.kind, f.cell_plus, f.local_edge_plus, f.orientation_plus,
            -1 if f.cell_minus is None else f.cell_minus,
            -1 if f.local_edge_minus is None else f.local_edge_minus,
            f.orientation_minus or "-"))
    lines.append("end")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path):
    """Read a mesh written by :func:`write_mesh`; facets are checked against the cells."""
    with open(path) as fh:
        rows = [ln.split() for ln in fh if ln.strip() and not ln.startswith("#")]
    try:
        it = iter(rows)
        level = int(next(it)[1])
        nc = int(next(it)[1])
        cells, patches = [], []
        for _ in range(nc):
            r = next(it)
            cells.append(CellMapping(r[0], tuple(float(v) for v in r[2:])))
            patches.append(int(r[1]))
        nf = int(next(it)[1])
        frows = [next(it) for _ in range(nf)]
    except (StopIteration, ValueError, IndexError) as exc:
        raise ConfigurationError("malformed mesh file %s: %s" % (path, exc)) from exc
    probe = Mesh(cells, patches, level)
    choice = {}
    for r in frows:
        plus, eplus = int(r[1]), int(r[2])
        fid = probe.cell_facets[plus, eplus]
        choice[probe._edge_keys[fid]] = plus
    mesh = Mesh(cells, patches, level, plus_choice=choice)
    for r, f in zip(frows, mesh.facets):
        got = (f.kind, f.cell_plus, f.local_edge_plus,
               -1 if f.cell_minus is None else f.cell_minus)
        want = (r[0], int(r[1]), int(r[2]), int(r[4]))
        if got != want:
            raise ConfigurationError("facet table in %s does not match the cells" % path)
    return mesh


__all__ = [
    "CellMapping", "FacetMapping", "Facet", "Mesh", "build_square_mesh",
    "build_annulus_mesh", "refine", "map_eval", "edge_point", "write_mesh",
    "read_mesh", "transfinite_cell", "eval_cells",
]
