"""Projected one-sided traces of scalar functions onto the hybrid space.

On a skeleton facet F with side cell K the projection p = Pi tr v o Phi_F in
P^q solves (p, L_k)_{L2(0,1)} = (tr v o Phi_F, L_k)_{L2(0,1)}, so with the
Legendre basis

    p_k = (2k + 1) int_0^1 v_hat(x_hat(t)) / det J(x_hat(t)) L_k(t) dt.

The trace itself is generally not a polynomial because of the 1/det J factor.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InvalidGeometryError
from .mesh import REVERSED, edge_point
from .quadrature import gauss_rule, legendre_eval
from .spaces import q_reference_basis


@dataclass(frozen=True)
class TraceProjector:
    """Per skeleton facet s and side (0 = plus, 1 = minus).

    ``P[s, side]`` maps local scalar coefficients of the side cell to facet
    Legendre coefficients; ``mass[s]`` is the facet mass matrix
    int L_k L_l |Phi_F'| dt used for the physical L2(F) inner product.
    """

    q: int
    facets: np.ndarray   # mesh facet ids of the skeleton, in skeleton order
    cells: np.ndarray    # (n_skel, 2) side cells
    P: np.ndarray        # (n_skel, 2, q+1, (q+1)^2)
    mass: np.ndarray     # (n_skel, q+1, q+1)


def side_data(facet, side):
    if side == 0:
        return facet.cell_plus, facet.local_edge_plus, facet.orientation_plus
    return facet.cell_minus, facet.local_edge_minus, facet.orientation_minus


def trace_values(mesh, facet, side, t, q):
    """Traces of all local scalar shapes at facet parameters t, (nu, n)."""
    c, e, o = side_data(facet, side)
    tl = 1.0 - t if o == REVERSED else t
    xh = edge_point(e, tl)
    _, _, det = mesh.cells[c].eval(xh)
    if np.any(det <= 0):
        raise InvalidGeometryError("non-positive Jacobian on facet side cell %d" % c)
    return q_reference_basis(q).values(xh) / det


def build_trace_projector(mesh, dofmap, q=None, moment_quadrature_points=None):
    q = dofmap.q if q is None else q
    n = q + 3 if moment_quadrature_points is None else int(moment_quadrature_points)
    if n < q + 2:
        raise ConfigurationError("trace moments need at least q+2 = %d points" % (q + 2))
    g = gauss_rule(n)
    L = legendre_eval(q, g.points)
    scale = (2 * np.arange(q + 1) + 1.0)[:, None]
    skel = np.asarray(dofmap.skeleton, dtype=int)
    ns = len(skel)
    P = np.zeros((ns, 2, q + 1, (q + 1) ** 2))
    mass = np.zeros((ns, q + 1, q + 1))
    cells = np.zeros((ns, 2), dtype=int)
    for s, fid in enumerate(skel):
        f = mesh.facets[fid]
        _, _, arc, _ = f.facet_map.eval(g.points)
        if np.any(arc <= 1e-14):
            raise InvalidGeometryError("degenerate skeleton facet %d" % fid)
        mass[s] = np.einsum("kn,ln,n->kl", L, L, g.weights * arc)
        for side in range(2):
            cells[s, side] = side_data(f, side)[0]
            tv = trace_values(mesh, f, side, g.points, q)
            P[s, side] = scale * np.einsum("kn,in,n->ki", L, tv, g.weights)
    return TraceProjector(q, skel, cells, P, mass)


def project_trace(projector, side, facet, u_coeffs, dofmap=None):
    """Legendre coefficients of Pi tr^side u_h o Phi_F on skeleton facet number ``facet``.

    ``side`` is '+', '-', 0 (plus) or 1 (minus). ``u_coeffs`` is either the
    local coefficient vector of the side cell or, with ``dofmap``, the global
    scalar vector.
    """
    k = {"+": 0, "-": 1, 0: 0, 1: 1}[side]
    u = np.asarray(u_coeffs, dtype=float)
    if dofmap is not None:
        u = u[dofmap.u[projector.cells[facet, k]]]
    return projector.P[facet, k] @ u


def all_projected_traces(projector, dofmap, uh):
    """(n_skel, 2, q+1) facet coefficients of both projected traces."""
    loc = np.asarray(uh)[dofmap.u[projector.cells]]  # (ns, 2, nu)
    return np.einsum("sdki,sdi->sdk", projector.P, loc)
