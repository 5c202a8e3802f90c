"""Continuous Galerkin Q_p solver used as an independent overkill oracle.

Shares only the cell mappings with the mixed discretization: nodes, edge
ownership, quadrature (numpy's Gauss-Legendre) and the linear algebra are set
up separately, so that agreement between the two routes is meaningful.
"""
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.polynomial import legendre as npleg

from .errors import ConfigurationError

# corner order of Mesh.cell_vertices: (0,0), (1,0), (1,1), (0,1)
_EDGE_CORNERS = ((0, 1), (1, 2), (3, 2), (0, 3))


def lobatto_nodes(p):
    """Gauss-Lobatto nodes on [0, 1]."""
    if p < 1:
        raise ConfigurationError("primal order must be >= 1")
    inner = npleg.legroots(npleg.legder([0] * p + [1])) if p > 1 else np.zeros(0)
    return 0.5 * (np.concatenate([[-1.0], np.sort(inner), [1.0]]) + 1.0)


def lagrange_1d(nodes, t):
    """Values and derivatives of the Lagrange basis on ``nodes`` at t, each (m, n)."""
    t = np.asarray(t, dtype=float)
    m = len(nodes)
    val = np.ones((m, len(t)))
    der = np.zeros((m, len(t)))
    for i in range(m):
        others = [j for j in range(m) if j != i]
        denom = np.prod([nodes[i] - nodes[j] for j in others])
        for j in others:
            val[i] *= t - nodes[j]
        for k in others:
            term = np.ones_like(t)
            for j in others:
                if j != k:
                    term = term * (t - nodes[j])
            der[i] += term
        val[i] /= denom
        der[i] /= denom
    return val, der


def _local_edge_nodes(p, e):
    """Local (i, j) of interior nodes along edge e, in edge direction."""
    r = range(1, p)
    return [[(i, 0) for i in r], [(p, j) for j in r], [(i, p) for i in r], [(0, j) for j in r]][e]


def _numbering(mesh, p):
    cv = mesh.cell_vertices
    nv = int(cv.max()) + 1
    edge_id, edge_count = {}, {}
    for c in range(mesh.n_cells):
        for a, b in _EDGE_CORNERS:
            key = tuple(sorted((cv[c, a], cv[c, b])))
            if key not in edge_id:
                edge_id[key] = len(edge_id)
            edge_count[key] = edge_count.get(key, 0) + 1
    ne = len(edge_id)
    n_edge_dofs = p - 1
    n_cell_dofs = (p - 1) ** 2
    dofs = np.empty((mesh.n_cells, (p + 1) ** 2), dtype=int)
    boundary = set()
    for c in range(mesh.n_cells):
        loc = np.empty((p + 1, p + 1), dtype=int)
        for k, (i, j) in enumerate(((0, 0), (p, 0), (p, p), (0, p))):
            loc[i, j] = cv[c, k]
        for e, (a, b) in enumerate(_EDGE_CORNERS):
            va, vb = cv[c, a], cv[c, b]
            key = tuple(sorted((va, vb)))
            ids = nv + edge_id[key] * n_edge_dofs + np.arange(n_edge_dofs)
            if va > vb:
                ids = ids[::-1]
            for (i, j), g in zip(_local_edge_nodes(p, e), ids):
                loc[i, j] = g
            if edge_count[key] == 1:
                boundary.update((va, vb))
                boundary.update(ids.tolist())
        base = nv + ne * n_edge_dofs + c * n_cell_dofs
        loc[1:p, 1:p] = (base + np.arange(n_cell_dofs)).reshape(p - 1, p - 1)
        # local index i + (p+1) j: first coordinate fastest
        dofs[c] = loc.T.ravel()
    n = nv + ne * n_edge_dofs + mesh.n_cells * n_cell_dofs
    return dofs, np.array(sorted(boundary), dtype=int), n


class PrimalSolution:
    def __init__(self, mesh, p, coeffs, dofs):
        self.mesh, self.p, self.coeffs, self.dofs = mesh, p, coeffs, dofs
        self.nodes = lobatto_nodes(p)

    def values(self, xhat):
        """u_p at reference points of every cell, (nc, n)."""
        xhat = np.asarray(xhat, dtype=float)
        vx, _ = lagrange_1d(self.nodes, xhat[:, 0])
        vy, _ = lagrange_1d(self.nodes, xhat[:, 1])
        phi = np.einsum("in,jn->jin", vx, vy).reshape(-1, len(xhat))
        return self.coeffs[self.dofs] @ phi


def solve_primal(mesh, p, kappa, source, quad_points=None):
    """Homogeneous Dirichlet Q_p solve of -div(kappa grad u) = f."""
    nq = p + 3 if quad_points is None else quad_points
    g, w = npleg.leggauss(nq)
    g, w = 0.5 * (g + 1.0), 0.5 * w
    X, Y = np.meshgrid(g, g, indexing="xy")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    wts = np.outer(w, w).ravel()
    nodes = lobatto_nodes(p)
    vx, dx = lagrange_1d(nodes, pts[:, 0])
    vy, dy = lagrange_1d(nodes, pts[:, 1])
    m = p + 1
    phi = np.einsum("in,jn->jin", vx, vy).reshape(m * m, -1)
    gx = np.einsum("in,jn->jin", dx, vy).reshape(m * m, -1)
    gy = np.einsum("in,jn->jin", vx, dy).reshape(m * m, -1)
    ghat = np.stack([gx, gy], axis=-1)                       # (m2, n, 2)

    x, J, det = mesh.geometry(pts)
    Jinv = np.linalg.inv(J)                                  # (c, n, 2, 2)
    grad = np.einsum("cnba,snb->csna", Jinv, ghat)           # J^{-T} grad_hat
    wk = kappa(x) * det * wts
    K_loc = np.einsum("csna,ctna,cn->cst", grad, grad, wk)
    F_loc = np.einsum("cn,sn,cn->cs", source(x), phi, det * wts)

    dofs, bnd, n = _numbering(mesh, p)
    rows = np.repeat(dofs[:, :, None], m * m, 2)
    cols = np.repeat(dofs[:, None, :], m * m, 1)
    K = sp.coo_matrix((K_loc.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)).tocsr()
    F = np.zeros(n)
    np.add.at(F, dofs, F_loc)
    free = np.setdiff1d(np.arange(n), bnd)
    u = np.zeros(n)
    u[free] = spla.splu(sp.csc_matrix(K[free][:, free]), permc_spec="COLAMD").solve(F[free])
    return PrimalSolution(mesh, p, u, dofs)


def l2_difference(mesh, primal, func, quad_points=None):
    """(|| u_p - func ||, || func ||) over the mesh."""
    nq = primal.p + 5 if quad_points is None else quad_points
    g, w = npleg.leggauss(nq)
    g, w = 0.5 * (g + 1.0), 0.5 * w
    X, Y = np.meshgrid(g, g, indexing="xy")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    wts = np.outer(w, w).ravel()
    x, _, det = mesh.geometry(pts)
    ref = func(x)
    diff = primal.values(pts) - ref
    dxw = det * wts
    return float(np.sqrt(np.sum(diff ** 2 * dxw))), float(np.sqrt(np.sum(ref ** 2 * dxw)))
