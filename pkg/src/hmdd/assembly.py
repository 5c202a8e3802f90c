"""Sparse saddle-point system of the hybrid mixed method.

Unknowns (q_h, u_h, mu_h) are coupled by

    [ A   B   C ] [q]   [ 0 ]
    [ B^T -D  E ] [u] = [-F ]
    [ C^T E^T -G] [mu]  [ 0 ]

with A the 1/kappa-weighted flux mass, B_ij = int u_j div w_i, C the pairing of
mu with the normal-flux jump on the skeleton, D = tau sum_pm (Pi tr u, Pi tr v),
E = tau sum_pm (mu, Pi tr v) and G = 2 tau (mu, nu). The second and third
block rows are the scalar and hybrid equations multiplied by -1, which makes
the matrix symmetric.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError
from .mesh import REVERSED
from .quadrature import gauss_rule, legendre_eval, tensor_rule
from .spaces import q_reference_basis, rt_reference_basis
from .trace import side_data


def _as_field(value):
    if callable(value):
        return value
    c = float(value)
    return lambda x: np.full(np.shape(x)[:-1], c)


@dataclass
class ProblemData:
    """Coefficient kappa(x) > 0, source f(x) and stabilization tau >= 0.

    kappa and f may be constants or callables on arrays of points (..., 2).
    """

    kappa: object = 1.0
    source: object = 0.0
    tau: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.tau) or self.tau < 0:
            raise ConfigurationError("tau must be finite and >= 0, got %r" % (self.tau,))
        self.kappa = _as_field(self.kappa)
        self.source = _as_field(self.source)


@dataclass
class BlockSystem:
    A: sp.csr_matrix
    B: sp.csr_matrix
    C: sp.csr_matrix
    D: sp.csr_matrix
    E: sp.csr_matrix
    G: sp.csr_matrix
    F: np.ndarray
    dofmap: object
    tau: float

    @property
    def offsets(self):
        return self.dofmap.offsets

    def matrix(self):
        return sp.bmat([[self.A, self.B, self.C],
                        [self.B.T, -self.D, self.E],
                        [self.C.T, self.E.T, -self.G]], format="csr")

    def rhs(self):
        d = self.dofmap
        return np.concatenate([np.zeros(d.n_q), -self.F, np.zeros(d.n_mu)])


def _scatter(rows, cols, vals, shape):
    return sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=shape).tocsr()


def assemble_rhs(mesh, dofmap, f, quadrature_points=None):
    """F_i = int f v_i dx for every scalar basis function."""
    q = dofmap.q
    rule = tensor_rule(q + 3 if quadrature_points is None else quadrature_points)
    f = _as_field(f)
    x, _, _ = mesh.geometry(rule.points)
    phi = q_reference_basis(q).values(rule.points)
    # v = v_hat / det and dx = det dx_hat
    loc = np.einsum("cn,in,n->ci", f(x), phi, rule.weights)
    out = np.zeros(dofmap.n_u)
    np.add.at(out, dofmap.u, loc)
    return out


def assemble(mesh, dofmap, projector, data, quadrature_points=None):
    """Assemble all blocks; ``quadrature_points`` per direction defaults to q+3."""
    q = dofmap.q
    if not isinstance(data, ProblemData):
        raise ConfigurationError("data must be a ProblemData")
    if data.tau < 0:
        raise ConfigurationError("tau must be >= 0")
    npts = q + 3 if quadrature_points is None else int(quadrature_points)
    rule = tensor_rule(npts)
    rt = rt_reference_basis(q)
    x, J, det = mesh.geometry(rule.points)
    kappa = data.kappa(x)
    if np.any(~np.isfinite(kappa)) or np.any(kappa <= 0):
        raise ConfigurationError("kappa must be positive at all quadrature points")

    w_hat = rt.values(rule.points)                    # (s, n, 2)
    Jw = np.einsum("cnab,snb->csna", J, w_hat)        # (c, s, n, 2)
    A_loc = np.einsum("csna,ctna,cn->cst", Jw, Jw, rule.weights / (kappa * det))
    div_hat = rt.divergence(rule.points)              # (s, n)
    phi = q_reference_basis(q).values(rule.points)    # (i, n)
    B_loc = np.einsum("sn,in,cn->csi", div_hat, phi, rule.weights / det)

    sg = dofmap.sign
    A_loc *= sg[:, :, None] * sg[:, None, :]
    B_loc *= sg[:, :, None]
    nq, nu = dofmap.n_q, dofmap.n_u
    fl, ul = dofmap.flux, dofmap.u
    A = _scatter(np.repeat(fl[:, :, None], fl.shape[1], 2), np.repeat(fl[:, None, :], fl.shape[1], 1),
                 A_loc, (nq, nq))
    B = _scatter(np.repeat(fl[:, :, None], ul.shape[1], 2), np.repeat(ul[:, None, :], fl.shape[1], 1),
                 B_loc, (nq, nu))

    C = _assemble_jump_coupling(mesh, dofmap, projector)
    D, E, G = _assemble_stabilization(dofmap, projector, data.tau)
    F = assemble_rhs(mesh, dofmap, data.source, npts)
    return BlockSystem(A, B, C, D, E, G, F, dofmap, float(data.tau))


def _assemble_jump_coupling(mesh, dofmap, projector):
    """C_ij = int_Gamma mu_j [w_i . n] dsigma, with [a] = a_plus - a_minus."""
    q = dofmap.q
    rt = rt_reference_basis(q)
    g = gauss_rule(q + 2)
    L = legendre_eval(q, g.points)
    rows, cols, vals = [], [], []
    for s, fid in enumerate(projector.facets):
        f = mesh.facets[fid]
        for side in range(2):
            c, e, o = side_data(f, side)
            tl = 1.0 - g.points if o == REVERSED else g.points
            # (w . n_F)|Phi_F'| dt = eps * w_hat . n_out dt_loc; eps * jump sign = -1 on both sides
            wn = rt.normal_trace(e, tl) * dofmap.sign[c][:, None]
            loc = -np.einsum("sn,jn,n->sj", wn, L, g.weights)
            # shapes without normal trace on this edge only leave roundoff
            loc[np.abs(loc) < 1e-13] = 0.0
            rows.append(np.repeat(dofmap.flux[c][:, None], q + 1, 1))
            cols.append(np.repeat(dofmap.mu[s][None, :], rt.dim, 0))
            vals.append(loc)
    if not rows:
        return sp.csr_matrix((dofmap.n_q, dofmap.n_mu))
    M = _scatter(np.array(rows), np.array(cols), np.array(vals), (dofmap.n_q, dofmap.n_mu))
    M.eliminate_zeros()
    return M


def _assemble_stabilization(dofmap, projector, tau):
    nu, nm = dofmap.n_u, dofmap.n_mu
    ns = len(projector.facets)
    if ns == 0 or tau == 0:
        z = sp.csr_matrix
        return z((nu, nu)), z((nu, nm)), z((nm, nm))
    P, Mf = projector.P, projector.mass
    ucells = dofmap.u[projector.cells]          # (ns, 2, nu_loc)
    D_loc = tau * np.einsum("sdki,skl,sdlj->sdij", P, Mf, P)
    E_loc = tau * np.einsum("sdki,skl->sdil", P, Mf)
    G_loc = 2.0 * tau * Mf
    nl = ucells.shape[-1]
    mu = dofmap.mu                              # (ns, q+1)
    m = mu.shape[1]
    D = _scatter(np.repeat(ucells[..., :, None], nl, -1), np.repeat(ucells[..., None, :], nl, -2),
                 D_loc, (nu, nu))
    E = _scatter(np.repeat(ucells[..., :, None], m, -1),
                 np.broadcast_to(mu[:, None, None, :], (ns, 2, nl, m)), E_loc, (nu, nm))
    G = _scatter(np.repeat(mu[:, :, None], m, -1), np.repeat(mu[:, None, :], m, -2), G_loc, (nm, nm))
    return D, E, G


def dump_triplets(matrix, path):
    """Write a sparse matrix as 'nrows ncols nnz' followed by 'i j value' lines."""
    M = sp.coo_matrix(matrix)
    M.sum_duplicates()
    M.eliminate_zeros()
    order = np.lexsort((M.col, M.row))
    with open(path, "w") as fh:
        fh.write("%d %d %d\n" % (M.shape[0], M.shape[1], M.nnz))
        for i, j, v in zip(M.row[order], M.col[order], M.data[order]):
            fh.write("%d %d %.17g\n" % (i, j, v))


def load_triplets(path):
    with open(path) as fh:
        n, m, nnz = (int(v) for v in fh.readline().split())
        if nnz == 0:
            return sp.csr_matrix((n, m))
        data = np.loadtxt(fh, ndmin=2)
    if len(data) != nnz:
        raise ConfigurationError("%s: header announces %d entries, found %d" % (path, nnz, len(data)))
    return sp.coo_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))),
                         shape=(n, m)).tocsr()
