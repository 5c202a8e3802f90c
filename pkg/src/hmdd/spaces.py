"""Reference bases, physical transforms and global numbering.

Flux space: Raviart-Thomas of order q on [0,1]^2, first component of degree
q+1 in the first reference variable and q in the second (second component
transposed), mapped with the contravariant Piola transform. Scalars use
tensor Legendre shapes divided by det(J), hybrid unknowns Legendre
polynomials in the facet parameter.

RT degrees of freedom are Legendre moments of the outward normal trace on each
edge followed by interior moments. A global flux dof on facet F is the moment

    g_k = int_0^1 (w . n_F)(Phi_F(t)) |Phi_F'(t)| L_k(t) dt,

so the local shape of a cell enters with sign eps * o**k, where eps = +1 if
the cell's outward normal is n_F and o = -1 if the cell parametrizes F
backwards (L_k(1 - t) = (-1)**k L_k(t)).
"""
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, InvalidGeometryError
from .mesh import REF_NORMALS, REVERSED, edge_point
from .quadrature import gauss_rule, legendre_eval, tensor_rule


class RTReferenceBasis:
    """Dual basis of RT^q to its edge and interior Legendre moments.

    Local numbering: edge dofs (e, k) at index e*(q+1) + k for e = 0..3,
    then interior moments of the first component, then of the second.
    """

    def __init__(self, q):
        if q < 0:
            raise ConfigurationError("order must be nonnegative")
        self.q = q
        self.dim = 2 * (q + 1) * (q + 2)
        self.n_edge = q + 1
        self.n_interior = self.dim - 4 * (q + 1)
        # raw basis: unit Legendre tensor coefficients, first component then second
        n1 = (q + 2) * (q + 1)
        raw1 = np.zeros((self.dim, q + 2, q + 1))
        raw2 = np.zeros((self.dim, q + 1, q + 2))
        raw1[(np.arange(n1),) + np.unravel_index(np.arange(n1), (q + 2, q + 1))] = 1.0
        raw2[(n1 + np.arange(n1),) + np.unravel_index(np.arange(n1), (q + 1, q + 2))] = 1.0
        self.c1, self.c2 = raw1, raw2
        D = self.apply_dofs(self.values)
        X = np.linalg.inv(D)
        # shapes psi_s = sum_r X[r, s] phi_r
        self.c1 = np.einsum("rs,rij->sij", X, raw1)
        self.c2 = np.einsum("rs,rij->sij", X, raw2)

    def _legendre(self, xh, derivative=False):
        xh = np.atleast_2d(xh)
        return (legendre_eval(self.q + 1, xh[:, 0], derivative),
                legendre_eval(self.q + 1, xh[:, 1], derivative))

    def values(self, xhat):
        """Shape values, array (dim, n, 2)."""
        Lx, Ly = self._legendre(xhat)
        q = self.q
        v1 = np.einsum("sij,in,jn->sn", self.c1, Lx, Ly[:q + 1])
        v2 = np.einsum("sij,in,jn->sn", self.c2, Lx[:q + 1], Ly)
        return np.stack([v1, v2], axis=-1)

    def divergence(self, xhat):
        (Lx, dLx), (Ly, dLy) = self._legendre(xhat, derivative=True)
        q = self.q
        return (np.einsum("sij,in,jn->sn", self.c1, dLx, Ly[:q + 1])
                + np.einsum("sij,in,jn->sn", self.c2, Lx[:q + 1], dLy))

    def normal_trace(self, edge, t):
        """Outward normal component on a reference edge at parameters t, (dim, n)."""
        return self.values(edge_point(edge, np.atleast_1d(t))) @ REF_NORMALS[edge]

    def apply_dofs(self, field):
        """Matrix of the dof functionals applied to ``field(xhat) -> (m, n, 2)``.

        Returns (dim, m); for the shapes themselves this is the identity.
        """
        q = self.q
        g = gauss_rule(q + 3)
        L = legendre_eval(q, g.points)
        rows = []
        for e in range(4):
            vn = field(edge_point(e, g.points)) @ REF_NORMALS[e]
            rows.append(np.einsum("mn,kn,n->km", vn, L, g.weights))
        t = tensor_rule(q + 3)
        Lx = legendre_eval(q, t.points[:, 0])
        Ly = legendre_eval(q, t.points[:, 1])
        v = field(t.points)
        if q > 0:
            rows.append(np.einsum("mn,in,jn,n->ijm", v[..., 0], Lx[:q], Ly, t.weights).reshape(-1, v.shape[0]))
            rows.append(np.einsum("mn,in,jn,n->ijm", v[..., 1], Lx, Ly[:q], t.weights).reshape(-1, v.shape[0]))
        return np.concatenate(rows, axis=0)


class QReferenceBasis:
    """Tensor Legendre shapes L_i(x) L_j(y) of Q^q, index i*(q+1) + j."""

    def __init__(self, q):
        self.q = q
        self.dim = (q + 1) ** 2

    def values(self, xhat):
        xh = np.atleast_2d(xhat)
        Lx = legendre_eval(self.q, xh[:, 0])
        Ly = legendre_eval(self.q, xh[:, 1])
        return (Lx[:, None, :] * Ly[None, :, :]).reshape(self.dim, -1)


class FacetReferenceBasis:
    def __init__(self, q):
        self.q = q
        self.dim = q + 1

    def values(self, t):
        return legendre_eval(self.q, np.atleast_1d(t))


@lru_cache(maxsize=None)
def rt_reference_basis(q):
    return RTReferenceBasis(q)


@lru_cache(maxsize=None)
def q_reference_basis(q):
    return QReferenceBasis(q)


def _rt_order(n):
    q = 0
    while 2 * (q + 1) * (q + 2) < n:
        q += 1
    if 2 * (q + 1) * (q + 2) != n:
        raise ConfigurationError("%d is not an RT dimension" % n)
    return q


def _checked(cell, xhat):
    x, J, det = cell.eval(np.atleast_2d(xhat))
    if np.any(det <= 0):
        raise InvalidGeometryError("non-positive Jacobian determinant in %s cell" % cell.kind)
    return x, J, det


def piola_transform(cell, coeffs, xhat):
    """Physical flux J w_hat / det J at Phi_K(xhat) for local RT coefficients."""
    basis = rt_reference_basis(_rt_order(len(coeffs)))
    _, J, det = _checked(cell, xhat)
    w_hat = np.einsum("s,snd->nd", coeffs, basis.values(xhat))
    return np.einsum("nab,nb->na", J, w_hat) / det[:, None]


def piola_divergence(cell, coeffs, xhat):
    basis = rt_reference_basis(_rt_order(len(coeffs)))
    _, _, det = _checked(cell, xhat)
    return coeffs @ basis.divergence(xhat) / det


def q_transform(cell, coeffs, xhat):
    """Physical scalar v_hat / det J at Phi_K(xhat) for local Q^q coefficients."""
    q = int(round(np.sqrt(len(coeffs)))) - 1
    _, _, det = _checked(cell, xhat)
    return coeffs @ q_reference_basis(q).values(xhat) / det


class DofMap:
    """Global numbering of (q_h, u_h, mu_h).

    Flux numbering: interior moments cell by cell, then facet moments in facet
    order. Interior-patch and boundary facets carry one set of q+1 moments;
    skeleton facets carry two (plus side first, then minus side). Scalars are
    numbered cell by cell, hybrid unknowns skeleton facet by skeleton facet.
    In the coupled system the blocks follow each other: flux, scalar, hybrid.
    """

    def __init__(self, mesh, q):
        self.mesh = mesh
        self.q = q
        rt = rt_reference_basis(q)
        self.nw, self.nu, self.nm = rt.dim, (q + 1) ** 2, q + 1
        nc = mesh.n_cells
        ne, ni = q + 1, rt.n_interior

        flux = np.empty((nc, self.nw), dtype=int)
        sign = np.ones((nc, self.nw))
        flux[:, 4 * ne:] = np.arange(nc * ni).reshape(nc, ni)
        nxt = nc * ni
        parity = (-1.0) ** np.arange(ne)
        skel_plus, skel_minus = [], []
        self.flux_patch = np.empty(0, dtype=int)
        for fid, f in enumerate(mesh.facets):
            sides = [(f.cell_plus, f.local_edge_plus, f.orientation_plus)]
            if f.cell_minus is not None:
                sides.append((f.cell_minus, f.local_edge_minus, f.orientation_minus))
            if f.orientation_plus is None or (f.cell_minus is not None and f.orientation_minus is None):
                raise ConfigurationError("facet %d lacks orientation data" % fid)
            shared = nxt + np.arange(ne)
            if f.kind != "skeleton":
                nxt += ne
            for side, (c, e, o) in enumerate(sides):
                if f.kind == "skeleton":
                    ids = nxt + np.arange(ne)
                    nxt += ne
                    (skel_plus if side == 0 else skel_minus).append(ids)
                else:
                    ids = shared
                eps = 1.0 if (f.kind == "boundary" or side == 1) else -1.0
                flux[c, e * ne:(e + 1) * ne] = ids
                sign[c, e * ne:(e + 1) * ne] = eps * (parity if o == REVERSED else 1.0)
        self.flux, self.sign = flux, sign
        self.n_q = nxt
        self.u = np.arange(nc * self.nu).reshape(nc, self.nu)
        self.n_u = nc * self.nu
        self.skeleton = mesh.skeleton
        self.n_mu = len(self.skeleton) * self.nm
        self.mu = np.arange(self.n_mu).reshape(-1, self.nm)
        self.skeleton_flux = (np.array(skel_plus, dtype=int).reshape(-1, ne),
                              np.array(skel_minus, dtype=int).reshape(-1, ne))

        patch = np.empty(self.n_q, dtype=int)
        patch[flux.ravel()] = np.repeat(mesh.patches, self.nw)
        self.flux_patch = patch
        self.u_patch = np.repeat(mesh.patches, self.nu)

    @property
    def n_total(self):
        return self.n_q + self.n_u + self.n_mu

    @property
    def offsets(self):
        return 0, self.n_q, self.n_q + self.n_u

    def split(self, x):
        a, b, c = self.offsets
        return x[:b], x[b:c], x[c:]


def build_dofmap(mesh, q):
    return DofMap(mesh, q)


class Solution:
    """Coefficient vectors of (q_h, u_h, mu_h) with evaluators."""

    def __init__(self, dofmap, qh, uh, muh):
        self.dofmap = dofmap
        self.mesh = dofmap.mesh
        self.qh = np.asarray(qh, dtype=float)
        self.uh = np.asarray(uh, dtype=float)
        self.muh = np.asarray(muh, dtype=float)

    @classmethod
    def from_vector(cls, dofmap, x):
        return cls(dofmap, *dofmap.split(np.asarray(x)))

    @property
    def vector(self):
        return np.concatenate([self.qh, self.uh, self.muh])

    def local_flux(self):
        """Local RT coefficients per cell, (nc, nw)."""
        return self.dofmap.sign * self.qh[self.dofmap.flux]

    def local_u(self):
        return self.uh[self.dofmap.u]

    def on_cells(self, xhat):
        """Values on every cell at common reference points.

        Returns dict with world points ``x``, ``det``, ``u`` (nc, n),
        ``q`` (nc, n, 2) and ``div_q`` (nc, n).
        """
        q = self.dofmap.q
        rt = rt_reference_basis(q)
        x, J, det = self.mesh.geometry(xhat)
        cw = self.local_flux()
        w_hat = np.einsum("cs,snd->cnd", cw, rt.values(xhat))
        return {
            "x": x,
            "det": det,
            "u": (self.local_u() @ q_reference_basis(q).values(xhat)) / det,
            "q": np.einsum("cnab,cnb->cna", J, w_hat) / det[..., None],
            "div_q": (cw @ rt.divergence(xhat)) / det,
        }

    def mu_on_facet(self, s, t):
        """mu_h at facet parameters t on skeleton facet number s."""
        return self.muh[self.dofmap.mu[s]] @ legendre_eval(self.dofmap.q, np.atleast_1d(t))

    def flux_density(self, s, side, t):
        """(q_h . n_F)|Phi_F'| from one side (0 plus, 1 minus) of skeleton facet s."""
        f = self.mesh.facets[self.dofmap.skeleton[s]]
        c, e, o = ((f.cell_plus, f.local_edge_plus, f.orientation_plus) if side == 0
                   else (f.cell_minus, f.local_edge_minus, f.orientation_minus))
        eps = -1.0 if side == 0 else 1.0
        t = np.atleast_1d(t)
        tl = 1.0 - t if o == REVERSED else t
        cw = self.dofmap.sign[c] * self.qh[self.dofmap.flux[c]]
        return eps * cw @ rt_reference_basis(self.dofmap.q).normal_trace(e, tl)

    def _at(self, points):
        cells, xhat = self.mesh.locate(points)
        if np.any(cells < 0):
            raise ValueError("points outside the mesh: %s" % np.atleast_2d(points)[cells < 0])
        return cells, xhat

    def u_at(self, points):
        cells, xhat = self._at(points)
        return np.array([q_transform(self.mesh.cells[c], self.local_u()[c], xh[None])[0]
                         for c, xh in zip(cells, xhat)])

    def q_at(self, points):
        cells, xhat = self._at(points)
        cw = self.local_flux()
        return np.array([piola_transform(self.mesh.cells[c], cw[c], xh[None])[0]
                         for c, xh in zip(cells, xhat)])
