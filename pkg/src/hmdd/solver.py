"""Direct solution of the coupled system, monolithic or condensed onto mu.

The condensed path eliminates, patch by patch, every flux and scalar unknown
of the patch (including the flux moments on its side of the skeleton). What
remains is a dense-per-patch Schur complement on the hybrid unknowns alone.
With mu acting as Dirichlet data each patch problem is a well-posed mixed
problem for every tau >= 0, including patches that touch no part of the
outer boundary.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigurationError, SolverError
from .spaces import Solution

RESIDUAL_TOL = 1e-10
DENSE_LIMIT = 2000
_BLOCKS = ("flux", "scalar", "hybrid")


@dataclass
class LinearSolveReport:
    relative_residual: float
    factorization: str
    n_unknowns: int
    nnz: int
    fill: float = float("nan")
    n_condensed: int = 0
    patch_dims: list = field(default_factory=list)

    @property
    def ok(self):
        return bool(self.relative_residual <= RESIDUAL_TOL)


def relative_residual(M, x, b):
    nb = np.linalg.norm(b)
    r = np.linalg.norm(M @ x - b)
    if nb == 0.0:
        return float(r)
    return float(r / nb)


def _block_of(index, offsets):
    k = int(np.searchsorted(np.asarray(offsets[1:]), index, side="right"))
    return _BLOCKS[k]


def _locate_zero_pivot(M, offsets):
    """Name the block of a zero pivot, or of an empty row, for error messages."""
    M = sp.csr_matrix(M)
    empty = np.flatnonzero(np.diff(M.indptr) == 0)
    if len(empty):
        return _block_of(empty[0], offsets), int(empty[0])
    if M.shape[0] <= DENSE_LIMIT:
        _, _, U = sla.lu(M.toarray())
        d = np.abs(np.diag(U))
        k = int(np.argmin(d))
        if d[k] <= 1e-13 * max(d.max(), 1.0):
            return _block_of(k, offsets), k
    return "unknown", -1


def _factorize(M, label, offsets):
    try:
        return spla.splu(sp.csc_matrix(M))
    except RuntimeError as exc:
        block, idx = _locate_zero_pivot(M, offsets)
        raise SolverError("singular factorization of %s: zero pivot in the %s block (row %d)"
                          % (label, block, idx)) from exc


def solve_linear(M, b, method="lu", offsets=(0, 0, 0)):
    """Solve M x = b; returns (x, LinearSolveReport)."""
    M = sp.csr_matrix(M)
    b = np.asarray(b, dtype=float)
    n = M.shape[0]
    if method == "dense":
        if n > DENSE_LIMIT:
            raise ConfigurationError("dense solver limited to %d unknowns, got %d" % (DENSE_LIMIT, n))
        try:
            x = sla.solve(M.toarray(), b)
        except sla.LinAlgError as exc:
            block, idx = _locate_zero_pivot(M, offsets)
            raise SolverError("singular matrix: zero pivot in the %s block (row %d)" % (block, idx)) from exc
        fill = float("nan")
    elif method == "lu":
        if n == 0:
            return np.zeros(0), LinearSolveReport(0.0, "lu", 0, 0)
        lu = _factorize(M, "the coupled system", offsets)
        x = lu.solve(b)
        # one step of iterative refinement is cheap and tightens the residual
        x += lu.solve(b - M @ x)
        fill = (lu.L.nnz + lu.U.nnz) / max(M.nnz, 1)
    else:
        raise ConfigurationError("unknown factorization %r" % (method,))
    if not np.all(np.isfinite(x)):
        raise SolverError("non-finite solution from %s factorization" % method)
    rep = LinearSolveReport(relative_residual(M, x, b), method, n, M.nnz, fill)
    return x, rep


def solve_full(system, method="lu"):
    """Monolithic direct solve; returns (Solution, LinearSolveReport)."""
    M = system.matrix()
    x, rep = solve_linear(M, system.rhs(), method, system.offsets)
    return Solution.from_vector(system.dofmap, x), rep


@dataclass
class PatchElimination:
    patch: int
    interior: np.ndarray      # global indices (flux then scalar) of the patch
    mu_cols: np.ndarray       # hybrid indices coupled to the patch
    lu: object
    K_Im: sp.csr_matrix       # (n_interior, n_mu_cols)
    X: np.ndarray             # K_II^{-1} K_Im


@dataclass
class CondensedSystem:
    """S mu = g with S = K_mm - sum_p K_mI K_II^{-1} K_Im."""

    S: sp.csr_matrix
    g: np.ndarray
    patches: list
    system: object
    rhs_full: np.ndarray

    @property
    def n(self):
        return self.S.shape[0]

    def recover(self, mu):
        """Patch unknowns from mu; returns the full coefficient vector."""
        d = self.system.dofmap
        x = np.zeros(d.n_total)
        mu = np.asarray(mu, dtype=float)
        x[d.n_q + d.n_u:] = mu
        for pe in self.patches:
            bI = self.rhs_full[pe.interior]
            if len(pe.mu_cols):
                bI = bI - pe.K_Im @ mu[pe.mu_cols]
            x[pe.interior] = pe.lu.solve(bI)
        return x


def _patch_indices(dofmap, p):
    fl = np.flatnonzero(dofmap.flux_patch == p)
    ul = dofmap.n_q + np.flatnonzero(dofmap.u_patch == p)
    return np.concatenate([fl, ul])


def condense_skeleton(system, dofmap=None, workers=1):
    """Eliminate every patch onto the hybrid unknowns.

    The condensed dimension is n_mu: no flux moments survive, because each
    skeleton flux moment belongs to exactly one patch.
    """
    d = system.dofmap if dofmap is None else dofmap
    if system.tau < 0:
        raise ConfigurationError("tau must be >= 0")
    K = sp.csr_matrix(system.matrix())
    b = system.rhs()
    off = d.n_q + d.n_u
    Kmm = K[off:, off:]

    def eliminate(p):
        I = _patch_indices(d, p)
        KII = K[I][:, I]
        try:
            lu = spla.splu(sp.csc_matrix(KII))
        except RuntimeError as exc:
            raise SolverError("singular patch block for patch %d" % p) from exc
        KIm_all = K[I][:, off:].tocsc()
        cols = np.flatnonzero(np.diff(KIm_all.indptr) > 0)
        KIm = KIm_all[:, cols].tocsr()
        X = lu.solve(KIm.toarray()) if len(cols) else np.zeros((len(I), 0))
        if not np.all(np.isfinite(X)):
            raise SolverError("non-finite elimination in patch %d" % p)
        return PatchElimination(p, I, cols, lu, KIm, X)

    patches = np.unique(d.mesh.patches)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            elim = list(pool.map(eliminate, patches))
    else:
        elim = [eliminate(p) for p in patches]

    S = Kmm.toarray()
    g = b[off:].copy()
    for pe in elim:
        if not len(pe.mu_cols):
            continue
        ix = np.ix_(pe.mu_cols, pe.mu_cols)
        S[ix] -= pe.K_Im.T @ pe.X
        g[pe.mu_cols] -= pe.X.T @ b[pe.interior]
    return CondensedSystem(sp.csr_matrix(S), g, elim, system, b)


def solve_condensed(system, workers=1):
    """Condense, solve on mu, recover; returns (Solution, LinearSolveReport).

    The reported residual is that of the full system at the recovered vector.
    """
    cs = condense_skeleton(system, workers=workers)
    d = system.dofmap
    if cs.n:
        lu = _factorize(cs.S, "the condensed system", (0, 0, 0))
        mu = lu.solve(cs.g)
        mu += lu.solve(cs.g - cs.S @ mu)
    else:
        mu = np.zeros(0)
    x = cs.recover(mu)
    M = system.matrix()
    rep = LinearSolveReport(relative_residual(M, x, cs.rhs_full), "condensed", d.n_total, M.nnz,
                            n_condensed=cs.n, patch_dims=[len(pe.interior) for pe in cs.patches])
    return Solution.from_vector(d, x), rep


def solve(system, solver="full", method="lu", workers=1):
    if solver == "full":
        return solve_full(system, method)
    if solver == "condensed":
        return solve_condensed(system, workers)
    raise ConfigurationError("solver must be 'full' or 'condensed', got %r" % (solver,))
