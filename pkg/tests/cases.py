"""Cached solves shared by several test modules."""
from functools import lru_cache

from hmdd.analysis import annulus_reference, compute_errors, manufactured_square_reference
from hmdd.assembly import ProblemData, assemble
from hmdd.mesh import build_annulus_mesh, build_square_mesh
from hmdd.solver import solve
from hmdd.spaces import build_dofmap
from hmdd.trace import build_trace_projector


@lru_cache(maxsize=None)
def mesh(geometry, level):
    if geometry == "square":
        return build_square_mesh(2 ** (level + 1), x_splits=(0.5,))
    return build_annulus_mesh(level)


def reference(geometry):
    return manufactured_square_reference() if geometry == "square" else annulus_reference()


@lru_cache(maxsize=None)
def discretization(geometry, level, q):
    m = mesh(geometry, level)
    d = build_dofmap(m, q)
    return m, d, build_trace_projector(m, d)


@lru_cache(maxsize=None)
def system(geometry, level, q, tau):
    m, d, p = discretization(geometry, level, q)
    ref = reference(geometry)
    return assemble(m, d, p, ProblemData(ref.kappa, ref.f, tau))


@lru_cache(maxsize=None)
def solved(geometry, level, q, tau, solver="full"):
    """(Solution, LinearSolveReport, ErrorReport)."""
    _, _, p = discretization(geometry, level, q)
    sol, rep = solve(system(geometry, level, q, tau), solver)
    err = compute_errors(sol, reference(geometry), p, tau=tau, residual=rep.relative_residual)
    return sol, rep, err
