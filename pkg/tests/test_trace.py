import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hmdd.analysis import l2_project
from hmdd.errors import ConfigurationError
from hmdd.mesh import build_annulus_mesh, build_square_mesh
from hmdd.quadrature import gauss_rule, legendre_eval
from hmdd.spaces import build_dofmap
from hmdd.trace import all_projected_traces, build_trace_projector, project_trace, trace_values

SQUARE = build_square_mesh(4, x_splits=(0.5,))
ANNULUS = build_annulus_mesh(1)


@pytest.mark.parametrize("q", [0, 1, 2, 3])
def test_affine_traces_are_reproduced(q):
    d = build_dofmap(SQUARE, q)
    P = build_trace_projector(SQUARE, d)
    u = np.random.default_rng(q).normal(size=d.n_u)
    t = np.linspace(0, 1, 11)
    L = legendre_eval(q, t)
    for s, fid in enumerate(d.skeleton):
        for side in (0, 1):
            c = P.cells[s, side]
            exact = u[d.u[c]] @ trace_values(SQUARE, SQUARE.facets[fid], side, t, q)
            assert np.allclose(project_trace(P, side, s, u, d) @ L, exact, atol=1e-13)


@pytest.mark.parametrize("q", [1, 2])
def test_constant_reproduced_from_annular_side(q):
    # 1 = v_hat / det with det linear in the radial coordinate: representable for q >= 1
    d = build_dofmap(ANNULUS, q)
    P = build_trace_projector(ANNULUS, d)
    u = l2_project(ANNULUS, d, lambda x: np.ones(x.shape[:-1]))
    traces = all_projected_traces(P, d, u)
    expect = np.zeros(q + 1)
    expect[0] = 1.0
    for s in range(len(d.skeleton)):
        assert ANNULUS.cells[P.cells[s, 0]].kind == "annular_sector"
        assert np.allclose(traces[s, 0], expect, atol=1e-12)


def test_facet_mass_is_diagonal_for_circular_arcs():
    d = build_dofmap(ANNULUS, 2)
    P = build_trace_projector(ANNULUS, d)
    arc = np.pi / 4  # quarter circle split once
    for M in P.mass:
        assert np.allclose(M, np.diag(arc / np.array([1.0, 3.0, 5.0])), atol=1e-14)


def test_zero_and_linearity():
    d = build_dofmap(ANNULUS, 2)
    P = build_trace_projector(ANNULUS, d)
    rng = np.random.default_rng(0)
    u, v = rng.normal(size=(2, d.n_u))
    a, b = rng.normal(size=2)
    assert np.all(project_trace(P, "+", 0, np.zeros(d.n_u), d) == 0)
    for s in range(len(d.skeleton)):
        for side in ("+", "-"):
            lhs = project_trace(P, side, s, a * u + b * v, d)
            rhs = a * project_trace(P, side, s, u, d) + b * project_trace(P, side, s, v, d)
            assert np.allclose(lhs, rhs, atol=1e-13)


def test_local_and_global_coefficients_agree():
    d = build_dofmap(ANNULUS, 1)
    P = build_trace_projector(ANNULUS, d)
    u = np.random.default_rng(5).normal(size=d.n_u)
    c = P.cells[3, 1]
    assert np.allclose(project_trace(P, 1, 3, u[d.u[c]]), project_trace(P, "-", 3, u, d))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 3), st.integers(0, 2 ** 31 - 1))
def test_residual_orthogonal_to_facet_polynomials(q, seed):
    d = build_dofmap(ANNULUS, q)
    P = build_trace_projector(ANNULUS, d, moment_quadrature_points=q + 12)
    u = np.random.default_rng(seed).normal(size=d.n_u)
    g = gauss_rule(q + 12)
    L = legendre_eval(q, g.points)
    traces = all_projected_traces(P, d, u)
    for s, fid in enumerate(d.skeleton):
        for side in (0, 1):
            tr = u[d.u[P.cells[s, side]]] @ trace_values(ANNULUS, ANNULUS.facets[fid], side, g.points, q)
            resid = tr - traces[s, side] @ L
            assert np.allclose(L @ (resid * g.weights), 0.0, atol=1e-12 * max(1.0, np.abs(tr).max()))


def test_too_few_moment_points_rejected():
    d = build_dofmap(ANNULUS, 2)
    with pytest.raises(ConfigurationError):
        build_trace_projector(ANNULUS, d, moment_quadrature_points=3)
    build_trace_projector(ANNULUS, d, moment_quadrature_points=4)


def test_empty_skeleton():
    m = build_square_mesh(2)
    d = build_dofmap(m, 1)
    P = build_trace_projector(m, d)
    assert P.P.shape[0] == 0 and all_projected_traces(P, d, np.zeros(d.n_u)).shape == (0, 2, 2)
