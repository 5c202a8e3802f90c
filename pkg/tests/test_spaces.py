import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hmdd.assembly import ProblemData, assemble
from hmdd.errors import InvalidGeometryError
from hmdd.mesh import CellMapping, build_annulus_mesh, build_square_mesh, edge_point
from hmdd.quadrature import gauss_rule, legendre_eval, tensor_rule
from hmdd.solver import solve_full
from hmdd.spaces import (Solution, build_dofmap, piola_divergence, piola_transform, q_reference_basis, q_transform,
                         rt_reference_basis)
from hmdd.trace import build_trace_projector, side_data
from hmdd.mesh import REVERSED

IDENTITY = CellMapping("affine", (0, 0, 1, 0, 0, 1))
DOUBLE = CellMapping("affine", (0, 0, 2, 0, 0, 2))
SECTOR = CellMapping("annular_sector", (0, 0, 1, 2, 0.3, 1.5))


@pytest.mark.parametrize("q", range(5))
def test_rt_dimension_and_unisolvence(q):
    rt = rt_reference_basis(q)
    assert rt.dim == 2 * (q + 1) * (q + 2)
    assert np.allclose(rt.apply_dofs(rt.values), np.eye(rt.dim), atol=1e-12)


@pytest.mark.parametrize("q", range(4))
def test_rt_component_degrees(q):
    # first component: degree q+1 in x, q in y; second the other way round
    rt = rt_reference_basis(q)
    assert rt.c1.shape == (rt.dim, q + 2, q + 1) and rt.c2.shape == (rt.dim, q + 1, q + 2)
    r = tensor_rule(q + 4)
    v = rt.values(r.points)
    Lx, Ly = legendre_eval(q + 1, r.points[:, 0]), legendre_eval(q + 1, r.points[:, 1])
    B1 = (Lx[:, None, :] * Ly[None, :q + 1, :]).reshape(-1, len(r))
    B2 = (Lx[:q + 1, None, :] * Ly[None, :, :]).reshape(-1, len(r))
    for comp, B in ((0, B1), (1, B2)):
        coef, *_ = np.linalg.lstsq(B.T, v[..., comp].T, rcond=None)
        assert np.allclose(B.T @ coef, v[..., comp].T, atol=1e-12)


@pytest.mark.parametrize("q", range(4))
def test_divergence_and_normal_traces_are_degree_q(q):
    rt = rt_reference_basis(q)
    r = tensor_rule(q + 4)
    Q = q_reference_basis(q).values(r.points)
    div = rt.divergence(r.points)
    coef, *_ = np.linalg.lstsq(Q.T, div.T, rcond=None)
    assert np.allclose(Q.T @ coef, div.T, atol=1e-11)
    t = np.linspace(0, 1, q + 5)
    L = legendre_eval(q, t)
    for e in range(4):
        nt = rt.normal_trace(e, t)
        coef, *_ = np.linalg.lstsq(L.T, nt.T, rcond=None)
        assert np.allclose(L.T @ coef, nt.T, atol=1e-11)


def test_lowest_order_fluxes():
    rt = rt_reference_basis(0)
    assert rt.dim == 4
    g = gauss_rule(3)
    flux = np.array([[rt.normal_trace(e, g.points)[s] @ g.weights for e in range(4)] for s in range(4)])
    assert np.allclose(flux, np.eye(4), atol=1e-14)
    div = rt.divergence(tensor_rule(3).points)
    assert np.allclose(div, div[:, :1], atol=1e-14)


def test_rt0_closed_form():
    # shapes dual to outward edge fluxes on [0,1]^2
    x = tensor_rule(3).points
    X, Y = x[:, 0], x[:, 1]
    z = np.zeros_like(X)
    exact = np.stack([np.stack([z, Y - 1], -1), np.stack([X, z], -1),
                      np.stack([z, Y], -1), np.stack([X - 1, z], -1)])
    assert np.allclose(rt_reference_basis(0).values(x), exact, atol=1e-14)


def test_piola_identity_and_scaling():
    rng = np.random.default_rng(1)
    c = rng.normal(size=12)
    xh = rng.uniform(size=(5, 2))
    rt = rt_reference_basis(1)
    w_hat = np.einsum("s,snd->nd", c, rt.values(xh))
    assert np.allclose(piola_transform(IDENTITY, c, xh), w_hat)
    assert np.allclose(piola_transform(DOUBLE, c, xh), w_hat / 2)
    assert np.allclose(piola_divergence(DOUBLE, c, xh), c @ rt.divergence(xh) / 4)


def test_piola_rejects_inverted_cell():
    bad = CellMapping("bilinear", (0, 0, 0, 1, 1, 1, 1, 0))
    with pytest.raises(InvalidGeometryError):
        piola_transform(bad, np.ones(4), np.array([[0.5, 0.5]]))


@pytest.mark.parametrize("q", [0, 1, 2])
def test_edge_flux_preserved_on_curved_cell(q):
    rt = rt_reference_basis(q)
    c = np.random.default_rng(q).normal(size=rt.dim)
    g = gauss_rule(q + 6)
    for e in range(4):
        xh = edge_point(e, g.points)
        x, J, _ = SECTOR.eval(xh)
        tan = J @ [[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]][e]
        rot = [1, 1, -1, -1][e]
        normal = rot * np.column_stack([tan[:, 1], -tan[:, 0]])  # outward, scaled by |Phi'|
        phys = np.sum(piola_transform(SECTOR, c, xh) * normal, axis=1) @ g.weights
        ref = (c @ rt.normal_trace(e, g.points)) @ g.weights
        assert phys == pytest.approx(ref, abs=1e-13)


def test_q_transform_scaling_and_integral():
    rng = np.random.default_rng(2)
    c = rng.normal(size=9)
    xh = rng.uniform(size=(4, 2))
    Q = q_reference_basis(2)
    assert np.allclose(q_transform(IDENTITY, c, xh), c @ Q.values(xh))
    assert np.allclose(q_transform(DOUBLE, c, xh), c @ Q.values(xh) / 4)
    r = tensor_rule(8)
    _, _, det = SECTOR.eval(r.points)
    phys = np.sum(q_transform(SECTOR, c, r.points) * det * r.weights)
    assert phys == pytest.approx(c @ Q.values(r.points) @ r.weights, abs=1e-14)


def test_dofmap_counts():
    d = build_dofmap(build_square_mesh((2, 1), x_splits=(0.5,)), 0)
    assert (d.n_q, d.n_u, d.n_mu, d.n_total) == (8, 2, 1, 11)
    d = build_dofmap(build_square_mesh(1), 0)
    assert (d.n_q, d.n_u, d.n_mu) == (4, 1, 0)
    for q in range(3):
        m = build_annulus_mesh(1)
        d = build_dofmap(m, q)
        assert d.n_u == m.n_cells * (q + 1) ** 2
        assert d.n_mu == len(m.skeleton) * (q + 1)


def test_dofmap_numbering_is_deterministic():
    m = build_annulus_mesh(1)
    a, b = build_dofmap(m, 1), build_dofmap(m, 1)
    assert np.array_equal(a.flux, b.flux) and np.array_equal(a.sign, b.sign)


def test_skeleton_carries_two_flux_sets():
    m = build_annulus_mesh(1)
    d = build_dofmap(m, 1)
    plus, minus = d.skeleton_flux
    assert plus.shape == minus.shape == (len(m.skeleton), 2)
    assert not set(plus.ravel()) & set(minus.ravel())
    for s, fid in enumerate(m.skeleton):
        f = m.facets[fid]
        assert set(plus[s]) <= set(d.flux[f.cell_plus]) and set(minus[s]) <= set(d.flux[f.cell_minus])


def _normal_flux(sol, mesh, f, side, t):
    c, e, o = side_data(f, side)
    tl = 1 - t if o == REVERSED else t
    xh = edge_point(e, tl)
    _, _, _, n = f.facet_map.eval(t)
    w = piola_transform(mesh.cells[c], sol.local_flux()[c], xh)
    return np.sum(w * n, axis=1)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2), st.integers(0, 2 ** 31 - 1), st.sampled_from(["square", "annulus"]))
def test_normal_continuity_on_interior_facets(q, seed, geometry):
    m = build_annulus_mesh(1) if geometry == "annulus" else build_square_mesh(3, y_splits=(1 / 3,))
    d = build_dofmap(m, q)
    rng = np.random.default_rng(seed)
    sol = Solution(d, rng.normal(size=d.n_q), np.zeros(d.n_u), np.zeros(d.n_mu))
    g = gauss_rule(q + 4)
    for fid in m.facet_indices("interior_patch"):
        f = m.facets[fid]
        _, _, arc, _ = f.facet_map.eval(g.points)
        jump = _normal_flux(sol, m, f, 0, g.points) - _normal_flux(sol, m, f, 1, g.points)
        assert np.sum(jump ** 2 * arc * g.weights) < 1e-24


@pytest.mark.parametrize("q", [0, 1, 2])
def test_discrete_de_rham_on_curved_cells(q):
    # div w = div w_hat / det lies in span{v_hat_i / det}
    r = tensor_rule(q + 6)
    Q = q_reference_basis(q).values(r.points)
    rt = rt_reference_basis(q)
    for cell in build_annulus_mesh(0).cells:
        _, _, det = cell.eval(r.points)
        basis = Q / det
        M = (basis * det * r.weights) @ basis.T
        for s in range(rt.dim):
            div = piola_divergence(cell, np.eye(rt.dim)[s], r.points)
            coef = np.linalg.solve(M, (basis * det * r.weights) @ div)
            resid = div - coef @ basis
            assert np.sqrt(np.sum(resid ** 2 * det * r.weights)) < 1e-12


@pytest.mark.parametrize("q", [0, 1, 2])
def test_flux_jumps_span_hybrid_space(q):
    m = build_annulus_mesh(1)
    d = build_dofmap(m, q)
    sys_ = assemble(m, d, build_trace_projector(m, d), ProblemData())
    assert np.linalg.matrix_rank(sys_.C.toarray()) == d.n_mu


def test_flipped_orientation_reproduces_fields():
    ref_f = lambda x: 1.0 + x[..., 0] - 2 * x[..., 1] ** 2  # noqa: E731
    m = build_annulus_mesh(1)
    flipped = m.with_flipped(range(len(m.facets)))
    assert any(f.cell_plus != g.cell_plus for f, g in zip(m.facets, flipped.facets) if f.cell_minus is not None)
    r = tensor_rule(3)
    out = []
    for mesh in (m, flipped):
        d = build_dofmap(mesh, 1)
        sol, _ = solve_full(assemble(mesh, d, build_trace_projector(mesh, d), ProblemData(1.0, ref_f, 3.0)))
        out.append(sol.on_cells(r.points))
    for key in ("u", "q", "div_q"):
        assert np.allclose(out[0][key], out[1][key], atol=1e-12)


def test_point_evaluation_matches_cell_evaluation():
    m = build_annulus_mesh(1)
    d = build_dofmap(m, 1)
    rng = np.random.default_rng(3)
    sol = Solution(d, rng.normal(size=d.n_q), rng.normal(size=d.n_u), rng.normal(size=d.n_mu))
    xh = np.array([[0.3, 0.6]])
    v = sol.on_cells(xh)
    pts = v["x"][[0, 7, 30], 0]
    assert np.allclose(sol.u_at(pts), v["u"][[0, 7, 30], 0], atol=1e-12)
    assert np.allclose(sol.q_at(pts), v["q"][[0, 7, 30], 0], atol=1e-12)


def test_solution_vector_roundtrip():
    d = build_dofmap(build_square_mesh(2, x_splits=(0.5,)), 1)
    x = np.arange(d.n_total, dtype=float)
    assert np.array_equal(Solution.from_vector(d, x).vector, x)


def test_hybrid_values_on_facet():
    d = build_dofmap(build_square_mesh(2, x_splits=(0.5,)), 2)
    muh = np.zeros(d.n_mu)
    muh[d.mu[0]] = [1.0, 2.0, 3.0]
    sol = Solution(d, np.zeros(d.n_q), np.zeros(d.n_u), muh)
    t = np.array([0.0, 0.5, 1.0])
    assert np.allclose(sol.mu_on_facet(0, t), 1 + 2 * (2 * t - 1) + 3 * (6 * t ** 2 - 6 * t + 1))


def test_sector_area_element():
    _, _, det = SECTOR.eval(np.array([[0.25, 0.5]]))
    assert det[0] == pytest.approx(1.25 * 1.0 * 1.2)
    assert math.isclose(SECTOR.eval(np.array([[0.0, 0.0]]))[0][0, 0], math.cos(0.3))
