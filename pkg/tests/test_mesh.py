import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hmdd.errors import ConfigurationError, InvalidGeometryError
from hmdd.mesh import (REVERSED, CellMapping, build_annulus_mesh, build_square_mesh, edge_point, map_eval,
                       read_mesh, refine, transfinite_cell, write_mesh)
from hmdd.quadrature import gauss_rule
from hmdd.trace import side_data

T = np.linspace(0.0, 1.0, 9)


def count(mesh, kind):
    return len(mesh.facet_indices(kind))


def test_square_two_by_two_split():
    m = build_square_mesh(2, x_splits=(0.5,))
    assert m.n_cells == 4 and m.n_patches == 2
    assert count(m, "skeleton") == 2
    assert m.h == pytest.approx(math.sqrt(2) / 2)


def test_square_single_cell_has_no_skeleton():
    m = build_square_mesh(1)
    assert m.n_cells == 1 and count(m, "skeleton") == 0 and count(m, "boundary") == 4


def test_square_four_by_four():
    m = build_square_mesh(4, x_splits=(0.5,))
    assert m.n_cells == 16 and count(m, "skeleton") == 4


def test_square_misaligned_split_rejected():
    with pytest.raises(ConfigurationError):
        build_square_mesh(3, x_splits=(0.5,))


def test_square_counts_edges():
    # n x n grid: 2n(n+1) edges, 4n on the boundary
    for n in (1, 2, 4):
        m = build_square_mesh(n)
        assert len(m.facets) == 2 * n * (n + 1)
        assert count(m, "boundary") == 4 * n


def test_annulus_base_pattern():
    m = build_annulus_mesh(0)
    assert m.n_cells == 13
    kinds = [c.kind for c in m.cells]
    assert kinds.count("affine") == 1 and kinds.count("transfinite") == 4 and kinds.count("annular_sector") == 8
    assert sorted(np.bincount(m.patches)) == [5, 8]
    assert count(m, "skeleton") == 4


@pytest.mark.parametrize("level", [0, 1, 2])
def test_annulus_skeleton_on_unit_circle(level):
    m = build_annulus_mesh(level)
    for fid in m.skeleton:
        x, _, _, n = m.facets[fid].facet_map.eval(T)
        assert np.allclose(np.hypot(x[:, 0], x[:, 1]), 1.0, atol=1e-14)
        # normal points from the inner (minus) patch into the outer (plus) patch
        assert np.allclose(n, x, atol=1e-13)


def test_annulus_refinement_counts():
    prev = build_annulus_mesh(0)
    for level in (1, 2, 3):
        m = build_annulus_mesh(level)
        assert m.n_cells == 4 * prev.n_cells
        assert count(m, "skeleton") == 2 * count(prev, "skeleton")
        prev = m


def test_annulus_mesh_width_halves_asymptotically():
    h = [build_annulus_mesh(k).h for k in range(4)]
    ratios = np.array(h[:-1]) / np.array(h[1:])
    # the widest cell is an outer sector whose chord shrinks by sin(pi/4)/sin(pi/8) ~ 1.85 at first
    assert np.all(ratios > 1.8) and np.all(ratios < 2.0)
    assert np.all(np.diff(ratios) > 0) and ratios[-1] > 1.98


def test_refine_single_cell():
    m = build_square_mesh(1)
    r = refine(m)
    assert r.n_cells == 4 and r.h == pytest.approx(m.h / 2) and r.level == 1


def test_refine_keeps_patches_and_children_kind():
    m = build_annulus_mesh(0)
    r = refine(m)
    assert [c.kind for c in r.cells] == [c.kind for c in m.cells for _ in range(4)]
    assert np.array_equal(r.patches, np.repeat(m.patches, 4))


@pytest.mark.parametrize("geometry,level,area", [("square", 2, 1.0), ("annulus", 0, 4 * math.pi),
                                                 ("annulus", 2, 4 * math.pi)])
def test_total_area(geometry, level, area):
    m = build_square_mesh(2 ** level) if geometry == "square" else build_annulus_mesh(level)
    assert m.cell_areas(12).sum() == pytest.approx(area, rel=1e-13)


def test_affine_unit_cell():
    x, J, det = map_eval(CellMapping("affine", (0, 0, 1, 0, 0, 1)), np.array([[0.3, 0.7]]))
    assert np.allclose(J, np.eye(2)) and det == pytest.approx([1.0]) and np.allclose(x, [[0.3, 0.7]])


def test_annular_sector_jacobian():
    cell = CellMapping("annular_sector", (0, 0, 1, 2, 0, math.pi / 2))
    _, _, det = map_eval(cell, np.array([[0.5, 0.5]]))
    assert det[0] == pytest.approx(math.pi / 2 * 1.5, rel=1e-14)


def test_bilinear_parallelogram_has_constant_jacobian():
    cell = CellMapping("bilinear", (0, 0, 2, 0.5, 2.5, 1.5, 0.5, 1.0))
    _, J, _ = map_eval(cell, np.random.default_rng(0).uniform(size=(10, 2)))
    assert np.allclose(J, J[0], atol=1e-14)


def test_inverted_cell_rejected():
    cell = CellMapping("bilinear", (0, 0, 0, 1, 1, 1, 1, 0))  # clockwise
    with pytest.raises(InvalidGeometryError):
        map_eval(cell, np.array([[0.5, 0.5]]))


def _sample_cells():
    yield CellMapping("affine", (0.1, -0.2, 1.3, 0.2, -0.1, 0.8))
    yield CellMapping("bilinear", (0, 0, 1, 0.1, 1.2, 1.1, -0.1, 0.9))
    yield CellMapping("annular_sector", (0.3, -0.1, 0.5, 1.7, 0.2, 1.4))
    yield transfinite_cell([(0.4, -0.4), (math.cos(-math.pi / 4), math.sin(-math.pi / 4)),
                            (math.cos(math.pi / 4), math.sin(math.pi / 4)), (0.4, 0.4)],
                           arcs=(None, (0, 0, 1, -math.pi / 4, math.pi / 4), None, None))
    yield from build_annulus_mesh(1).cells[:20:3]


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_jacobian_matches_finite_differences(a, b):
    eps = 1e-6
    for cell in _sample_cells():
        xh = np.array([[a, b]])
        _, J, _ = cell.eval(xh)
        for k in range(2):
            e = np.zeros(2)
            e[k] = eps
            fd = (cell.eval(xh + e)[0] - cell.eval(xh - e)[0]) / (2 * eps)
            assert np.allclose(J[0][:, k], fd[0], atol=1e-8)


@pytest.mark.parametrize("mesh", [build_square_mesh(4, x_splits=(0.5,), y_splits=(0.25,)),
                                  build_annulus_mesh(0), build_annulus_mesh(2)], ids=["square", "ann0", "ann2"])
def test_facet_sides_agree_with_facet_map(mesh):
    for f in mesh.facets:
        x, tangent, arc, n = f.facet_map.eval(T)
        assert np.all(arc > 0)
        assert np.allclose(np.hypot(n[:, 0], n[:, 1]), 1.0, atol=1e-12)
        assert np.allclose(np.sum(n * tangent, axis=1), 0.0, atol=1e-12)
        for side in range(2 if f.cell_minus is not None else 1):
            c, e, o = side_data(f, side)
            tl = 1 - T if o == REVERSED else T
            xs, _, _ = mesh.cells[c].eval(edge_point(e, tl))
            assert np.allclose(xs, x, atol=1e-12)


def test_facet_kinds_match_patches():
    m = build_annulus_mesh(1)
    for f in m.facets:
        if f.kind == "boundary":
            assert f.cell_minus is None
        elif f.kind == "skeleton":
            assert m.patches[f.cell_plus] != m.patches[f.cell_minus]
        else:
            assert m.patches[f.cell_plus] == m.patches[f.cell_minus]


def test_boundary_normals_point_outward():
    m = build_annulus_mesh(1)
    for fid in m.facet_indices("boundary"):
        x, _, _, n = m.facets[fid].facet_map.eval(T)
        assert np.allclose(n, x / 2.0, atol=1e-13)


def test_skeleton_sides_stable_under_refinement():
    for level in range(3):
        m = build_annulus_mesh(level)
        for fid in m.skeleton:
            f = m.facets[fid]
            assert m.patches[f.cell_plus] == 1 and m.patches[f.cell_minus] == 0


def test_skeleton_arc_length_is_circumference():
    m = build_annulus_mesh(2)
    assert m.facet_lengths(m.skeleton, n=8).sum() == pytest.approx(2 * math.pi, rel=1e-14)


@pytest.mark.parametrize("mesh", [build_square_mesh(2, x_splits=(0.5,)), build_annulus_mesh(1)],
                         ids=["square", "annulus"])
def test_mesh_file_roundtrip(mesh, tmp_path):
    path = tmp_path / "mesh.txt"
    write_mesh(mesh, path)
    back = read_mesh(path)
    assert back.level == mesh.level and back.n_cells == mesh.n_cells
    assert [c.params for c in back.cells] == [c.params for c in mesh.cells]
    assert np.array_equal(back.patches, mesh.patches)
    assert [(f.kind, f.cell_plus, f.cell_minus, f.local_edge_plus, f.orientation_minus)
            for f in back.facets] == [(f.kind, f.cell_plus, f.cell_minus, f.local_edge_plus, f.orientation_minus)
                                      for f in mesh.facets]
    write_mesh(back, tmp_path / "again.txt")
    assert (tmp_path / "again.txt").read_text() == path.read_text()


def test_mesh_file_rejects_inconsistent_facets(tmp_path):
    path = tmp_path / "mesh.txt"
    write_mesh(build_square_mesh(2, x_splits=(0.5,)), path)
    lines = path.read_text().splitlines()
    i = next(k for k, line in enumerate(lines) if line.startswith("facets")) + 1
    parts = lines[i].split()
    parts[0] = "skeleton" if parts[0] != "skeleton" else "boundary"
    lines[i] = " ".join(parts)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ConfigurationError):
        read_mesh(path)


def test_mesh_file_rejects_bad_header(tmp_path):
    path = tmp_path / "mesh.txt"
    path.write_text("not a mesh\n")
    with pytest.raises(ConfigurationError):
        read_mesh(path)


def test_locate_points():
    m = build_annulus_mesh(1)
    pts = np.array([[0.0, 0.0], [0.9, 0.1], [-1.2, 0.7], [0.0, -1.9]])
    cells, xhat = m.locate(pts)
    assert np.all(cells >= 0)
    x = np.array([m.cells[c].eval(xh[None])[0][0] for c, xh in zip(cells, xhat)])
    assert np.allclose(x, pts, atol=1e-12)
    assert m.locate(np.array([[3.0, 0.0]]))[0][0] == -1


def test_quadrature_on_skeleton_is_arclength_scaled():
    m = build_annulus_mesh(0)
    g = gauss_rule(3)
    for fid in m.skeleton:
        _, _, arc, _ = m.facets[fid].facet_map.eval(g.points)
        assert np.allclose(arc, math.pi / 2, atol=1e-14)
