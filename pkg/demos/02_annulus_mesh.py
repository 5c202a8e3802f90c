"""The two-patch disk mesh: a square-ish core inside the unit circle and an
annular ring out to radius 2. Facets on the circle form the skeleton.

Run: python3 demos/02_annulus_mesh.py [level]
"""
import sys

import numpy as np

from hmdd.mesh import build_annulus_mesh, write_mesh

level = int(sys.argv[1]) if len(sys.argv) > 1 else 1
mesh = build_annulus_mesh(level)
print("level %d: %d cells, %d facets, h = %.4f" % (level, mesh.n_cells, len(mesh.facets), mesh.h))
print("cells per patch:", np.bincount(mesh.patches))
print("cell kinds:", sorted({c.kind for c in mesh.cells}))

areas = mesh.cell_areas()
print("total area %.12f  (4 pi = %.12f)" % (areas.sum(), 4 * np.pi))
print("inner patch area %.12f  (pi = %.12f)" % (areas[mesh.patches == 0].sum(), np.pi))

skel = mesh.skeleton
t = np.linspace(0, 1, 5)
radii = []
for fid in skel:
    x, _, _, normal = mesh.facets[fid].facet_map.eval(t)
    radii.append(np.hypot(x[:, 0], x[:, 1]))
    # the skeleton normal points from the core to the ring, i.e. n = x on the circle
    assert np.allclose(normal, x)
print("%d skeleton facets, all points at radius %.15f" % (len(skel), np.mean(radii)))
print("skeleton length %.12f  (2 pi = %.12f)" % (mesh.facet_lengths(skel).sum(), 2 * np.pi))

write_mesh(mesh, "annulus_level%d.txt" % level)
print("wrote annulus_level%d.txt" % level)
