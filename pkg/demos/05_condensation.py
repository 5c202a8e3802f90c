"""Eliminating both patches leaves a small dense system on the hybrid
unknowns alone. Its solution reproduces the monolithic solve.

Run: python3 demos/05_condensation.py
"""
import time

import numpy as np

from hmdd.analysis import annulus_reference
from hmdd.assembly import ProblemData, assemble
from hmdd.mesh import build_annulus_mesh
from hmdd.solver import condense_skeleton, solve_condensed, solve_full
from hmdd.spaces import build_dofmap
from hmdd.trace import build_trace_projector

ref = annulus_reference()
for level in (1, 2, 3):
    for q in (0, 2):
        mesh = build_annulus_mesh(level)
        d = build_dofmap(mesh, q)
        system = assemble(mesh, d, build_trace_projector(mesh, d), ProblemData(ref.kappa, ref.f, 10.0))
        t0 = time.perf_counter()
        full, rf = solve_full(system)
        t1 = time.perf_counter()
        cond, rc = solve_condensed(system)
        t2 = time.perf_counter()
        S = condense_skeleton(system).S.toarray()
        diff = np.linalg.norm(full.vector - cond.vector) / np.linalg.norm(full.vector)
        print("level %d q=%d: %6d unknowns -> %3d hybrid (patches %s), rel diff %.1e, "
              "S symmetric %s, full %.3fs, condensed %.3fs"
              % (level, q, rf.n_unknowns, rc.n_condensed, rc.patch_dims, diff,
                 np.allclose(S, S.T, atol=1e-12 * abs(S).max()), t1 - t0, t2 - t1))
