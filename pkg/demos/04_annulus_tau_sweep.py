"""Effect of the stabilization parameter on the disk with a jumping
coefficient (kappa = 16 inside the unit circle, 1 outside).

Small tau: the flux jump across the circle shrinks in proportion to tau.
Large tau: the jump of the projected scalar traces shrinks like 1/tau once
h tau is large, while the scalar error itself stays bounded.

Run: python3 demos/04_annulus_tau_sweep.py
"""
import numpy as np

from hmdd.analysis import annulus_reference, compute_errors, fit_slope
from hmdd.assembly import ProblemData, assemble
from hmdd.mesh import build_annulus_mesh
from hmdd.solver import solve
from hmdd.spaces import build_dofmap
from hmdd.trace import build_trace_projector

ref = annulus_reference()
print("reference check (PDE residual, boundary value): %.1e %.1e" % ref.check())


def sweep(level, q, taus):
    mesh = build_annulus_mesh(level)
    d = build_dofmap(mesh, q)
    p = build_trace_projector(mesh, d)
    out = []
    for tau in taus:
        sol, rep = solve(assemble(mesh, d, p, ProblemData(ref.kappa, ref.f, tau)))
        out.append(compute_errors(sol, ref, p, tau=tau))
    return out


taus = 10.0 ** np.arange(-4, 8)
for level, q in ((0, 0), (2, 1)):
    reps = sweep(level, q, taus)
    print("\nlevel %d, q = %d" % (level, q))
    print("%9s %12s %12s %12s" % ("tau", "e_u", "j_qn", "j_u"))
    for r in reps:
        print("%9.0e %12.4e %12.4e %12.4e" % (r.tau, r.e_u, r.j_qn, r.j_u))
    j = np.array([[r.j_qn, r.j_u] for r in reps])
    print("j_qn slope for tau <= 1e-2: %.3f" % fit_slope(taus[:3], j[:3, 0]))
    print("j_u slope over tau in [1e2, 1e4]: %.3f   over [1e5, 1e7]: %.3f"
          % (fit_slope(taus[6:9], j[6:9, 1]), fit_slope(taus[9:], j[9:, 1])))
    print("e_u(1e4) / e_u(1): %.3f" % (reps[8].e_u / reps[4].e_u))
