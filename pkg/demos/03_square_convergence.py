"""Convergence on the unit square split into two patches at x = 1/2, with
u = sin(pi x) sin(pi y). Scalar and hybrid errors decay like h^(q+1) for
every tau tried.

Run: python3 demos/03_square_convergence.py
"""
from hmdd.analysis import compute_errors, fit_slope, manufactured_square_reference
from hmdd.assembly import ProblemData, assemble
from hmdd.mesh import build_square_mesh
from hmdd.solver import solve
from hmdd.spaces import build_dofmap
from hmdd.trace import build_trace_projector

ref = manufactured_square_reference()
print("%2s %5s %5s %12s %12s %12s" % ("q", "tau", "n", "e_u", "e_mu", "e_q"))
for q in (0, 1, 2):
    for tau in (0.0, 10.0):
        hs, eu, emu = [], [], []
        for n in (4, 8, 16, 32):
            mesh = build_square_mesh(n, x_splits=(0.5,))
            d = build_dofmap(mesh, q)
            p = build_trace_projector(mesh, d)
            sol, rep = solve(assemble(mesh, d, p, ProblemData(ref.kappa, ref.f, tau)))
            err = compute_errors(sol, ref, p)
            hs.append(err.h)
            eu.append(err.e_u)
            emu.append(err.e_mu)
            print("%2d %5g %5d %12.4e %12.4e %12.4e" % (q, tau, n, err.e_u, err.e_mu, err.e_q))
        print("   slopes over the last three: e_u %.2f  e_mu %.2f  (expected %d)\n"
              % (fit_slope(hs[-3:], eu[-3:]), fit_slope(hs[-3:], emu[-3:]), q + 1))
