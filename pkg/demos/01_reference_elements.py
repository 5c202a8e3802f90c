"""Quadrature, Legendre polynomials and the Raviart-Thomas reference element.

Run: python3 demos/01_reference_elements.py
"""
import numpy as np

from hmdd.quadrature import gauss_rule, legendre_eval
from hmdd.spaces import rt_reference_basis

# Gauss rules on [0, 1] integrate t^k exactly up to k = 2n - 1
for n in (1, 2, 3):
    g = gauss_rule(n)
    errs = [abs(g.weights @ g.points ** k - 1.0 / (k + 1)) for k in range(2 * n + 1)]
    print("n=%d  max error up to degree %d: %.1e   degree %d: %.1e"
          % (n, 2 * n - 1, max(errs[:2 * n]), 2 * n, errs[2 * n]))

# shifted Legendre polynomials: diagonal Gram matrix 1/(2k+1)
g = gauss_rule(6)
L = legendre_eval(4, g.points)
print("\nLegendre Gram matrix times (2k+1):")
print(np.round((L * g.weights) @ L.T * (2 * np.arange(5) + 1)[:, None], 12))

# the RT^q element: dimension 2(q+1)(q+2), moments determine each shape
for q in range(4):
    rt = rt_reference_basis(q)
    print("RT^%d: %2d shapes, %2d of them interior" % (q, rt.dim, rt.n_interior))

rt = rt_reference_basis(0)
pts = np.array([[0.25, 0.5], [0.5, 0.75]])
print("\nlowest order shapes at", pts.tolist())
print(np.round(rt.values(pts), 6))
print("divergence:", rt.divergence(pts)[:, 0])
