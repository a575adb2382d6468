"""Repair a badly poised linear interpolation set in the unit disc.

Two of the three points nearly coincide, so one Lagrange polynomial is huge on
the disc. Each greedy swap moves the offending point to the maximizer of its
polynomial, and the determinant grows by exactly that polynomial's value.
"""

import numpy as np

from dfokit.geometry import estimate_poisedness, improve_geometry, lagrange_basis
from dfokit.interp import InterpolationSet

s = InterpolationSet([[0.0, 0.0], [1.0, 0.0], [0.95, 0.07]], np.zeros(2), 1.0)
print(f"start: Lambda_inf = {estimate_poisedness(lagrange_basis(s)).lambda_inf:.4f}")

res = improve_geometry(s, target=1.1)
for k, sw in enumerate(res.swaps, 1):
    print(f"swap {k}: point {sw.index} {sw.old} -> {np.round(sw.new, 4)}, "
          f"|l_i(y)| = {sw.lagrange_value:.4f}, det ratio = {sw.det_ratio:.4f}")
print(f"final: Lambda_inf = {res.report.lambda_inf:.4f}")
print(np.round(res.iset.points, 4))
