"""The element constants behind the h^2 eigenvalue expansion.

gamma and eta are 8x8 Gram matrices of interpolation errors of eight linear
tensor fields; zeta holds the scaled means of the quadratic CR error shapes.
They depend only on the element shape, so every element of a uniform mesh and
every level gives the same numbers.  The script prints them and then checks
the interpolation identity ||grad u - Pi u||^2 ~ h^2 F_1 on the manufactured
solution.

    python3 demos/expansion_constants.py
"""

import numpy as np

from crstokes.errors import broken_norm
from crstokes.expansion import compute_constants, eval_F
from crstokes.mesh import build_uniform
from crstokes.problems import stream_solution
from crstokes.recovery import interp_velocity_cr, interp_velocity_ecr

np.set_printoptions(precision=5, suppress=True, linewidth=120)

c = compute_constants(build_uniform(3))
print("gamma =\n", c.gamma)
print("eta =\n", c.eta)
print("zeta =", c.zeta, " edge lengths / h =", c.signature)

sol = stream_solution()
print("\nlevel   ||.||^2 / (h^2 F_1)   ||.||^2 / (h^2 F_2)")
for level in range(3, 7):
    mesh = build_uniform(level)
    h2 = mesh.h**2
    e1 = broken_norm("L2", interp_velocity_cr(sol.sigma, mesh), sol.u.grad, mesh) ** 2
    e2 = broken_norm("L2", interp_velocity_ecr(sol.sigma, mesh), sol.u.grad, mesh) ** 2
    print(f"{level:5d}   {e1 / (h2 * eval_F(1, sol.sigma, mesh, c)):19.6f}   {e2 / (h2 * eval_F(2, sol.sigma, mesh, c)):19.6f}")
