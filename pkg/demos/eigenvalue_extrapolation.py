"""First Stokes eigenvalues on the unit square and their extrapolation.

For each level the three smallest eigenvalues are computed with CR and ECR.
Both converge like h^2; combining consecutive levels as (4 lam_h - lam_2h) / 3
removes the h^2 term and the error then drops like h^4.  The second and third
eigenvalues approximate one double eigenvalue; the one-diagonal meshes are
not symmetric under a quarter turn, so the discrete pair splits.

    python3 demos/eigenvalue_extrapolation.py [max_level]     (level 7 takes ~1 min per element)
"""

import sys

from crstokes.errors import relative_error
from crstokes.expansion import extrapolate
from crstokes.experiments import REFERENCE_EIGS, eigenvalues

top = int(sys.argv[1]) if len(sys.argv) > 1 else 6

for element in ("cr", "ecr"):
    print(f"\n{element.upper()}: relative errors against {REFERENCE_EIGS[0]} and {REFERENCE_EIGS[1]}")
    print("level      lam_1      err_1    err_1^EXP      lam_2      lam_3    err_2^EXP")
    prev = None
    for level in range(3, top + 1):
        lam = [p.value for p in eigenvalues(element, level, k=3)[1]]
        e1 = relative_error(REFERENCE_EIGS[0], lam[0])
        if prev is None:
            x1 = x2 = "         --"
        else:
            x1 = f"{relative_error(REFERENCE_EIGS[0], extrapolate(lam[0], prev[0])):11.4e}"
            x2 = f"{relative_error(REFERENCE_EIGS[1], extrapolate(lam[1], prev[1])):11.4e}"
        print(f"{level:5d} {lam[0]:10.5f} {e1:10.4e} {x1}   {lam[1]:9.5f}  {lam[2]:9.5f}  {x2}")
        prev = lam
