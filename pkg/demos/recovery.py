"""What the midpoint-averaging postprocessor K_h buys.

On one mesh, compare the raw CR/ECR pressure and velocity gradient with their
K_h lifts, and the RT pseudostress with K_h of its element means.  Then refine
once and show the error ratios: ~2 for raw quantities and ~4 after recovery.

    python3 demos/recovery.py [level]
"""

import sys

from crstokes.assembly import assemble_rt_mixed, assemble_stokes
from crstokes.errors import broken_norm
from crstokes.mesh import build_uniform
from crstokes.problems import stream_solution
from crstokes.recovery import pressure_field, recover_all, velocity_gradient
from crstokes.solver import solve_source

level = int(sys.argv[1]) if len(sys.argv) > 1 else 5
sol = stream_solution()


def errors(level):
    mesh = build_uniform(level)
    out = {}
    for kind in ("CR", "ECR"):
        res = solve_source(assemble_stokes(kind, mesh, sol.f))
        rec = recover_all(kind, (res.first, res.second), mesh)
        out[f"{kind} p raw"] = broken_norm("L2", pressure_field(res.second), sol.p, mesh)
        out[f"{kind} p K_h"] = broken_norm("L2", rec.p, sol.p, mesh)
        out[f"{kind} grad u raw"] = broken_norm("L2", velocity_gradient(res.first), sol.u.grad, mesh)
        out[f"{kind} grad u K_h"] = broken_norm("L2", rec.grad_u, sol.u.grad, mesh)
    s = solve_source(assemble_rt_mixed(mesh, sol.f)).first
    out["RT sigma raw"] = broken_norm("L2", s, sol.sigma, mesh)
    out["RT sigma K_h"] = broken_norm("L2", recover_all("RT", s, mesh).sigma, sol.sigma, mesh)
    return out


coarse, fine = errors(level), errors(level + 1)
print(f"{'quantity':16s} {'T' + str(level):>12s} {'T' + str(level + 1):>12s}   ratio")
for name in coarse:
    print(f"{name:16s} {coarse[name]:12.4e} {fine[name]:12.4e}   {coarse[name] / fine[name]:5.2f}")
