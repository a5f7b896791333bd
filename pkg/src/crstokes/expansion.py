"""Ingredients of the h^2 eigenvalue expansion and Richardson extrapolation.

Eight linear tensor fields ``phi_rt(i)`` centred at the element centroid are
dual to the eight first-order operators ``D_i``; the 8x8 matrices ``gamma``
and ``eta`` are the (scaled) Gram matrices of their interpolation errors, and
``zeta`` the scaled means of the quadratic CR error shapes ``phi_cr(i)``.

    F1(w, K) = sum_ij gamma_ij int_K D_i w D_j w
    F2(w, K) = sum_ij eta_ij   int_K D_i w D_j w
    F3(v, K) = 1/8 sum_i zeta_i int_K (d^2 v / dt_i^2) . v

Indices are 0-based here: ``phi_rt(0)`` is the first of the eight fields.
"""

import json
from dataclasses import dataclass

import numpy as np

from .mesh import MeshError, is_uniform
from .quadrature import tri_rule
from .recovery import dev

CONSTANTS_DEGREE = 4
F_DEGREE = 6
INVARIANCE_TOL = 1e-12

# row pattern of phi_rt(i) for i // 2: maps (d1, d2) = x - M to the nonzero row
_PATTERNS = [
    lambda d1, d2: (d2, d1),
    lambda d1, d2: (d2, -d1),
    lambda d1, d2: (d1, -d2),
    lambda d1, d2: (d1, d2),
]


def _check_rt_index(i):
    if not 0 <= i < 8:
        raise IndexError(f"phi_rt index must be in 0..7, got {i}")


def phi_rt(i, centroid, x):
    """Value of the i-th linear tensor field at points ``x`` (..., 2).

    ``centroid`` broadcasts against ``x``.
    """
    _check_rt_index(i)
    x = np.asarray(x, dtype=float)
    d = x - np.asarray(centroid)
    row = _PATTERNS[i // 2](d[..., 0], d[..., 1])
    out = np.zeros(x.shape[:-1] + (2, 2))
    out[..., i % 2, 0] = row[0]
    out[..., i % 2, 1] = row[1]
    return out


def phi_rt_grad(i):
    """Constant gradient of phi_rt(i): g[k, l, m] = d phi_kl / d x_m."""
    _check_rt_index(i)
    g = np.zeros((2, 2, 2))
    e = np.eye(2)
    # derivative of each row entry with respect to (x1, x2)
    a, b = _PATTERNS[i // 2](e[0], e[1])
    g[i % 2, 0] = a
    g[i % 2, 1] = b
    return g


def D(grad_sigma):
    """The eight first-order combinations D_i from gradients g[..., k, l, m]."""
    g = np.asarray(grad_sigma)
    d = np.empty(g.shape[:-3] + (8,))
    for k in range(2):
        d[..., k] = 0.5 * (g[..., k, 0, 1] + g[..., k, 1, 0])
        d[..., 2 + k] = 0.5 * (g[..., k, 0, 1] - g[..., k, 1, 0])
        d[..., 4 + k] = 0.5 * (g[..., k, 0, 0] - g[..., k, 1, 1])
        d[..., 6 + k] = 0.5 * (g[..., k, 0, 0] + g[..., k, 1, 1])
    return d


def phi_cr(i, bary):
    """Quadratic CR error shape of local edge i at barycentric points."""
    if not 0 <= i < 3:
        raise IndexError(f"phi_cr index must be in 0..2, got {i}")
    b = np.atleast_2d(bary)
    prev, nxt = b[:, (i - 1) % 3], b[:, (i + 1) % 3]
    return (2 * prev - 1) * (2 * nxt - 1) - 2.0 / 3.0 * b[:, i] + 1.0 / 3.0


@dataclass(frozen=True)
class ExpansionConstants:
    gamma: np.ndarray  # (8, 8)
    eta: np.ndarray  # (8, 8)
    zeta: np.ndarray  # (3,) per local edge
    signature: tuple  # scaled local edge lengths |e_i| / h

    def to_json(self):
        return json.dumps(
            {
                "gamma": self.gamma.ravel().tolist(),
                "eta": self.eta.ravel().tolist(),
                "zeta": self.zeta.tolist(),
            }
        )


def _interp_errors(mesh, bary):
    """(dev - Pi_CR^u) phi_i and (dev - Pi_ECR^u) phi_i at ``bary`` on every element.

    Uses the element-local RT interpolation
    ``Pi_RT phi = sum_j a_j (x) (x - p_j)``, ``a_j = |e_j| phi(m_j) n_j / (2|K|)``,
    which is exact for the linear phi.  Returns two arrays (T, nq, 8, 2, 2).
    """
    g = mesh.geo
    T = mesh.n_triangles
    x = g.points(bary)  # (T, nq, 2)
    M = g.centroid
    ecr = np.empty((T, len(bary), 8, 2, 2))
    cr = np.empty_like(ecr)
    for i in range(8):
        phm = phi_rt(i, M[:, None], g.midpoints)  # (T, 3, 2, 2)
        a = np.einsum("tjkl,tjl->tjk", phm, g.normals) * (g.edge_lengths / (2 * g.area[:, None]))[..., None]
        mean = np.einsum("tjk,tjl->tkl", a, M[:, None] - g.vertices)
        osc = np.einsum("tjk,tql->tqkl", a, x - M[:, None])
        pi_cr = dev(mean)[:, None]
        d = dev(phi_rt(i, M[:, None], x))
        cr[:, :, i] = d - pi_cr
        ecr[:, :, i] = d - (pi_cr + osc)
    return cr, ecr


def _clean(a):
    # symmetrise and flush round-off in entries that vanish exactly
    a = 0.5 * (a + a.T)
    return np.where(np.abs(a) < 1e-14 * np.abs(a).max(), 0.0, a)


def compute_constants(mesh, check=True):
    """gamma, eta, zeta of a uniform mesh; raises MeshError if they vary."""
    if check and not is_uniform(mesh):
        raise MeshError("expansion constants need a uniform triangulation")
    r = tri_rule(CONSTANTS_DEGREE)
    cr, ecr = _interp_errors(mesh, r.points)
    h2 = mesh.h**2
    gam = np.einsum("q,tqikl,tqjkl->tij", r.weights, cr, cr) / h2
    eta = np.einsum("q,tqikl,tqjkl->tij", r.weights, ecr, ecr) / h2
    lens = mesh.geo.edge_lengths
    zeta = lens**2 / (h2 * 9.0)  # int_K phi_cr^i = |K| / 9
    if check:
        for name, arr in (("gamma", gam), ("eta", eta), ("zeta", zeta)):
            spread = np.abs(arr - arr[:1]).max()
            if spread > INVARIANCE_TOL * max(np.abs(arr).max(), 1.0):
                raise MeshError(f"{name} varies across elements by {spread:.3e}")
    return ExpansionConstants(
        gamma=_clean(gam[0]), eta=_clean(eta[0]), zeta=zeta[0].copy(),
        signature=tuple(np.round(lens[0] / mesh.h, 12)),
    )


def eval_F(which, field, mesh, constants=None, degree=F_DEGREE):
    """F_1, F_2 (tensor field with ``grad``) or F_3 (vector field with ``hess``) over the mesh."""
    if which not in (1, 2, 3):
        raise ValueError(f"unknown functional F{which}")
    c = constants or compute_constants(mesh)
    r = tri_rule(degree)
    x = mesh.geo.points(r.points)
    w = r.weights[None, :] * mesh.geo.area[:, None]
    if which in (1, 2):
        if getattr(field, "grad", None) is None:
            raise ValueError("F1/F2 need first derivatives of the field")
        d = D(field.grad(x))  # (T, nq, 8)
        G = c.gamma if which == 1 else c.eta
        return float(np.einsum("tq,tqi,ij,tqj->", w, d, G, d))
    if getattr(field, "hess", None) is None:
        raise ValueError("F3 needs second derivatives of the field")
    H = field.hess(x)  # (T, nq, 2, 2, 2)
    v = field(x)
    t = mesh.geo.tangents  # (T, 3, 2)
    dtt = np.einsum("tqklm,til,tim->tqik", H, t, t)  # (T, nq, 3, 2)
    zeta = mesh.geo.edge_lengths**2 / (9.0 * mesh.h**2)
    return float(np.einsum("tq,ti,tqik,tqk->", w, zeta, dtt, v) / 8.0)


def extrapolate(lam_h, lam_2h):
    """Richardson extrapolation for an O(h^2) leading error."""
    if not (np.isfinite(lam_h) and np.isfinite(lam_2h)):
        raise ValueError("extrapolation needs finite eigenvalues")
    return (4.0 * lam_h - lam_2h) / 3.0
