"""Pseudostress interpolations and the midpoint-averaging postprocessor K_h.

Piecewise polynomial fields of degree <= 1 are stored by their values at the
three local edge midpoints of every element, ``(T, 3, *shape)``.  A linear
function on a triangle is fixed by those values, and evaluating it is a
CR-type combination ``sum_i v_i (1 - 2 psi_i)``.
"""

import json
from dataclasses import dataclass

import numpy as np

from .mesh import MeshError, boundary_companion
from .spaces import MIDPOINTS, DiscreteField, RTSpace, interpolate_rt

I2 = np.eye(2)


def _cr_eval(mid_values, bary):
    # (T, 3, *shape), (nq, 3) -> (T, nq, *shape)
    return np.einsum("qi,ti...->tq...", 1.0 - 2.0 * np.atleast_2d(bary), mid_values)


@dataclass
class PiecewiseField:
    """Discontinuous field, linear (or constant) on each element."""

    mesh: object
    mid_values: np.ndarray  # (T, 3, *shape)

    @property
    def shape(self):
        return self.mid_values.shape[2:]

    @classmethod
    def constant(cls, mesh, values):
        values = np.asarray(values, dtype=float)
        return cls(mesh, np.repeat(values[:, None], 3, axis=1))

    @classmethod
    def from_callable(cls, mesh, per_element):
        """``per_element(bary)`` returns (T, nq, *shape) values of a P1 field."""
        return cls(mesh, np.asarray(per_element(MIDPOINTS)))

    def values(self, bary):
        return _cr_eval(self.mid_values, bary)

    def means(self):
        return self.mid_values.mean(axis=1)

    def __add__(self, other):
        return PiecewiseField(self.mesh, self.mid_values + other.mid_values)

    def __sub__(self, other):
        return PiecewiseField(self.mesh, self.mid_values - other.mid_values)

    def __rmul__(self, a):
        return PiecewiseField(self.mesh, a * self.mid_values)


@dataclass
class CRLiftedField:
    """One value per edge midpoint; evaluated as a nonconforming P1 field."""

    mesh: object
    edge_values: np.ndarray  # (nE, *shape)

    def values(self, bary):
        return _cr_eval(self.edge_values[self.mesh.tri_edges], bary)

    def to_json(self):
        return json.dumps({str(e): np.asarray(v).tolist() for e, v in enumerate(self.edge_values)})


def dev(t):
    tr = t[..., 0, 0] + t[..., 1, 1]
    return t - 0.5 * tr[..., None, None] * I2


def rt_mean(field):
    """Element means of an RT tensor field, (T, 2, 2)."""
    return field.values(np.array([[1 / 3, 1 / 3, 1 / 3]]))[:, 0]


def _as_rt(mesh, sigma):
    if isinstance(sigma, DiscreteField) and isinstance(sigma.space, RTSpace):
        return sigma
    return interpolate_rt(mesh, sigma)


def interp_pressure(sigma, mesh):
    """Pi_h^p sigma = 1/2 Pi_h^0 tr(Pi_RT sigma), one value per element."""
    m = rt_mean(_as_rt(mesh, sigma))
    return 0.5 * (m[:, 0, 0] + m[:, 1, 1])


def interp_velocity_cr(sigma, mesh):
    """Pi_CR^u sigma = Pi_h^0 dev Pi_RT sigma (piecewise constant tensor)."""
    return PiecewiseField.constant(mesh, dev(rt_mean(_as_rt(mesh, sigma))))


def interp_velocity_ecr(sigma, mesh):
    """Pi_ECR^u sigma = Pi_RT sigma - (Pi_h^p sigma) I (piecewise linear tensor)."""
    rt = _as_rt(mesh, sigma)
    ph = interp_pressure(rt, mesh)
    vals = rt.values(MIDPOINTS) - ph[:, None, None, None] * I2
    return PiecewiseField(mesh, vals)


def kh_apply(q, mesh=None):
    """Lift a piecewise field to midpoint values.

    Interior midpoint: the average of the two one-sided values.  Boundary
    midpoint m: ``2 K_h q(m') - K_h q(m'')`` with m', m'' the interior
    midpoints given by :func:`mesh.boundary_companion`.
    """
    mesh = mesh or q.mesh
    if mesh.level < 2:
        raise MeshError("K_h needs a mesh of level >= 2")
    vals = q.mid_values
    shape = vals.shape[2:]
    out = np.zeros((mesh.n_edges,) + shape)
    cnt = np.zeros(mesh.n_edges)
    te = mesh.tri_edges
    np.add.at(out, te.ravel(), vals.reshape((-1,) + shape))
    np.add.at(cnt, te.ravel(), 1.0)
    interior = ~mesh.boundary_edge_flags
    out[interior] /= cnt[interior].reshape((-1,) + (1,) * len(shape))
    for e, e1, e2 in _companions(mesh):
        out[e] = 2.0 * out[e1] - out[e2]
    return CRLiftedField(mesh, out)


def _companions(mesh):
    cache = mesh.__dict__.setdefault("_kh_companions", None)
    if cache is None:
        cache = []
        flags = mesh.boundary_edge_flags
        for e in mesh.boundary_edges:
            _, _, e1, e2 = boundary_companion(mesh, int(e))
            if flags[e1] or flags[e2]:
                raise MeshError(f"boundary rule for edge {e} refers to a boundary midpoint")
            cache.append((int(e), e1, e2))
        mesh.__dict__["_kh_companions"] = cache
    return cache


def velocity_gradient(u):
    """Piecewise gradient of a CR/ECR velocity as a PiecewiseField (T, 3, 2, 2)."""
    return PiecewiseField(u.mesh, u.grads(MIDPOINTS))


def pressure_field(p):
    return PiecewiseField.constant(p.mesh, p.coeffs[: p.mesh.n_triangles])


@dataclass
class Recovered:
    sigma: CRLiftedField | None
    grad_u: CRLiftedField | None
    p: CRLiftedField | None


def recover_all(method, solution, mesh):
    """Superconvergent recovery from a discrete solution on ``mesh``.

    ``method`` is "CR"/"ECR" with ``solution = (u_h, p_h)`` or "RT" with
    ``solution = sigma_h``.
    """
    method = method.upper()
    if method == "RT":
        sig = solution[0] if isinstance(solution, tuple) else solution
        if sig.mesh is not mesh:
            raise ValueError("solution lives on a different mesh")
        s = kh_apply(PiecewiseField.constant(mesh, rt_mean(sig)), mesh)
        tr = 0.5 * (s.edge_values[:, 0, 0] + s.edge_values[:, 1, 1])
        return Recovered(s, CRLiftedField(mesh, dev(s.edge_values)), CRLiftedField(mesh, tr))
    if method not in ("CR", "ECR"):
        raise ValueError(f"unknown method {method!r}")
    u, p = solution
    if u.mesh is not mesh or p.mesh is not mesh:
        raise ValueError("solution lives on a different mesh")
    gu = kh_apply(velocity_gradient(u), mesh)
    ph = kh_apply(pressure_field(p), mesh)
    sig = CRLiftedField(mesh, gu.edge_values + ph.edge_values[:, None, None] * I2)
    return Recovered(sig, gu, ph)
