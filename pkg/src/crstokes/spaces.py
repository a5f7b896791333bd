"""Finite element spaces: CR, ECR, piecewise constants and row-wise RT.

Vector- and tensor-valued fields use blocked numbering: component (or tensor
row) ``k`` of scalar dof ``j`` has global index ``k * n_scalar + j``.

Gradients follow the row convention ``grad(u)[k, l] = d u_k / d x_l``, so the
pseudostress is ``sigma = grad(u) + p I`` and its row-wise divergence is
``div(sigma)_k = sum_l d sigma_kl / d x_l``.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .quadrature import edge_rule, tri_rule

# barycentric coordinates of the three local edge midpoints
MIDPOINTS = np.array([[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]])


@dataclass(frozen=True)
class DofMap:
    tag: str  # "CR" | "ECR" | "P0" | "RT"
    cell_dofs: np.ndarray  # (T, nloc) scalar dof indices
    n_scalar: int
    n_components: int
    boundary: np.ndarray  # scalar dofs carrying homogeneous essential conditions

    @property
    def ndof(self):
        return self.n_scalar * self.n_components

    @property
    def stride(self):
        return self.n_scalar

    def component(self, k):
        return slice(k * self.n_scalar, (k + 1) * self.n_scalar)


@dataclass
class AnalyticField:
    """Function of ``x`` with shape ``(..., 2)`` returning ``(..., *shape)``.

    ``grad`` returns ``(..., *shape, 2)`` and ``hess`` ``(..., *shape, 2, 2)``.
    """

    value: Callable
    shape: tuple = ()
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None

    def __call__(self, x):
        return self.value(x)


class _Space:
    tag = ""
    nloc = 0

    def __init__(self, mesh, n_components=1):
        self.mesh = mesh
        self.n_components = n_components
        self.dofmap = DofMap(
            self.tag, self._cell_dofs(), self._n_scalar(), n_components, self._boundary()
        )

    @property
    def ndof(self):
        return self.dofmap.ndof

    def _boundary(self):
        return np.zeros(0, dtype=np.int64)

    def global_dofs(self):
        """(T, ncomp, nloc) global indices of every local basis function."""
        dm = self.dofmap
        return dm.cell_dofs[:, None, :] + dm.n_scalar * np.arange(dm.n_components)[None, :, None]

    def eval_local(self, K, x, checked=True):
        """Values of the local shape functions of element K at points ``x``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        bary = _barycentric(self.mesh, K, x)
        if checked and np.any(bary < -1e-12):
            raise ValueError(f"point outside triangle {K}")
        return self._basis_at(bary, K)


class CRSpace(_Space):
    """Piecewise linears continuous at edge midpoints; one dof per edge."""

    tag = "CR"
    nloc = 3

    def _cell_dofs(self):
        return self.mesh.tri_edges

    def _n_scalar(self):
        return self.mesh.n_edges

    def _boundary(self):
        return self.mesh.boundary_edges

    def basis(self, bary):
        T = self.mesh.n_triangles
        vals = np.broadcast_to(1.0 - 2.0 * bary, (T,) + bary.shape)
        grads = np.broadcast_to(
            -2.0 * self.mesh.geo.grad_bary[:, None], (T, len(bary), 3, 2)
        )
        return vals, grads

    def _basis_at(self, bary, K):
        return 1.0 - 2.0 * bary


class ECRSpace(_Space):
    """P1 + span{x1^2 + x2^2}: edge means plus the element mean as dofs.

    The local basis is obtained per element by inverting the 4x4 matrix of
    dof functionals applied to the monomials 1, xi_1, xi_2, |xi|^2 with
    ``xi = (x - M_K) / h_K``.
    """

    tag = "ECR"
    nloc = 4

    def __init__(self, mesh, n_components=1):
        super().__init__(mesh, n_components)
        g = mesh.geo
        self._scale = g.edge_lengths.max(axis=1)
        er, tr = edge_rule(2), tri_rule(2)
        F = np.zeros((mesh.n_triangles, 4, 4))
        for i in range(3):
            a = (i + 1) % 3
            b = (i + 2) % 3
            x = (
                g.vertices[:, None, a] * (1 - er.points)[None, :, None]
                + g.vertices[:, None, b] * er.points[None, :, None]
            )
            F[:, i] = np.einsum("q,tqk->tk", er.weights, self._mono(x))
        F[:, 3] = np.einsum("q,tqk->tk", tr.weights, self._mono(g.points(tr.points)))
        self._coef = np.linalg.inv(F)  # basis_j = sum_k coef[k, j] * mono_k

    def _cell_dofs(self):
        m = self.mesh
        return np.column_stack([m.tri_edges, m.n_edges + np.arange(m.n_triangles)])

    def _n_scalar(self):
        return self.mesh.n_edges + self.mesh.n_triangles

    def _boundary(self):
        return self.mesh.boundary_edges

    def _xi(self, x):
        g = self.mesh.geo
        return (x - g.centroid[:, None]) / self._scale[:, None, None]

    def _mono(self, x):
        xi = self._xi(x)
        return np.stack(
            [np.ones(xi.shape[:-1]), xi[..., 0], xi[..., 1], (xi**2).sum(-1)], axis=-1
        )

    def _mono_grad(self, x):
        xi = self._xi(x)
        s = 1.0 / self._scale[:, None, None]
        z = np.zeros(xi.shape)
        ex = np.broadcast_to(np.array([1.0, 0.0]), xi.shape) * s
        ey = np.broadcast_to(np.array([0.0, 1.0]), xi.shape) * s
        return np.stack([z, ex, ey, 2.0 * xi * s], axis=-2)

    def basis(self, bary):
        x = self.mesh.geo.points(bary)
        vals = np.einsum("tqk,tkj->tqj", self._mono(x), self._coef)
        grads = np.einsum("tqkd,tkj->tqjd", self._mono_grad(x), self._coef)
        return vals, grads

    def laplacian(self):
        """(T, 4) constant Laplacian of each local basis function."""
        return 4.0 * self._coef[:, 3, :] / self._scale[:, None] ** 2

    def _basis_at(self, bary, K):
        x = bary @ self.mesh.geo.vertices[K]
        xi = (x - self.mesh.geo.centroid[K]) / self._scale[K]
        mono = np.column_stack([np.ones(len(x)), xi[:, 0], xi[:, 1], (xi**2).sum(-1)])
        return mono @ self._coef[K]


class P0Space(_Space):
    tag = "P0"
    nloc = 1

    def _cell_dofs(self):
        return np.arange(self.mesh.n_triangles)[:, None]

    def _n_scalar(self):
        return self.mesh.n_triangles

    def basis(self, bary):
        T = self.mesh.n_triangles
        return np.ones((T, len(bary), 1)), np.zeros((T, len(bary), 1, 2))

    def _basis_at(self, bary, K):
        return np.ones((len(bary), 1))


class RTSpace(_Space):
    """Lowest-order Raviart-Thomas, applied row by row to 2x2 tensors.

    The dof of edge ``e`` (per row) is the flux against the canonical edge
    normal; on K the local basis of local edge i is
    ``sign_i (x - p_i) / (2 |K|)``.
    """

    tag = "RT"
    nloc = 3

    def __init__(self, mesh, n_components=2):
        super().__init__(mesh, n_components)

    def _cell_dofs(self):
        return self.mesh.tri_edges

    def _n_scalar(self):
        return self.mesh.n_edges

    def basis(self, bary):
        """Vector values (T, nq, 3, 2) and divergences (T, 3)."""
        g = self.mesh.geo
        x = g.points(bary)
        s = self.mesh.tri_signs / (2.0 * g.area[:, None])
        vals = (x[:, :, None, :] - g.vertices[:, None, :, :]) * s[:, None, :, None]
        return vals, 2.0 * s

    def _basis_at(self, bary, K):
        g = self.mesh.geo
        x = bary @ g.vertices[K]
        s = self.mesh.tri_signs[K] / (2.0 * g.area[K])
        return (x[:, None, :] - g.vertices[K][None]) * s[None, :, None]


def _barycentric(mesh, K, x):
    p = mesh.geo.vertices[K]
    J = np.column_stack([p[1] - p[0], p[2] - p[0]])
    l12 = np.linalg.solve(J, (x - p[0]).T).T
    return np.column_stack([1.0 - l12.sum(1), l12])


class DiscreteField:
    """Coefficient vector on a space; evaluable element by element."""

    def __init__(self, space, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (space.ndof,):
            raise ValueError(f"expected {space.ndof} coefficients, got {coeffs.shape}")
        self.space = space
        self.coeffs = coeffs

    @property
    def mesh(self):
        return self.space.mesh

    def _local(self):
        # (T, ncomp, nloc) coefficients
        return self.coeffs[self.space.global_dofs()]

    def values(self, bary):
        """Values at barycentric points on all elements.

        Shapes: scalar (T, nq); vector (T, nq, 2); RT tensor (T, nq, 2, 2).
        """
        bary = np.atleast_2d(bary)
        c = self._local()
        if isinstance(self.space, RTSpace):
            vals, _ = self.space.basis(bary)
            return np.einsum("tkj,tqjd->tqkd", c, vals)
        vals, _ = self.space.basis(bary)
        out = np.einsum("tkj,tqj->tqk", c, vals)
        return out[..., 0] if self.space.n_components == 1 else out

    def grads(self, bary):
        """Piecewise gradients: scalar (T, nq, 2); vector (T, nq, 2, 2)."""
        if isinstance(self.space, RTSpace):
            raise TypeError("RT fields expose div(), not grads()")
        bary = np.atleast_2d(bary)
        _, grads = self.space.basis(bary)
        out = np.einsum("tkj,tqjd->tqkd", self._local(), grads)
        return out[:, :, 0] if self.space.n_components == 1 else out

    def div(self):
        """Element-mean divergence, (T,) for vector fields and (T, 2) for RT rows."""
        c = self._local()
        if isinstance(self.space, RTSpace):
            _, d = self.space.basis(np.zeros((1, 3)))
            return np.einsum("tkj,tj->tk", c, d)
        if self.space.n_components != 2:
            raise TypeError("divergence needs a vector field")
        # gradients are at most linear, so the centroid value is the element mean
        g = self.grads(np.array([[1 / 3, 1 / 3, 1 / 3]]))[:, 0]
        return g[:, 0, 0] + g[:, 1, 1]

    def element_means(self, degree=4):
        r = tri_rule(degree)
        v = self.values(r.points)
        return np.tensordot(r.weights, v, axes=(0, 1))


def edge_points(mesh, rule):
    """Physical quadrature points on every global edge, (nE, nq, 2)."""
    a = mesh.vertices[mesh.edges[:, 0]]
    b = mesh.vertices[mesh.edges[:, 1]]
    s = rule.points
    return a[:, None] * (1 - s)[None, :, None] + b[:, None] * s[None, :, None]


def edge_normals(mesh):
    """Canonical unit normals n_e (from the smaller to the larger triangle index)."""
    K = mesh.edge_tris[:, 0]
    loc = np.argmax(mesh.tri_edges[K] == np.arange(mesh.n_edges)[:, None], axis=1)
    return mesh.geo.normals[K, loc]


def edge_lengths(mesh):
    d = mesh.vertices[mesh.edges[:, 1]] - mesh.vertices[mesh.edges[:, 0]]
    return np.linalg.norm(d, axis=1)


def edge_means(mesh, f, degree=6):
    r = edge_rule(degree)
    vals = np.asarray(f(edge_points(mesh, r)))
    return np.tensordot(r.weights, vals, axes=(0, 1)) if vals.ndim > 2 else vals @ r.weights


def element_means(mesh, f, degree=8):
    r = tri_rule(degree)
    vals = np.asarray(f(mesh.geo.points(r.points)))
    return np.tensordot(r.weights, vals, axes=(0, 1)) if vals.ndim > 2 else vals @ r.weights


def interpolate_cr(mesh, v, degree=6):
    """Canonical CR interpolant of a vector field: edge means are matched."""
    space = CRSpace(mesh, 2)
    m = edge_means(mesh, v, degree)  # (nE, 2)
    return DiscreteField(space, m.T.ravel())


def interpolate_ecr(mesh, v, degree=6, tri_degree=8):
    """Canonical ECR interpolant: edge means and element means are matched."""
    space = ECRSpace(mesh, 2)
    em = edge_means(mesh, v, degree)  # (nE, 2)
    km = element_means(mesh, v, tri_degree)  # (T, 2)
    return DiscreteField(space, np.vstack([em, km]).T.ravel())


def interpolate_rt(mesh, sigma, degree=8):
    """Canonical RT interpolant of a 2x2 tensor field (row-wise normal fluxes)."""
    space = RTSpace(mesh)
    r = edge_rule(degree)
    vals = np.asarray(sigma(edge_points(mesh, r)))  # (nE, nq, 2, 2)
    flux = np.einsum("q,eqkd,ed->ek", r.weights, vals, edge_normals(mesh))
    flux *= edge_lengths(mesh)[:, None]
    return DiscreteField(space, flux.T.ravel())


def project_p0(mesh, f, degree=8):
    """Element means of an analytic or discrete field as a P0 DiscreteField."""
    if isinstance(f, DiscreteField):
        means = f.element_means(max(degree, 4))
    else:
        means = element_means(mesh, f, degree)
    means = np.asarray(means)
    ncomp = 1 if means.ndim == 1 else int(np.prod(means.shape[1:]))
    space = P0Space(mesh, ncomp)
    return DiscreteField(space, means.reshape(len(means), -1).T.ravel())
