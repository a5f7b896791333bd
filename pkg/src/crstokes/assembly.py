"""Assembly of the discrete Stokes operators.

CR/ECR velocity-pressure system (boundary velocity dofs eliminated)::

    [ A   B^T  0 ] [u]   [F]
    [ B   0    c ] [p] = [0]
    [ 0   c^T  0 ] [m]   [0]

with ``c_K = |K|`` forcing a zero-mean pressure.  The RT pseudostress
system puts the mean constraint (of ``tr sigma``) on the first block.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .quadrature import tri_rule
from .spaces import CRSpace, DiscreteField, ECRSpace, P0Space, RTSpace

ASSEMBLY_DEGREE = 4
RHS_DEGREE = 6


@dataclass
class SaddleSystem:
    A: sp.csr_matrix
    B: sp.csr_matrix
    constraint: np.ndarray
    constraint_block: int  # 0: acts on the first unknown, 1: on the second
    rhs_first: np.ndarray
    rhs_second: np.ndarray
    first_space: object
    second_space: object
    free: np.ndarray  # full first-block indices kept in the system

    @property
    def n_first(self):
        return self.A.shape[0]

    @property
    def n_second(self):
        return self.B.shape[0]

    def matrix(self):
        n1, n2 = self.n_first, self.n_second
        c = sp.csr_matrix(np.asarray(self.constraint, dtype=float).reshape(-1, 1))
        c1 = c if self.constraint_block == 0 else sp.csr_matrix((n1, 1))
        c2 = c if self.constraint_block == 1 else sp.csr_matrix((n2, 1))
        return sp.bmat(
            [[self.A, self.B.T, c1], [self.B, None, c2], [c1.T, c2.T, None]], format="csc"
        )

    def rhs(self):
        return np.concatenate([self.rhs_first, self.rhs_second, [0.0]])

    def expand_first(self, x):
        full = np.zeros(self.first_space.ndof)
        full[self.free] = x
        return full


def _scatter(rows, cols, vals, shape):
    return sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=shape).tocsr()


def _vector_local(space):
    """Local gradient/value tables for a vector velocity space."""
    r = tri_rule(ASSEMBLY_DEGREE)
    vals, grads = space.basis(r.points)
    w = r.weights[None, :] * space.mesh.geo.area[:, None]  # (T, nq)
    return r, vals, grads, w


def velocity_free_dofs(space):
    dm = space.dofmap
    mask = np.ones(dm.ndof, dtype=bool)
    for k in range(dm.n_components):
        mask[k * dm.n_scalar + dm.boundary] = False
    return np.flatnonzero(mask)


def scalar_stiffness(space):
    _, vals, grads, w = _vector_local(space)
    loc = np.einsum("tq,tqid,tqjd->tij", w, grads, grads)
    cd = space.dofmap.cell_dofs
    n = space.dofmap.n_scalar
    rows = np.repeat(cd[:, :, None], cd.shape[1], axis=2)
    cols = np.repeat(cd[:, None, :], cd.shape[1], axis=1)
    return _scatter(rows, cols, loc, (n, n))


def scalar_mass(space):
    _, vals, grads, w = _vector_local(space)
    loc = np.einsum("tq,tqi,tqj->tij", w, vals, vals)
    cd = space.dofmap.cell_dofs
    n = space.dofmap.n_scalar
    rows = np.repeat(cd[:, :, None], cd.shape[1], axis=2)
    cols = np.repeat(cd[:, None, :], cd.shape[1], axis=1)
    return _scatter(rows, cols, loc, (n, n))


def divergence_matrix(space):
    """B[K, dof] = int_K div(phi_dof) over the full vector velocity space."""
    _, vals, grads, w = _vector_local(space)
    dm = space.dofmap
    T = space.mesh.n_triangles
    blocks = []
    for k in range(2):
        loc = np.einsum("tq,tqi->ti", w, grads[..., k])
        rows = np.repeat(np.arange(T)[:, None], loc.shape[1], axis=1)
        blocks.append(_scatter(rows, dm.cell_dofs, loc, (T, dm.n_scalar)))
    return sp.hstack(blocks, format="csr")


def load_vector(space, f, degree=RHS_DEGREE):
    """(f, v) for every vector basis function; ``f`` analytic or P0 DiscreteField."""
    mesh = space.mesh
    dm = space.dofmap
    r = tri_rule(degree)
    vals, _ = space.basis(r.points)
    w = r.weights[None, :] * mesh.geo.area[:, None]
    if isinstance(f, DiscreteField):
        fq = f.values(r.points)
        if fq.ndim == 2:
            raise ValueError("load needs a vector-valued source")
    else:
        fq = np.asarray(f(mesh.geo.points(r.points)))  # (T, nq, 2)
    out = np.zeros(dm.ndof)
    for k in range(2):
        loc = np.einsum("tq,tq,tqi->ti", w, fq[..., k], vals)
        np.add.at(out, k * dm.n_scalar + dm.cell_dofs, loc)
    return out


def assemble_stokes(space_kind, mesh, f):
    """Saddle system of the CR or ECR discretisation with source ``f``."""
    if mesh.n_triangles == 0:
        raise ValueError("empty mesh")
    kind = space_kind.upper()
    if kind == "CR":
        V = CRSpace(mesh, 2)
    elif kind == "ECR":
        V = ECRSpace(mesh, 2)
    else:
        raise ValueError(f"unknown velocity space {space_kind!r}")
    Q = P0Space(mesh)
    free = velocity_free_dofs(V)
    S = scalar_stiffness(V)
    A = sp.block_diag([S, S], format="csr")[free][:, free]
    B = divergence_matrix(V)[:, free]
    F = load_vector(V, f)[free] if f is not None else np.zeros(len(free))
    return SaddleSystem(
        A=A.tocsr(),
        B=B.tocsr(),
        constraint=mesh.geo.area.copy(),
        constraint_block=1,
        rhs_first=F,
        rhs_second=np.zeros(mesh.n_triangles),
        first_space=V,
        second_space=Q,
        free=free,
    )


def assemble_mass(space_kind, mesh):
    """Velocity mass matrix on the free (interior) dofs."""
    kind = space_kind.upper()
    V = CRSpace(mesh, 2) if kind == "CR" else ECRSpace(mesh, 2) if kind == "ECR" else None
    if V is None:
        raise ValueError(f"unknown velocity space {space_kind!r}")
    free = velocity_free_dofs(V)
    M = scalar_mass(V)
    return sp.block_diag([M, M], format="csr")[free][:, free].tocsr()


def rt_local(mesh):
    """Local dev-dev matrices (T, 6, 6), div couplings (T, 3) and trace moments.

    Local dof ordering is (row k, local edge i) -> 3 * k + i.
    """
    space = RTSpace(mesh)
    r = tri_rule(ASSEMBLY_DEGREE)
    vals, div = space.basis(r.points)  # (T, nq, 3, 2), (T, 3)
    w = r.weights[None, :] * mesh.geo.area[:, None]
    gram = np.einsum("tq,tqid,tqjd->tij", w, vals, vals)
    # (dev S, dev T) = S:T - tr S tr T / 2, with S = e_k (x) phi_i, T = e_l (x) phi_j
    cross = np.einsum("tq,tqik,tqjl->tkilj", w, vals, vals)  # phi_i[k] phi_j[l]
    T = mesh.n_triangles
    loc = np.zeros((T, 2, 3, 2, 3))
    for k in range(2):
        loc[:, k, :, k, :] += gram
    loc -= 0.5 * cross
    loc = loc.reshape(T, 6, 6)
    trace = np.einsum("tq,tqik->tki", w, vals)  # (T, 2, 3): int_K phi_i[k] = int_K tr(e_k (x) phi_i)
    return loc, div * mesh.geo.area[:, None], trace


def assemble_rt_mixed(mesh, f):
    """Pseudostress-velocity system: (dev s, dev t) + (div t, u) = 0, (div s, v) = -(f, v)."""
    if mesh.n_triangles == 0:
        raise ValueError("empty mesh")
    S = RTSpace(mesh)
    U = P0Space(mesh, 2)
    nE, T = mesh.n_edges, mesh.n_triangles
    loc, dloc, trace = rt_local(mesh)
    gd = S.global_dofs().reshape(T, 6)
    rows = np.repeat(gd[:, :, None], 6, axis=2)
    cols = np.repeat(gd[:, None, :], 6, axis=1)
    A = _scatter(rows, cols, loc, (2 * nE, 2 * nE))
    # row k of the tensor couples to velocity component k
    brow = np.stack([np.arange(T)] * 3, axis=1)
    Bblocks = []
    for k in range(2):
        Bk = _scatter(brow, S.global_dofs()[:, k, :], dloc, (T, 2 * nE))
        Bblocks.append(Bk)
    B = sp.vstack(Bblocks, format="csr")
    c = np.zeros(2 * nE)
    np.add.at(c, S.global_dofs(), trace)
    if f is None:
        g = np.zeros(2 * T)
    else:
        if isinstance(f, DiscreteField):
            fm = f.element_means()
        else:
            r = tri_rule(RHS_DEGREE)
            fm = np.asarray(f(mesh.geo.points(r.points))).transpose(0, 2, 1) @ r.weights
        g = -(fm * mesh.geo.area[:, None]).T.ravel()
    return SaddleSystem(
        A=A,
        B=B,
        constraint=c,
        constraint_block=0,
        rhs_first=np.zeros(2 * nE),
        rhs_second=g,
        first_space=S,
        second_space=U,
        free=np.arange(2 * nE),
    )

