"""Direct saddle-point solves and the constrained Stokes eigenproblem."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .spaces import DiscreteField


class SolverError(RuntimeError):
    pass


@dataclass
class SourceSolution:
    first: DiscreteField  # velocity (CR/ECR) or pseudostress (RT)
    second: DiscreteField  # pressure (CR/ECR) or velocity (RT)
    residual: float


def solve_source(system):
    """Solve the bordered saddle system with a sparse LU factorisation."""
    K = system.matrix()
    b = system.rhs()
    try:
        lu = spla.splu(K)
    except RuntimeError as exc:
        raise SolverError(
            f"singular saddle system: {system.n_first} x {system.n_second} blocks, "
            f"constraint on block {system.constraint_block} "
            f"(|c| = {np.linalg.norm(system.constraint):.3e})"
        ) from exc
    x = lu.solve(b)
    res = np.linalg.norm(K @ x - b) / max(np.linalg.norm(b), 1.0)
    n1, n2 = system.n_first, system.n_second
    first = DiscreteField(system.first_space, system.expand_first(x[:n1]))
    second = DiscreteField(system.second_space, x[n1 : n1 + n2])
    return SourceSolution(first, second, float(res))


@dataclass
class EigenPair:
    value: float
    u: np.ndarray  # velocity coefficients on the free dofs
    p: np.ndarray  # pressure coefficients
    residual: float


def normalize(u, M, p=None):
    """Scale to unit mass norm; the largest-magnitude entry is made positive."""
    u = np.asarray(u, dtype=float)
    nrm = np.sqrt(u @ (M @ u))
    if not np.isfinite(nrm) or nrm == 0.0:
        raise ValueError("cannot normalise a zero vector")
    # ties broken by the first index so the sign is deterministic
    j = int(np.argmax(np.round(np.abs(u) / np.abs(u).max(), 12)))
    s = np.sign(u[j]) / nrm
    return (u * s, None if p is None else np.asarray(p) * s)


def _bordered(A, B, c):
    c = sp.csr_matrix(np.asarray(c, dtype=float).reshape(-1, 1))
    return sp.bmat([[A, B.T, None], [B, None, c], [None, c.T, None]], format="csc")


def _bordered_pressure(B, c):
    c = sp.csr_matrix(np.asarray(c, dtype=float).reshape(-1, 1))
    return sp.bmat([[B @ B.T, c], [c.T, None]], format="csc")


def solve_eigs(A, B, c, M, k=1, shift=1.0, tol=1e-10, maxiter=500, block=None):
    """The ``k`` smallest eigenvalues of A u + B^T p = lam M u, B u = 0.

    Block shift-invert subspace iteration with Rayleigh-Ritz.  Each sweep
    solves the bordered saddle system with ``A - shift M`` in the velocity
    block, so iterates are discretely divergence-free and the infinite
    eigenvalues of the pencil (pressure and multiplier rows carry no mass)
    never appear.  Start block: the all-ones vector plus seeded columns.
    """
    if k < 1:
        raise ValueError("k must be positive")
    nu, npr = A.shape[0], B.shape[0]
    m = block or min(nu, k + max(k, 8))
    lu = spla.splu(_bordered((A - shift * M).tocsr(), B, c))
    zeros = np.zeros((npr + 1, m))

    def apply(X):
        return lu.solve(np.vstack([M @ X, zeros[:, : X.shape[1]]]))[:nu]

    # least-squares pressure recovery with zero mean: [B B^T c; c^T 0] [p; mu] = [-B r; 0]
    plu = spla.splu(_bordered_pressure(B, c))

    rng = np.random.default_rng(12345)
    X = np.column_stack([np.ones(nu), rng.standard_normal((nu, m - 1))])
    res = np.full(k, np.inf)
    for it in range(maxiter):
        Y = apply(X)
        G = Y.T @ (M @ Y)
        g, V = np.linalg.eigh(0.5 * (G + G.T))
        keep = g > 1e-13 * g.max()
        Q = Y @ (V[:, keep] / np.sqrt(g[keep]))
        H = Q.T @ (A @ Q)
        theta, W = np.linalg.eigh(0.5 * (H + H.T))
        if len(theta) < k:
            raise SolverError(f"only {len(theta)} finite eigenvalues available, asked for {k}")
        X = Q @ W
        R = A @ X[:, :k] - (M @ X[:, :k]) * theta[:k]
        P = -plu.solve(np.vstack([B @ R, np.zeros((1, k))]))[:npr]
        R = R + B.T @ P
        res = np.linalg.norm(R, axis=0) / np.linalg.norm((M @ X[:, :k]) * theta[:k], axis=0)
        if np.all(res <= tol):
            break
    else:
        raise SolverError(f"eigensolver did not converge in {maxiter} sweeps; residuals {res}")
    pairs = []
    for j in range(k):
        u, p = normalize(X[:, j], M, P[:, j])
        pairs.append(EigenPair(float(theta[j]), u, p, float(res[j])))
    return pairs


def dense_eigs(A, B, M):
    """All finite eigenvalues via reduction onto a basis of ker(B)."""
    Z = sla.null_space(B.toarray() if sp.issparse(B) else B)
    Ad = A.toarray() if sp.issparse(A) else A
    Md = M.toarray() if sp.issparse(M) else M
    vals, vecs = sla.eigh(Z.T @ Ad @ Z, Z.T @ Md @ Z)
    return vals, Z @ vecs
