"""Manufactured Stokes solutions with exact derivatives.

The main velocity is the curl of ``phi = sin^2(pi x) sin^2(pi y) exp(x + 2y)``
and its pressure is ``cos(pi x) sin(pi y)``.  A polynomial companion lets
quadrature-sensitive identities be checked exactly.  Derivatives are generated
with sympy once and compiled to numpy callables.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy as sp

from .spaces import AnalyticField

X, Y = sp.symbols("x y", real=True)


def _compile(expr, shape):
    flat = list(sp.Array(expr).reshape(int(np.prod(shape)))) if shape else [expr]
    fn = sp.lambdify((X, Y), flat, "numpy")

    def f(x):
        x = np.asarray(x, dtype=float)
        vals = fn(x[..., 0], x[..., 1])
        out = np.stack([np.broadcast_to(v, x.shape[:-1]) for v in vals], axis=-1)
        return out.reshape(x.shape[:-1] + tuple(shape))

    return f


def _move_last(arr):
    # derive_by_array puts the derivative index first; move it last
    arr = sp.Array(arr)
    r = arr.rank()
    if r <= 1:
        return arr
    return sp.permutedims(arr, list(range(1, r)) + [0])


@dataclass(frozen=True)
class StokesSolution:
    u: AnalyticField  # vector, grad (2, 2) with grad[k, l] = d u_k / d x_l, hess (2, 2, 2)
    p: AnalyticField
    f: AnalyticField  # -lap u - grad p
    sigma: AnalyticField  # grad u + p I, grad (2, 2, 2)


def field_from_sympy(expr, shape, order=1):
    expr = sp.Array(expr) if shape else expr
    g = _move_last(sp.derive_by_array(expr, (X, Y)))
    h = _move_last(sp.derive_by_array(g, (X, Y))) if order >= 2 else None
    return AnalyticField(
        value=_compile(expr, shape),
        shape=tuple(shape),
        grad=_compile(g, tuple(shape) + (2,)),
        hess=None if h is None else _compile(h, tuple(shape) + (2, 2)),
    )


def _from_stream(phi, p):
    u = [-sp.diff(phi, Y), sp.diff(phi, X)]
    lap = [sp.diff(c, X, 2) + sp.diff(c, Y, 2) for c in u]
    f = [-lap[0] - sp.diff(p, X), -lap[1] - sp.diff(p, Y)]
    gu = [[sp.diff(c, v) for v in (X, Y)] for c in u]
    sigma = [[gu[0][0] + p, gu[0][1]], [gu[1][0], gu[1][1] + p]]
    return StokesSolution(
        u=field_from_sympy(u, (2,), order=2),
        p=field_from_sympy(p, (), order=1),
        f=field_from_sympy(f, (2,), order=0),
        sigma=field_from_sympy(sigma, (2, 2), order=1),
    )


@lru_cache(maxsize=None)
def stream_solution():
    """The manufactured smooth solution on the unit square."""
    phi = sp.sin(sp.pi * X) ** 2 * sp.sin(sp.pi * Y) ** 2 * sp.exp(X + 2 * Y)
    return _from_stream(phi, sp.cos(sp.pi * X) * sp.sin(sp.pi * Y))


@lru_cache(maxsize=None)
def polynomial_solution():
    """Polynomial solution: sigma has degree 6 and f degree 5."""
    phi = X**2 * (1 - X) ** 2 * Y**2 * (1 - Y) ** 2
    return _from_stream(phi, X**3 - Y**2 + X * Y - sp.Rational(1, 6))  # zero mean


def linear_field(A, b):
    """Tensor- or vector-valued affine field ``x -> A x + b`` (A acts on the last axis)."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    shape = b.shape

    def value(x):
        return np.tensordot(np.asarray(x, dtype=float), A, axes=([-1], [-1])) + b

    def grad(x):
        return np.broadcast_to(A, x.shape[:-1] + A.shape)

    return AnalyticField(value=value, shape=shape, grad=grad,
                         hess=lambda x: np.zeros(x.shape[:-1] + A.shape + (2,)))
