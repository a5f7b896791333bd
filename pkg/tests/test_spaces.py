import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crstokes.expansion import phi_rt
from crstokes.problems import linear_field
from crstokes.quadrature import edge_rule, tri_rule
from crstokes.spaces import (
    CRSpace,
    DiscreteField,
    ECRSpace,
    P0Space,
    RTSpace,
    edge_lengths,
    edge_means,
    edge_normals,
    edge_points,
    element_means,
    interpolate_cr,
    interpolate_ecr,
    interpolate_rt,
    project_p0,
)


def local_edge_means(space, K, degree=4):
    """(3, nloc) means of each local shape function over each local edge."""
    g = space.mesh.geo
    r = edge_rule(degree)
    out = []
    for i in range(3):
        a, b = g.vertices[K, (i + 1) % 3], g.vertices[K, (i + 2) % 3]
        x = a[None] * (1 - r.points)[:, None] + b[None] * r.points[:, None]
        out.append(r.weights @ space.eval_local(K, x))
    return np.array(out)


def local_element_mean(space, K):
    r = tri_rule(4)
    x = r.points @ space.mesh.geo.vertices[K]
    return r.weights @ space.eval_local(K, x)


# polynomial fields that the quadrature rules below integrate exactly

def poly_v(x):
    x1, x2 = x[..., 0], x[..., 1]
    return np.stack([x1**3 * x2 - x2**2 + 0.3 * x1, x1**2 * x2**2 - x1 * x2**3], axis=-1)


def poly_v_grad(x):
    x1, x2 = x[..., 0], x[..., 1]
    return np.stack(
        [
            np.stack([3 * x1**2 * x2 + 0.3, x1**3 - 2 * x2], -1),
            np.stack([2 * x1 * x2**2 - x2**3, 2 * x1**2 * x2 - 3 * x1 * x2**2], -1),
        ],
        axis=-2,
    )


def poly_v_lap(x):
    x1, x2 = x[..., 0], x[..., 1]
    return np.stack([6 * x1 * x2 - 2, 2 * x1**2 + 2 * x2**2 - 6 * x1 * x2], axis=-1)


def test_cr_duality(meshes):
    V = CRSpace(meshes(3))
    for K in (0, 17, 31):
        assert np.allclose(local_edge_means(V, K), np.eye(3), atol=1e-14)


def test_ecr_duality(meshes):
    V = ECRSpace(meshes(3))
    for K in (0, 17, 31):
        F = np.vstack([local_edge_means(V, K), local_element_mean(V, K)])
        assert np.allclose(F, np.eye(4), atol=1e-12)
    # the bubble: zero edge means, unit element mean
    assert np.allclose(local_edge_means(V, 5)[:, 3], 0, atol=1e-12)
    assert np.isclose(local_element_mean(V, 5)[3], 1.0)


def test_p0_and_checked_mode(meshes):
    m = meshes(2)
    assert np.allclose(P0Space(m).eval_local(0, m.geo.centroid[:1]), 1.0)
    with pytest.raises(ValueError):
        CRSpace(m).eval_local(0, np.array([[5.0, 5.0]]))
    CRSpace(m).eval_local(0, np.array([[5.0, 5.0]]), checked=False)


def test_dof_counts(meshes):
    m = meshes(3)
    assert CRSpace(m, 2).ndof == 2 * m.n_edges
    assert ECRSpace(m, 2).ndof == 2 * (m.n_edges + m.n_triangles)
    assert P0Space(m).ndof == m.n_triangles
    assert RTSpace(m).ndof == 2 * m.n_edges
    V = ECRSpace(m, 2)
    idx = V.global_dofs().ravel()
    assert np.array_equal(np.unique(idx), np.arange(V.ndof))


def rand_linear(rng, shape=(2,)):
    return linear_field(rng.standard_normal(shape + (2,)), rng.standard_normal(shape))


def test_interpolate_cr_linear_exact(meshes, rng):
    m = meshes(3)
    v = rand_linear(rng)
    r = tri_rule(3)
    assert np.allclose(interpolate_cr(m, v).values(r.points), v(m.geo.points(r.points)), atol=1e-13)


def test_interpolate_cr_edge_means(meshes):
    m = meshes(3)
    v = lambda x: np.stack([x[..., 0] ** 2, 0 * x[..., 0]], axis=-1)
    vh = interpolate_cr(m, v)
    a, b = m.vertices[m.edges[:, 0]], m.vertices[m.edges[:, 1]]
    exact = (a[:, 0] ** 2 + a[:, 0] * b[:, 0] + b[:, 0] ** 2) / 3  # mean of x^2 on a segment
    assert np.allclose(vh.coeffs[: m.n_edges], exact, atol=1e-14)
    assert np.allclose(edge_means(m, v)[:, 0], exact, atol=1e-14)


def test_interpolate_cr_zero_edge_means(meshes):
    # cellwise polynomials whose product integrates to zero along every edge direction
    m = meshes(3)
    ell = 0.25
    g = lambda s: np.mod(s, 1) * (1 - np.mod(s, 1)) - 1 / 6
    k = lambda s: np.mod(s, 1) - 0.5
    v = lambda x: np.stack([g(x[..., 0] / ell) * k(x[..., 1] / ell), 0 * x[..., 0]], axis=-1)
    assert np.allclose(interpolate_cr(m, v).coeffs, 0, atol=1e-14)


def test_interpolate_ecr(meshes, rng, sol):
    m = meshes(3)
    r = tri_rule(4)
    x = m.geo.points(r.points)
    v = rand_linear(rng)
    assert np.allclose(interpolate_ecr(m, v).values(r.points), v(x), atol=1e-12)
    bubble = lambda y: np.stack([(y**2).sum(-1), 0 * y[..., 0]], axis=-1)
    assert np.allclose(interpolate_ecr(m, bubble).values(r.points), bubble(x), atol=1e-12)
    uh = interpolate_ecr(m, sol.u)
    assert np.allclose(uh.element_means(8), element_means(m, sol.u), atol=1e-11)
    assert np.allclose(uh.coeffs.reshape(2, -1)[:, : m.n_edges].T, edge_means(m, sol.u), atol=1e-11)


def test_interpolate_rt(meshes):
    m = meshes(3)
    r = tri_rule(2)
    C = np.array([[1.0, -2.0], [0.5, 3.0]])
    const = lambda x: np.broadcast_to(C, x.shape[:-1] + (2, 2))
    assert np.allclose(interpolate_rt(m, const).values(r.points), C, atol=1e-13)
    # element mean of div(I - Pi_RT) sigma vanishes; a cubic sigma keeps this exact
    sh = interpolate_rt(m, poly_v_grad)
    div_exact = element_means(m, poly_v_lap)
    assert np.allclose(sh.div(), div_exact, rtol=1e-12, atol=1e-12)


def test_interpolate_rt_normal_moments_of_phi(meshes):
    m = meshes(2)
    c = m.geo.centroid[0]
    phi = lambda x: phi_rt(0, c, x)
    ph = interpolate_rt(m, phi)
    # moments of a linear field are exact with the midpoint rule
    mids = m.edge_midpoints
    exact = np.einsum("ekl,el->ek", phi(mids), edge_normals(m)) * edge_lengths(m)[:, None]
    assert np.allclose(ph.coeffs.reshape(2, -1).T, exact, atol=1e-14)
    # and Pi_RT reproduces them: flux of the interpolant through every edge
    er = edge_rule(2)
    pts = edge_points(m, er)
    K = m.edge_tris[:, 0]
    loc = np.argmax(m.tri_edges[K] == np.arange(m.n_edges)[:, None], axis=1)
    from crstokes.spaces import _barycentric

    fl = []
    for e in range(m.n_edges):
        b = _barycentric(m, K[e], pts[e])
        vals = ph.values(b)[K[e]]  # (nq, 2, 2)
        fl.append(er.weights @ (vals @ edge_normals(m)[e]) * edge_lengths(m)[e])
    assert np.allclose(np.array(fl), exact, atol=1e-13)


def test_project_p0(meshes, rng):
    m = meshes(3)
    c = project_p0(m, lambda x: np.full(x.shape[:-1], 2.5))
    assert np.allclose(c.coeffs, 2.5)
    assert np.allclose(project_p0(c.mesh, c).coeffs, c.coeffs)  # idempotent
    A, b = rng.standard_normal(2), rng.standard_normal()
    lin = project_p0(m, lambda x: x @ A + b)
    assert np.allclose(lin.coeffs, m.geo.centroid @ A + b)
    # Pi_0 (x - M_K) = 0 elementwise
    for k in range(2):
        dev_k = element_means(m, lambda x: x[..., k]) - m.geo.centroid[:, k]
        assert np.allclose(dev_k, 0, atol=1e-15)


@pytest.mark.parametrize("kind", ["CR", "ECR"])
def test_commuting_properties(meshes, rng, kind):
    m = meshes(3)
    interp = interpolate_cr if kind == "CR" else interpolate_ecr
    V = CRSpace(m, 2) if kind == "CR" else ECRSpace(m, 2)
    vh = interp(m, poly_v)
    r = tri_rule(8)
    w = r.weights[None, :] * m.geo.area[:, None]
    err_grad = poly_v_grad(m.geo.points(r.points)) - vh.grads(r.points)  # (T, nq, 2, 2)
    err_div = err_grad[..., 0, 0] + err_grad[..., 1, 1]
    scale = np.sqrt(np.einsum("tq,tqkl->", w, poly_v_grad(m.geo.points(r.points)) ** 2))
    for _ in range(20):
        wh = DiscreteField(V, rng.standard_normal(V.ndof))
        a = np.einsum("tq,tqkl,tqkl->", w, err_grad, wh.grads(r.points))
        assert abs(a) <= 1e-10 * scale * np.linalg.norm(wh.coeffs)
        q = rng.standard_normal(m.n_triangles)
        b = np.einsum("tq,tq,t->", w, err_div, q)
        assert abs(b) <= 1e-10 * scale * np.linalg.norm(q)


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.floats(-10, 10, allow_nan=False), min_size=6, max_size=6),
    st.sampled_from(["cr", "ecr"]),
)
def test_linear_reproduction_property(coef, kind):
    from crstokes.mesh import build_uniform

    m = build_uniform(2)
    A = np.array(coef[:4]).reshape(2, 2)
    v = linear_field(A, np.array(coef[4:]))
    vh = (interpolate_cr if kind == "cr" else interpolate_ecr)(m, v)
    r = tri_rule(2)
    assert np.allclose(vh.values(r.points), v(m.geo.points(r.points)), atol=1e-11 * (1 + np.abs(coef).max()))
    assert np.allclose(vh.grads(r.points), A, atol=1e-10 * (1 + np.abs(coef).max()))
