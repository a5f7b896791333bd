import json

import numpy as np
import pytest

from crstokes.errors import broken_norm
from crstokes.mesh import MeshError, boundary_companion
from crstokes.recovery import (
    PiecewiseField,
    dev,
    interp_pressure,
    interp_velocity_cr,
    interp_velocity_ecr,
    kh_apply,
    recover_all,
    rt_mean,
)
from crstokes.spaces import MIDPOINTS, interpolate_rt


def random_piecewise(mesh, rng, shape=()):
    return PiecewiseField(mesh, rng.standard_normal((mesh.n_triangles, 3) + shape))


def test_linearity(meshes, rng):
    m = meshes(3)
    a, b = random_piecewise(m, rng), random_piecewise(m, rng)
    lhs = kh_apply(2.5 * a - b).edge_values
    rhs = 2.5 * kh_apply(a).edge_values - kh_apply(b).edge_values
    assert np.allclose(lhs, rhs, atol=1e-13)


def random_linear_tensor(rng):
    A, b = rng.standard_normal((2, 2, 2)), rng.standard_normal((2, 2))
    return lambda x: np.einsum("klm,...m->...kl", A, x) + b


def test_reproduces_global_linear_fields(meshes, rng):
    m = meshes(4)
    for _ in range(10):
        sigma = random_linear_tensor(rng)
        q = PiecewiseField(m, sigma(m.geo.points(MIDPOINTS)))
        assert np.allclose(kh_apply(q).edge_values, sigma(m.edge_midpoints), atol=1e-12)


def test_reproduces_linear_fields_through_rt_means(meshes, rng):
    m = meshes(3)
    for _ in range(10):
        r = random_linear_tensor(rng)
        q = PiecewiseField.constant(m, rt_mean(interpolate_rt(m, r)))
        assert np.allclose(kh_apply(q).edge_values, r(m.edge_midpoints), rtol=0, atol=1e-12)


def test_constant_maps_to_itself(meshes):
    m = meshes(3)
    q = PiecewiseField.constant(m, np.full(m.n_triangles, -1.75))
    assert np.allclose(kh_apply(q).edge_values, -1.75)


def test_interior_midpoints_average_both_sides(meshes, rng):
    m = meshes(3)
    q = random_piecewise(m, rng)
    out = kh_apply(q).edge_values
    for e in np.flatnonzero(~m.boundary_edge_flags):
        K1, K2 = m.edge_tris[e]
        v1 = q.mid_values[K1, list(m.tri_edges[K1]).index(e)]
        v2 = q.mid_values[K2, list(m.tri_edges[K2]).index(e)]
        assert np.isclose(out[e], 0.5 * (v1 + v2))


def test_bounded_by_patch_maximum(meshes, rng):
    for level in (2, 3, 5):
        m = meshes(level)
        patch = {int(e): set(m.edge_tris[e][m.edge_tris[e] >= 0]) for e in range(m.n_edges)}
        for e in m.boundary_edges:
            _, _, e1, e2 = boundary_companion(m, int(e))
            patch[int(e)] |= patch[e1] | patch[e2]
        for _ in range(5):
            q = random_piecewise(m, rng)
            out = np.abs(kh_apply(q).edge_values)
            for e, tris in patch.items():
                assert out[e] <= 9.0 * np.abs(q.mid_values[list(tris)]).max()
            assert broken_norm("L2", kh_apply(q), None, m) <= 9.0 * broken_norm("L2", q, None, m)


def test_coarse_mesh_rejected(meshes, rng):
    with pytest.raises(MeshError):
        kh_apply(random_piecewise(meshes(1), rng))


def test_lifted_field_json(meshes, rng):
    m = meshes(2)
    lifted = kh_apply(random_piecewise(m, rng, (2,)))
    doc = json.loads(lifted.to_json())
    assert sorted(doc, key=int) == [str(e) for e in range(m.n_edges)]
    assert np.allclose(doc["0"], lifted.edge_values[0])


def test_piecewise_arithmetic(meshes, rng):
    m = meshes(2)
    a, b = random_piecewise(m, rng), random_piecewise(m, rng)
    bary = rng.dirichlet(np.ones(3), size=4)
    assert np.allclose((a + b).values(bary), a.values(bary) + b.values(bary))
    assert np.allclose((3 * a - b).values(bary), 3 * a.values(bary) - b.values(bary))
    assert np.allclose(a.values(MIDPOINTS), a.mid_values)
    assert np.allclose(a.means(), a.values(np.array([[1 / 3] * 3]))[:, 0])


def test_interpolation_identities(meshes, sol):
    m = meshes(3)
    cr = interp_velocity_cr(sol.sigma, m)
    ecr = interp_velocity_ecr(sol.sigma, m)
    assert np.allclose(ecr.means(), cr.means(), atol=1e-12)
    tr = cr.mid_values[..., 0, 0] + cr.mid_values[..., 1, 1]
    assert np.allclose(tr, 0.0, atol=1e-12)


def test_interpolations_of_constants(meshes):
    m = meshes(3)
    C = np.array([[2.0, -1.0], [0.5, 4.0]])
    const = lambda x: np.broadcast_to(C, x.shape[:-1] + (2, 2))
    assert np.allclose(interp_velocity_cr(const, m).mid_values, dev(C), atol=1e-13)
    assert np.allclose(interp_velocity_ecr(const, m).mid_values, dev(C), atol=1e-13)
    assert np.allclose(interp_pressure(const, m), 3.0)
    eye = lambda x: np.broadcast_to(np.eye(2), x.shape[:-1] + (2, 2))
    assert np.allclose(interp_pressure(eye, m), 1.0)


def test_recover_all_validation(meshes):
    from crstokes.assembly import assemble_stokes
    from crstokes.solver import solve_source

    m3, m2 = meshes(3), meshes(2)
    res = solve_source(assemble_stokes("CR", m3, None))
    with pytest.raises(ValueError):
        recover_all("CR", (res.first, res.second), m2)
    with pytest.raises(ValueError):
        recover_all("P2", (res.first, res.second), m3)
    rec = recover_all("CR", (res.first, res.second), m3)
    assert rec.sigma.edge_values.shape == (m3.n_edges, 2, 2)
    assert np.allclose(rec.sigma.edge_values, 0)
