import numpy as np
import pytest

from crstokes.errors import broken_norm
from crstokes.problems import linear_field, polynomial_solution, stream_solution
from crstokes.spaces import element_means


@pytest.fixture(params=["stream", "polynomial"])
def solution(request):
    return stream_solution() if request.param == "stream" else polynomial_solution()


def test_stokes_identities(solution, rng):
    x = rng.uniform(0, 1, (50, 2))
    g = solution.u.grad(x)
    assert np.abs(g[:, 0, 0] + g[:, 1, 1]).max() < 1e-10  # incompressible
    div_sigma = np.einsum("nkll->nk", solution.sigma.grad(x))
    assert np.allclose(div_sigma, -solution.f(x), atol=1e-9 * np.abs(solution.f(x)).max())
    expect = g + solution.p(x)[:, None, None] * np.eye(2)
    assert np.allclose(solution.sigma(x), expect, atol=1e-12)
    lap = np.einsum("nkll->nk", solution.u.hess(x))
    assert np.allclose(solution.f(x), -lap - solution.p.grad(x), atol=1e-9 * np.abs(lap).max())


def test_velocity_vanishes_on_boundary(solution):
    s = np.linspace(0, 1, 11)
    edges = np.concatenate([np.c_[s, 0 * s], np.c_[s, 0 * s + 1], np.c_[0 * s, s], np.c_[0 * s + 1, s]])
    assert np.abs(solution.u(edges)).max() < 1e-12


def test_pressure_has_zero_mean(solution, meshes):
    m = meshes(5)
    assert abs(m.geo.area @ element_means(m, solution.p)) < 1e-12
    assert broken_norm("L2", solution.p, None, m) > 0.1


def test_gradient_matches_finite_differences(rng):
    sol = stream_solution()
    x = rng.uniform(0.1, 0.9, (5, 2))
    eps = 1e-6
    for l in range(2):
        e = np.zeros(2)
        e[l] = eps
        fd = (sol.u(x + e) - sol.u(x - e)) / (2 * eps)
        assert np.allclose(sol.u.grad(x)[..., l], fd, atol=1e-5)
        fd = (sol.u.grad(x + e) - sol.u.grad(x - e)) / (2 * eps)
        assert np.allclose(sol.u.hess(x)[..., l], fd, atol=1e-4)


def test_linear_field(rng):
    A, b = rng.standard_normal((2, 2, 2)), rng.standard_normal((2, 2))
    f = linear_field(A, b)
    x = rng.standard_normal((3, 4, 2))
    assert np.allclose(f(x), np.einsum("klm,...m->...kl", A, x) + b)
    assert f.grad(x).shape == (3, 4, 2, 2, 2) and not f.hess(x).any()
