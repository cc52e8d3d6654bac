import math

import numpy as np
import pytest

from yflow.discretization import (
    FieldAlignmentError,
    TridiagonalOperator,
    conformal_laplacian,
    dirichlet_form,
    gradient,
    h1_norm,
    integrate,
    kappa,
    laplacian,
    lp_norm,
)
from yflow.geometry import RadialGrid, build_manifold, cone, sphere


def test_constants_are_harmonic(sphere256):
    ones = np.ones(sphere256.node_count)
    assert np.max(np.abs(laplacian(sphere256, ones))) <= 1e-12


def test_tridiagonal_rows_annihilate_constants(sphere64):
    op = TridiagonalOperator.laplacian(sphere64)
    scale = np.abs(op.diag) + np.abs(op.sub) + np.abs(op.sup)
    assert np.max(np.abs(op.row_sums()) / scale) <= 1e-12
    ones = np.ones(sphere64.node_count)
    assert np.max(np.abs(op.apply(ones))) <= 1e-9 * scale.max()


def test_tridiagonal_apply_matches_laplacian(sphere64):
    op = TridiagonalOperator.laplacian(sphere64)
    f = np.sin(3.0 * sphere64.nodes)
    assert np.allclose(op.apply(f), laplacian(sphere64, f), rtol=1e-12, atol=1e-12)


def test_sphere_eigenfunction_second_order():
    # cos(geodesic distance) is a first eigenfunction of the round sphere;
    # eigenvalue n rescales with the normalization homothety
    errs = []
    for M in (128, 256, 512):
        m = build_manifold(sphere(3), RadialGrid(M=M, gamma=2.0))
        lam = 3.0 / m.scale**2
        fld = np.cos(m.nodes / m.scale)
        res = laplacian(m, fld) + lam * fld
        errs.append(math.sqrt(float(np.sum(m.mu_weights * res**2))) / lam)
    assert errs[0] / errs[1] > 3.5
    assert errs[1] / errs[2] > 3.5


def test_euclidean_laplacian_of_x_squared():
    # flat cone: Lap(x^2) = 2n = 6, scale-free under the homothety
    m = build_manifold(cone(1.0), RadialGrid(M=256))
    got = laplacian(m, m.nodes**2)
    # truncation behaves like h^2/x^2 near the tip, and the zero-flux wall
    # node sees the closure (x^2 has nonzero flux there); test the interior
    interior = (m.nodes > 0.2 * m.x_max) & (m.nodes < 0.97 * m.x_max)
    assert np.allclose(got[interior], 6.0, rtol=1e-4)


def test_conformal_laplacian_of_constant(sphere64):
    res = conformal_laplacian(sphere64, np.ones(sphere64.node_count))
    assert np.allclose(res, sphere64.S0, rtol=1e-10)
    res3 = conformal_laplacian(sphere64, 3.0 * np.ones(sphere64.node_count))
    assert np.allclose(res3, 3.0 * sphere64.S0, rtol=1e-10)


def test_conformal_laplacian_flat_cone():
    # kappa = 8 in dimension 3 and S0 = 0, so L0(x^2) = -8 * 6 = -48
    m = build_manifold(cone(1.0), RadialGrid(M=256))
    got = conformal_laplacian(m, m.nodes**2)
    interior = (m.nodes > 0.2 * m.x_max) & (m.nodes < 0.97 * m.x_max)
    assert np.allclose(got[interior], -48.0, rtol=1e-4)
    assert kappa(3) == pytest.approx(8.0)


def test_integration_by_parts_exact(sphere256):
    rng = np.random.default_rng(7)
    x = sphere256.nodes / sphere256.scale
    for _ in range(5):
        a, b = rng.integers(1, 6, size=2)
        f = np.sin(a * x) + 0.2 * np.cos(b * x)
        g = np.cos(b * x) - 0.1 * np.sin(a * x)
        lhs = integrate(laplacian(sphere256, f) * g, sphere256.mu_weights)
        rhs = -dirichlet_form(sphere256, f, g)
        assert abs(lhs - rhs) <= 1e-10 * max(abs(rhs), 1.0)


def test_laplacian_symmetry(sphere256):
    x = sphere256.nodes / sphere256.scale
    f = np.sin(2 * x) + 0.3 * x
    g = np.cos(3 * x)
    mu = sphere256.mu_weights
    lhs = integrate(laplacian(sphere256, f) * g, mu)
    rhs = integrate(f * laplacian(sphere256, g), mu)
    assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), 1.0)


def test_misaligned_field_rejected(sphere64):
    with pytest.raises(FieldAlignmentError):
        laplacian(sphere64, np.ones(sphere64.node_count + 1))
    bad = np.ones(sphere64.node_count)
    bad[3] = np.nan
    with pytest.raises(FieldAlignmentError, match="node 3"):
        laplacian(sphere64, bad)


def test_lp_norm_basics(sphere64):
    ones = np.ones(sphere64.node_count)
    mu = sphere64.mu_weights
    for p in (1.0, 2.0, 3.5, 7.0):
        assert lp_norm(ones, p, mu) == pytest.approx(1.0, abs=1e-12)
    f = np.linspace(-2.0, 3.0, sphere64.node_count)
    assert lp_norm(f, math.inf, mu) == pytest.approx(np.abs(f).max())
    with pytest.raises(ValueError):
        lp_norm(ones, 0.5, mu)


def test_l2_norm_of_cosine_closed_form(sphere256):
    # int cos^2 d(mu) = (1/(2 pi^2)) int_0^pi cos^2 x (4 pi sin^2 x) dx = 1/4
    f = np.cos(sphere256.nodes / sphere256.scale)
    got = lp_norm(f, 2.0, sphere256.mu_weights)
    assert got == pytest.approx(0.5, rel=1e-5)


def test_h1_norm_constant(sphere64):
    ones = np.ones(sphere64.node_count)
    assert h1_norm(sphere64, ones) == pytest.approx(1.0, rel=1e-12)


def test_gradient_linear_field(sphere64):
    f = 2.5 * sphere64.nodes + 1.0
    g = gradient(sphere64, f)
    assert np.allclose(g, 2.5, rtol=1e-9)


def test_dirichlet_form_positive(sphere64):
    f = np.sin(sphere64.nodes / sphere64.scale)
    assert dirichlet_form(sphere64, f) > 0.0
