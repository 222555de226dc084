import numpy as np
import pytest
from numpy.testing import assert_allclose

from bhled.errors import AliasingError, ZeroModeUndefined
from bhled.harmonics import (
    AngularGrid,
    ModeIndex,
    TangentialModeForm,
    hodge_reconstruct,
    hodge_split,
    inv_sqrt_laplacian_factor,
    laplacian_eigenvalue,
)


def test_laplacian_eigenvalue():
    assert laplacian_eigenvalue(0) == 0.0
    assert laplacian_eigenvalue(1) == -2.0
    assert laplacian_eigenvalue(5) == -30.0


def test_inv_sqrt_factor():
    assert_allclose(inv_sqrt_laplacian_factor(1), 1.0 / np.sqrt(2.0))
    assert_allclose(inv_sqrt_laplacian_factor(2), 1.0 / np.sqrt(6.0))
    with pytest.raises(ZeroModeUndefined):
        inv_sqrt_laplacian_factor(0)


def test_poincare_factor_per_mode():
    # ||f|| <= ||grad f|| per mode reduces to 1 <= sqrt(l(l+1)) for l >= 1
    for l in range(1, 33):
        assert 1.0 <= np.sqrt(l * (l + 1.0))


def test_mode_validation():
    with pytest.raises(ValueError):
        ModeIndex(1, 2)
    with pytest.raises(ValueError):
        ModeIndex(-1, 0)


def test_ylm_orthonormal():
    grid = AngularGrid(l_max=6)
    modes = grid.modes()
    rng = np.random.default_rng(7)
    for _ in range(40):
        a, b = rng.integers(0, len(modes), size=2)
        ma, mb = modes[a], modes[b]
        ip = grid.quad(grid.ylm(ma) * grid.ylm(mb))
        assert_allclose(ip, 1.0 if ma == mb else 0.0, atol=1e-12)


def test_y00_constant():
    grid = AngularGrid(l_max=4)
    field = grid.synthesize({ModeIndex(0, 0): 1.0})
    assert_allclose(field, 1.0 / np.sqrt(4.0 * np.pi), atol=1e-14)


def test_analyze_synthesize_roundtrip():
    grid = AngularGrid(l_max=4)
    rng = np.random.default_rng(11)
    coeffs = {m: rng.standard_normal() for m in grid.modes()}
    field = grid.synthesize(coeffs)
    back = grid.analyze(field)
    for m, c in coeffs.items():
        assert_allclose(back[m], c, atol=1e-12)
    # Parseval
    assert_allclose(grid.quad(field**2), sum(c**2 for c in coeffs.values()), atol=1e-12)


def test_synthesize_aliasing_guard():
    grid = AngularGrid(l_max=3)
    with pytest.raises(AliasingError):
        grid.synthesize({ModeIndex(4, 0): 1.0})


def test_gradient_against_finite_differences():
    grid = AngularGrid(l_max=5)
    mode = ModeIndex(4, 2)
    gt, gp = grid.grad_ylm(mode)
    # compare d_theta against a central difference in theta at fixed phi
    eps = 1e-6
    from bhled.harmonics import _norm_const
    from scipy.special import lpmv

    theta = grid.theta[:, None]
    phi = grid.phi[None, :]

    def y(th):
        return (_norm_const(4, 2) * lpmv(2, 4, np.cos(th))
                * np.sqrt(2.0) * np.cos(2 * phi))

    fd = (y(theta + eps) - y(theta - eps)) / (2 * eps)
    assert_allclose(gt, fd, atol=1e-8)


def test_vector_basis_orthonormal():
    grid = AngularGrid(l_max=5)
    wq = grid.w_theta[:, None] * grid.w_phi
    for mode in (ModeIndex(1, 0), ModeIndex(3, -2), ModeIndex(5, 5)):
        E, B = grid.vector_basis(mode)
        assert_allclose(np.sum((E[0] ** 2 + E[1] ** 2) * wq), 1.0, atol=1e-10)
        assert_allclose(np.sum((B[0] ** 2 + B[1] ** 2) * wq), 1.0, atol=1e-10)
        assert_allclose(np.sum((E[0] * B[0] + E[1] * B[1]) * wq), 0.0, atol=1e-10)


def test_divergence_sign_convention_oracle():
    # brute-force surface quadrature fixes the sign: div(e E_lm) = -sqrt(l(l+1)) e Y_lm
    grid = AngularGrid(l_max=4)
    for mode in (ModeIndex(1, 0), ModeIndex(1, 1), ModeIndex(3, -1)):
        wt, wp = grid.synthesize_oneform({mode: (1.0, 0.0)})
        lam = np.sqrt(mode.l * (mode.l + 1.0))
        assert_allclose(grid.divergence_coeff(wt, wp, mode), -lam, atol=1e-10)
        assert_allclose(grid.curl_coeff(wt, wp, mode), 0.0, atol=1e-10)
        # and curl(b B_lm) = -sqrt(l(l+1)) b Y_lm
        wt, wp = grid.synthesize_oneform({mode: (0.0, 1.0)})
        assert_allclose(grid.curl_coeff(wt, wp, mode), -lam, atol=1e-10)
        assert_allclose(grid.divergence_coeff(wt, wp, mode), 0.0, atol=1e-10)


def test_hodge_split_unit_e():
    # (e, b) = (1, 0), l = 1: div potential magnitude 1, curl potential 0
    form = TangentialModeForm(ModeIndex(1, 0), e=np.ones((2, 3)), b=np.zeros((2, 3)))
    div_pot, curl_pot = hodge_split(form)
    assert_allclose(np.abs(div_pot), 1.0)
    assert_allclose(curl_pot, 0.0)


def test_hodge_roundtrip_random():
    rng = np.random.default_rng(3)
    for l in range(1, 9):
        mode = ModeIndex(l, rng.integers(-l, l + 1))
        form = TangentialModeForm(mode, e=rng.standard_normal((2, 5)),
                                  b=rng.standard_normal((2, 5)))
        back = hodge_reconstruct(*hodge_split(form), mode)
        assert_allclose(back.e, form.e, atol=1e-14)
        assert_allclose(back.b, form.b, atol=1e-14)


def test_hodge_isometry_norms():
    rng = np.random.default_rng(5)
    form = TangentialModeForm(ModeIndex(2, 1), e=rng.standard_normal((2, 4)),
                              b=rng.standard_normal((2, 4)))
    div_pot, curl_pot = hodge_split(form)
    assert_allclose(np.sqrt(div_pot**2 + curl_pot**2), form.sphere_norm(), atol=1e-14)


def test_hodge_zero_mode_rejected():
    form = TangentialModeForm(ModeIndex(0, 0), e=np.zeros((2, 1)), b=np.zeros((2, 1)))
    with pytest.raises(ZeroModeUndefined):
        hodge_split(form)


def test_hodge_split_matches_grid_oracle():
    # split potentials agree with (-Lap)^(-1/2) applied to the quadrature
    # div/curl coefficients of the synthesized form
    grid = AngularGrid(l_max=4)
    rng = np.random.default_rng(9)
    for l in (1, 2, 4):
        mode = ModeIndex(l, 1)
        e, b = rng.standard_normal(2)
        wt, wp = grid.synthesize_oneform({mode: (e, b)})
        form = TangentialModeForm(mode, e=np.full((2, 1), e), b=np.full((2, 1), b))
        div_pot, curl_pot = hodge_split(form)
        fac = inv_sqrt_laplacian_factor(l)
        assert_allclose(div_pot[0, 0], fac * grid.divergence_coeff(wt, wp, mode), atol=1e-10)
        assert_allclose(curl_pot[0, 0], fac * grid.curl_coeff(wt, wp, mode), atol=1e-10)


def test_oneform_analysis_roundtrip():
    grid = AngularGrid(l_max=4)
    rng = np.random.default_rng(13)
    coeffs = {ModeIndex(l, m): tuple(rng.standard_normal(2))
              for l in range(1, 5) for m in range(-l, l + 1)}
    wt, wp = grid.synthesize_oneform(coeffs)
    back = grid.analyze_oneform(wt, wp)
    for mode, (e, b) in coeffs.items():
        assert_allclose(back[mode], (e, b), atol=1e-10)
