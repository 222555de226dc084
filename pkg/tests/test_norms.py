import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad

from bhled import RadialGrid, build_profile, schwarzschild
from bhled.errors import SingularWeight, WindowError
from bhled.norms import (
    WeightSpec,
    energy_spin0,
    hardy_check,
    le_norm,
    radial_measures,
    rw_le_norm,
    trace_check,
    weight_eval,
)


@pytest.fixture(scope="module")
def profile():
    return build_profile(schwarzschild(1.0), RadialGrid(1.0, 60.0, 1500))


# -- weights ------------------------------------------------------------------

def test_weight_ln_closed_form():
    spec = WeightSpec.trapping(3.0)
    # |r - r_T| = 1 at r = 4: (1 + 0)/(1 + ln 4)
    assert_allclose(weight_eval(spec, 4.0), 1.0 / (1.0 + np.log(4.0)), rtol=1e-15)


def test_weight_k_closed_form():
    spec = WeightSpec.horizon(2.0, k=2.0)
    # |r - r_M| = 1 at r = 3: (1 + 0)^{-1} * 1
    assert_allclose(weight_eval(spec, 3.0), 1.0, rtol=1e-15)
    assert_allclose(weight_eval(spec, 2.5), (1.0 + np.log(2.0)) ** -1.0 / np.sqrt(0.5),
                    rtol=1e-15)


def test_weight_ln_diverges_at_anchor():
    spec = WeightSpec.trapping(3.0)
    vals = [weight_eval(spec, 3.0 + 10.0**-e) for e in range(1, 7)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_weight_singular_at_anchor():
    with pytest.raises(SingularWeight):
        weight_eval(WeightSpec.trapping(3.0), 3.0)


# -- shell norms --------------------------------------------------------------

def test_le_zero_samples(profile):
    r = profile.grid.r
    nv = le_norm(np.zeros_like(r), profile)
    assert nv.value == 0.0


def test_le_single_shell_indicator(profile):
    # unit indicator of shell j=2 = [4, 8): LE = LE*/2^j = 2^{-j/2} sqrt(measure)
    r = profile.grid.r
    f = ((r >= 4.0) & (r < 8.0)).astype(float)
    times = np.linspace(0.0, 1.0, 11)
    samples = np.tile(f, (11, 1))
    le = le_norm(samples, profile, times=times, flavor="LE")
    les = le_norm(samples, profile, times=times, flavor="LE*")
    measure, _ = quad(lambda x: x**2, 4.0, 8.0)   # dV_g = r^2 dr dt over unit time
    assert_allclose(le.value, 2.0**-1.0 * np.sqrt(measure), rtol=2e-2)
    assert_allclose(les.value, 2.0**1.0 * np.sqrt(measure), rtol=2e-2)


def test_le_two_shell_max_vs_sum(profile):
    r = profile.grid.r
    f = ((r >= 4.0) & (r < 8.0)).astype(float) + ((r >= 16.0) & (r < 32.0)).astype(float)
    le = le_norm(f, profile, flavor="LE")
    les = le_norm(f, profile, flavor="LE*")
    per_shell_le = {j: 2.0 ** (-0.5 * j) * v for j, v in le.shells.items()}
    per_shell_les = {j: 2.0 ** (0.5 * j) * v for j, v in les.shells.items()}
    assert_allclose(le.value, max(per_shell_le.values()), rtol=1e-14)
    assert_allclose(les.value, sum(per_shell_les.values()), rtol=1e-14)


def test_le_leq_le_star(profile):
    rng = np.random.default_rng(2)
    r = profile.grid.r
    times = np.linspace(0, 2, 9)
    f = rng.standard_normal((9, r.size))
    le = le_norm(f, profile, times=times, flavor="LE")
    les = le_norm(f, profile, times=times, flavor="LE*")
    assert le.value <= les.value


def test_le_homogeneous_and_monotone(profile):
    rng = np.random.default_rng(4)
    r = profile.grid.r
    f = rng.standard_normal(r.size)
    v1 = le_norm(f, profile, flavor="LE").value
    v3 = le_norm(3.0 * f, profile, flavor="LE").value
    assert_allclose(v3, 3.0 * v1, rtol=1e-12)
    g = np.abs(f) + 0.5
    assert le_norm(g, profile, flavor="LE").value >= v1


def test_shell_duality(profile):
    # |integral f g dV| <= LE(f) LE*(g), Cauchy-Schwarz per shell + sup/sum
    rng = np.random.default_rng(6)
    r = profile.grid.r
    times = np.linspace(0, 1, 7)
    for _ in range(5):
        f = rng.standard_normal((7, r.size))
        g = rng.standard_normal((7, r.size))
        ip = _space_time_ip(f, g, times, profile)
        le = le_norm(f, profile, times=times, flavor="LE").value
        les = le_norm(g, profile, times=times, flavor="LE*").value
        assert abs(ip) <= le * les * (1 + 1e-12)


def _space_time_ip(f, g, times, profile):
    r = profile.grid.r
    wt = np.diff(times).mean() * np.ones_like(times)
    wt[0] *= 0.5
    wt[-1] *= 0.5
    wr = np.diff(r).mean() * np.ones_like(r)
    wr[0] *= 0.5
    wr[-1] *= 0.5
    vol = profile.tables["sqrt_h"] * r**2
    return float(np.einsum("t,tr,r->", wt, f * g, wr * vol))


def test_windowing(profile):
    r = profile.grid.r
    f = np.ones_like(r)
    full = le_norm(f, profile, flavor="LE*").value
    half = le_norm(f, profile, window=((None, None), (r[0], 10.0)), flavor="LE*").value
    assert half < full
    with pytest.raises(WindowError):
        le_norm(f, profile, window=((None, None), (100.0, 200.0)))


def test_wk_measure_refinement_stable():
    # integral of w_k^2 near its anchor must converge under grid refinement
    spec = WeightSpec.horizon(2.0, k=2.0)
    vals = []
    for n in (800, 1600, 3200):
        r = np.linspace(1.0, 4.0, n)
        mu = radial_measures(r, spec, 1.5, 3.0)
        vals.append(np.sum(mu))
    assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0])
    assert abs(vals[2] - vals[1]) / vals[2] < 0.02


def test_rw_le_norm_shells():
    rstar = np.linspace(-40.0, 40.0, 4001)
    f = ((np.abs(rstar) >= 4.0) & (np.abs(rstar) < 8.0)).astype(float)
    le = rw_le_norm(f, rstar, flavor="LE_RW")
    les = rw_le_norm(f, rstar, flavor="LE_RW*")
    measure = 2.0 * 4.0   # both sides of the axis
    assert_allclose(le.value, 2.0**-1.0 * np.sqrt(measure), rtol=2e-2)
    assert_allclose(les.value, 2.0**1.0 * np.sqrt(measure), rtol=2e-2)


# -- spin-zero energy ----------------------------------------------------------

def test_energy_spin0_zero():
    r = np.linspace(1.0, 30.0, 500)
    assert energy_spin0(np.zeros_like(r), np.zeros_like(r), 1, r) == 0.0


def test_energy_spin0_quadrature_oracle():
    r = np.linspace(1.0, 30.0, 24001)
    u = np.exp(-((r - 10.0) ** 2))
    v = np.zeros_like(r)
    got = energy_spin0(u, v, 1, r)
    du = lambda x: -2.0 * (x - 10.0) * np.exp(-((x - 10.0) ** 2))
    exact = (quad(lambda x: du(x) ** 2, 1.0, 30.0)[0]
             + quad(lambda x: 2.0 * np.exp(-2.0 * (x - 10.0) ** 2) / x**2, 1.0, 30.0)[0])
    assert_allclose(got, exact, rtol=1e-10)


def test_energy_spin0_quadratic_scaling():
    rng = np.random.default_rng(8)
    r = np.linspace(1.0, 30.0, 800)
    u = np.sin(r) * np.exp(-((r - 12.0) ** 2) / 9.0)
    v = rng.standard_normal(r.size) * 0.0
    assert_allclose(energy_spin0(2.0 * u, 2.0 * v, 3, r),
                    4.0 * energy_spin0(u, v, 3, r), rtol=1e-12)


# -- Hardy / trace -------------------------------------------------------------

def test_hardy_zero():
    x = np.linspace(-64.0, 64.0, 2000)
    lhs, rhs, ratio, _ = hardy_check(np.zeros_like(x), x, s=1.0, p=2, j=6)
    assert (lhs, rhs, ratio) == (0.0, 0.0, 0.0)


def test_hardy_gaussian_stable_under_refinement():
    ratios = []
    for n in (2001, 4001):
        x = np.linspace(-80.0, 80.0, n)
        psi = np.exp(-0.5 * x**2)
        lhs, rhs, ratio, flag = hardy_check(psi, x, s=1.0, p=2, j=6)
        assert not flag
        assert ratio < 1.5  # recorded implementation constant
        ratios.append(ratio)
    assert abs(ratios[1] - ratios[0]) / ratios[0] < 0.02


def test_hardy_inner_bump():
    # bump inside |x| <= 1: the inequality holds with the derivative term
    x = np.linspace(-80.0, 80.0, 4001)
    psi = np.where(np.abs(x) <= 1.0, np.cos(0.5 * np.pi * x) ** 2, 0.0)
    lhs, rhs, ratio, _ = hardy_check(psi, x, s=1.0, p=2, j=6)
    assert 0 < ratio < 1.5


def test_hardy_improved_shape():
    x = np.linspace(-80.0, 80.0, 4001)
    psi = np.exp(-0.5 * (np.abs(x) - 3.0) ** 2)
    for (i, j) in ((0, 4), (2, 5), (3, 6)):
        lhs, rhs, ratio, _ = hardy_check(psi, x, s=1.0, p=2, j=j, i=i, kind="improved")
        assert np.isfinite(ratio)
        assert ratio < 4.0


def test_trace_zero():
    t = np.linspace(0, 10, 50)
    r = np.linspace(1, 20, 200)
    G = np.zeros((50, 200))
    assert trace_check(G, t, r) == (0.0, 0.0, 0.0)


def test_trace_time_constant():
    # time-independent G: LHS = ||f||, RHS >= T^{-1/2} T^{1/2} ||f|| = ||f||
    t = np.linspace(0, 10, 201)
    r = np.linspace(1, 40, 800)
    f = np.exp(-((r - 10.0) ** 2) / 4.0)
    G = np.tile(f, (201, 1))
    lhs, rhs, ratio = trace_check(G, t, r)
    norm_f = np.sqrt(np.trapezoid(f**2, r))
    assert_allclose(lhs, norm_f, rtol=1e-12)
    assert rhs >= lhs * (1 - 1e-12)
    assert ratio <= 1.0 + 1e-12


def test_trace_random_ensemble_bounded():
    rng = np.random.default_rng(10)
    t = np.linspace(0, 20, 101)
    r = np.linspace(1, 40, 400)
    worst = 0.0
    for _ in range(20):
        c_t, w_t = rng.uniform(5, 15), rng.uniform(1, 4)
        c_r, w_r = rng.uniform(5, 30), rng.uniform(1, 4)
        G = np.exp(-((t[:, None] - c_t) ** 2) / w_t**2
                   - ((r[None, :] - c_r) ** 2) / w_r**2)
        _, _, ratio = trace_check(G, t, r)
        worst = max(worst, ratio)
    assert worst < 1.5
