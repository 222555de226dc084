"""Per-mode algebra on the unit sphere: real harmonics, vector bases, Hodge split.

Tangential one-forms are stored per mode in the orthonormal basis

    E_lm = (l(l+1))^(-1/2) grad Y_lm,      B_lm = star E_lm,

so a form omega = e E_lm + b B_lm has L2(S2) norm sqrt(e^2 + b^2).  With the
star convention (star w)_A = -eps_A^B w_B one gets

    div(e E_lm)  = -sqrt(l(l+1)) e Y_lm,   curl(e E_lm) = 0,
    div(b B_lm)  = 0,                      curl(b B_lm) = -sqrt(l(l+1)) b Y_lm,

which fixes all signs below; the angular-grid quadrature oracle in the test
suite validates this convention against brute-force surface integrals.

The mode-wise div/curl isomorphism is then trivial: splitting a form into
((-Lap)^(-1/2) div, (-Lap)^(-1/2) curl) potentials is the sign flip
(e, b) -> (-e, -b), an isometry, and reconstruction is its own inverse.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import lpmv

from .errors import AliasingError, ZeroModeUndefined


@dataclass(frozen=True, order=True)
class ModeIndex:
    l: int
    m: int

    def __post_init__(self):
        if self.l < 0 or abs(self.m) > self.l:
            raise ValueError(f"bad mode (l={self.l}, m={self.m})")

    @property
    def eigenvalue(self):
        return float(self.l * (self.l + 1))


def laplacian_eigenvalue(l: int) -> float:
    """Eigenvalue of the scalar Laplacian on S2 for degree l: -l(l+1)."""
    if l < 0:
        raise ValueError("l must be >= 0")
    return -float(l * (l + 1))


def inv_sqrt_laplacian_factor(l: int) -> float:
    """(l(l+1))^(-1/2); undefined on the spherical mean (charge sector)."""
    if l == 0:
        raise ZeroModeUndefined("(-Lap)^(-1/2) undefined on l = 0; route to charges")
    if l < 0:
        raise ValueError("l must be >= 1")
    return 1.0 / np.sqrt(l * (l + 1.0))


@dataclass
class TangentialModeForm:
    """Tangential one-form coefficients per (t, r)-index a in {t, r}.

    ``e`` and ``b`` have leading axis a = (t, r); trailing axes are whatever
    the caller samples over (radius, or time x radius).
    """

    mode: ModeIndex
    e: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.e = np.asarray(self.e, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.e.shape != self.b.shape or self.e.shape[0] != 2:
            raise ValueError("e and b must share a shape with leading axis (t, r)")

    def sphere_norm(self):
        """Pointwise L2(S2) norm of the represented one-form, per a-index."""
        return np.sqrt(self.e**2 + self.b**2)

    def __add__(self, other):
        assert self.mode == other.mode
        return TangentialModeForm(self.mode, self.e + other.e, self.b + other.b)

    def scaled(self, c):
        return TangentialModeForm(self.mode, c * self.e, c * self.b)


def hodge_split(omega: TangentialModeForm):
    """Return ((-Lap)^(-1/2) div, (-Lap)^(-1/2) curl) potentials per a-index.

    In the normalized basis these are (-e, -b); the map is an isometry.
    """
    if omega.mode.l == 0:
        raise ZeroModeUndefined("hodge split undefined on l = 0")
    return -omega.e, -omega.b


def hodge_reconstruct(div_pot, curl_pot, mode: ModeIndex) -> TangentialModeForm:
    """Inverse of hodge_split: exact per mode."""
    if mode.l == 0:
        raise ZeroModeUndefined("hodge reconstruct undefined on l = 0")
    return TangentialModeForm(mode, -np.asarray(div_pot, dtype=float),
                              -np.asarray(curl_pot, dtype=float))


# ---------------------------------------------------------------------------
# Angular grid synthesis / analysis
# ---------------------------------------------------------------------------

def _norm_const(l, m):
    from math import lgamma
    return np.sqrt((2 * l + 1) / (4 * np.pi) * np.exp(lgamma(l - m + 1) - lgamma(l + m + 1)))


class AngularGrid:
    """Gauss-Legendre (theta) x uniform (phi) grid, quadrature-exact to 2 l_max.

    Scalar synthesis uses real orthonormal spherical harmonics; vector
    synthesis produces the orthonormal-frame components of E_lm / B_lm.
    """

    def __init__(self, l_max=8):
        self.l_max = int(l_max)
        n = 2 * (self.l_max + 1)
        x, wx = np.polynomial.legendre.leggauss(n)
        self.x = x                       # cos(theta), poles excluded
        self.theta = np.arccos(x)
        self.sin_theta = np.sqrt(1.0 - x**2)
        self.w_theta = wx
        self.n_phi = 2 * (self.l_max + 1)
        self.phi = 2.0 * np.pi * np.arange(self.n_phi) / self.n_phi
        self.w_phi = 2.0 * np.pi / self.n_phi
        self._cache = {}

    @property
    def shape(self):
        return (self.x.size, self.n_phi)

    def quad(self, field):
        """Surface integral of a sampled scalar field."""
        return float(np.sum(field * self.w_theta[:, None]) * self.w_phi)

    def modes(self):
        return [ModeIndex(l, m) for l in range(self.l_max + 1) for m in range(-l, l + 1)]

    def _plm(self, l, m):
        key = ("P", l, m)
        if key not in self._cache:
            self._cache[key] = lpmv(m, l, self.x)
        return self._cache[key]

    def _dplm_dtheta(self, l, m):
        # dP_l^m/dtheta = -[(l+m) P_{l-1}^m - l x P_l^m] / sin(theta)
        key = ("dP", l, m)
        if key not in self._cache:
            low = self._plm(l - 1, m) if l - 1 >= m else np.zeros_like(self.x)
            self._cache[key] = -((l + m) * low - l * self.x * self._plm(l, m)) / self.sin_theta
        return self._cache[key]

    def ylm(self, mode: ModeIndex):
        """Real orthonormal Y_lm sampled on the grid, shape (ntheta, nphi)."""
        l, m = mode.l, mode.m
        key = ("Y", l, m)
        if key not in self._cache:
            am = abs(m)
            rad = _norm_const(l, am) * self._plm(l, am)
            if m == 0:
                ang = np.ones_like(self.phi)
            elif m > 0:
                ang = np.sqrt(2.0) * np.cos(m * self.phi)
            else:
                ang = np.sqrt(2.0) * np.sin(am * self.phi)
            self._cache[key] = rad[:, None] * ang[None, :]
        return self._cache[key]

    def grad_ylm(self, mode: ModeIndex):
        """Orthonormal-frame components (d_theta Y, d_phi Y / sin theta)."""
        l, m = mode.l, mode.m
        key = ("dY", l, m)
        if key not in self._cache:
            am = abs(m)
            nc = _norm_const(l, am)
            rad = nc * self._plm(l, am)
            drad = nc * self._dplm_dtheta(l, am)
            if m == 0:
                ang, dang = np.ones_like(self.phi), np.zeros_like(self.phi)
            elif m > 0:
                ang = np.sqrt(2.0) * np.cos(m * self.phi)
                dang = -np.sqrt(2.0) * m * np.sin(m * self.phi)
            else:
                ang = np.sqrt(2.0) * np.sin(am * self.phi)
                dang = np.sqrt(2.0) * am * np.cos(am * self.phi)
            comp_t = drad[:, None] * ang[None, :]
            comp_p = (rad / self.sin_theta)[:, None] * dang[None, :]
            self._cache[key] = (comp_t, comp_p)
        return self._cache[key]

    def vector_basis(self, mode: ModeIndex):
        """(E_lm, B_lm) component pairs in the orthonormal frame."""
        if mode.l == 0:
            raise ZeroModeUndefined("no vector harmonics for l = 0")
        gt, gp = self.grad_ylm(mode)
        fac = inv_sqrt_laplacian_factor(mode.l)
        E = (fac * gt, fac * gp)
        B = (-E[1], E[0])  # star rotation
        return E, B

    # -- scalar transforms --------------------------------------------------

    def synthesize(self, coeffs):
        """Pointwise field from {ModeIndex: value} (or {(l, m): value})."""
        out = np.zeros(self.shape)
        for mode, c in coeffs.items():
            if not isinstance(mode, ModeIndex):
                mode = ModeIndex(*mode)
            if mode.l > self.l_max:
                raise AliasingError(f"l={mode.l} exceeds grid l_max={self.l_max}")
            out = out + c * self.ylm(mode)
        return out

    def analyze(self, field):
        """Mode coefficients of a sampled field (quadrature-exact to l_max)."""
        return {
            mode: float(np.sum(field * self.ylm(mode) * self.w_theta[:, None]) * self.w_phi)
            for mode in self.modes()
        }

    # -- tangential one-form transforms -------------------------------------

    def synthesize_oneform(self, coeffs):
        """Components (w_theta, w_phi) from {ModeIndex: (e, b)} coefficients."""
        wt = np.zeros(self.shape)
        wp = np.zeros(self.shape)
        for mode, (e, b) in coeffs.items():
            if not isinstance(mode, ModeIndex):
                mode = ModeIndex(*mode)
            if mode.l > self.l_max:
                raise AliasingError(f"l={mode.l} exceeds grid l_max={self.l_max}")
            E, B = self.vector_basis(mode)
            wt = wt + e * E[0] + b * B[0]
            wp = wp + e * E[1] + b * B[1]
        return wt, wp

    def analyze_oneform(self, wt, wp):
        """(e, b) coefficients of a sampled tangential one-form."""
        out = {}
        for mode in self.modes():
            if mode.l == 0:
                continue
            E, B = self.vector_basis(mode)
            wq = self.w_theta[:, None] * self.w_phi
            e = float(np.sum((wt * E[0] + wp * E[1]) * wq))
            b = float(np.sum((wt * B[0] + wp * B[1]) * wq))
            out[mode] = (e, b)
        return out

    # -- brute-force differential operators (oracle style) ------------------

    def divergence_coeff(self, wt, wp, mode: ModeIndex):
        """Y_lm coefficient of div(omega) via integration by parts."""
        gt, gp = self.grad_ylm(mode)
        wq = self.w_theta[:, None] * self.w_phi
        return -float(np.sum((wt * gt + wp * gp) * wq))

    def curl_coeff(self, wt, wp, mode: ModeIndex):
        """Y_lm coefficient of curl(omega) via integration by parts."""
        gt, gp = self.grad_ylm(mode)
        # star(dY) has components (-gp, gt)
        wq = self.w_theta[:, None] * self.w_phi
        return -float(np.sum((-wt * gp + wp * gt) * wq))
