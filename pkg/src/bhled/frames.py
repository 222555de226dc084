"""Boosted null pairs near the horizon and multiplier deformation tensors.

The frame starts from the time-function gradient T = -grad t, which is
orthogonal to d_r, giving the null directions

    l = T + sqrt(-h^00/h_rr) d_r,     lbar = T - sqrt(-h^00/h_rr) d_r .

lbar is rescaled by the solution q(r) of the boost equation

    q' = (2N - sigma_bar / chi_bar) q ,

which enforces nabla_{Lbar} Lbar = 2N chibar Lbar, and l is rescaled so
that <L, Lbar> = -2.  Writing d_t = q_+ L + q_- Lbar, the coefficient q_-
vanishes linearly at the horizon while q_+, sigma, -chibar stay bounded
away from zero: that sign structure is what the red-shift multipliers use.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import InternalError, IdentityCheckFailed
from .geometry import GeometryProfile

_Q_CAP = 1e40


@dataclass(frozen=True)
class NullFrame:
    """Null pair tables over a radial window around the horizon."""

    profile: GeometryProfile = field(repr=False)
    N: float
    r: np.ndarray = field(repr=False)
    L: np.ndarray = field(repr=False)        # shape (2, npts): (L^t, L^r)
    Lbar: np.ndarray = field(repr=False)
    chi: np.ndarray = field(repr=False)       # L r
    chibar: np.ndarray = field(repr=False)    # Lbar r
    sigma: np.ndarray = field(repr=False)     # nabla_L L = sigma L
    q_plus: np.ndarray = field(repr=False)
    q_minus: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)         # boost factor
    shrunk: bool = False
    q_of: object = field(repr=False, default=None, compare=False)  # smooth evaluator

    def inner(self, u, v):
        """<u, v> under h at the frame points, for (2, npts) component arrays."""
        m = self.profile.metric
        return (
            m.h00(self.r) * u[0] * v[0]
            + m.h0r(self.r) * (u[0] * v[1] + u[1] * v[0])
            + m.hrr(self.r) * u[1] * v[1]
        )

    def contract(self, vec, ut, ur):
        """Directional derivative vec(u) from (d_t u, d_r u) sample arrays."""
        return vec[0] * ut + vec[1] * ur

    def achieved_constants(self, shrink=0.5):
        """Two-sided bounds realized by the sign relations near r_M.

        Evaluated on the inner ``shrink`` fraction of the window; the
        comparability constants are only claimed close to the horizon and
        degrade toward the window edges (N-dependently, via the boost).
        """
        x = self.r - self.profile.r_M
        half = shrink * np.max(np.abs(x))
        sel = (np.abs(x) <= half) & (np.abs(x) > 1e-10)
        ratios = {
            "chi_over_x": self.chi[sel] / x[sel],
            "q_minus_over_x": self.q_minus[sel] / x[sel],
            "minus_chibar": -self.chibar[sel],
            "sigma": self.sigma[sel],
            "q_plus": self.q_plus[sel],
        }
        return {k: (float(np.min(v)), float(np.max(v))) for k, v in ratios.items()}


def _raw_pair(metric, r):
    """Unboosted null pair (l, lbar) from T = -grad t, components (t, r)."""
    h00u, h0ru, hrru_dn = metric.inverse(r)[0], metric.inverse(r)[1], metric.hrr(r)
    a = np.sqrt(-h00u / hrru_dn)
    Tt, Tr = -h00u, -h0ru
    l = np.array([Tt, Tr + a])
    lbar = np.array([Tt, Tr - a])
    return l, lbar


def _covariant_accel(metric, r, vec, dvec):
    """(nabla_vec vec)^a for a stationary vector field with r-derivatives dvec."""
    gamma = metric.christoffel(r)
    out = np.empty_like(vec)
    for a in range(2):
        quad = np.zeros_like(r)
        for b in range(2):
            for c in range(2):
                quad = quad + gamma[a, b, c] * vec[b] * vec[c]
        out[a] = vec[1] * dvec[a] + quad
    return out


def _d_dr(f, r, h=None):
    """Fourth-order numerical d/dr of a callable, Richardson-free (small h)."""
    if h is None:
        h = 1e-6 * max(1.0, float(np.max(np.abs(r))))
    return (f(r - 2 * h) - 8 * f(r - h) + 8 * f(r + h) - f(r + 2 * h)) / (12 * h)


def build_null_frame(profile: GeometryProfile, N: float, domain=None, q_anchor=1.0):
    """Construct a negatively N-boosted null pair on a window around r_M.

    ``domain`` defaults to [r_M - delta, r_M + delta] with
    delta = min(0.25 (r_T - r_M), 0.25 (r_M - r0)).  If the boost factor
    overflows inside the window the window is halved and the frame flagged
    as shrunk.  All frame invariants are asserted on the returned tables.
    """
    if N <= 0:
        raise ValueError("boost exponent N must be positive")
    metric = profile.metric
    r_M = profile.r_M
    domain_given = domain is not None
    if domain is None:
        delta = min(0.25 * (profile.r_T - r_M), 0.25 * (r_M - profile.grid.r0))
        domain = (r_M - delta, r_M + delta)

    shrunk = False
    frame = None
    for _ in range(10):
        lo, hi = domain
        r = profile.grid.r
        r = r[(r >= lo) & (r <= hi)]
        if r.size < 8:
            r = np.linspace(lo, hi, 64)

        def lbar_of(rr):
            return _raw_pair(metric, np.asarray(rr, dtype=float))[1]

        if np.any(lbar_of(r)[1] >= 0):
            raise InternalError("lbar r >= 0 inside the frame window")

        def rate(rr):
            rr = np.asarray(rr, dtype=float)
            lb = lbar_of(rr)
            dlb = _d_dr(lbar_of, rr)
            a = _covariant_accel(metric, rr, lb, dlb)
            # sigma_bar = (nabla_lbar lbar)^t / lbar^t, chibar = lbar^r
            return 2.0 * N - (a[0] / lb[0]) / lb[1]

        def ode(rr, y):
            return [rate(np.array([rr]))[0] * y[0]]

        # integrate with a margin so smooth evaluation never leaves the
        # dense-output domain (the sigma extraction differentiates q)
        margin = max(1e-3, 0.02 * (hi - lo))
        lo_m = max(lo - margin, profile.grid.r0)
        hi_m = hi + margin
        sols = {}
        blown = False
        for key, r_b in (("up", hi_m), ("down", lo_m)):
            sol = solve_ivp(ode, (r_M, r_b), [q_anchor], rtol=1e-11, atol=1e-300,
                            method="DOP853", dense_output=True)
            if not sol.success or np.any(np.abs(sol.y) > _Q_CAP):
                blown = True
                break
            sols[key] = sol
        if blown:
            domain = (r_M - 0.5 * (r_M - lo), r_M + 0.5 * (hi - r_M))
            shrunk = True
            continue

        def q_of(rr, sols=sols, lo_m=lo_m, hi_m=hi_m):
            rr = np.asarray(rr, dtype=float)
            up = sols["up"].sol(np.clip(rr, r_M, hi_m))[0]
            dn = sols["down"].sol(np.clip(rr, lo_m, r_M))[0]
            return np.where(rr >= r_M, up, dn)

        q = q_of(r)

        l, lbar = _raw_pair(metric, r)
        h00u = metric.inverse(r)[0]
        lam = -1.0 / (q * h00u)          # <L, Lbar> = lam q <l, lbar> = -2
        L = lam * l
        Lbar = q * lbar

        # q_pm from d_t = q_+ L + q_- Lbar (2x2 solve per point)
        det = L[0] * Lbar[1] - L[1] * Lbar[0]
        q_plus = Lbar[1] / det
        q_minus = -L[1] / det

        # sigma from nabla_L L = sigma L, with dL/dr by high-order differencing
        def L_of(rr, q_of=q_of):
            rr = np.asarray(rr, dtype=float)
            lq = _raw_pair(metric, rr)[0]
            h00u_q = metric.inverse(rr)[0]
            return (-1.0 / (q_of(rr) * h00u_q)) * lq

        dL = _d_dr(L_of, r)
        accL = _covariant_accel(metric, r, L, dL)
        sigma = accL[0] / L[0]

        frame = NullFrame(
            profile=profile, N=float(N), r=r, L=L, Lbar=Lbar,
            chi=L[1], chibar=Lbar[1], sigma=sigma,
            q_plus=q_plus, q_minus=q_minus, q=q, shrunk=shrunk, q_of=q_of,
        )
        # the red-shift sign sigma > 0 only survives on an N-dependent
        # neighborhood; shrink the default window until it does
        if not domain_given and np.min(sigma) <= 1e-3:
            domain = (r_M - 0.5 * (r_M - lo), r_M + 0.5 * (hi - r_M))
            shrunk = True
            frame = None
            continue
        break
    else:
        raise InternalError("no usable frame window (boost overflow or sigma <= 0 persists)")

    if frame is None:
        raise InternalError("no window with positive red-shift coefficient found")
    _assert_frame_invariants(frame)
    return frame


def _assert_frame_invariants(frame: NullFrame, tol=1e-10):
    m = frame.profile.metric
    r = frame.r
    # null defects measured relative to the vector magnitude; the boost factor
    # can be large and squares into the raw roundoff
    scale_L = 1.0 + frame.L[0] ** 2 + frame.L[1] ** 2
    scale_B = 1.0 + frame.Lbar[0] ** 2 + frame.Lbar[1] ** 2
    nLL = frame.inner(frame.L, frame.L) / scale_L
    nBB = frame.inner(frame.Lbar, frame.Lbar) / scale_B
    cross = frame.inner(frame.L, frame.Lbar)
    if np.max(np.abs(nLL)) > tol or np.max(np.abs(nBB)) > tol:
        raise InternalError("null normalization lost")
    if np.max(np.abs(cross + 2.0)) > tol * float(np.max(np.sqrt(scale_L * scale_B))):
        raise InternalError("<L, Lbar> != -2")
    if np.any(frame.L[0] <= 0) or np.any(frame.Lbar[0] <= 0):
        raise InternalError("frame not future directed")
    if np.any(frame.chibar >= 0):
        raise InternalError("chibar >= 0 inside frame window")
    qq = frame.q_plus * frame.q_minus + 0.25 * m.h00(r)
    if np.max(np.abs(qq)) > 1e-12 * max(1.0, float(np.max(np.abs(m.h00(r))))):
        raise InternalError("q_+ q_- != -h_00/4")


# ---------------------------------------------------------------------------
# Deformation tensors
# ---------------------------------------------------------------------------

def deformation_tensors(frame: NullFrame, Xminus, Y0, dXminus=None, dY0=None,
                        fd_check=True, fd_tol=1e-6):
    """Raised deformation-tensor components of X = X^- Lbar and Y = Y^0 d_t.

    Closed forms (with ' = d/dr, chi = L r, chibar = Lbar r):

        pi[X]^{LL}    = 0
        pi[X]^{BB}    = -chi X'^- + sigma X^-
        pi[X]^{LB}    = -chibar X'^- / 2 - N chibar X^-
        pi[Y]^{LL}    = -chibar q_+ Y'^0
        pi[Y]^{BB}    = -chi q_- Y'^0
        pi[Y]^{LB}    = 0

    A finite-difference path recomputes pi_ab = nabla_a X_b + nabla_b X_a
    from the metric and Richardson-extrapolates in the step; the maximum
    discrepancy against the closed forms is reported and, when ``fd_check``,
    enforced at ``fd_tol`` in sup norm.
    """
    r = frame.r
    Xm = np.asarray(Xminus(r), dtype=float)
    Y0v = np.asarray(Y0(r), dtype=float)
    dXm = np.asarray(dXminus(r), dtype=float) if dXminus else _d_dr(
        lambda rr: np.asarray(Xminus(rr), dtype=float), r)
    dY0v = np.asarray(dY0(r), dtype=float) if dY0 else _d_dr(
        lambda rr: np.asarray(Y0(rr), dtype=float), r)

    closed = {
        "X_LL": np.zeros_like(r),
        "X_BB": -frame.chi * dXm + frame.sigma * Xm,
        "X_LB": -0.5 * frame.chibar * dXm - frame.N * frame.chibar * Xm,
        "Y_LL": -frame.chibar * frame.q_plus * dY0v,
        "Y_BB": -frame.chi * frame.q_minus * dY0v,
        "Y_LB": np.zeros_like(r),
    }

    discrepancy = None
    if fd_check:
        fd = {}
        for key, vec_fun in (("X", lambda rr: Xminus(rr) * _lbar_interp(frame, rr)),
                             ("Y", lambda rr: np.stack([np.asarray(Y0(rr), dtype=float),
                                                        np.zeros_like(np.asarray(rr, dtype=float))]))):
            pi_c = _fd_deformation(frame, vec_fun, r, h=1e-4)
            pi_f = _fd_deformation(frame, vec_fun, r, h=5e-5)
            pi = (4.0 * pi_f - pi_c) / 3.0     # Richardson: 2nd-order stencils -> 4th
            fd[key + "_LL"], fd[key + "_BB"], fd[key + "_LB"] = pi
        discrepancy = max(float(np.max(np.abs(fd[k] - closed[k]))) for k in closed)
        if discrepancy > fd_tol:
            raise IdentityCheckFailed(
                f"deformation tensors: closed form vs finite difference differ by "
                f"{discrepancy:.3e} > {fd_tol:.1e}")

    closed["fd_discrepancy"] = discrepancy
    return closed


def _lbar_interp(frame, rr):
    """Lbar components at arbitrary radii, using the smooth boost evaluator."""
    rr = np.asarray(rr, dtype=float)
    lbq = _raw_pair(frame.profile.metric, rr)[1]
    return frame.q_of(rr) * lbq


def _fd_deformation(frame, vec_fun, r, h):
    """pi_ab = nabla_a X_b + nabla_b X_a by centered differencing of the metric,
    then raised to the (L, Lbar) components via pi^{LL} = pi_{BB}/4 etc."""
    m = frame.profile.metric

    def lower(rr, vec):
        h00, h0r, hrr = m.h00(rr), m.h0r(rr), m.hrr(rr)
        return np.stack([h00 * vec[0] + h0r * vec[1], h0r * vec[0] + hrr * vec[1]])

    X_dn = lower(r, vec_fun(r))
    dX_dn = (lower(r + h, vec_fun(r + h)) - lower(r - h, vec_fun(r - h))) / (2 * h)

    # Christoffels by differencing the metric (independent of the analytic path)
    def dmet(comp):
        return (comp(r + h) - comp(r - h)) / (2 * h)

    dh = np.empty((2, 2) + r.shape)
    dh[0, 0] = dmet(m.h00)
    dh[0, 1] = dh[1, 0] = dmet(m.h0r)
    dh[1, 1] = dmet(m.hrr)
    h00u, h0ru, hrru = m.inverse(r)
    hup = np.empty((2, 2) + r.shape)
    hup[0, 0], hup[0, 1], hup[1, 0], hup[1, 1] = h00u, h0ru, h0ru, hrru
    gamma = np.zeros((2, 2, 2) + r.shape)
    for a in range(2):
        for b in range(2):
            for c in range(2):
                acc = 0.0
                for d in range(2):
                    term = 0.0
                    if b == 1:
                        term = term + dh[d, c]
                    if c == 1:
                        term = term + dh[d, b]
                    if d == 1:
                        term = term - dh[b, c]
                    acc = acc + hup[a, d] * term
                gamma[a, b, c] = 0.5 * acc

    nabla = np.zeros((2, 2) + r.shape)   # nabla_a X_b
    for a in range(2):
        for b in range(2):
            partial = dX_dn[b] if a == 1 else 0.0
            chris = sum(gamma[c, a, b] * X_dn[c] for c in range(2))
            nabla[a, b] = partial - chris
    pi_dn = nabla + np.swapaxes(nabla, 0, 1)

    def proj(u, v):
        return sum(pi_dn[a, b] * u[a] * v[b] for a in range(2) for b in range(2))

    pi_LL_dn = proj(frame.L, frame.L)
    pi_BB_dn = proj(frame.Lbar, frame.Lbar)
    pi_LB_dn = proj(frame.L, frame.Lbar)
    # raising against the null pair: pi^{LL} = pi_{BB}/4, pi^{BB} = pi_{LL}/4,
    # pi^{LB} = pi_{LB}/4
    return np.stack([0.25 * pi_BB_dn, 0.25 * pi_LL_dn, 0.25 * pi_LB_dn])
