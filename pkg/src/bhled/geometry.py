"""Derived geometry: horizon, trapped set, axiom checks, tortoise map, profiles.

Everything downstream works off a GeometryProfile: radial tables of the
metric inverse, the effective potential V = r^-2 Omega^2 whose unique
nondegenerate maximum marks the trapped set, and the tortoise / time-offset
pair (r_*, b) that puts the radial metric in conformal form

    h = Omega^2 (-ds^2 + dr_*^2),   s = t + b(r),   r_*(r_T) = 0.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    AxiomViolation,
    ConfigError,
    DegenerateTrapping,
    DomainTooSmall,
    InternalError,
    NoHorizon,
)
from .grids import RadialGrid
from .metrics import MetricModel

_BISECT_STEPS = 60


def _scan_range(metric, r_lo, r_hi):
    if r_lo is None or r_hi is None:
        if metric.kind == "tabulated":
            knots = metric._spline_h00.x
            r_lo = r_lo if r_lo is not None else knots[0]
            r_hi = r_hi if r_hi is not None else knots[-1]
        else:
            scale = max(metric.M, abs(metric.Qc), 1e-2)
            # for the built-ins r = M always sits between the inner and outer
            # horizons, so scanning from there sees a single sign change
            r_lo = r_lo if r_lo is not None else max(0.05 * scale, metric.M)
            r_hi = r_hi if r_hi is not None else 100.0 * scale
    return float(r_lo), float(r_hi)


def _bisect(fun, a, b):
    fa = fun(a)
    for _ in range(_BISECT_STEPS):
        c = 0.5 * (a + b)
        fc = fun(c)
        if fa * fc <= 0:
            b = c
        else:
            a, fa = c, fc
    return 0.5 * (a + b)


def find_horizon(metric: MetricModel, r_lo=None, r_hi=None, nscan=4096):
    """Locate r_M, the unique zero of g^rr = <dr, dr>.

    Bracket scan at ``nscan`` resolution, then 60 bisection steps and a
    Newton polish.  Raises NoHorizon if g^rr never changes sign and
    AxiomViolation (listing all roots) if it changes sign more than once.
    """
    r_lo, r_hi = _scan_range(metric, r_lo, r_hi)
    r = np.linspace(r_lo, r_hi, nscan)
    g = metric.grr_up(r)
    sign_flips = np.where(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]
    if sign_flips.size == 0:
        raise NoHorizon(f"g^rr has no sign change on [{r_lo:.6g}, {r_hi:.6g}]")
    roots = []
    for i in sign_flips:
        root = _bisect(lambda x: metric.grr_up(x), r[i], r[i + 1])
        # Newton polish; derivative is analytic (or spline-exact)
        for _ in range(4):
            d = metric.grr_up_deriv(root)
            if d == 0:
                break
            root = root - metric.grr_up(root) / d
        roots.append(float(root))
    if len(roots) > 1:
        raise AxiomViolation(f"g^rr changes sign more than once; roots at {roots}")
    r_M = roots[0]
    gmax = float(np.max(np.abs(g)))
    if abs(metric.grr_up(r_M)) > 1e-12 * gmax:
        raise InternalError(f"horizon polish failed: |g^rr(r_M)| = {metric.grr_up(r_M):.3e}")
    return r_M


def effective_potential(metric, r, deriv=0):
    """V = r^-2 Omega^2 = -r^-2 <dt_t, dt_t> and its first two r-derivatives."""
    r = np.asarray(r, dtype=float)
    h00 = metric.h00(r)
    if deriv == 0:
        return -h00 / r**2
    dh00 = metric.h00(r, 1)
    if deriv == 1:
        return -(dh00 * r - 2.0 * h00) / r**3
    d2h00 = metric.h00(r, 2)
    return -d2h00 / r**2 + 4.0 * dh00 / r**3 - 6.0 * h00 / r**4


def find_trapped_set(metric: MetricModel, r_M=None, r_hi=None, nscan=4096):
    """Locate (r_T, V''(r_T)): the unique critical point of V in r > r_M.

    Raises AxiomViolation if V' has no root (or several) and
    DegenerateTrapping if the critical point is not a strict maximum.
    """
    if r_M is None:
        r_M = find_horizon(metric, r_hi=r_hi)
    _, r_hi = _scan_range(metric, r_M, r_hi)
    r = np.linspace(r_M * (1.0 + 1e-6) + 1e-12, r_hi, nscan)
    vp = effective_potential(metric, r, 1)
    sign_flips = np.where(np.sign(vp[:-1]) * np.sign(vp[1:]) < 0)[0]
    if sign_flips.size == 0:
        raise AxiomViolation(f"V' has no root in ({r_M:.6g}, {r_hi:.6g}]")
    if sign_flips.size > 1:
        roots = [float(_bisect(lambda x: effective_potential(metric, x, 1), r[i], r[i + 1]))
                 for i in sign_flips]
        raise AxiomViolation(f"V' has multiple roots: {roots}")
    i = sign_flips[0]
    r_T = _bisect(lambda x: effective_potential(metric, x, 1), r[i], r[i + 1])
    for _ in range(4):
        d2 = effective_potential(metric, r_T, 2)
        if d2 == 0:
            break
        r_T = r_T - effective_potential(metric, r_T, 1) / d2
    vpp = float(effective_potential(metric, r_T, 2))
    if vpp >= 0:
        raise DegenerateTrapping(f"V''(r_T) = {vpp:.3e} >= 0 at r_T = {r_T:.6g}")
    return float(r_T), vpp


# ---------------------------------------------------------------------------
# Axiom report
# ---------------------------------------------------------------------------

@dataclass
class AxiomReport:
    passed: bool
    axioms: dict
    r_M: float = None
    r_T: float = None

    def to_json(self, **kw):
        return json.dumps(
            {"passed": self.passed, "r_M": self.r_M, "r_T": self.r_T, "axioms": self.axioms},
            **kw,
        )


def _loglog_slope(r, y):
    mask = y > 0
    if mask.sum() < 4:
        return None
    return float(np.polyfit(np.log(r[mask]), np.log(y[mask]), 1)[0])


def check_axioms(metric: MetricModel, grid: RadialGrid, slope_tol=0.2):
    """Verify the black-hole axioms on the given grid and report per-axiom results.

    (i)   stationary asymptotic flatness: log-log fit of |h_ab - eta_ab| ~ r^-1
          and |h_ab'| ~ r^-2 over the outer third of the grid,
    (ii)  unique sign change of g^rr with d_r g^rr > 0 everywhere,
    (iii) unique critical point of V in r > r_M with V'' < 0 there.

    Rejects (raises) when the domain cannot support the checks at all:
    non-Lorentzian sample point, or R_out < 2 r_T.
    """
    r = grid.r
    metric.check_lorentzian(r)

    axioms = {}

    # (i) asymptotic flatness on the outer third
    tail = r[r >= r[0] + 2.0 * (r[-1] - r[0]) / 3.0]
    devs = {
        "h00+1": np.abs(metric.h00(tail) + 1.0),
        "h0r": np.abs(metric.h0r(tail)),
        "hrr-1": np.abs(metric.hrr(tail) - 1.0),
    }
    ddevs = {
        "dh00": np.abs(metric.h00(tail, 1)),
        "dh0r": np.abs(metric.h0r(tail, 1)),
        "dhrr": np.abs(metric.hrr(tail, 1)),
    }
    slopes = {}
    flat_ok = True
    for name, dev, expected in [(k, v, -1.0) for k, v in devs.items()] + [
        (k, v, -2.0) for k, v in ddevs.items()
    ]:
        if np.max(dev) < 1e-12:
            slopes[name] = "flat"
            continue
        s = _loglog_slope(tail, dev)
        slopes[name] = s
        # decaying at least as fast as required
        if s is None or s > expected + slope_tol:
            flat_ok = False
    axioms["i_asymptotic_flatness"] = {"passed": flat_ok, "slopes": slopes}

    # (ii) horizon: unique sign change of g^rr, d_r g^rr never vanishing
    grr = metric.grr_up(r)
    dgrr = metric.grr_up_deriv(r)
    n_flips = int(np.sum(np.sign(grr[:-1]) * np.sign(grr[1:]) < 0))
    redshift_ok = bool(np.all(dgrr > 0))
    r_M = None
    if n_flips == 1:
        r_M = find_horizon(metric, r[0], r[-1])
    axioms["ii_horizon"] = {
        "passed": n_flips == 1 and redshift_ok,
        "sign_changes": n_flips,
        "dgrr_positive": redshift_ok,
        "r_M": r_M,
    }

    # (iii) trapping: unique nondegenerate maximum of V beyond the horizon
    r_T = vpp = None
    trap_ok = False
    if r_M is not None:
        try:
            r_T, vpp = find_trapped_set(metric, r_M, r[-1])
            trap_ok = True
        except (AxiomViolation, DegenerateTrapping):
            trap_ok = False
    axioms["iii_trapping"] = {"passed": trap_ok, "r_T": r_T, "Vpp": vpp}

    if r_T is not None and grid.R_out < 2.0 * r_T:
        raise DomainTooSmall(f"R_out = {grid.R_out} < 2 r_T = {2 * r_T:.6g}")

    passed = all(a["passed"] for a in axioms.values())
    return AxiomReport(passed=passed, axioms=axioms, r_M=r_M, r_T=r_T)


# ---------------------------------------------------------------------------
# Tortoise map and geometry profile
# ---------------------------------------------------------------------------

@dataclass
class RWMap:
    """Tables of r_*(r), b(r) and dr_*/dr on the exterior nodes."""

    r: np.ndarray
    rstar: np.ndarray
    b: np.ndarray
    drstar_dr: np.ndarray
    err_estimate: float
    truncated: bool
    diagnostics: dict


def _integrate_from_anchor(fun, r_T, r_eval, rtol):
    """Integrate y' = fun(r) from y(r_T) = 0, evaluated at r_eval (sorted)."""
    out = np.empty_like(r_eval)
    up = r_eval >= r_T
    for mask, direction in ((up, +1), (~up, -1)):
        pts = r_eval[mask]
        if pts.size == 0:
            continue
        pts_o = pts if direction > 0 else pts[::-1]
        sol = solve_ivp(
            lambda r, y: [fun(r)],
            (r_T, pts_o[-1]),
            [0.0],
            t_eval=pts_o,
            rtol=rtol,
            atol=1e-13,
            method="DOP853",
            dense_output=False,
        )
        if not sol.success:
            raise InternalError(f"tortoise integration failed: {sol.message}")
        out[mask] = sol.y[0] if direction > 0 else sol.y[0][::-1]
    return out


def regge_wheeler_map(metric, r_M, r_T, r_eval, rtol=1e-11):
    """Integrate the tortoise coordinate and the time offset b on exterior nodes.

    dr_*/dr = |h|^(-1/2) (g^rr)^(-1) anchored at r_*(r_T) = 0, and
    b' = h_0r / h_00 anchored at b(r_T) = 0 (so that s = t + b diagonalizes h).
    Nodes at or below r_M are dropped (truncated flag set).  The error
    estimate is calibrated by re-running at a 100x tighter tolerance.
    """
    r_eval = np.asarray(r_eval, dtype=float)
    keep = r_eval > r_M * (1.0 + 1e-12)
    truncated = bool(np.any(~keep))
    r_ext = r_eval[keep]
    if r_ext.size == 0:
        raise ConfigError("no exterior nodes to map")

    def dstar(r):
        return 1.0 / (metric.sqrt_abs_det(r) * metric.grr_up(r))

    def db(r):
        return metric.h0r(r) / metric.h00(r)

    rstar = _integrate_from_anchor(dstar, r_T, r_ext, rtol)
    rstar_fine = _integrate_from_anchor(dstar, r_T, r_ext, rtol * 1e-2)
    err = 10.0 * float(np.max(np.abs(rstar - rstar_fine))) + 1e-15
    b = _integrate_from_anchor(db, r_T, r_ext, rtol)

    if np.any(np.diff(rstar) <= 0):
        raise InternalError("tortoise coordinate is not strictly increasing")

    drstar = dstar(r_ext)
    # s-offset regularity: stilde = b' + |h|^(-1/2) (g^rr)^(-1) stays bounded
    stilde = db(r_ext) + drstar
    ds = np.gradient(stilde, r_ext)
    d2s = np.gradient(ds, r_ext)
    tail = r_ext >= r_ext[0] + 2.0 * (r_ext[-1] - r_ext[0]) / 3.0
    diagnostics = {
        "stilde_sup": float(np.max(np.abs(stilde))),
        "stilde_d1_sup": float(np.max(np.abs(ds))),
        "stilde_d2_sup": float(np.max(np.abs(d2s))),
        "drstar_minus_1_times_r_sup": float(np.max(np.abs((drstar[tail] - 1.0) * r_ext[tail]))),
    }
    return RWMap(
        r=r_ext,
        rstar=rstar,
        b=b,
        drstar_dr=drstar,
        err_estimate=err,
        truncated=truncated,
        diagnostics=diagnostics,
    )


@dataclass(frozen=True)
class GeometryProfile:
    """Immutable radial tables shared by the evolution and norm layers."""

    metric: MetricModel
    grid: RadialGrid
    r_M: float
    r_T: float
    Vpp_T: float
    tables: dict = field(repr=False)
    rw: RWMap = field(repr=False)
    i_ext: int

    @property
    def r(self):
        return self.grid.r

    @property
    def V_at_T(self):
        return float(effective_potential(self.metric, self.r_T))

    def rstar_of_r(self, r):
        return np.interp(r, self.rw.r, self.rw.rstar)

    def r_of_rstar(self, rstar):
        return np.interp(rstar, self.rw.rstar, self.rw.r)

    def b_of_r(self, r):
        return np.interp(r, self.rw.r, self.rw.b)


def build_profile(metric: MetricModel, grid: RadialGrid, rw_rtol=1e-11):
    """Assemble the GeometryProfile for a metric on a grid."""
    metric.check_lorentzian(grid.r)
    r_M = find_horizon(metric, grid.r0, grid.R_out)
    r_T, vpp = find_trapped_set(metric, r_M, grid.R_out)
    grid.validate_for_metric(r_M, r_T)

    r = grid.r
    det = metric.det(r)
    sqrt_h = np.sqrt(-det)
    h00u, h0ru, hrru = metric.inverse(r)
    grr = metric.grr_up(r)
    dgrr = metric.grr_up_deriv(r)
    h00 = metric.h00(r)
    omega2 = -h00

    # first-order-reduction coefficients of the spin-zero operator (t-part):
    # c1 = |h|^(-1/2) d_r(|h|^(1/2) h^tr), evaluated analytically
    dsqrt_h = -metric.det_deriv(r) / (2.0 * sqrt_h)
    dh0ru = -(metric.h0r(r, 1) / det) + metric.h0r(r) * metric.det_deriv(r) / det**2
    c1 = (dsqrt_h * h0ru + sqrt_h * dh0ru) / sqrt_h

    # characteristic speeds: roots of h^tt c^2 - 2 h^tr c + h^rr = 0;
    # with h^tt < 0 the "+" branch is the ingoing root
    disc = np.sqrt(h0ru**2 - h00u * hrru)
    c_minus = (h0ru + disc) / h00u
    c_plus = (h0ru - disc) / h00u

    tables = {
        "det": det,
        "sqrt_h": sqrt_h,
        "h00": h00,
        "omega2": omega2,
        "V": effective_potential(metric, r),
        "grr_up": grr,
        "dgrr_up": dgrr,
        "h00_up": h00u,
        "h0r_up": h0ru,
        "hrr_up": hrru,
        "c1": c1,
        "c_plus": c_plus,
        "c_minus": c_minus,
        "vmax": float(np.max(np.abs(np.concatenate([c_plus, c_minus])))),
    }

    i_ext = int(np.searchsorted(r, r_M * (1.0 + 1e-12), side="right"))
    rw = regge_wheeler_map(metric, r_M, r_T, r[i_ext:], rtol=rw_rtol)

    return GeometryProfile(
        metric=metric,
        grid=grid,
        r_M=r_M,
        r_T=r_T,
        Vpp_T=vpp,
        tables=tables,
        rw=rw,
        i_ext=i_ext,
    )
