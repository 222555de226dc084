"""Weighted shell norms, energies, and the Hardy / trace inequalities.

Local-energy-decay norms pair a supremum over dyadic radial shells (field
side) with a sum over shells (source side):

    LE :  sup_j 2^(-j/2) || chi_j f ||_L2,
    LE*:  sum_j 2^(+j/2) || chi_j f ||_L2 ,

with sharp half-open shells anchored at r = 1 and shell 0 absorbing r < 2.
The field flavor integrates against dV_g = sqrt|h| r^2 dr dt (angular part
already reduced by Parseval); the spin-zero flavor against sqrt|h| dr dt.
Pointwise weights

    w_ln(r) = (1 + |ln|r - r_T||) / (1 + |ln r|)
    w_k(r)  = (1 + |ln|r - r_M||)^(-k/2) |r - r_M|^(-1/2)

are singular at their anchors; cells touching an anchor are integrated with
a product rule (exact quadrature of w^2 against frozen field values), which
keeps the norms stable under refinement even though w_k^2 ~ 1/|r - r_M|.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import SingularWeight, WindowError

_ANCHOR_GUARD = 1e-300


@dataclass(frozen=True)
class WeightSpec:
    """Pointwise radial weight: none, the trapping log weight, or w_k."""

    kind: str = "none"            # none | ln | k
    anchor: float = 0.0           # r_T for ln, r_M for k
    k: float = 2.0                # exponent for kind="k"
    inverse: bool = False         # evaluate 1/w instead of w

    def __post_init__(self):
        if self.kind not in ("none", "ln", "k"):
            raise ValueError(f"unknown weight kind {self.kind!r}")

    @staticmethod
    def none():
        return WeightSpec("none")

    @staticmethod
    def trapping(r_T, inverse=False):
        return WeightSpec("ln", anchor=float(r_T), inverse=inverse)

    @staticmethod
    def horizon(r_M, k=2.0, inverse=False):
        return WeightSpec("k", anchor=float(r_M), k=float(k), inverse=inverse)

    def __call__(self, r):
        return weight_eval(self, r)


def weight_eval(spec: WeightSpec, r):
    """Exact closed-form weight; raises SingularWeight exactly at the anchor."""
    r = np.asarray(r, dtype=float)
    if spec.kind == "none":
        out = np.ones_like(r)
    else:
        x = np.abs(r - spec.anchor)
        if np.any(x == 0.0) or np.any(r <= 0.0):
            raise SingularWeight(f"weight {spec.kind} evaluated at its anchor / r <= 0")
        if spec.kind == "ln":
            out = (1.0 + np.abs(np.log(x))) / (1.0 + np.abs(np.log(r)))
        else:
            out = (1.0 + np.abs(np.log(x))) ** (-0.5 * spec.k) / np.sqrt(x)
    if spec.inverse:
        out = 1.0 / out
    return out if out.shape else float(out)


@dataclass(frozen=True)
class NormValue:
    value: float
    flavor: str
    window: tuple = None          # ((t0, t1), (r0, r1))
    weight: WeightSpec = field(default_factory=WeightSpec.none)
    shells: dict = None           # per-shell contributions, for reports

    def __float__(self):
        return float(self.value)

    def to_dict(self):
        return {
            "value": self.value,
            "flavor": self.flavor,
            "window": self.window,
            "weight": {"kind": self.weight.kind, "anchor": self.weight.anchor,
                       "k": self.weight.k, "inverse": self.weight.inverse},
        }


# ---------------------------------------------------------------------------
# Quadrature measures
# ---------------------------------------------------------------------------

def _trapezoid_weights(x):
    w = np.zeros_like(x)
    if x.size == 1:
        return np.ones(1)
    w[1:-1] = 0.5 * (x[2:] - x[:-2])
    w[0] = 0.5 * (x[1] - x[0])
    w[-1] = 0.5 * (x[-1] - x[-2])
    return w


def _wk_primitive(x, k):
    """integral_0^x s^-1 (1 + |ln s|)^-k ds, closed form, k > 1."""
    x = np.asarray(x, dtype=float)
    below = (1.0 - np.log(np.minimum(np.maximum(x, _ANCHOR_GUARD), 1.0))) ** (1.0 - k) / (k - 1.0)
    above = (2.0 - (1.0 + np.log(np.maximum(x, 1.0))) ** (1.0 - k)) / (k - 1.0)
    return np.where(x <= 1.0, below, above)


def _wln_primitive(x):
    """integral_0^x (1 + |ln s|)^2 ds, closed form."""
    x = np.asarray(x, dtype=float)
    xs = np.maximum(x, _ANCHOR_GUARD)
    lo = np.minimum(xs, 1.0)
    g_minus = lo * ((1.0 - np.log(lo)) ** 2 + 2.0 * (1.0 - np.log(lo)) + 2.0)
    hi = np.maximum(xs, 1.0)
    g_plus = 4.0 + hi * ((1.0 + np.log(hi)) ** 2 - 2.0 * (1.0 + np.log(hi)) + 2.0)
    return np.where(x <= 1.0, g_minus, g_plus)


def _singular_cell_integrals(r, spec, lo, hi):
    """Exact per-cell integrals of the singular part of w^2, cofactor frozen.

    Cells are [r_i - dr/2, r_i + dr/2] clipped to [lo, hi]; distances to the
    anchor feed the closed-form primitives above.  Works for any cell,
    including the one containing the anchor.
    """
    dr = np.diff(r).mean() if r.size > 1 else 1.0
    a = np.maximum(r - 0.5 * dr, lo)
    b = np.minimum(r + 0.5 * dr, hi)
    a = np.minimum(a, b)
    xa = a - spec.anchor
    xb = b - spec.anchor
    prim = (lambda x: _wk_primitive(x, spec.k)) if spec.kind == "k" else _wln_primitive
    # integral over |distance| with sign handling; cells straddling the anchor
    # add both one-sided pieces
    left = np.where(xa < 0, prim(np.abs(xa)), 0.0) - np.where(xb < 0, prim(np.abs(xb)), 0.0)
    right = np.where(xb > 0, prim(np.abs(xb)), 0.0) - np.where(xa > 0, prim(np.abs(xa)), 0.0)
    cell = left + right
    if spec.kind == "ln":
        cofactor = (1.0 + np.abs(np.log(np.maximum(r, _ANCHOR_GUARD)))) ** -2.0
        cell = cell * cofactor
    return np.where(b > a, cell, 0.0)


def radial_measures(r, spec: WeightSpec, lo=None, hi=None):
    """Per-node measures mu_i of  integral w(r)^2 dr  over [lo, hi].

    Plain trapezoid for regular weights; singular weights use exact per-cell
    integrals of the singular factor (with the smooth cofactor frozen at the
    node), so the measures converge at second order despite w_k^2 ~ 1/|x|.
    For inverse weights 1/w is bounded and trapezoid suffices, with the
    anchor node itself evaluated half a cell off.
    """
    r = np.asarray(r, dtype=float)
    lo = r[0] if lo is None else max(lo, r[0])
    hi = r[-1] if hi is None else min(hi, r[-1])
    if lo > hi:
        raise WindowError(f"radial window [{lo}, {hi}] misses samples [{r[0]}, {r[-1]}]")
    base = _trapezoid_weights(r)
    inside = (r >= lo - 1e-12) & (r <= hi + 1e-12)
    base = np.where(inside, base, 0.0)
    dr = np.diff(r).mean() if r.size > 1 else 1.0

    if spec.kind == "none":
        return base

    x = np.abs(r - spec.anchor)
    if spec.inverse:
        w = np.empty_like(r)
        safe = x > 0.5 * dr
        w[safe] = weight_eval(WeightSpec(spec.kind, spec.anchor, spec.k, inverse=True), r[safe])
        if np.any(~safe):
            shifted = np.where(r[~safe] >= spec.anchor, spec.anchor + 0.5 * dr,
                               spec.anchor - 0.5 * dr)
            w[~safe] = weight_eval(WeightSpec(spec.kind, spec.anchor, spec.k, inverse=True),
                                   shifted)
        return base * w**2

    if spec.kind == "k" and spec.k <= 1.0:
        raise ValueError("w_k weight needs k > 1 (integrability at the anchor)")
    return np.where(inside, _singular_cell_integrals(r, spec, lo, hi), 0.0)


# ---------------------------------------------------------------------------
# Shell norms
# ---------------------------------------------------------------------------

def _as_component_stack(samples):
    if isinstance(samples, (list, tuple)):
        return [np.asarray(s, dtype=float) for s in samples]
    return [np.asarray(samples, dtype=float)]


def _sq_sum(components):
    out = components[0] ** 2
    for c in components[1:]:
        out = out + c**2
    return out


def le_norm(samples, profile, times=None, window=None, weight=None, flavor="LE"):
    """Shell-weighted space-time norm of sampled data on the profile grid.

    samples: array (nt, nr) or (nr,), or a sequence of such (component ell^2
    sum inside the integral).  ``times`` must accompany 2-d samples.
    window = ((t0, t1), (r_lo, r_hi)) with None meaning the full range.
    flavor: LE | LE* | LE0 | LE0* | L2-slab | L2-slice.

    Field flavors (LE/LE*) integrate dV_g = sqrt|h| r^2 dr dt; spin-zero
    flavors (LE0/LE0*) integrate sqrt|h| dr dt.
    """
    weight = weight or WeightSpec.none()
    comps = _as_component_stack(samples)
    if comps[0].ndim == 1:
        comps = [c[None, :] for c in comps]
        times = np.zeros(1) if times is None else np.asarray(times, dtype=float)
    else:
        if times is None:
            raise WindowError("time-resolved samples need a times array")
        times = np.asarray(times, dtype=float)

    r = profile.grid.r
    sq = _sq_sum(comps)
    if sq.shape != (times.size, r.size):
        raise WindowError(f"samples shape {sq.shape} != (nt, nr) = ({times.size}, {r.size})")

    (t0, t1), (rlo, rhi) = _normalize_window(window, times, r)
    wt = _trapezoid_weights(times)
    tmask = (times >= t0 - 1e-12) & (times <= t1 + 1e-12)
    wt = np.where(tmask, wt, 0.0)
    if times.size == 1:
        wt = np.ones(1)

    vol = profile.tables["sqrt_h"].copy()
    if flavor in ("LE", "LE*"):
        vol = vol * r**2
    mu = radial_measures(r, weight, rlo, rhi) * vol

    integrand = np.einsum("t,tr,r->r", wt, sq, mu)
    j_idx = profile.grid.shell_index(r)
    shells = {}
    for j in np.unique(j_idx):
        v = float(np.sum(integrand[j_idx == j]))
        if v > 0:
            shells[int(j)] = np.sqrt(v)

    star = flavor.endswith("*")
    if flavor in ("L2-slab", "L2-slice"):
        value = float(np.sqrt(sum(v**2 for v in shells.values())))
    elif star:
        value = float(sum(2.0 ** (0.5 * j) * v for j, v in shells.items()))
    else:
        value = float(max((2.0 ** (-0.5 * j) * v for j, v in shells.items()), default=0.0))
    return NormValue(value=value, flavor=flavor, window=((t0, t1), (rlo, rhi)),
                     weight=weight, shells=shells)


def _normalize_window(window, times, r):
    if window is None:
        return (times[0], times[-1]), (r[0], r[-1])
    (t0, t1), (rlo, rhi) = window
    t0 = times[0] if t0 is None else t0
    t1 = times[-1] if t1 is None else t1
    rlo = r[0] if rlo is None else rlo
    rhi = r[-1] if rhi is None else rhi
    if t0 > times[-1] + 1e-12 or t1 < times[0] - 1e-12:
        raise WindowError(f"time window [{t0}, {t1}] outside samples [{times[0]}, {times[-1]}]")
    if rlo > r[-1] or rhi < r[0]:
        raise WindowError(f"radial window [{rlo}, {rhi}] outside grid [{r[0]}, {r[-1]}]")
    return (t0, t1), (rlo, rhi)


def rw_le_norm(samples, rstar, s_times=None, window=None, weight_fn=None, flavor="LE_RW"):
    """Shell norm in tortoise coordinates: shells are dyadic in |r_*|,
    measure dr_* ds, shell 0 covering |r_*| < 2.

    weight_fn: optional pointwise weight of r_* applied inside the integral.
    """
    comps = _as_component_stack(samples)
    rstar = np.asarray(rstar, dtype=float)
    if comps[0].ndim == 1:
        comps = [c[None, :] for c in comps]
        s_times = np.zeros(1) if s_times is None else np.asarray(s_times, dtype=float)
    else:
        s_times = np.asarray(s_times, dtype=float)
    sq = _sq_sum(comps)

    (t0, t1), (xlo, xhi) = _normalize_window(window, s_times, rstar)
    wt = _trapezoid_weights(s_times)
    wt = np.where((s_times >= t0 - 1e-12) & (s_times <= t1 + 1e-12), wt, 0.0)
    if s_times.size == 1:
        wt = np.ones(1)
    mu = _trapezoid_weights(rstar)
    mu = np.where((rstar >= xlo - 1e-12) & (rstar <= xhi + 1e-12), mu, 0.0)
    if weight_fn is not None:
        mu = mu * np.asarray(weight_fn(rstar), dtype=float) ** 2

    integrand = np.einsum("t,tr,r->r", wt, sq, mu)
    absx = np.abs(rstar)
    j_idx = np.where(absx < 2.0, 0, np.floor(np.log2(np.maximum(absx, 1e-300))).astype(int))
    shells = {}
    for j in np.unique(j_idx):
        v = float(np.sum(integrand[j_idx == j]))
        if v > 0:
            shells[int(j)] = np.sqrt(v)
    if flavor.endswith("*"):
        value = float(sum(2.0 ** (0.5 * j) * v for j, v in shells.items()))
    else:
        value = float(max((2.0 ** (-0.5 * j) * v for j, v in shells.items()), default=0.0))
    return NormValue(value=value, flavor=flavor, window=((t0, t1), (xlo, xhi)),
                     weight=WeightSpec.none(), shells=shells)


# ---------------------------------------------------------------------------
# Energies
# ---------------------------------------------------------------------------

def _stencil_derivative(u, dx, axis=-1):
    """4th-order first derivative with one-sided closures at the edges."""
    u = np.asarray(u, dtype=float)
    u = np.moveaxis(u, axis, -1)
    n = u.shape[-1]
    out = np.empty_like(u)
    if n < 7:
        out = np.gradient(u, dx, axis=-1)
        return np.moveaxis(out, -1, axis)
    out[..., 2:-2] = (u[..., :-4] - 8 * u[..., 1:-3] + 8 * u[..., 3:-1] - u[..., 4:]) / (12 * dx)
    for i in (0, 1):
        out[..., i] = (-25 * u[..., i] + 48 * u[..., i + 1] - 36 * u[..., i + 2]
                       + 16 * u[..., i + 3] - 3 * u[..., i + 4]) / (12 * dx)
    for i in (-2, -1):
        out[..., i] = (25 * u[..., i] - 48 * u[..., i - 1] + 36 * u[..., i - 2]
                       - 16 * u[..., i - 3] + 3 * u[..., i - 4]) / (12 * dx)
    return np.moveaxis(out, -1, axis)


def energy_spin0(u, v, l, r, window=None):
    """Mode energy  integral (u_t^2 + u_r^2 + l(l+1) r^-2 u^2) dr.

    u, v = (field, time derivative) sampled on r; leading batch axes allowed.
    Simpson quadrature (windowing falls back to a sharp mask).
    """
    from scipy.integrate import simpson

    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    r = np.asarray(r, dtype=float)
    dr = r[1] - r[0]
    ur = _stencil_derivative(u, dr)
    dens = v**2 + ur**2 + l * (l + 1.0) * u**2 / r**2
    if window is not None:
        lo, hi = window
        dens = np.where((r >= lo) & (r <= hi), dens, 0.0)
    return simpson(dens, x=r, axis=-1)


# ---------------------------------------------------------------------------
# Hardy / trace inequalities
# ---------------------------------------------------------------------------

def _block_l2(sq_row, x, wq, lo, hi):
    sel = (np.abs(x) >= lo) & (np.abs(x) < hi)
    return float(np.sqrt(np.sum(sq_row[..., sel] * wq[sel])))


def _lp_of_blocks(vals, p):
    vals = np.asarray(vals, dtype=float)
    if np.isinf(p):
        return float(np.max(vals)) if vals.size else 0.0
    return float(np.sum(vals**p) ** (1.0 / p)) if vals.size else 0.0


def hardy_check(psi, x, s, p, j, i=0, kind="index", dpsi=None, times=None):
    """Evaluate both sides of the dyadic Hardy estimates; returns (LHS, RHS, ratio).

    kind="index":
        || <x>^-s psi ||_{l^p L2 (|x| <= 2^j)}
          vs  || chi_0 psi ||_L2 + || <x>^{1-s} d_x psi ||_{l^p L2 (|x| <= 2^j)}
    kind="improved":
        || chi_j <x>^-s psi ||_L2
          vs  2^{(1/2-s)(j-i)} (|| chi_0 psi || + || <x>^{1-s} d_x psi ||_{l^inf L2 (|x|<=2^i)})
            + 2^{(s-1/2)(j-i)} || <x>^{1-s} d_x psi ||_{l^inf L2 (2^i<=|x|<=2^{j+1})}

    chi_k is the sharp indicator of 2^k <= |x| <= 2^{k+1}; the l^p blocks are
    the inner region |x| < 1 plus those shells.  psi may carry a leading time
    axis (then ``times`` integrates it into the L2).
    """
    if s <= 0.5:
        raise ValueError("need s > 1/2")
    if not (1 <= p):
        raise ValueError("need 1 <= p <= inf")
    psi = np.asarray(psi, dtype=float)
    x = np.asarray(x, dtype=float)
    dx = x[1] - x[0]
    if dpsi is None:
        dpsi = _stencil_derivative(psi, dx)
    else:
        dpsi = np.asarray(dpsi, dtype=float)

    wq = _trapezoid_weights(x)
    if psi.ndim == 2:
        wt = _trapezoid_weights(np.asarray(times, dtype=float))
        sq_psi = np.einsum("t,tr->r", wt, psi**2)
        sq_dpsi = np.einsum("t,tr->r", wt, dpsi**2)
    else:
        sq_psi = psi**2
        sq_dpsi = dpsi**2

    ax = np.sqrt(1.0 + x**2)  # <x>
    lhs_w = sq_psi * ax ** (-2.0 * s)
    rhs_w = sq_dpsi * ax ** (2.0 * (1.0 - s))

    edge_flag = bool(np.max(sq_psi[[0, -1]]) > 1e-16 * max(np.max(sq_psi), 1e-300))

    def blocks(sq_row, jmax):
        vals = [_block_l2(sq_row, x, wq, 0.0, 1.0)]
        vals += [_block_l2(sq_row, x, wq, 2.0**k, 2.0 ** (k + 1)) for k in range(0, jmax)]
        return vals

    chi0_psi = _block_l2(sq_psi, x, wq, 1.0, 2.0)

    if kind == "index":
        lhs = _lp_of_blocks(blocks(lhs_w, j), p)
        rhs = chi0_psi + _lp_of_blocks(blocks(rhs_w, j), p)
    elif kind == "improved":
        if not (0 <= i <= j):
            raise ValueError("need 0 <= i <= j")
        lhs = _block_l2(lhs_w, x, wq, 2.0**j, 2.0 ** (j + 1))
        inner = _lp_of_blocks(blocks(rhs_w, i), np.inf)
        outer_blocks = [_block_l2(rhs_w, x, wq, 2.0**k, 2.0 ** (k + 1)) for k in range(i, j + 1)]
        outer = _lp_of_blocks(outer_blocks, np.inf)
        rhs = 2.0 ** ((0.5 - s) * (j - i)) * (chi0_psi + inner) \
            + 2.0 ** ((s - 0.5) * (j - i)) * outer
    else:
        raise ValueError(f"unknown hardy kind {kind!r}")

    ratio = 0.0 if (lhs == 0.0 and rhs == 0.0) else (np.inf if rhs == 0.0 else lhs / rhs)
    return lhs, rhs, ratio, edge_flag


def trace_check(G, times, r, T=None, dG_dt=None):
    """Slice-trace inequality: sup_t ||G(t)||_L2(dr) vs the slab norm
    ||(T^-1/2 G, r^-1/2 G, r^1/2 d_t G)||_L2(dr dt).  Returns (LHS, RHS, ratio).
    """
    G = np.asarray(G, dtype=float)
    times = np.asarray(times, dtype=float)
    r = np.asarray(r, dtype=float)
    T = times[-1] - times[0] if T is None else T
    if dG_dt is None:
        dG_dt = _stencil_derivative(G, times[1] - times[0], axis=0)
    wq = _trapezoid_weights(r)
    wt = _trapezoid_weights(times)
    lhs = float(np.sqrt(np.max(np.sum(G**2 * wq, axis=1))))
    slab = np.einsum("t,tr,r->", wt, G**2 / T + G**2 / r + r * np.asarray(dG_dt) ** 2, wq)
    rhs = float(np.sqrt(slab))
    ratio = 0.0 if (lhs == 0.0 and rhs == 0.0) else (np.inf if rhs == 0.0 else lhs / rhs)
    return lhs, rhs, ratio
