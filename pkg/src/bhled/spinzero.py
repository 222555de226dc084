"""Per-mode spin-zero wave evolution in regular horizon-penetrating coordinates.

The operator is the scalar wave operator of the radial metric plus the
angular eigenvalue term,

    B0 u = |h|^(-1/2) d_a(|h|^(1/2) h^{ab} d_b u) - l(l+1) r^-2 u
         = A u_tt + B u_tr + C u_t + spatial(u),

    A = h^tt,  B = 2 h^tr,  C = |h|^(-1/2) (|h|^(1/2) h^tr)',
    spatial(u) = |h|^(-1/2) (|h|^(1/2) h^rr u')' - l(l+1) r^-2 u .

The first-order-in-time reduction (u, v = u_t) is advanced with classical
RK4; the mixed u_tr term is treated explicitly.  In Kerr-Schild type
slicings both characteristics point inward for r < r_M, so the inner edge
needs one-sided stencils only; the outer boundary is either a causal buffer
(support never reaches it) or an approximate outgoing condition.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BufferBreach,
    CFLViolation,
    ContinuityViolation,
    EvolutionAborted,
    GridTooSmall,
)
from .fd import deriv
from .geometry import GeometryProfile
from .harmonics import ModeIndex

_SUPPORT_TOL = 1e-13
_BUFFER_CELLS = 8


# ---------------------------------------------------------------------------
# Sources
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianPulse:
    """Separable pulse  a * exp(-(t-t0)^2/wt^2) * exp(-(r-r0)^2/wr^2).

    A non-positive t_width means no time envelope (stationary profile).
    """

    amplitude: float = 1.0
    r_center: float = 10.0
    r_width: float = 1.0
    t_center: float = 0.0
    t_width: float = -1.0

    def _tprof(self, t):
        if self.t_width <= 0:
            return 1.0
        return math.exp(-((t - self.t_center) / self.t_width) ** 2)

    def _dtprof(self, t):
        if self.t_width <= 0:
            return 0.0
        return self._tprof(t) * (-2.0 * (t - self.t_center) / self.t_width**2)

    def __call__(self, t, r):
        return self.amplitude * self._tprof(t) * np.exp(-((r - self.r_center) / self.r_width) ** 2)

    def dt(self, t, r):
        return self.amplitude * self._dtprof(t) * np.exp(-((r - self.r_center) / self.r_width) ** 2)

    def dr(self, t, r):
        return self(t, r) * (-2.0 * (np.asarray(r, dtype=float) - self.r_center) / self.r_width**2)


@dataclass(frozen=True)
class PolynomialBump:
    """Compact C^3 bump  a * (1 - ((r-r0)/w)^2)^4 * gaussian(t)."""

    amplitude: float = 1.0
    r_center: float = 10.0
    r_width: float = 1.0
    t_center: float = 0.0
    t_width: float = -1.0

    def _rprof(self, r):
        u = (np.asarray(r, dtype=float) - self.r_center) / self.r_width
        return np.where(np.abs(u) < 1.0, (1.0 - u**2) ** 4, 0.0)

    def __call__(self, t, r):
        g = GaussianPulse(1.0, 0.0, 1.0, self.t_center, self.t_width)
        return self.amplitude * g._tprof(t) * self._rprof(r)

    def dt(self, t, r):
        g = GaussianPulse(1.0, 0.0, 1.0, self.t_center, self.t_width)
        return self.amplitude * g._dtprof(t) * self._rprof(r)

    def dr(self, t, r):
        g = GaussianPulse(1.0, 0.0, 1.0, self.t_center, self.t_width)
        u = (np.asarray(r, dtype=float) - self.r_center) / self.r_width
        dprof = np.where(np.abs(u) < 1.0, -8.0 * u * (1.0 - u**2) ** 3 / self.r_width, 0.0)
        return self.amplitude * g._tprof(t) * dprof


class Channel:
    """Sum of pulses forming one source channel; evaluates on (t, r-array)."""

    def __init__(self, pulses=()):
        self.pulses = list(pulses)

    def __call__(self, t, r):
        if not self.pulses:
            return np.zeros_like(np.asarray(r, dtype=float))
        out = self.pulses[0](t, r)
        for p in self.pulses[1:]:
            out = out + p(t, r)
        return out

    def dt(self, t, r):
        if not self.pulses:
            return np.zeros_like(np.asarray(r, dtype=float))
        out = self.pulses[0].dt(t, r)
        for p in self.pulses[1:]:
            out = out + p.dt(t, r)
        return out

    def dr(self, t, r):
        if not self.pulses:
            return np.zeros_like(np.asarray(r, dtype=float))
        out = self.pulses[0].dr(t, r)
        for p in self.pulses[1:]:
            out = out + p.dr(t, r)
        return out

    def __bool__(self):
        return bool(self.pulses)


ZERO_CHANNEL = Channel()


@dataclass
class ModeSource:
    """Forcing data for one mode: B0 phi = div(G) + H, with K = star_h dbar G.

    Channels are callables (t, r) -> array with a .dt method; the divergence
    of G is formed with the same radial stencils the evolver uses.
    """

    mode: ModeIndex
    G_t: Channel = field(default_factory=Channel)
    G_r: Channel = field(default_factory=Channel)
    H: Channel = field(default_factory=Channel)
    K: Channel = field(default_factory=Channel)

    def is_zero(self):
        return not (self.G_t or self.G_r or self.H)

    def forcing(self, profile: GeometryProfile, t, order=4):
        """div(G) + H on the profile grid at time t."""
        r = profile.grid.r
        if self.is_zero():
            return np.zeros_like(r)
        tb = profile.tables
        gt = self.G_t(t, r)
        gr = self.G_r(t, r)
        g_up_t = tb["h00_up"] * gt + tb["h0r_up"] * gr
        g_up_r = tb["h0r_up"] * gt + tb["hrr_up"] * gr
        # d_t G^t: channels are analytic in t, the metric is stationary
        dt_g_up_t = tb["h00_up"] * self.G_t.dt(t, r) + tb["h0r_up"] * self.G_r.dt(t, r)
        div = dt_g_up_t + deriv(tb["sqrt_h"] * g_up_r, profile.grid.dr, order) / tb["sqrt_h"]
        return div + self.H(t, r)

    def curl_residual(self, profile, times, order=4):
        """Max residual of star_h dbar G = K over sample times (diagnostic)."""
        r = profile.grid.r
        tb = profile.tables
        worst = 0.0
        for t in np.atleast_1d(times):
            dt_gr = self.G_r.dt(t, r)
            dr_gt = deriv(self.G_t(t, r), profile.grid.dr, order)
            curl = -(dt_gr - dr_gt) / tb["sqrt_h"]
            worst = max(worst, float(np.max(np.abs(curl - self.K(t, r)))))
        return worst


# ---------------------------------------------------------------------------
# States and trajectories
# ---------------------------------------------------------------------------

@dataclass
class ModeState:
    """Field and time derivative of one mode (leading batch axes allowed)."""

    mode: ModeIndex
    t: float
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.u.shape != self.v.shape:
            raise ValueError("u and v must share a shape")

    def support(self, r):
        """Radial support interval (indices) above the relative floor."""
        mag = np.abs(self.u) + np.abs(self.v)
        while mag.ndim > 1:
            mag = mag.max(axis=0)
        scale = float(mag.max())
        if scale == 0.0:
            return None
        idx = np.where(mag > _SUPPORT_TOL * scale)[0]
        return int(idx[0]), int(idx[-1])

    def assert_finite(self):
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v))):
            raise FloatingPointError("non-finite field values")


@dataclass
class Trajectory:
    """Snapshots of one evolution at the storage cadence."""

    profile: GeometryProfile = field(repr=False)
    mode: ModeIndex
    dt: float
    order: int
    times: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)      # (n_snap, ..., n_r)
    v: np.ndarray = field(repr=False)
    source: ModeSource = None
    aborted: bool = False
    abort_reason: str = None

    def state(self, i) -> ModeState:
        return ModeState(self.mode, float(self.times[i]), self.u[i], self.v[i])

    def energies(self, window=None):
        from .norms import energy_spin0

        lam_l = self.mode.l
        return np.array([
            energy_spin0(self.u[i], self.v[i], lam_l, self.profile.grid.r, window=window)
            for i in range(len(self.times))
        ])


# ---------------------------------------------------------------------------
# Spatial operator
# ---------------------------------------------------------------------------

def box0_apply(profile: GeometryProfile, u, l, order=4):
    """Spatial part of B0 plus the time-term coefficient arrays.

    Returns (spatial, A, B, C) with  B0 u = A u_tt + B u_tr + C u_t + spatial.
    """
    r = profile.grid.r
    if r.size < 9:
        raise GridTooSmall("spin-zero operator needs at least 9 radial points")
    tb = profile.tables
    dr = profile.grid.dr
    flux = tb["sqrt_h"] * tb["hrr_up"] * deriv(u, dr, order)
    spatial = deriv(flux, dr, order) / tb["sqrt_h"] - l * (l + 1.0) * u / r**2
    return spatial, tb["h00_up"], 2.0 * tb["h0r_up"], tb["c1"]


def box0_apply_spacetime(profile, u, times, l, order=4):
    """Discrete B0 of a space-time sample u(t_i, r_j) (diagnostic use)."""
    dtau = times[1] - times[0]
    dr = profile.grid.dr
    spatial, A, B, C = box0_apply(profile, u, l, order)
    ut = deriv(u, dtau, order, axis=0)
    utt = deriv(ut, dtau, order, axis=0)
    utr = deriv(ut, dr, order, axis=1)
    return A * utt + B * utr + C * ut + spatial


# ---------------------------------------------------------------------------
# Evolution
# ---------------------------------------------------------------------------

def max_stable_dt(profile, cfl=0.4):
    return cfl * profile.grid.dr / profile.tables["vmax"]


def evolve(profile, initial: ModeState, source: ModeSource = None, dt=None, T=10.0,
           bc="causal-buffer", order=4, cfl=0.4, n_snapshots=81, observers=(),
           store=True, lam=None):
    """Method-of-lines RK4 evolution of  B0 phi = div(G) + H.

    ``lam`` overrides l(l+1) (array allowed, broadcast over batch rows, which
    is how independent modes share one sweep).  Observers are called as
    obs(t, U, V) at the snapshot cadence; with store=False snapshots are not
    retained (streaming reduction).
    """
    if bc not in ("causal-buffer", "sommerfeld"):
        raise ValueError(f"unknown boundary policy {bc!r}")
    grid = profile.grid
    r = grid.r
    if r.size < 9:
        raise GridTooSmall("need at least 9 radial points")
    dt_max = max_stable_dt(profile, cfl)
    if dt is None:
        dt = dt_max
    if dt > dt_max * (1 + 1e-12):
        raise CFLViolation(f"dt = {dt:.4g} exceeds cfl limit {dt_max:.4g}")
    nsteps = max(1, int(math.ceil(T / dt - 1e-12)))
    dt = T / nsteps

    tb = profile.tables
    A = tb["h00_up"]
    B = 2.0 * tb["h0r_up"]
    C = tb["c1"]
    sqrt_h = tb["sqrt_h"]
    a_flux = sqrt_h * tb["hrr_up"]
    lam_arr = float(initial.mode.l * (initial.mode.l + 1)) if lam is None else np.asarray(lam, dtype=float)
    if np.ndim(lam_arr) == 1:
        lam_arr = np.asarray(lam_arr)[:, None]
    dr = grid.dr

    if bc == "sommerfeld":
        c_out = tb["c_plus"][-3:]
        r_out = r[-3:]

    def rhs(t, u, v):
        spatial = deriv(a_flux * deriv(u, dr, order), dr, order) / sqrt_h - lam_arr * u / r**2
        s = source.forcing(profile, t, order) if source is not None else 0.0
        dv = (s - B * deriv(v, dr, order) - C * v - spatial) / A
        du = v
        if bc == "sommerfeld":
            du = du.copy()
            dur = deriv(u, dr, order)
            dvr = deriv(v, dr, order)
            du[..., -3:] = -c_out * (dur[..., -3:] + u[..., -3:] / r_out)
            dv = dv.copy()
            dv[..., -3:] = -c_out * (dvr[..., -3:] + v[..., -3:] / r_out)
        return du, dv

    u = np.array(initial.u, dtype=float)
    v = np.array(initial.v, dtype=float)
    snap_every = max(1, nsteps // max(1, n_snapshots - 1))
    snap_times, snaps_u, snaps_v = [], [], []

    # Under the causal buffer the outermost cells hold the trivial incoming
    # state; enforcing it pins the weakly unstable one-sided closure there.
    # The breach monitor watches the cells just inside the clamped zone.
    clamp = 4 if bc == "causal-buffer" else 0

    def take_snapshot(t, u, v):
        snap_times.append(t)
        if store:
            snaps_u.append(u.copy())
            snaps_v.append(v.copy())
        for obs in observers:
            obs(t, u, v)

    def checks(t, u, v):
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            return "nan"
        if bc == "causal-buffer":
            zone = slice(-(_BUFFER_CELLS + clamp), -clamp)
            tail = np.abs(u[..., zone]) + np.abs(v[..., zone])
            scale = max(float(np.max(np.abs(u))), float(np.max(np.abs(v))), 1e-300)
            if float(np.max(tail)) > 1e-8 * scale:
                return "buffer"
        return None

    if clamp:
        u[..., -clamp:] = 0.0
        v[..., -clamp:] = 0.0
    take_snapshot(0.0, u, v)
    t = 0.0
    for step in range(1, nsteps + 1):
        k1u, k1v = rhs(t, u, v)
        k2u, k2v = rhs(t + 0.5 * dt, u + 0.5 * dt * k1u, v + 0.5 * dt * k1v)
        k3u, k3v = rhs(t + 0.5 * dt, u + 0.5 * dt * k2u, v + 0.5 * dt * k2v)
        k4u, k4v = rhs(t + dt, u + dt * k3u, v + dt * k3v)
        u = u + dt / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
        v = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if clamp:
            u[..., -clamp:] = 0.0
            v[..., -clamp:] = 0.0
        t = step * dt
        if step % snap_every == 0 or step == nsteps:
            problem = checks(t, u, v)
            if problem == "nan":
                traj = _finish(profile, initial.mode, dt, order, snap_times, snaps_u,
                               snaps_v, source, store, aborted=True, reason="nan")
                raise EvolutionAborted("non-finite values during evolution", traj)
            if problem == "buffer":
                traj = _finish(profile, initial.mode, dt, order, snap_times, snaps_u,
                               snaps_v, source, store, aborted=True, reason="buffer")
                raise BufferBreach("support reached the outer causal buffer")
            take_snapshot(t, u, v)

    return _finish(profile, initial.mode, dt, order, snap_times, snaps_u, snaps_v,
                   source, store)


def _finish(profile, mode, dt, order, snap_times, snaps_u, snaps_v, source, store,
            aborted=False, reason=None):
    times = np.asarray(snap_times)
    if store:
        u = np.stack(snaps_u)
        v = np.stack(snaps_v)
    else:
        u = v = np.zeros((0,))
    return Trajectory(profile=profile, mode=mode, dt=dt, order=order, times=times,
                      u=u, v=v, source=source, aborted=aborted, abort_reason=reason)


# ---------------------------------------------------------------------------
# Energy-flux accounting (conserved d_t-momentum balance)
# ---------------------------------------------------------------------------

def flux_balance(traj: Trajectory, source_work=True):
    """Balance of the stationary-multiplier energy over the stored snapshots.

    E(t2) - E(t1) + boundary flux + source work = 0 up to discretization;
    returns (dE, flux_integral, work_integral, closure) with closure the
    residual relative to max(|E|).
    """
    prof = traj.profile
    r = prof.grid.r
    dr = prof.grid.dr
    tb = prof.tables
    lam = traj.mode.l * (traj.mode.l + 1.0)
    h00u, h0ru, hrru = tb["h00_up"], tb["h0r_up"], tb["hrr_up"]
    h00, h0r, hrr = tb["h00"], prof.metric.h0r(r), prof.metric.hrr(r)
    sqrt_h = tb["sqrt_h"]

    energies = np.empty(len(traj.times))
    fluxes = np.empty(len(traj.times))
    works = np.empty(len(traj.times))
    for i, t in enumerate(traj.times):
        u, v = traj.u[i], traj.v[i]
        ur = deriv(u, dr, traj.order)
        kk = h00u * v**2 + 2.0 * h0ru * v * ur + hrru * ur**2 + lam * u**2 / r**2
        q_tt = v**2 - 0.5 * h00 * kk
        q_rt = ur * v - 0.5 * h0r * kk
        p_t = -(h00u * q_tt + h0ru * q_rt)
        p_r = -(h0ru * q_tt + hrru * q_rt)
        dens = sqrt_h * p_t
        energies[i] = np.trapezoid(dens, r)
        fluxes[i] = (sqrt_h * p_r)[-1] - (sqrt_h * p_r)[0]
        if source_work and traj.source is not None and not traj.source.is_zero():
            s = traj.source.forcing(prof, t, traj.order)
            works[i] = np.trapezoid(sqrt_h * s * v, r)
        else:
            works[i] = 0.0

    flux_int = np.trapezoid(fluxes, traj.times)
    work_int = np.trapezoid(works, traj.times)
    dE = energies[-1] - energies[0]
    closure = abs(dE + flux_int + work_int) / max(np.max(np.abs(energies)), 1e-300)
    return dE, flux_int, work_int, closure, energies


# ---------------------------------------------------------------------------
# Sources from the Maxwell system
# ---------------------------------------------------------------------------

@dataclass
class MaxwellModeSource:
    """One mode of the Maxwell source pair (I, J).

    (t, r) components are mode coefficients I_t, I_r (likewise J); the
    tangential parts are (e, b) pairs in the normalized vector-harmonic
    basis.  Continuity couples e to the (t, r) part; generators derive it
    analytically, and source_from_maxwell checks the pairing.
    """

    mode: ModeIndex
    I_t: Channel = field(default_factory=Channel)
    I_r: Channel = field(default_factory=Channel)
    I_e: Channel = field(default_factory=Channel)
    I_b: Channel = field(default_factory=Channel)
    J_t: Channel = field(default_factory=Channel)
    J_r: Channel = field(default_factory=Channel)
    J_e: Channel = field(default_factory=Channel)
    J_b: Channel = field(default_factory=Channel)


class _StarChannel:
    """Channel view of -r^2 (star_h w)_a for a one-form channel pair (w_t, w_r)."""

    def __init__(self, profile, w_t, w_r, component):
        self.profile = profile
        self.w_t = w_t
        self.w_r = w_r
        self.component = component

    def _eval(self, wt, wr):
        tb = self.profile.tables
        if self.component == "t":
            star = -tb["sqrt_h"] * (tb["h0r_up"] * wt + tb["hrr_up"] * wr)
        else:
            star = tb["sqrt_h"] * (tb["h00_up"] * wt + tb["h0r_up"] * wr)
        return -self.profile.grid.r**2 * star

    def __call__(self, t, r):
        return self._eval(self.w_t(t, r), self.w_r(t, r))

    def dt(self, t, r):
        return self._eval(self.w_t.dt(t, r), self.w_r.dt(t, r))

    def __bool__(self):
        return bool(self.w_t) or bool(self.w_r)


class _ScaledChannel:
    def __init__(self, channel, factor):
        self.channel = channel
        self.factor = factor

    def __call__(self, t, r):
        return self.factor * self.channel(t, r)

    def dt(self, t, r):
        return self.factor * self.channel.dt(t, r)

    def __bool__(self):
        return bool(self.channel)


class CurlChannel:
    """star_h dbar of a (t, r) one-form channel pair, analytic derivatives."""

    def __init__(self, profile, w_t, w_r):
        self.profile = profile
        self.w_t = w_t
        self.w_r = w_r

    def __call__(self, t, r):
        sqrt_h = self.profile.tables["sqrt_h"]
        return -(self.w_r.dt(t, r) - self.w_t.dr(t, r)) / sqrt_h

    def __bool__(self):
        return bool(self.w_t) or bool(self.w_r)


class InvStarChannel:
    """Channel view of  -r^-2 (star_h w)_a : recovers I from G = -r^2 star_h I."""

    def __init__(self, profile, w_t, w_r, component):
        self.profile = profile
        self.w_t = w_t
        self.w_r = w_r
        self.component = component

    def _eval(self, wt, wr):
        tb = self.profile.tables
        if self.component == "t":
            star = -tb["sqrt_h"] * (tb["h0r_up"] * wt + tb["hrr_up"] * wr)
        else:
            star = tb["sqrt_h"] * (tb["h00_up"] * wt + tb["h0r_up"] * wr)
        return -star / self.profile.grid.r**2

    def __call__(self, t, r):
        return self._eval(self.w_t(t, r), self.w_r(t, r))

    def dt(self, t, r):
        return self._eval(self.w_t.dt(t, r), self.w_r.dt(t, r))

    def __bool__(self):
        return bool(self.w_t) or bool(self.w_r)


def source_from_maxwell(sources, profile, check_times=(0.0,), tol=1e-3):
    """Build the spin-zero forcing pair from per-mode Maxwell sources.

    For each mode:  B0 phi  = div(G) + H with
        G = -r^2 star_h I,   H = sqrt(l(l+1)) b_J,   K = sqrt(l(l+1)) e_I,
    and the dual channel  B0 phi* = div(G*) + H* with
        G* = -r^2 star_h J,  H* = -sqrt(l(l+1)) b_I,  K* = sqrt(l(l+1)) e_J.

    The pairing K = star_h dbar G is the continuity equation; it is checked
    discretely at ``check_times`` and a violation names the offending mode.
    """
    phi_sources, phistar_sources = [], []
    for src in sources:
        lam_sqrt = np.sqrt(src.mode.l * (src.mode.l + 1.0))
        g_t = _StarChannel(profile, src.I_t, src.I_r, "t")
        g_r = _StarChannel(profile, src.I_t, src.I_r, "r")
        phi_src = ModeSource(
            mode=src.mode,
            G_t=g_t, G_r=g_r,
            H=_ScaledChannel(src.J_b, lam_sqrt),
            K=_ScaledChannel(src.I_e, lam_sqrt),
        )
        gs_t = _StarChannel(profile, src.J_t, src.J_r, "t")
        gs_r = _StarChannel(profile, src.J_t, src.J_r, "r")
        phistar_src = ModeSource(
            mode=src.mode,
            G_t=gs_t, G_r=gs_r,
            H=_ScaledChannel(src.I_b, -lam_sqrt),
            K=_ScaledChannel(src.J_e, lam_sqrt),
        )
        for cand, which in ((phi_src, "I"), (phistar_src, "J")):
            if cand.is_zero() and not cand.K:
                continue
            resid = cand.curl_residual(profile, check_times)
            scale = _source_scale(cand, profile, check_times)
            if resid > tol * max(scale, 1e-300):
                raise ContinuityViolation(f"{src.mode} ({which})", resid, tol * scale)
        phi_sources.append(phi_src)
        phistar_sources.append(phistar_src)
    return phi_sources, phistar_sources


def _source_scale(src, profile, times):
    r = profile.grid.r
    scale = 0.0
    for t in np.atleast_1d(times):
        for ch in (src.G_t, src.G_r, src.K):
            scale = max(scale, float(np.max(np.abs(ch(t, r)))))
    return scale
