"""Spherically symmetric stationary 2-metrics h_ab(r) in regular (t, r) slicings.

The built-in Schwarzschild and Reissner-Nordstrom models use a
horizon-penetrating (Kerr-Schild type) slicing,

    h_00 = -(1 - 2M/r + Qc^2/r^2),   h_0r = 2M/r - Qc^2/r^2,
    h_rr = 1 + 2M/r - Qc^2/r^2,

for which det(h) = -1 identically and the coordinates stay regular across
the horizon.  Tabulated metrics are cubic splines through user-supplied
(r, h_00, h_0r, h_rr) columns.
"""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, NonLorentzianMetric

_KINDS = ("schwarzschild", "reissner-nordstrom", "tabulated")


@dataclass(frozen=True)
class MetricModel:
    """Radial part h_ab of a stationary spherically symmetric metric."""

    kind: str
    M: float = 0.0
    Qc: float = 0.0
    _spline_h00: object = None
    _spline_h0r: object = None
    _spline_hrr: object = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown metric kind {self.kind!r}; expected one of {_KINDS}")

    # -- component evaluators; deriv in {0, 1, 2} ------------------------------

    def _f(self, r, deriv=0):
        """Kerr-Schild potential f = 1 - 2M/r + Qc^2/r^2 and radial derivatives."""
        r = np.asarray(r, dtype=float)
        M, Q2 = self.M, self.Qc**2
        if deriv == 0:
            return 1.0 - 2.0 * M / r + Q2 / r**2
        if deriv == 1:
            return 2.0 * M / r**2 - 2.0 * Q2 / r**3
        return -4.0 * M / r**3 + 6.0 * Q2 / r**4

    def h00(self, r, deriv=0):
        if self.kind == "tabulated":
            return self._spline_h00(r, deriv)
        out = -self._f(r, deriv)
        return out

    def h0r(self, r, deriv=0):
        if self.kind == "tabulated":
            return self._spline_h0r(r, deriv)
        r = np.asarray(r, dtype=float)
        if deriv == 0:
            return 1.0 - self._f(r)
        return -self._f(r, deriv)

    def hrr(self, r, deriv=0):
        if self.kind == "tabulated":
            return self._spline_hrr(r, deriv)
        r = np.asarray(r, dtype=float)
        if deriv == 0:
            return 2.0 - self._f(r)
        return -self._f(r, deriv)

    # -- derived pointwise quantities ------------------------------------------

    def det(self, r):
        """det(h) = h_00 h_rr - h_0r^2  (identically -1 for the built-ins)."""
        return self.h00(r) * self.hrr(r) - self.h0r(r) ** 2

    def det_deriv(self, r):
        return (
            self.h00(r, 1) * self.hrr(r)
            + self.h00(r) * self.hrr(r, 1)
            - 2.0 * self.h0r(r) * self.h0r(r, 1)
        )

    def inverse(self, r):
        """Contravariant components (h^00, h^0r, h^rr)."""
        d = self.det(r)
        return self.hrr(r) / d, -self.h0r(r) / d, self.h00(r) / d

    def grr_up(self, r):
        """g^rr = <dr, dr> = h_00 / det(h)."""
        return self.h00(r) / self.det(r)

    def grr_up_deriv(self, r):
        d = self.det(r)
        return self.h00(r, 1) / d - self.h00(r) * self.det_deriv(r) / d**2

    def sqrt_abs_det(self, r):
        return np.sqrt(-self.det(r))

    def check_lorentzian(self, r):
        """Raise NonLorentzianMetric at the first bad sample point."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        det = self.det(r)
        bad = np.where(det >= 0)[0]
        if bad.size:
            raise NonLorentzianMetric(float(r[bad[0]]), f"det(h) >= 0 at r = {r[bad[0]]:.6g}")
        h00_up = self.hrr(r) / det
        bad = np.where(h00_up >= 0)[0]
        if bad.size:
            raise NonLorentzianMetric(
                float(r[bad[0]]), f"h^00 >= 0 at r = {r[bad[0]]:.6g} (t level sets not spacelike)"
            )

    def christoffel(self, r):
        """Christoffel symbols Gamma^a_{bc} of h, shape (2, 2, 2), indices (t, r).

        Stationarity kills all t-derivatives, so only d/dr of the components
        enters.  Returned as an array over the broadcast shape of ``r``.
        """
        r = np.asarray(r, dtype=float)
        dh = np.empty((2, 2) + r.shape)
        dh[0, 0] = self.h00(r, 1)
        dh[0, 1] = dh[1, 0] = self.h0r(r, 1)
        dh[1, 1] = self.hrr(r, 1)
        h00u, h0ru, hrru = self.inverse(r)
        hup = np.empty((2, 2) + r.shape)
        hup[0, 0] = h00u
        hup[0, 1] = hup[1, 0] = h0ru
        hup[1, 1] = hrru
        # partial_b h_{dc} with b index: only b = 1 (r) nonzero
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
        return gamma


def schwarzschild(M=1.0):
    return MetricModel("schwarzschild", M=float(M))


def reissner_nordstrom(M=1.0, Qc=0.5):
    if abs(Qc) >= M:
        raise ConfigError(f"need |Qc| < M for a non-extremal horizon, got M={M}, Qc={Qc}")
    return MetricModel("reissner-nordstrom", M=float(M), Qc=float(Qc))


def tabulated(r, h00, h0r, hrr):
    """Metric from sampled columns, interpolated with cubic splines."""
    r = np.asarray(r, dtype=float)
    if r.ndim != 1 or r.size < 4 or np.any(np.diff(r) <= 0):
        raise ConfigError("tabulated metric needs >= 4 strictly increasing radii")
    model = MetricModel(
        "tabulated",
        _spline_h00=CubicSpline(r, h00),
        _spline_h0r=CubicSpline(r, h0r),
        _spline_hrr=CubicSpline(r, hrr),
    )
    model.check_lorentzian(r)
    return model


def load_tabulated(path):
    """Read a plain-text table with columns r, h_00, h_0r, h_rr."""
    data = np.loadtxt(path)
    if data.ndim != 2 or data.shape[1] != 4:
        raise ConfigError(f"{path}: expected 4 columns (r, h_00, h_0r, h_rr)")
    return tabulated(data[:, 0], data[:, 1], data[:, 2], data[:, 3])


def from_config(block):
    """Build a metric from the run-config block {kind, M, Qc, table_path?}."""
    kind = block.get("kind")
    if kind == "schwarzschild":
        return schwarzschild(block.get("M", 1.0))
    if kind == "reissner-nordstrom":
        return reissner_nordstrom(block.get("M", 1.0), block.get("Qc", 0.0))
    if kind == "tabulated":
        if "table_path" not in block:
            raise ConfigError("tabulated metric requires table_path")
        return load_tabulated(block["table_path"])
    raise ConfigError(f"unknown metric kind {kind!r}")
