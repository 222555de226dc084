"""Uniform radial grids and the dyadic shell bookkeeping used by the norms."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid on [r0, R_out] with the dyadic shell index map.

    Shells follow the convention R_j = [2^j, 2^{j+1}) for j >= 1, anchored at
    r = 1, with shell 0 absorbing everything below r = 2.  This keeps the
    shell index nonnegative on the whole domain, which is what the sup/sum
    shell norms assume.
    """

    r0: float
    R_out: float
    n: int
    r: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (0 < self.r0 < self.R_out):
            raise ConfigError(f"need 0 < r0 < R_out, got r0={self.r0}, R_out={self.R_out}")
        if self.n < 2:
            raise ConfigError(f"need at least 2 grid points, got n={self.n}")
        object.__setattr__(self, "r", np.linspace(self.r0, self.R_out, self.n))

    @property
    def dr(self):
        return (self.R_out - self.r0) / (self.n - 1)

    def shell_index(self, r):
        """Dyadic shell index j(r), clipped to j >= 0."""
        r = np.asarray(r, dtype=float)
        j = np.floor(np.log2(np.maximum(r, 1e-300))).astype(int)
        return np.maximum(j, 0)

    @property
    def shells(self):
        """Sorted list of shell indices intersecting the grid."""
        return sorted(set(self.shell_index(self.r).tolist()))

    def validate_for_metric(self, r_M, r_T):
        """Check r0 < r_M < r_T < R_out and the resolution floor near the horizon."""
        if not (self.r0 < r_M < r_T < self.R_out):
            raise ConfigError(
                f"grid [{self.r0}, {self.R_out}] must bracket r_M={r_M:.6g} < r_T={r_T:.6g}"
            )
        scale = min(1.0, r_T - r_M)
        if scale / self.dr < 16:
            raise ConfigError(
                f"need >= 16 points per unit of min(1, r_T - r_M); "
                f"dr={self.dr:.4g} too coarse for scale {scale:.4g}"
            )
