"""Finite-difference first-derivative stencils on uniform grids.

Centered interior stencils with one-sided closures of the same order at the
edges; the one-sided closure is also the correct upwinding at an outflow
boundary (all characteristics leaving the domain), which is how the inner
excision edge is treated.
"""

import numpy as np

from .errors import GridTooSmall


def deriv(u, dx, order=4, axis=-1):
    """d/dx along ``axis``; order 4 (default) or 2."""
    if order == 2:
        return _deriv2(u, dx, axis)
    if order == 4:
        return _deriv4(u, dx, axis)
    raise ValueError(f"unsupported stencil order {order}")


def _deriv2(u, dx, axis):
    u = np.moveaxis(np.asarray(u, dtype=float), axis, -1)
    n = u.shape[-1]
    if n < 3:
        raise GridTooSmall("need at least 3 points for 2nd-order stencils")
    out = np.empty_like(u)
    out[..., 1:-1] = (u[..., 2:] - u[..., :-2]) / (2 * dx)
    out[..., 0] = (-3 * u[..., 0] + 4 * u[..., 1] - u[..., 2]) / (2 * dx)
    out[..., -1] = (3 * u[..., -1] - 4 * u[..., -2] + u[..., -3]) / (2 * dx)
    return np.moveaxis(out, -1, axis)


def _deriv4(u, dx, axis):
    u = np.moveaxis(np.asarray(u, dtype=float), axis, -1)
    n = u.shape[-1]
    if n < 9:
        raise GridTooSmall("need at least 9 points for 4th-order stencils")
    out = np.empty_like(u)
    out[..., 2:-2] = (u[..., :-4] - 8 * u[..., 1:-3] + 8 * u[..., 3:-1] - u[..., 4:]) / (12 * dx)
    for i in (0, 1):
        out[..., i] = (-25 * u[..., i] + 48 * u[..., i + 1] - 36 * u[..., i + 2]
                       + 16 * u[..., i + 3] - 3 * u[..., i + 4]) / (12 * dx)
    for i in (-2, -1):
        out[..., i] = (25 * u[..., i] - 48 * u[..., i - 1] + 36 * u[..., i - 2]
                       - 16 * u[..., i - 3] + 3 * u[..., i - 4]) / (12 * dx)
    return np.moveaxis(out, -1, axis)
