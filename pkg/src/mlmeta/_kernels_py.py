"""numpy implementation of the block weight kernels (fallback when the
compiled extension is unavailable)."""

import numpy as np

from .errors import SingularBlockError


def _prepare(v, starts, s2xi, s2zeta):
    diag = s2zeta + v
    if np.any(diag <= 0.0):
        raise SingularBlockError("covariance block has a non-positive diagonal entry")
    d = 1.0 / diag
    heads = starts[:-1]
    s = np.add.reduceat(d, heads)
    c = s2xi / (1.0 + s2xi * s)
    logdet = float(np.sum(np.log(diag)) + np.sum(np.log1p(s2xi * s)))
    return d, heads, c, logdet


def weighted_sums(v, starts, s2xi, s2zeta, X, y):
    d, heads, c, logdet = _prepare(v, starts, s2xi, s2zeta)
    dX = X * d[:, None]
    u = np.add.reduceat(dX, heads, axis=0)
    dy = d * y
    uy = np.add.reduceat(dy, heads)
    xtwx = X.T @ dX - (u * c[:, None]).T @ u
    xtwy = dX.T @ y - u.T @ (c * uy)
    ytwy = float(dy @ y - np.sum(c * uy * uy))
    return xtwx, xtwy, ytwy, logdet


def block_solve(v, starts, s2xi, s2zeta, R):
    d, heads, c, logdet = _prepare(v, starts, s2xi, s2zeta)
    dR = R * d[:, None]
    U = np.add.reduceat(dR, heads, axis=0) * c[:, None]
    sizes = np.diff(starts)
    out = dR - d[:, None] * np.repeat(U, sizes, axis=0)
    return out, logdet
