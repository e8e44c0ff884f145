"""Pure-numpy implementations of the hot mixture-evaluation kernels.

Semantics must match ``_kernels.pyx`` (same truncation rules, same box
arithmetic); the compiled module is preferred at import time when available.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

IMPLEMENTATION = "python"

_LOG_2PI = math.log(2.0 * math.pi)
# Terms this far below the running maximum are dropped from log-sum-exp
# accumulation in the compiled kernel; the fallback computes the exact log-sum-exp.
_DROP = 45.0


def gm_logpdf_points(points, means, cov_index, chol, half_logdet, logw):
    """Mixture log-density at many points.

    Parameters
    ----------
    points : (M, n) float array
    means : (K, n) float array
    cov_index : (K,) int array mapping components to covariance groups
    chol : (G, n, n) lower Cholesky factors
    half_logdet : (G,) half log-determinants
    logw : (K,) component log-weights (``-inf`` allowed)

    Returns
    -------
    (M,) array of log-densities.
    """
    n_points, dim = points.shape
    n_comp = means.shape[0]
    out = np.empty(n_points)
    norm_const = -0.5 * dim * _LOG_2PI
    # Chunk points so the (chunk, K) term matrix stays modest.
    chunk = max(1, int(4_000_000 // max(n_comp, 1)))
    for start in range(0, n_points, chunk):
        block = points[start : start + chunk]
        terms = np.empty((block.shape[0], n_comp))
        for g in range(chol.shape[0]):
            members = np.nonzero(cov_index == g)[0]
            if members.size == 0:
                continue
            diff = block[:, None, :] - means[members][None, :, :]
            flat = diff.reshape(-1, dim)
            z = solve_triangular(chol[g], flat.T, lower=True, check_finite=False)
            quad = np.einsum("ij,ij->j", z, z).reshape(block.shape[0], members.size)
            terms[:, members] = logw[members] - half_logdet[g] + norm_const - 0.5 * quad
        out[start : start + chunk] = logsumexp(terms, axis=1)
    return out


def accumulate_density_2d(means, cov_index, chol, half_logdet, weights,
                          x0, dx, nx, y0, dy, ny, radius):
    """Accumulate a 2-D mixture's density onto a uniform grid.

    Each component contributes only inside its bounding box of ``radius``
    standard deviations (Frobenius bound of the Cholesky factor) and only at
    nodes with squared Mahalanobis distance below ``radius**2``; the dropped
    tail mass is O(exp(-radius^2 / 2)).

    Returns the (ny, nx) density array (zeros where no component reaches).
    """
    out = np.zeros((ny, nx))
    x_nodes = x0 + dx * np.arange(nx)
    y_nodes = y0 + dy * np.arange(ny)
    q_cap = radius * radius
    for k in range(means.shape[0]):
        w = weights[k]
        if w == 0.0:
            continue
        g = cov_index[k]
        factor = chol[g]
        l00, l10, l11 = factor[0, 0], factor[1, 0], factor[1, 1]
        halfwidth = radius * math.sqrt(l00 * l00 + l10 * l10 + l11 * l11)
        mx, my = means[k]
        ix0 = max(0, math.ceil((mx - halfwidth - x0) / dx))
        ix1 = min(nx - 1, math.floor((mx + halfwidth - x0) / dx))
        iy0 = max(0, math.ceil((my - halfwidth - y0) / dy))
        iy1 = min(ny - 1, math.floor((my + halfwidth - y0) / dy))
        if ix0 > ix1 or iy0 > iy1:
            continue
        z1 = (x_nodes[ix0 : ix1 + 1] - mx) / l00
        z2 = ((y_nodes[iy0 : iy1 + 1, None] - my) - l10 * z1[None, :]) / l11
        quad = z1[None, :] ** 2 + z2**2
        scale = w * math.exp(-half_logdet[g] - _LOG_2PI)
        np.add.at(
            out,
            (slice(iy0, iy1 + 1), slice(ix0, ix1 + 1)),
            np.where(quad <= q_cap, scale * np.exp(-0.5 * quad), 0.0),
        )
    return out
