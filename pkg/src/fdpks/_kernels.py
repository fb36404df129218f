"""Compiled inner loops for particle pair interactions.

Everything here operates on flat float64/int64 arrays so numba can compile
it; the cell-list (CSR) layout is built in :mod:`fdpks.merger` with numpy.
Cells are addressed as ``cx * ncy + cy``.

All loops run single-threaded in a fixed order so results are bit-identical
across runs.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

FOUR_OVER_PI = 4.0 / math.pi


@njit(cache=True)
def diffusion_beta_full(x, y, w, area, nu):
    """Weight-exchange rates without any cutoff; O(n^2) over all pairs.

    Each unordered pair is evaluated once and accumulated antisymmetrically,
    so the per-pair contributions to the total mass rate cancel exactly.

    Also returns each particle's total outgoing exchange rate
    ``diag_i = nu * sum_j K_ij * area_j`` (the Gershgorin diagonal of the
    exchange operator on densities), which bounds the stable explicit step.
    """
    n = x.size
    beta = np.zeros(n)
    diag = np.zeros(n)
    for i in range(n):
        xi = x[i]
        yi = y[i]
        wi = w[i]
        ai = area[i]
        for j in range(i + 1, n):
            aj = area[j]
            sig2 = 0.5 * (ai + aj)
            ddx = xi - x[j]
            ddy = yi - y[j]
            r2 = ddx * ddx + ddy * ddy
            kern = FOUR_OVER_PI * math.exp(-r2 / sig2) / (sig2 * sig2)
            term = nu * kern * (w[j] * ai - wi * aj)
            beta[i] += term
            beta[j] -= term
            diag[i] += nu * kern * aj
            diag[j] += nu * kern * ai
    return beta, diag


@njit(cache=True)
def diffusion_beta_hashed(x, y, w, area, nu, cellx, celly, order, start, ncx, ncy, h):
    """Weight-exchange rates with the 4-sigma cutoff via the cell list.

    Each unordered pair is owned by its (area, index)-larger member: that
    particle's own radius ``4*sqrt(area)`` bounds the pair's cutoff radius
    ``4*sigma_ij``, so scanning a block of ``ceil(R/h)+1`` cells around the
    owner finds every interacting partner.

    Returns (beta, diag) like :func:`diffusion_beta_full`.
    """
    n = x.size
    beta = np.zeros(n)
    diag = np.zeros(n)
    for i in range(n):
        xi = x[i]
        yi = y[i]
        wi = w[i]
        ai = area[i]
        k = int(4.0 * math.sqrt(ai) / h) + 1
        cx0 = max(cellx[i] - k, 0)
        cx1 = min(cellx[i] + k, ncx - 1)
        cy0 = max(celly[i] - k, 0)
        cy1 = min(celly[i] + k, ncy - 1)
        for cx in range(cx0, cx1 + 1):
            base = cx * ncy
            for cy in range(cy0, cy1 + 1):
                c = base + cy
                for t in range(start[c], start[c + 1]):
                    j = order[t]
                    aj = area[j]
                    if aj > ai or (aj == ai and j >= i):
                        continue  # pair owned by the other particle (or self)
                    sig2 = 0.5 * (ai + aj)
                    ddx = xi - x[j]
                    ddy = yi - y[j]
                    r2 = ddx * ddx + ddy * ddy
                    if r2 > 16.0 * sig2:
                        continue
                    kern = FOUR_OVER_PI * math.exp(-r2 / sig2) / (sig2 * sig2)
                    term = nu * kern * (w[j] * ai - wi * aj)
                    beta[i] += term
                    beta[j] -= term
                    diag[i] += nu * kern * aj
                    diag[j] += nu * kern * ai
    return beta, diag


@njit(cache=True)
def block_pairs(cellx, celly, order, start, ncx, ncy, k):
    """All index pairs (i < j) whose cells are within Chebyshev distance k.

    Two passes: count, then fill.  Pair order is fixed by the outer particle
    index and the cell scan order.
    """
    n = cellx.size
    count = 0
    for i in range(n):
        cx0 = max(cellx[i] - k, 0)
        cx1 = min(cellx[i] + k, ncx - 1)
        cy0 = max(celly[i] - k, 0)
        cy1 = min(celly[i] + k, ncy - 1)
        for cx in range(cx0, cx1 + 1):
            base = cx * ncy
            for cy in range(cy0, cy1 + 1):
                c = base + cy
                for t in range(start[c], start[c + 1]):
                    if order[t] > i:
                        count += 1
    ii = np.empty(count, np.int64)
    jj = np.empty(count, np.int64)
    pos = 0
    for i in range(n):
        cx0 = max(cellx[i] - k, 0)
        cx1 = min(cellx[i] + k, ncx - 1)
        cy0 = max(celly[i] - k, 0)
        cy1 = min(celly[i] + k, ncy - 1)
        for cx in range(cx0, cx1 + 1):
            base = cx * ncy
            for cy in range(cy0, cy1 + 1):
                c = base + cy
                for t in range(start[c], start[c + 1]):
                    j = order[t]
                    if j > i:
                        ii[pos] = i
                        jj[pos] = j
                        pos += 1
    return ii, jj
