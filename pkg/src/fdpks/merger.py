"""Sticky-particle machinery: intersection detection, the pre-step pair
merger, the post-stage grid merger, pull-back relocation, and the cell-list
neighbor search that keeps all of it O(N).

Two auxiliary uniform meshes are used: merger cells of size delta/8 (a cell
holding two or more same-species particles triggers coalescence) and search
cells of size delta/4 (the displacement time-step bound keeps one-step
travel below one search cell, so intersecting pairs are always found inside
a small block of cells).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .domain import Box, Particle, ParticleSystem, SimulationConfig, SpeciesKinematics, SpeciesParticles

# Chebyshev cell radius of the candidate search block.  One-step travel is
# bounded by one search cell per particle, so two particles whose straight
# trajectories meet within the step start at most two cells apart in each
# coordinate.
NEIGHBOR_BLOCK_RADIUS = 2


def _axis_cell(coord, lo: float, size: float, ncells: int):
    """Cell index along one axis, corrected so points land in the cell whose
    half-open extent actually contains them (interior edges go up)."""
    idx = np.floor((coord - lo) / size).astype(np.int64)
    idx -= coord < lo + idx * size
    idx += coord >= lo + (idx + 1) * size
    return np.clip(idx, 0, ncells - 1)


@dataclass
class SpatialHash:
    """Uniform cell list over a box, stored as a CSR table.

    ``order`` holds particle indices sorted by flat cell id
    (``cx * ncy + cy``) and ``start`` the per-cell offsets into it.
    """

    box: Box
    cell_size: float
    ncx: int
    ncy: int
    cellx: np.ndarray
    celly: np.ndarray
    order: np.ndarray
    start: np.ndarray

    @classmethod
    def build(cls, x, y, box: Box, cell_size: float) -> SpatialHash:
        ncx = max(1, int(math.ceil(box.width / cell_size - 1e-9)))
        ncy = max(1, int(math.ceil(box.height / cell_size - 1e-9)))
        cellx = _axis_cell(np.asarray(x), box.x_lo, cell_size, ncx)
        celly = _axis_cell(np.asarray(y), box.y_lo, cell_size, ncy)
        flat = cellx * ncy + celly
        order = np.argsort(flat, kind="stable").astype(np.int64)
        start = np.searchsorted(flat[order], np.arange(ncx * ncy + 1)).astype(np.int64)
        return cls(box, cell_size, ncx, ncy, cellx, celly, order, start)

    def point_cell(self, px: float, py: float) -> tuple[int, int]:
        cx = int(_axis_cell(np.asarray(px), self.box.x_lo, self.cell_size, self.ncx))
        cy = int(_axis_cell(np.asarray(py), self.box.y_lo, self.cell_size, self.ncy))
        return cx, cy

    def block_members(self, cx: int, cy: int, k: int) -> np.ndarray:
        """Indices of all particles whose cell is within Chebyshev distance k."""
        cx0, cx1 = max(cx - k, 0), min(cx + k, self.ncx - 1)
        cy0, cy1 = max(cy - k, 0), min(cy + k, self.ncy - 1)
        chunks = []
        for icx in range(cx0, cx1 + 1):
            base = icx * self.ncy
            lo = self.start[base + cy0]
            hi = self.start[base + cy1 + 1]
            if hi > lo:
                chunks.append(self.order[lo:hi])
        if not chunks:
            return np.empty(0, np.int64)
        return np.concatenate(chunks)


@dataclass
class MergerGrid:
    """Geometry of the merger mesh (delta/8) and the search mesh (delta/4)."""

    box: Box
    merge_cell_size: float
    search_cell_size: float

    @classmethod
    def from_config(cls, cfg: SimulationConfig) -> MergerGrid:
        return cls(cfg.box, cfg.merger_mesh_size, cfg.particle_mesh_size)

    def merge_hash(self, sp: SpeciesParticles, shifted: bool = False) -> SpatialHash:
        if shifted:
            # cell lines moved by half a cell: clusters sitting exactly on a
            # line of the primary grid land inside one cell of this one
            h = self.merge_cell_size
            box = Box(self.box.x_lo - h / 2, self.box.x_hi + h / 2, self.box.y_lo - h / 2, self.box.y_hi + h / 2)
            return SpatialHash.build(sp.x, sp.y, box, h)
        return SpatialHash.build(sp.x, sp.y, self.box, self.merge_cell_size)

    def search_hash(self, sp: SpeciesParticles) -> SpatialHash:
        return SpatialHash.build(sp.x, sp.y, self.box, self.search_cell_size)


def intersection_params(xi, yi, ui, vi, xj, yj, uj, vj, mu):
    """Trajectory-intersection parameters (tau_i, tau_j) of two particles.

    The straight lines ``(xi, yi) + tau*(ui, vi)`` and
    ``(xj, yj) + tau*(uj, vj)`` meet where both parameters solve the 2x2
    system; parallel or near-degenerate pairs (|denominator| <= mu) return
    None instead.
    """
    den = ui * vj - uj * vi
    if not abs(den) > mu:
        return None
    dx = xj - xi
    dy = yj - yi
    tau_i = (vi * dx - ui * dy) / den
    tau_j = (vj * dx - uj * dy) / den
    return tau_i, tau_j


def merge_pair(pi: Particle, pj: Particle) -> Particle:
    """Replace two same-species particles by one at their center of mass.

    Weights and subdomain areas add; a weightless pair merges at the
    midpoint (the symmetric limit of the center of mass).
    """
    if pi.species != pj.species:
        raise ValueError("cannot merge particles of different species")
    w = pi.w + pj.w
    if w > 0:
        x = (pi.w * pi.x + pj.w * pj.x) / w
        y = (pi.w * pi.y + pj.w * pj.y) / w
    else:
        x = 0.5 * (pi.x + pj.x)
        y = 0.5 * (pi.y + pj.y)
    return Particle(x, y, w, pi.area + pj.area, pi.species)


def pull_back(ps: ParticleSystem, box: Box) -> ParticleSystem:
    """Relocate every particle outside the closed box to the nearest
    boundary point; for a rectangle that is the coordinate-wise clamp.
    Weights and areas are untouched.
    """
    species = []
    for sp in ps.species:
        cx, cy = box.clamp(sp.x, sp.y)
        species.append(SpeciesParticles(cx, cy, sp.w.copy(), sp.area.copy()))
    return ParticleSystem(species, ps.min_initial_area)


def neighbor_candidates(
    sp: SpeciesParticles,
    search_hash: SpatialHash,
    i: int,
    block_radius: int = NEIGHBOR_BLOCK_RADIUS,
) -> np.ndarray:
    """Same-species candidates for trajectory intersection with particle i.

    Returns every particle (sorted, excluding i itself) in the block of
    search cells around i's cell.  The block is a superset of all particles
    that can meet i's trajectory within one admissible time step.
    """
    members = search_hash.block_members(search_hash.cellx[i], search_hash.celly[i], block_radius)
    return np.sort(members[members != i])


def _qualifying_pairs(ii, jj, x, y, u, v, dt, mu):
    """Filter candidate pairs down to those whose trajectories intersect
    within dt; returns (ii, jj, max_tau) arrays."""
    den = u[ii] * v[jj] - u[jj] * v[ii]
    ok = np.abs(den) > mu
    ii, jj, den = ii[ok], jj[ok], den[ok]
    dx = x[jj] - x[ii]
    dy = y[jj] - y[ii]
    tau_i = (v[ii] * dx - u[ii] * dy) / den
    tau_j = (v[jj] * dx - u[jj] * dy) / den
    mt = np.maximum(tau_i, tau_j)
    q = (tau_i > 0) & (tau_j > 0) & (mt < dt)
    return ii[q], jj[q], mt[q]


def _step1_species(sp: SpeciesParticles, kin: SpeciesKinematics, dt, mu, mg: MergerGrid):
    """Pair merger for one species; returns (new particles, merge count).

    Qualifying pairs are processed in ascending (max tau, i, j); each merge
    writes the heavier particle into the lower slot with mass-averaged
    velocity, then only the affected neighborhood is re-scanned.  Entries
    are versioned so stale heap items are skipped.
    """
    n = sp.n
    if n < 2 or not dt > 0:
        return sp.copy(), 0
    x, y, w, area = sp.x.copy(), sp.y.copy(), sp.w.copy(), sp.area.copy()
    u, v = kin.u.copy(), kin.v.copy()
    hs = SpatialHash.build(x, y, mg.box, mg.search_cell_size)
    ii, jj = _kernels.block_pairs(
        hs.cellx, hs.celly, hs.order, hs.start, hs.ncx, hs.ncy, NEIGHBOR_BLOCK_RADIUS
    )
    qi, qj, qmt = _qualifying_pairs(ii, jj, x, y, u, v, dt, mu)
    version = np.zeros(n, np.int64)
    heap = [(mt, int(a), int(b), 0, 0) for a, b, mt in zip(qi, qj, qmt)]
    heapq.heapify(heap)
    alive = np.ones(n, bool)
    moved: list[int] = []
    merges = 0
    while heap:
        _, i, j, vi, vj = heapq.heappop(heap)
        if not (alive[i] and alive[j]) or version[i] != vi or version[j] != vj:
            continue
        k, m = (i, j) if i < j else (j, i)
        total = w[i] + w[j]
        if total > 0:
            xc = (w[i] * x[i] + w[j] * x[j]) / total
            yc = (w[i] * y[i] + w[j] * y[j]) / total
            uc = (w[i] * u[i] + w[j] * u[j]) / total
            vc = (w[i] * v[i] + w[j] * v[j]) / total
        else:
            xc, yc = 0.5 * (x[i] + x[j]), 0.5 * (y[i] + y[j])
            uc, vc = 0.5 * (u[i] + u[j]), 0.5 * (v[i] + v[j])
        x[k], y[k], w[k], area[k] = xc, yc, total, area[i] + area[j]
        u[k], v[k] = uc, vc
        alive[m] = False
        version[k] += 1
        if k not in moved:
            moved.append(k)
        merges += 1
        # re-scan only the merged particle's neighborhood: unmoved particles
        # are still where the hash put them, moved ones are checked directly
        ck = hs.point_cell(x[k], y[k])
        cands: list[int] = []
        for q in hs.block_members(ck[0], ck[1], NEIGHBOR_BLOCK_RADIUS):
            if alive[q] and q != k and version[q] == 0:
                cands.append(int(q))
        for q in moved:
            if q == k or not alive[q]:
                continue
            cq = hs.point_cell(x[q], y[q])
            if abs(cq[0] - ck[0]) <= NEIGHBOR_BLOCK_RADIUS and abs(cq[1] - ck[1]) <= NEIGHBOR_BLOCK_RADIUS:
                cands.append(q)
        for q in cands:
            res = intersection_params(x[k], y[k], u[k], v[k], x[q], y[q], u[q], v[q], mu)
            if res is None:
                continue
            ti, tj = res
            mt = max(ti, tj)
            if ti > 0 and tj > 0 and mt < dt:
                a, b = (k, q) if k < q else (q, k)
                heapq.heappush(heap, (mt, a, b, int(version[a]), int(version[b])))
    keep = alive
    return SpeciesParticles(x[keep], y[keep], w[keep], area[keep]), merges


def merger_step1_counted(
    ps: ParticleSystem, kin: list[SpeciesKinematics], dt: float, mu: float, mg: MergerGrid
) -> tuple[ParticleSystem, int]:
    species = []
    merges = 0
    for sp, kk in zip(ps.species, kin):
        sp2, m = _step1_species(sp, kk, dt, mu, mg)
        species.append(sp2)
        merges += m
    return ParticleSystem(species, ps.min_initial_area), merges


def merger_step1(
    ps: ParticleSystem, kin: list[SpeciesKinematics], dt: float, mu: float, mg: MergerGrid
) -> ParticleSystem:
    """Merge all same-species pairs whose trajectories intersect within dt."""
    return merger_step1_counted(ps, kin, dt, mu, mg)[0]


def collapse_arrays(x, y, w, area, inverse, counts):
    """Collapse particle arrays onto groups: weights and areas sum, the
    position is the weighted center of mass (arithmetic mean for weightless
    groups).  Singleton groups keep their member's values bit-for-bit.
    """
    ng = len(counts)
    w_new = np.bincount(inverse, weights=w, minlength=ng)
    a_new = np.bincount(inverse, weights=area, minlength=ng)
    wx = np.bincount(inverse, weights=w * x, minlength=ng)
    wy = np.bincount(inverse, weights=w * y, minlength=ng)
    safe = np.where(w_new > 0, w_new, 1.0)
    with np.errstate(invalid="ignore"):
        x_new = np.where(w_new > 0, wx / safe, np.bincount(inverse, weights=x, minlength=ng) / counts)
        y_new = np.where(w_new > 0, wy / safe, np.bincount(inverse, weights=y, minlength=ng) / counts)
    order = np.argsort(inverse, kind="stable")
    first = order[np.concatenate(([0], np.cumsum(counts)[:-1]))]
    single = counts == 1
    x_new[single] = x[first[single]]
    y_new[single] = y[first[single]]
    return x_new, y_new, w_new, a_new


def merger_step2_groups(sp: SpeciesParticles, mg: MergerGrid, shifted: bool = False):
    """Grouping of one species by merger cell, or None when nothing merges."""
    if sp.n == 0:
        return None
    hs = mg.merge_hash(sp, shifted=shifted)
    flat = hs.cellx * hs.ncy + hs.celly
    _, inverse, counts = np.unique(flat, return_inverse=True, return_counts=True)
    if counts.max() < 2:
        return None
    return inverse, counts


def merger_step2_with_groups(ps: ParticleSystem, mg: MergerGrid, shifted: bool = False):
    """Grid merger returning both the new system and the per-species
    groupings, so callers can mirror the collapse onto aligned arrays."""
    species = []
    groups = []
    for sp in ps.species:
        g = merger_step2_groups(sp, mg, shifted=shifted)
        if g is None:
            species.append(sp.copy())
        else:
            inverse, counts = g
            species.append(SpeciesParticles(*collapse_arrays(sp.x, sp.y, sp.w, sp.area, inverse, counts)))
        groups.append(g)
    return ParticleSystem(species, ps.min_initial_area), groups


def merger_step2(ps: ParticleSystem, mg: MergerGrid) -> ParticleSystem:
    """Collapse every merger cell holding two or more same-species particles
    to a single particle; afterwards no cell holds more than one."""
    return merger_step2_with_groups(ps, mg)[0]
