"""Hill-region component labeling at a fixed energy.

A position is accessible at energy ``h`` iff ``U_eff(q) <= h``.  Because
the effective potential is strictly increasing in |q3| at fixed (q1, q2),
every accessible point connects to the ecliptic by a vertical segment that
stays accessible, and any accessible path deforms onto the plane without
leaving the region.  Connected components of the 3-D region therefore
correspond one-to-one with components of its planar slice, so the flood
fill runs on a 2-D grid of the ecliptic and 3-D queries are classified by
projection.

Labeled grids are cached per (mu, energy, step); queries are O(1) lookups
with a short ring search to absorb cells straddling the region boundary.
"""

from __future__ import annotations

import functools

import numpy as np
from scipy import ndimage

from . import dynamics
from .errors import TrichordError

__all__ = ["hill_classification"]

_BOX = 2.0
_STEP = 1e-3

_FORBIDDEN = 0
_EARTH = 1
_MOON = 2
_EXTERIOR = 3

_NAMES = {
    _FORBIDDEN: "forbidden",
    _EARTH: "earth_component",
    _MOON: "moon_component",
    _EXTERIOR: "exterior",
}

# 4-connectivity: components may not touch through diagonal corners.
_STRUCTURE = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], bool)


def _planar_u_eff(x, y, mu):
    """Effective potential on the ecliptic, vectorized, unguarded."""
    d_e = np.hypot(x + mu, y)
    d_m = np.hypot(x - 1.0 + mu, y)
    with np.errstate(divide="ignore"):
        pot = -0.5 * (x * x + y * y) - (1.0 - mu) / d_e
        if mu > 0.0:
            pot = pot - mu / d_m
    return pot


@functools.lru_cache(maxsize=8)
def _labeled_grid(mu: float, h: float, step: float):
    """Semantic component labels on the planar grid covering [-2, 2]^2."""
    n = int(round(2.0 * _BOX / step)) + 1
    axis = -_BOX + step * np.arange(n)
    allowed = np.empty((n, n), bool)
    # Row blocks keep peak memory modest on the 4001x4001 default grid.
    block = 256
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        xs = axis[lo:hi][:, None]
        ys = axis[None, :]
        allowed[lo:hi] = _planar_u_eff(xs, ys, mu) <= h
    comp, _ = ndimage.label(allowed, structure=_STRUCTURE)

    def cell(x, y):
        i = int(round((x + _BOX) / step))
        j = int(round((y + _BOX) / step))
        if 0 <= i < n and 0 <= j < n:
            return comp[i, j]
        return 0

    sem = np.zeros((n, n), np.int8)
    # Assign weakest to strongest so merged components take the right
    # label: moon < earth < exterior.
    moon_id = cell(1.0 - mu, 0.0) if mu > 0.0 else 0
    if moon_id > 0:
        sem[comp == moon_id] = _MOON
    earth_id = cell(-mu, 0.0)
    if earth_id > 0:
        sem[comp == earth_id] = _EARTH
    ext_id = 0
    for cx, cy in ((-_BOX, -_BOX), (-_BOX, _BOX), (_BOX, -_BOX), (_BOX, _BOX)):
        ext_id = cell(cx, cy)
        if ext_id > 0:
            break
    if ext_id > 0:
        sem[comp == ext_id] = _EXTERIOR
    return sem, step, n


def hill_classification(pos, h: float, params: dynamics.SystemParams, step: float = _STEP) -> str:
    """Classify a position at energy ``h``.

    Returns one of ``forbidden``, ``earth_component``, ``moon_component``,
    ``exterior``.  Positions outside the cached grid's box are accessible
    far-field points and classify as exterior.
    """
    pos = np.asarray(pos, float)
    if pos.shape != (3,) or not np.all(np.isfinite(pos)):
        raise TrichordError(f"position must be a finite 3-vector, got {pos!r}")
    dynamics.check_guard(pos, params)
    if dynamics.effective_potential(pos, params, guarded=False) > h:
        return _NAMES[_FORBIDDEN]

    sem, step, n = _labeled_grid(params.mu, float(h), float(step))
    i = int(round((pos[0] + _BOX) / step))
    j = int(round((pos[1] + _BOX) / step))
    if not (0 <= i < n and 0 <= j < n):
        return _NAMES[_EXTERIOR]
    lab = sem[i, j]
    if lab != _FORBIDDEN:
        return _NAMES[lab]

    # The query is accessible but its cell center is not (a boundary
    # sliver): take the label of the nearest labeled cell nearby.
    best = None
    best_d2 = np.inf
    for radius in range(1, 51):
        i0, i1 = max(i - radius, 0), min(i + radius, n - 1)
        j0, j1 = max(j - radius, 0), min(j + radius, n - 1)
        patch = sem[i0 : i1 + 1, j0 : j1 + 1]
        ii, jj = np.nonzero(patch)
        if ii.size:
            d2 = (ii + i0 - i) ** 2 + (jj + j0 - j) ** 2
            k = int(np.argmin(d2))
            if d2[k] < best_d2:
                best_d2 = float(d2[k])
                best = int(patch[ii[k], jj[k]])
            if best_d2 <= radius * radius:
                break
    if best is None:
        raise TrichordError(
            f"accessible position {pos.tolist()} is isolated from every labeled "
            f"component at grid step {step:g}"
        )
    return _NAMES[best]
