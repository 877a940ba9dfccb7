"""Discrete symmetries of the rotating-frame problem.

Three linear involutions act on phase space: the ecliptic reflection ``r``
(symplectic) and the two reversors ``rho1`` and ``rho2`` (anti-symplectic).
All three preserve the Hamiltonian.  Composing a reversor with time
reversal maps solutions to solutions, which is what turns a trajectory
hitting a fixed locus twice into a symmetric chord.

Matrices are exact signed diagonals; applying one performs sign flips
only, with no rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import PreconditionError

__all__ = [
    "INVOLUTION_KINDS",
    "FixedLocus",
    "apply_involution",
    "involution_matrix",
    "fixed_locus",
    "fixed_residual",
    "symmetric_extension",
]

# State components are ordered (q1, q2, q3, p1, p2, p3).
_SIGNS = {
    "r": (1, 1, -1, 1, 1, -1),
    "rho1": (1, -1, -1, -1, 1, 1),
    "rho2": (1, -1, 1, -1, 1, -1),
}
INVOLUTION_KINDS = tuple(_SIGNS)

# Coordinates that vanish on each fixed locus, in catalog order.
_RESIDUAL_INDICES = {
    "r": (2, 5),        # q3, p3: the invariant planar problem
    "rho1": (1, 2, 3),  # q2, q3, p1
    "rho2": (1, 3, 5),  # q2, p1, p3  (equivalently q2 = qdot1 = qdot3 = 0)
}


@dataclass(frozen=True)
class FixedLocus:
    """An involution together with the coordinates vanishing on its fixed set."""

    kind: str
    residual_indices: tuple[int, ...]


def _check_kind(kind: str) -> str:
    if kind not in _SIGNS:
        raise PreconditionError(
            f"unknown involution {kind!r}; expected one of {INVOLUTION_KINDS}"
        )
    return kind


def fixed_locus(kind: str) -> FixedLocus:
    """The fixed-locus descriptor for an involution."""
    return FixedLocus(_check_kind(kind), _RESIDUAL_INDICES[kind])


def involution_matrix(kind: str) -> np.ndarray:
    """The involution as an exact signed diagonal integer matrix."""
    return np.diag(np.array(_SIGNS[_check_kind(kind)], dtype=np.int64))


def apply_involution(kind: str, s) -> np.ndarray:
    """Apply an involution to a state (vectorized over leading axes)."""
    signs = np.array(_SIGNS[_check_kind(kind)], dtype=float)
    return np.asarray(s, dtype=float) * signs


def fixed_residual(kind: str, s) -> np.ndarray:
    """Coordinates that must vanish for membership in Fix(kind).

    The zero vector is returned exactly when the state lies on the fixed
    locus; entries are read off in a fixed order so downstream catalogs
    stay byte-stable.
    """
    idx = _RESIDUAL_INDICES[_check_kind(kind)]
    return np.asarray(s, dtype=float)[..., list(idx)]


def symmetric_extension(traj, kind: str):
    """Reflect and time-reverse a trajectory through a reversor.

    If ``x(t)`` solves the equations of motion, so does
    ``rho(x(t0 + t1 - t))`` over the same time interval; this returns that
    companion trajectory, sampled on the reflection of the input's grid.
    A trajectory starting on the fixed locus of ``kind`` glues with its
    extension into a single symmetric solution.
    """
    _check_kind(kind)
    if kind == "r":
        raise PreconditionError(
            "symmetric_extension requires an anti-symplectic involution "
            "(rho1 or rho2); r composed with time reversal is not a "
            "solution operator"
        )
    signs = np.array(_SIGNS[kind], dtype=float)
    total = traj.times[0] + traj.times[-1]
    new_times = total - traj.times[::-1]
    new_states = traj.states[::-1] * signs
    return replace(
        traj,
        times=np.ascontiguousarray(new_times),
        states=np.ascontiguousarray(new_states),
        events=(),
        stm=None,
        stm_samples=None,
    )
