"""Regularizing charts onto the unit cotangent geometry of the 3-sphere.

The switch map ``(q, p) -> (x, y) := (p, -q)`` followed by inverse
stereographic projection compactifies momentum space: ``xi`` lands on the
unit sphere in R^4 and ``eta`` in its cotangent fiber, with the collision
locus pulled to the north pole ``xi = (1, 0, 0, 0)``.  This module
implements both chart directions, residual predicates for the
distinguished subsets (the transported fixed loci, the page, the binding,
and the chord Lagrangian), and evaluation of the Liouville form.

Membership tests cover only the chart-level linear constraints; the
regularized kinetic normalization involves an auxiliary positive function
that is not pinned down here, so the corresponding energy constraint is
deliberately out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChartDomainError, PreconditionError

__all__ = [
    "RegularizedState",
    "LocusSpec",
    "LOCI",
    "to_regularized",
    "from_regularized",
    "locus_residual",
    "liouville_eval",
    "page_sign",
]

_ON_MANIFOLD_TOL = 1e-10
_POLE_TOL = 1e-12
_TANGENT_TOL = 1e-8


@dataclass(frozen=True)
class RegularizedState:
    """A point of the chart: ``xi`` on the sphere, ``eta`` in the fiber."""

    xi: np.ndarray
    eta: np.ndarray

    def constraint_residuals(self) -> tuple[float, float]:
        """(| ||xi||^2 - 1 |, | <xi, eta> |) — both vanish on-manifold."""
        xi, eta = self.xi, self.eta
        return (
            float(abs(xi @ xi - 1.0)),
            float(abs(xi @ eta)),
        )

    @property
    def on_manifold(self) -> bool:
        a, b = self.constraint_residuals()
        return a <= _ON_MANIFOLD_TOL and b <= _ON_MANIFOLD_TOL


@dataclass(frozen=True)
class LocusSpec:
    """A distinguished subset given by vanishing coordinates and a sign.

    ``xi_indices``/``eta_indices`` list the chart coordinates whose values
    form the residual vector, in catalog order.  ``eta3_nonneg`` marks the
    loci cut out inside a half-space by ``eta3 >= 0``.
    """

    tag: str
    xi_indices: tuple[int, ...]
    eta_indices: tuple[int, ...]
    eta3_nonneg: bool


LOCI = {
    "F1tilde": LocusSpec("F1tilde", (1,), (0, 2, 3), False),
    "F2tilde": LocusSpec("F2tilde", (1, 3), (0, 2), False),
    "pageW": LocusSpec("pageW", (3,), (), True),
    "binding": LocusSpec("binding", (3,), (3,), False),
    "L2": LocusSpec("L2", (1, 3), (0, 2), True),
}


def to_regularized(s) -> RegularizedState:
    """Push a phase-space state through the switch map and the chart.

    Always lands on-manifold (to rounding) and away from the north pole.
    """
    s = np.asarray(s, dtype=float)
    x = s[3:6]
    y = -s[0:3]
    n2 = float(x @ x)
    w = n2 + 1.0
    xy = float(x @ y)
    xi = np.empty(4)
    eta = np.empty(4)
    xi[0] = (n2 - 1.0) / w
    xi[1:] = 2.0 * x / w
    eta[0] = xy
    eta[1:] = 0.5 * w * y - xy * x
    return RegularizedState(xi, eta)


def from_regularized(rs: RegularizedState) -> np.ndarray:
    """Invert the chart back to a phase-space state.

    Raises
    ------
    ChartDomainError
        At (or numerically against) the north pole ``xi0 = 1``, where the
        chart is singular — the collision locus.
    PreconditionError
        If the input violates the sphere or fiber constraint.
    """
    xi = np.asarray(rs.xi, dtype=float)
    eta = np.asarray(rs.eta, dtype=float)
    denom = 1.0 - xi[0]
    if denom < _POLE_TOL:
        raise ChartDomainError(
            f"chart is singular at the north pole: 1 - xi0 = {denom:.3e}"
        )
    a, b = rs.constraint_residuals()
    if a > _ON_MANIFOLD_TOL or b > _ON_MANIFOLD_TOL:
        raise PreconditionError(
            f"state is off-manifold: | ||xi||^2 - 1 | = {a:.3e}, "
            f"|<xi, eta>| = {b:.3e}"
        )
    x = xi[1:] / denom
    y = denom * eta[1:] + eta[0] * xi[1:]
    out = np.empty(6)
    out[0:3] = -y
    out[3:6] = x
    return out


def locus_residual(tag: str, rs: RegularizedState):
    """Residual vector and sign flag for membership in a distinguished set.

    Returns ``(residuals, sign_ok)`` where ``residuals`` stacks the chart
    coordinates that must vanish and ``sign_ok`` reports ``eta3 >= 0`` for
    the half-space loci (``None`` where no sign condition applies).
    """
    if tag not in LOCI:
        raise PreconditionError(f"unknown locus {tag!r}; expected one of {tuple(LOCI)}")
    spec = LOCI[tag]
    vals = [rs.xi[i] for i in spec.xi_indices]
    vals += [rs.eta[i] for i in spec.eta_indices]
    residual = np.array(vals)
    sign_ok = bool(rs.eta[3] >= 0.0) if spec.eta3_nonneg else None
    return residual, sign_ok


def liouville_eval(rs: RegularizedState, tangent) -> float:
    """Evaluate the Liouville form ``-(eta0 dxi0 + eta1 dxi1 + eta2 dxi2)``.

    ``tangent`` is an 8-vector ``(dxi, deta)`` that must lie in the
    tangent space of the constraint manifold at ``rs``.
    """
    tangent = np.asarray(tangent, dtype=float)
    if tangent.shape != (8,):
        raise PreconditionError(f"tangent must be an 8-vector, got shape {tangent.shape}")
    dxi = tangent[:4]
    deta = tangent[4:]
    sphere = float(rs.xi @ dxi)
    fiber = float(dxi @ rs.eta + rs.xi @ deta)
    if abs(sphere) > _TANGENT_TOL or abs(fiber) > _TANGENT_TOL:
        raise PreconditionError(
            f"vector is not tangent to the constraint manifold: "
            f"<xi, dxi> = {sphere:.3e}, d<xi, eta> = {fiber:.3e}"
        )
    return -float(rs.eta[0] * dxi[0] + rs.eta[1] * dxi[1] + rs.eta[2] * dxi[2])


def page_sign() -> int:
    """Which ``q3`` half-space the page's ``eta3 >= 0`` condition selects.

    Returns the sign ``s`` such that momentum-vertical states
    (``p3 = 0``) with ``s * q3 >= 0`` map into ``{eta3 >= 0}``.  The
    convention is measured by pushing a deterministic sample of states
    through the chart — never assumed — and an inconsistent sample raises.
    """
    rng = np.random.default_rng(1730)
    sign = 0
    for _ in range(256):
        s = rng.uniform(-2.0, 2.0, 6)
        s[2] = abs(s[2]) + 1e-3  # q3 > 0 strictly
        s[5] = 0.0  # on the section's momentum slice
        eta3 = to_regularized(s).eta[3]
        if eta3 == 0.0:
            continue
        here = 1 if eta3 > 0.0 else -1
        if sign == 0:
            sign = here
        elif sign != here:
            raise PreconditionError(
                "page sign convention is not consistent across sampled states"
            )
    # ``sign`` now says where q3 > 0 lands; the page selects eta3 >= 0.
    return sign
