"""Rotating-frame dynamics of the spatial circular restricted three-body problem.

A massless satellite moves under two primaries that sit still in a uniformly
rotating barycentric frame: the heavy one ("earth", mass ``1 - mu``) at
``(-mu, 0, 0)`` and the light one ("moon", mass ``mu``) at ``(1 - mu, 0, 0)``.
Separation and angular rate are normalized to 1, leaving the mass ratio
``mu`` as the only parameter.

States are plain ``float64`` arrays ``[q1, q2, q3, p1, p2, p3]`` of rotating
frame positions and conjugate momenta.  The governing Hamiltonian is

    H(q, p) = 1/2 |p|^2 - (1 - mu)/|q - E| - mu/|q - M| + q1 p2 - q2 p1,

with E, M the primary positions.  Differentiating in ``p`` gives the affine
velocity relations

    qdot1 = p1 - q2,   qdot2 = p2 + q1,   qdot3 = p3,

and substituting them back expresses the energy as kinetic-plus-effective
H = 1/2 |qdot|^2 + U_eff(q) with

    U_eff(q) = -1/2 (q1^2 + q2^2) - (1 - mu)/|q - E| - mu/|q - M|.

The five equilibria of the flow are the critical points of ``U_eff`` paired
with the zero-velocity momentum ``p = (q2, -q1, 0)``.

``mu = 0`` is admitted as the rotating-Kepler limit used by closed-form
oracles: the moon position then carries no mass and no collision guard.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GuardViolationError, PreconditionError, TrichordError

__all__ = [
    "SystemParams",
    "EquilibriumSet",
    "make_state",
    "positions",
    "momenta",
    "velocity_from_momentum",
    "momentum_from_velocity",
    "equilibrium_momenta",
    "primary_distances",
    "check_guard",
    "effective_potential",
    "gravitational_gradient",
    "hamiltonian",
    "jacobi_constant",
    "vector_field",
    "variational_matrix",
    "lagrange_points",
]


@dataclass(frozen=True)
class SystemParams:
    """Mass ratio plus derived primary data in rotating-frame units.

    Parameters
    ----------
    mu : float
        Dimensionless mass ratio ``m_M / (m_M + m_E)`` in ``[0, 1)``.
        ``mu = 0`` is the rotating-Kepler limit (massless moon) admitted
        for oracles; two-primary runs need ``mu > 0``.
    collision_guard : float
        Minimum admitted distance to either massive primary.  Evaluation
        of gravitational terms closer than this raises
        :class:`~trichord.errors.GuardViolationError`; the guard is not
        applied to a massless primary.
    """

    mu: float
    collision_guard: float = 1e-3

    def __post_init__(self):
        if not np.isfinite(self.mu) or not 0.0 <= self.mu < 1.0:
            raise ValueError(f"mu must lie in [0, 1), got {self.mu!r}")
        if not np.isfinite(self.collision_guard) or self.collision_guard <= 0.0:
            raise ValueError("collision_guard must be a positive real")

    @property
    def earth_pos(self) -> np.ndarray:
        return np.array([-self.mu, 0.0, 0.0])

    @property
    def moon_pos(self) -> np.ndarray:
        return np.array([1.0 - self.mu, 0.0, 0.0])

    @property
    def earth_mass(self) -> float:
        return 1.0 - self.mu

    @property
    def moon_mass(self) -> float:
        return self.mu


def make_state(q, p) -> np.ndarray:
    """Assemble a 6-vector state from position and momentum triples."""
    s = np.empty(6)
    s[:3] = q
    s[3:] = p
    return s


def positions(s) -> np.ndarray:
    """Position block of a state array (shape ``(..., 3)``)."""
    return np.asarray(s, dtype=float)[..., :3]


def momenta(s) -> np.ndarray:
    """Momentum block of a state array (shape ``(..., 3)``)."""
    return np.asarray(s, dtype=float)[..., 3:6]


def velocity_from_momentum(s) -> np.ndarray:
    """Rotating-frame velocity of a state.

    The relations are affine and exact:
    ``qdot = (p1 - q2, p2 + q1, p3)``.

    Parameters
    ----------
    s : array_like, shape (..., 6)

    Returns
    -------
    ndarray, shape (..., 3)
    """
    s = np.asarray(s, dtype=float)
    v = np.empty(s.shape[:-1] + (3,))
    v[..., 0] = s[..., 3] - s[..., 1]
    v[..., 1] = s[..., 4] + s[..., 0]
    v[..., 2] = s[..., 5]
    return v


def momentum_from_velocity(qdot, q) -> np.ndarray:
    """Conjugate momentum from rotating-frame velocity; exact inverse of
    :func:`velocity_from_momentum`."""
    qdot = np.asarray(qdot, dtype=float)
    q = np.asarray(q, dtype=float)
    p = np.empty(np.broadcast(qdot, q).shape)
    p[..., 0] = qdot[..., 0] + q[..., 1]
    p[..., 1] = qdot[..., 1] - q[..., 0]
    p[..., 2] = qdot[..., 2]
    return p


def equilibrium_momenta(q) -> np.ndarray:
    """Momentum making the rotating-frame velocity vanish at position ``q``.

    Setting ``qdot = 0`` in the affine relations gives ``p = (q2, -q1, 0)``;
    paired with a critical point of ``U_eff`` this is an equilibrium of the
    full flow, and there ``H = U_eff(q)``.
    """
    q = np.asarray(q, dtype=float)
    p = np.empty(q.shape)
    p[..., 0] = q[..., 1]
    p[..., 1] = -q[..., 0]
    p[..., 2] = 0.0
    return p


def primary_distances(q, params: SystemParams):
    """Distances to the earth and moon positions (vectorized)."""
    q = np.asarray(q, dtype=float)
    dx_e = q[..., 0] + params.mu
    dx_m = q[..., 0] - 1.0 + params.mu
    yz = q[..., 1] ** 2 + q[..., 2] ** 2
    d_e = np.sqrt(dx_e**2 + yz)
    d_m = np.sqrt(dx_m**2 + yz)
    return d_e, d_m


def check_guard(q, params: SystemParams):
    """Raise :class:`GuardViolationError` if ``q`` is inside the collision
    guard of a massive primary.  A massless primary (mass exactly 0) is
    not guarded: the rotating-Kepler limit has no singularity there.
    """
    d_e, d_m = primary_distances(q, params)
    if params.earth_mass > 0.0:
        bad = d_e < params.collision_guard
        if np.any(bad):
            raise GuardViolationError("earth", float(np.min(d_e)))
    if params.moon_mass > 0.0:
        bad = d_m < params.collision_guard
        if np.any(bad):
            raise GuardViolationError("moon", float(np.min(d_m)))


def _gravity_terms(q, params: SystemParams, guarded: bool = True):
    """Return (d_e, d_m, potential) with massless primaries skipped."""
    if guarded:
        check_guard(q, params)
    d_e, d_m = primary_distances(q, params)
    pot = np.zeros(np.shape(d_e))
    if params.earth_mass > 0.0:
        pot = pot - params.earth_mass / d_e
    if params.moon_mass > 0.0:
        pot = pot - params.moon_mass / d_m
    return d_e, d_m, pot


def effective_potential(q, params: SystemParams, guarded: bool = True):
    """Effective (centrifugal + gravitational) potential ``U_eff``.

    ``U_eff(q) = -1/2 (q1^2 + q2^2) - (1-mu)/d_E - mu/d_M``.  The Hill
    region at energy ``h`` is ``{U_eff <= h}`` and the zero-velocity
    surface is its boundary.

    Parameters
    ----------
    q : array_like, shape (..., 3)
    params : SystemParams
    guarded : bool
        When True (default) positions inside the collision guard raise;
        internal grid sweeps disable the check and rely on the caller.
    """
    q = np.asarray(q, dtype=float)
    _, _, pot = _gravity_terms(q, params, guarded)
    return -0.5 * (q[..., 0] ** 2 + q[..., 1] ** 2) + pot


def gravitational_gradient(q, params: SystemParams, guarded: bool = True):
    """Gradient of the gravitational part, ``sum_P m_P (q - P)/|q - P|^3``."""
    q = np.asarray(q, dtype=float)
    if guarded:
        check_guard(q, params)
    d_e, d_m = primary_distances(q, params)
    g = np.zeros(q.shape)
    if params.earth_mass > 0.0:
        c_e = params.earth_mass / d_e**3
        g[..., 0] += c_e * (q[..., 0] + params.mu)
        g[..., 1] += c_e * q[..., 1]
        g[..., 2] += c_e * q[..., 2]
    if params.moon_mass > 0.0:
        c_m = params.moon_mass / d_m**3
        g[..., 0] += c_m * (q[..., 0] - 1.0 + params.mu)
        g[..., 1] += c_m * q[..., 1]
        g[..., 2] += c_m * q[..., 2]
    return g


def hamiltonian(s, params: SystemParams, guarded: bool = True):
    """Energy ``H(q, p)`` of a state (vectorized over leading axes).

    Equals ``1/2 |qdot|^2 + U_eff(q)`` under the velocity relations; both
    forms are exposed and tested against each other.  ``guarded=False``
    skips the collision-guard check, for bookkeeping on samples that were
    already admitted (e.g. a trajectory truncated at the guard boundary).

    Raises
    ------
    GuardViolationError
        If the position is inside the collision guard of a massive primary
        and ``guarded`` is set.
    """
    s = np.asarray(s, dtype=float)
    q = s[..., :3]
    _, _, pot = _gravity_terms(q, params, guarded=guarded)
    kinetic = 0.5 * np.sum(s[..., 3:6] ** 2, axis=-1)
    coriolis = s[..., 0] * s[..., 4] - s[..., 1] * s[..., 3]
    return kinetic + pot + coriolis


def jacobi_constant(s, params: SystemParams):
    """Jacobi constant under the fixed convention ``c = -2 H`` (exactly)."""
    return -2.0 * hamiltonian(s, params)


def vector_field(s, params: SystemParams) -> np.ndarray:
    """Hamiltonian vector field ``(dH/dp, -dH/dq)`` at a state.

    Components 3 and 6 vanish identically on the ecliptic
    ``{q3 = p3 = 0}``, which is invariant under the flow.
    """
    s = np.asarray(s, dtype=float)
    q = s[..., :3]
    grad = gravitational_gradient(q, params)
    f = np.empty(s.shape)
    f[..., 0] = s[..., 3] - s[..., 1]
    f[..., 1] = s[..., 4] + s[..., 0]
    f[..., 2] = s[..., 5]
    f[..., 3] = -grad[..., 0] - s[..., 4]
    f[..., 4] = -grad[..., 1] + s[..., 3]
    f[..., 5] = -grad[..., 2]
    return f


def _gravity_hessian(q, params: SystemParams) -> np.ndarray:
    """Hessian of the gravitational part at a single position."""
    q = np.asarray(q, dtype=float)
    hess = np.zeros((3, 3))
    for mass, center in (
        (params.earth_mass, -params.mu),
        (params.moon_mass, 1.0 - params.mu),
    ):
        if mass <= 0.0:
            continue
        r = q - np.array([center, 0.0, 0.0])
        d2 = float(r @ r)
        d = np.sqrt(d2)
        hess += mass * (np.eye(3) / d**3 - 3.0 * np.outer(r, r) / d**5)
    return hess


def variational_matrix(s, params: SystemParams) -> np.ndarray:
    """Jacobian ``A(s) = D(vector_field)`` driving the variational flow.

    With ``S = [[0,-1,0],[1,0,0],[0,0,0]]`` and ``G`` the gravitational
    Hessian, the block form is ``[[S, I], [-G, S]]``; this equals
    ``J . Hess(H)`` for the canonical ``J``, so the trace vanishes.
    """
    s = np.asarray(s, dtype=float)
    check_guard(s[:3], params)
    g = _gravity_hessian(s[:3], params)
    rot = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    a = np.zeros((6, 6))
    a[:3, :3] = rot
    a[:3, 3:] = np.eye(3)
    a[3:, :3] = -g
    a[3:, 3:] = rot
    return a


@dataclass(frozen=True)
class EquilibriumSet:
    """The five Lagrange points with energies, labeled L1..L5.

    ``points`` are positions, ``states`` the corresponding equilibrium
    phase states (zero-velocity momenta attached), ``energies`` their
    Hamiltonian values H(L1)..H(L5), nondecreasing in the label order:
    L1 between the primaries, L2/L3 the remaining collinear pair ordered
    by energy, L4/L5 the triangular pair (upper/lower half-plane).
    """

    mu: float
    points: np.ndarray = field(repr=False)
    states: np.ndarray = field(repr=False)
    energies: np.ndarray
    jacobi: np.ndarray

    def gradient_residuals(self, params: SystemParams) -> np.ndarray:
        """Max-norm of grad U_eff at each point (should be ~1e-15)."""
        out = np.empty(5)
        for i, q in enumerate(self.points):
            grav = gravitational_gradient(q, params, guarded=False)
            grad = grav - np.array([q[0], q[1], 0.0])
            out[i] = np.max(np.abs(grad))
        return out


def _collinear_equation(x: float, mu: float) -> float:
    """dU_eff/dq1 along the x-axis (q2 = q3 = 0)."""
    d_e = x + mu
    d_m = x - 1.0 + mu
    return (
        -x
        + (1.0 - mu) * d_e / abs(d_e) ** 3
        + mu * d_m / abs(d_m) ** 3
    )


def _collinear_root(mu: float, lo: float, hi: float) -> float:
    """Bisect dU_eff/dq1 on (lo, hi); the function is strictly decreasing
    in between consecutive poles, so the bracket holds a unique root."""
    f_lo = _collinear_equation(lo, mu)
    f_hi = _collinear_equation(hi, mu)
    if not (np.isfinite(f_lo) and np.isfinite(f_hi)) or f_lo * f_hi > 0.0:
        raise TrichordError(
            f"collinear bracketing failed on [{lo}, {hi}] for mu={mu}"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        f_mid = _collinear_equation(mid, mu)
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0.0:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def lagrange_points(params: SystemParams) -> EquilibriumSet:
    """Locate the five equilibria and their energies.

    Collinear points come from bracketed bisection of ``dU_eff/dq1 = 0``
    on the three x-axis intervals separated by the primaries (the modified
    potential is monotone on each, making the bracket airtight); the
    triangular points are analytic: ``(1/2 - mu, +-sqrt(3)/2, 0)``.

    Requires ``0 < mu < 1``: the Kepler limit has a circle of relative
    equilibria instead of isolated points.
    """
    mu = params.mu
    if not 0.0 < mu < 1.0:
        raise PreconditionError(
            "lagrange_points requires 0 < mu < 1 (both primaries massive)"
        )
    off = 1e-9
    inner = _collinear_root(mu, -mu + off, 1.0 - mu - off)
    beyond_moon = _collinear_root(mu, 1.0 - mu + off, 3.0)
    beyond_earth = _collinear_root(mu, -3.0, -mu - off)

    def u_on_axis(x: float) -> float:
        return float(
            effective_potential(np.array([x, 0.0, 0.0]), params, guarded=False)
        )

    outer = [beyond_moon, beyond_earth]
    outer.sort(key=u_on_axis)
    xs = [inner, outer[0], outer[1]]
    root3_half = np.sqrt(3.0) / 2.0
    points = np.zeros((5, 3))
    for i, x in enumerate(xs):
        points[i, 0] = x
    points[3] = (0.5 - mu, root3_half, 0.0)
    points[4] = (0.5 - mu, -root3_half, 0.0)

    states = np.hstack([points, equilibrium_momenta(points)])
    energies = effective_potential(points, params, guarded=False)
    if np.any(np.diff(energies) < -1e-12):
        raise TrichordError("equilibrium energies not nondecreasing")
    return EquilibriumSet(
        mu=mu,
        points=points,
        states=states,
        energies=energies,
        jacobi=-2.0 * energies,
    )
