"""Return map to the open-book page and a numerical twist diagnostic.

The page is the set of vertical turning points on one side of the plane:
states with p3 = 0 at a minimum of q3 (dp3/dt > 0), with sign(q3) fixed
by the configured page side.  The planar subproblem {q3 = p3 = 0} is the
binding: it is flow-invariant and never reaches the page, so planar
inputs are rejected rather than iterated.

The twist diagnostic perturbs a planar periodic orbit vertically and
measures how fast the (q3, p3) transverse linearization rotates per
closure of the underlying orbit, reporting the rotation profile over a
ladder of amplitudes together with its zero-amplitude extrapolation.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import dynamics, moser
from .errors import (
    GuardViolationError,
    NonReturningError,
    PreconditionError,
    TrichordError,
)
from .integration import EventSpec, integrate

__all__ = [
    "SectionPoint",
    "SectionTable",
    "TwistReport",
    "next_section_point",
    "return_map_samples",
    "twist_diagnostic",
]

_P3_TOL = 1e-12
_BINDING_TOL = 1e-12
_ENERGY_TOL = 1e-10
_DRIFT_TOL = 1e-8


@dataclass(frozen=True)
class SectionPoint:
    """A vertical turning point on the configured side of the plane.

    ``return_time`` is the flight time from the previous point (None for
    points supplied as inputs); ``binding`` marks the measure-zero case
    of landing exactly on the invariant plane.
    """

    state: np.ndarray
    h: float
    return_time: float | None = None
    binding: bool = False


@dataclass(frozen=True)
class SectionTable:
    """Return-map iterates row by row, with per-row failure flags."""

    rows: tuple[tuple[SectionPoint, ...], ...]
    flags: tuple[str | None, ...]


@dataclass(frozen=True)
class TwistReport:
    """Transverse rotation per return over a ladder of amplitudes.

    ``vertical_rotation_per_return`` holds one cumulatively unwrapped
    angle per amplitude (total rotation divided by the number of returns
    sampled); ``monotonicity_defect`` is the total variation of that
    profile minus the absolute net change, so it vanishes exactly when
    the profile is monotone.  ``zero_amplitude_rotation`` extrapolates
    the two smallest amplitudes in amplitude squared; and
    ``determinant_defects`` records |det B - 1| of the transverse block
    at each amplitude as a symplecticity check.
    """

    orbit_id: str
    returns_sampled: int
    vertical_rotation_per_return: tuple[float, ...]
    monotonicity_defect: float
    amplitudes: tuple[float, ...]
    return_times: tuple[float, ...]
    zero_amplitude_rotation: float | None
    determinant_defects: tuple[float, ...]


def _as_state(x) -> np.ndarray:
    if isinstance(x, SectionPoint):
        return np.asarray(x.state, dtype=float)
    s = np.asarray(x, dtype=float)
    if s.shape != (6,) or not np.all(np.isfinite(s)):
        raise PreconditionError(f"expected a finite 6-state, got shape {s.shape}")
    return s


def _resolve_page_sign(page_sign) -> int:
    if page_sign is None:
        return moser.page_sign()
    if page_sign not in (-1, 1):
        raise PreconditionError(f"page_sign must be -1 or +1, got {page_sign!r}")
    return int(page_sign)


def next_section_point(x, params, h, page_sign=None, t_max: float = 100.0,
                       tol: float = 1e-12) -> SectionPoint:
    """Follow the flow to the next page crossing.

    The event is p3 = 0 crossed at a vertical turning point on the
    configured side of the plane; turning points on the wrong side are
    skipped.  Running past ``t_max`` without a qualifying crossing is a
    non-return; planar input is rejected because the binding is invariant
    and can never reach the page.
    """
    side = _resolve_page_sign(page_sign)
    s0 = _as_state(x)
    h0 = float(dynamics.hamiltonian(s0, params))
    if abs(h0 - h) > _ENERGY_TOL * max(1.0, abs(h)):
        raise PreconditionError(
            f"state is not on the energy level: H = {h0!r} but h = {h!r}"
        )
    if abs(s0[2]) <= _BINDING_TOL and abs(s0[5]) <= _BINDING_TOL:
        raise PreconditionError(
            "planar (binding) input: the plane is flow-invariant and never "
            "reaches the page, so its return map is undefined"
        )
    # Minima of q3 for the lower page, maxima for the upper one.
    direction = 1 if side < 0 else -1
    events = [EventSpec(component=5, direction=direction, terminal=0,
                        min_time=1e-10)]
    traj = integrate(s0, (0.0, t_max), params, tol=tol, events=events,
                     record=False)
    if traj.termination == "guard_violation":
        raise GuardViolationError(
            traj.guard_primary, params.collision_guard, time=traj.guard_time
        )
    for hit in traj.events:
        q3 = hit.state[2]
        if abs(q3) <= _BINDING_TOL:
            return SectionPoint(hit.state, h=float(h),
                                return_time=float(hit.time), binding=True)
        if side * q3 > 0.0:
            return SectionPoint(hit.state, h=float(h),
                                return_time=float(hit.time))
    raise NonReturningError(t_max)


def return_map_samples(points, iterations: int, params, h, page_sign=None,
                       t_max: float = 100.0, tol: float = 1e-12,
                       workers: int = 1) -> SectionTable:
    """Iterate the return map over a batch of points.

    Each row starts with its input point and appends one SectionPoint per
    completed return.  A non-return or guard violation flags the row and
    leaves it partial; other rows are unaffected.  Iterating zero times
    echoes the inputs.
    """
    if iterations < 0:
        raise PreconditionError(f"iterations must be >= 0, got {iterations}")
    side = _resolve_page_sign(page_sign)

    def iterate(x):
        row = [x if isinstance(x, SectionPoint)
               else SectionPoint(_as_state(x), h=float(h))]
        flag = None
        for _ in range(iterations):
            try:
                nxt = next_section_point(row[-1], params, h, page_sign=side,
                                         t_max=t_max, tol=tol)
            except NonReturningError:
                flag = "non_returning"
                break
            except GuardViolationError:
                flag = "guard_violation"
                break
            drift = abs(float(dynamics.hamiltonian(nxt.state, params)) - h)
            if drift > _DRIFT_TOL:
                flag = "energy_drift"
                break
            row.append(nxt)
            if nxt.binding:
                flag = "binding"
                break
        return tuple(row), flag

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(iterate, points))
    else:
        results = [iterate(x) for x in points]
    return SectionTable(
        rows=tuple(r for r, _ in results),
        flags=tuple(f for _, f in results),
    )


def _transverse_angles(stm_samples, omega0):
    """Unwrapped rotation angle of the (q3, p3) block along a trajectory.

    The block is conjugated by diag(sqrt(omega0), 1/sqrt(omega0)) so that
    the linearized vertical oscillation becomes a pure rotation; the
    angle of the rotation part is atan2(B01 - B10, B00 + B11), unwrapped
    cumulatively over the dense samples.
    """
    b = stm_samples[:, (2, 5), :][:, :, (2, 5)]
    b01 = b[:, 0, 1] * omega0
    b10 = b[:, 1, 0] / omega0
    sin_part = b01 - b10
    cos_part = b[:, 0, 0] + b[:, 1, 1]
    mag = np.hypot(sin_part, cos_part)
    if np.any(mag < 1e-12):
        k = int(np.argmin(mag))
        eigs = np.linalg.eigvals(b[k])
        raise TrichordError(
            "degenerate (parabolic) transverse block along the orbit: "
            f"|trace-rotation vector| = {mag[k]:.3e} at sample {k}, "
            f"block eigenvalues {eigs!r}"
        )
    return np.unwrap(np.arctan2(sin_part, cos_part))


def twist_diagnostic(planar_orbit, amplitudes, params, h, page_sign=None,
                     n_returns: int = 1) -> TwistReport:
    """Measure transverse rotation per return at a ladder of amplitudes.

    Each amplitude displaces the planar orbit vertically onto the page
    side and integrates the variational equations through ``n_returns``
    closures of the orbit (same-direction axis recrossings).  The report
    restates only what is measured — rotation angles of the transverse
    block — and makes no claim beyond them.
    """
    side = _resolve_page_sign(page_sign)
    base = np.asarray(planar_orbit.initial, dtype=float)
    if abs(base[2]) > _BINDING_TOL or abs(base[5]) > _BINDING_TOL:
        raise PreconditionError(
            "twist diagnostic requires a planar (binding) reference orbit"
        )
    h_base = float(dynamics.hamiltonian(base, params))
    if abs(h_base - h) > _ENERGY_TOL * max(1.0, abs(h)):
        raise PreconditionError(
            f"planar orbit is not on the energy level: H = {h_base!r}, h = {h!r}"
        )
    amplitudes = tuple(float(a) for a in amplitudes)
    if not amplitudes or any(a <= 0.0 for a in amplitudes):
        raise PreconditionError(
            f"amplitudes must be positive, got {amplitudes!r}"
        )
    if n_returns < 1:
        raise PreconditionError(f"n_returns must be >= 1, got {n_returns}")
    d_e, d_m = dynamics.primary_distances(base[:3], params)
    omega0_sq = 0.0
    if params.earth_mass > 0.0:
        omega0_sq += params.earth_mass / d_e**3
    if params.moon_mass > 0.0:
        omega0_sq += params.moon_mass / d_m**3
    omega0 = math.sqrt(float(omega0_sq))
    qdot2 = base[4] + base[0]
    if qdot2 == 0.0:
        raise PreconditionError(
            "reference orbit starts tangent to the axis crossing; cannot "
            "count returns by recrossings"
        )
    direction = 1 if qdot2 > 0 else -1
    t_budget = 2.0 * planar_orbit.period * (n_returns + 1)
    events = [EventSpec(component=1, direction=direction, terminal=n_returns,
                        min_time=1e-6)]
    rotations = []
    times = []
    det_defects = []
    for amp in amplitudes:
        s0 = base.copy()
        s0[2] += side * amp
        traj, stm = integrate(s0, (0.0, t_budget), params, tol=1e-12,
                              events=events, with_stm=True, record=True)
        if traj.termination != "event_hit":
            raise NonReturningError(t_budget)
        angles = _transverse_angles(traj.stm_samples, omega0)
        total = float(angles[-1] - angles[0])
        rotations.append(total / n_returns)
        times.append(float(traj.final_time) / n_returns)
        block = stm[np.ix_((2, 5), (2, 5))]
        det_defects.append(abs(float(np.linalg.det(block)) - 1.0))
    profile = np.array(rotations)
    if len(profile) > 1:
        variation = float(np.sum(np.abs(np.diff(profile))))
        defect = variation - abs(float(profile[-1] - profile[0]))
    else:
        defect = 0.0
    zero_amp = None
    if len(amplitudes) >= 2:
        order = np.argsort(amplitudes)
        small, next_small = order[0], order[1]
        a1, a2 = amplitudes[next_small], amplitudes[small]
        v1, v2 = profile[next_small], profile[small]
        # Errors scale with amplitude squared; eliminate the leading term.
        zero_amp = float((a1 * a1 * v2 - a2 * a2 * v1) / (a1 * a1 - a2 * a2))
    return TwistReport(
        orbit_id=getattr(planar_orbit, "orbit_id", repr(planar_orbit)),
        returns_sampled=n_returns,
        vertical_rotation_per_return=tuple(float(v) for v in rotations),
        monotonicity_defect=float(defect),
        amplitudes=amplitudes,
        return_times=tuple(times),
        zero_amplitude_rotation=zero_amp,
        determinant_defects=tuple(det_defects),
    )
