"""Adaptive integration of the rotating-frame equations of motion.

Wraps the compiled Dormand-Prince 5(4) core with a friendly API: event
specifications, dense trajectory records, optional state-transition
matrices, and CSV export.  Forward and backward spans are both supported.

A trajectory that enters the collision guard is returned truncated at the
boundary-crossing time with ``termination == "guard_violation"`` and the
offending primary recorded, so searches can treat near-collision seeds as
data rather than exceptions.  Only an initial state that already violates
the guard raises.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import _kernels, dynamics
from .errors import IntegrationError, PreconditionError

__all__ = [
    "EventSpec",
    "EventHit",
    "Trajectory",
    "integrate",
    "trajectory_to_csv",
    "warmup",
]

_PRIMARY_NAMES = ("earth", "moon")


def warmup():
    """Compile the integration kernels ahead of first use."""
    _kernels.warmup()


@dataclass(frozen=True)
class EventSpec:
    """A zero-crossing watch on one state component.

    ``component`` indexes the 6-vector (q₁,q₂,q₃,p₁,p₂,p₃).  ``direction``
    selects rising (+1), falling (−1), or either (0) crossings, measured in
    traversal order (for backward spans this is reversed time).  Crossings
    closer than ``min_time`` to the start are ignored.  A positive
    ``terminal`` stops the run once that many matching crossings occurred.
    """

    component: int
    direction: int = 0
    terminal: int = 0
    min_time: float = 0.0

    def __post_init__(self):
        if not 0 <= self.component < 6:
            raise PreconditionError(
                f"event component must index the state 6-vector, got {self.component}"
            )
        if self.direction not in (-1, 0, 1):
            raise PreconditionError(
                f"event direction must be -1, 0, or +1, got {self.direction}"
            )
        if self.terminal < 0 or self.min_time < 0:
            raise PreconditionError("event terminal count and min_time must be >= 0")


@dataclass(frozen=True)
class EventHit:
    """One localized crossing: time, interpolated state, event channel."""

    time: float
    state: np.ndarray
    channel: int


@dataclass(frozen=True)
class Trajectory:
    """Integration output: sample times, states, and how the run ended.

    ``times`` is strictly monotone in traversal order: increasing for
    forward spans, decreasing for backward ones.  ``max_energy_drift`` is
    the largest |H − H₀| over the stored samples.  ``stm_samples``, when
    present, carries the state-transition matrix at each sample; ``stm``
    is the final one.
    """

    times: np.ndarray
    states: np.ndarray
    max_energy_drift: float
    termination: str
    events: tuple[EventHit, ...] = ()
    guard_primary: str | None = None
    guard_time: float | None = None
    stm: np.ndarray | None = None
    stm_samples: np.ndarray | None = None
    n_steps: int = 0
    n_rhs: int = 0

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


_EMPTY_I64 = np.empty(0, np.int64)
_EMPTY_F64 = np.empty(0)


def _pack_events(events):
    if not events:
        return _EMPTY_I64, _EMPTY_I64, _EMPTY_F64, _EMPTY_I64
    comp = np.array([e.component for e in events], np.int64)
    dirn = np.array([e.direction for e in events], np.int64)
    tmin = np.array([e.min_time for e in events], float)
    term = np.array([e.terminal for e in events], np.int64)
    return comp, dirn, tmin, term


def integrate(
    s0,
    t_span,
    params,
    tol: float = 1e-12,
    events=(),
    with_stm: bool = False,
    record: bool = True,
    max_steps: int = 10_000_000,
    event_capacity: int = 4096,
):
    """Integrate a state over ``t_span``, honoring events and the guard.

    Returns a `Trajectory`, or ``(Trajectory, stm)`` with the final 6×6
    state-transition matrix when ``with_stm`` is set.  ``tol`` is applied
    as both the absolute and relative local error tolerance.  With
    ``record`` off, only the initial and final samples are stored.
    """
    if not 1e-14 <= tol <= 1e-6:
        raise PreconditionError(f"tol must lie in [1e-14, 1e-6], got {tol!r}")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not (np.isfinite(t0) and np.isfinite(t1)) or t0 == t1:
        raise PreconditionError(f"t_span must be nondegenerate, got {t_span!r}")
    s0 = np.asarray(s0, float)
    if s0.shape != (6,) or not np.all(np.isfinite(s0)):
        raise PreconditionError("initial state must be a finite 6-vector")
    dynamics.check_guard(s0[:3], params)

    if with_stm:
        y0 = np.concatenate([s0, np.eye(6).ravel()])
    else:
        y0 = s0.copy()

    comp, dirn, tmin, term = _pack_events(events)
    (
        status,
        t_end,
        y_end,
        ts,
        ys,
        n_rec,
        ev_t,
        ev_y,
        ev_c,
        n_ev,
        guard_primary,
        guard_time,
        n_steps,
        n_rhs,
    ) = _kernels.dopri5_run(
        y0,
        t0,
        t1,
        params.mu,
        tol,
        tol,
        params.collision_guard,
        params.earth_mass > 0.0,
        params.moon_mass > 0.0,
        comp,
        dirn,
        tmin,
        term,
        event_capacity,
        record,
        max_steps,
    )

    if status == 3:
        raise IntegrationError(
            f"step-size underflow at t={t_end!r} (state approaching a singularity?)"
        )
    if status == 4:
        raise IntegrationError(f"step budget {max_steps} exhausted at t={t_end!r}")
    if status == 5:
        raise IntegrationError(
            f"more than {event_capacity} event hits; raise event_capacity"
        )

    if record:
        times = ts[:n_rec].copy()
        raw = ys[:n_rec].copy()
    else:
        times = np.array([t0, t_end])
        raw = np.vstack([y0, y_end])
    states = np.ascontiguousarray(raw[:, :6])

    h_all = dynamics.hamiltonian(states, params, guarded=False)
    drift = float(np.max(np.abs(h_all - h_all[0])))

    hits = tuple(
        EventHit(float(ev_t[k]), ev_y[k, :6].copy(), int(ev_c[k]))
        for k in range(n_ev)
    )

    termination = {0: "completed", 1: "event_hit", 2: "guard_violation"}[status]
    gp = _PRIMARY_NAMES[guard_primary] if status == 2 else None
    gt = float(guard_time) if status == 2 else None

    stm = None
    stm_samples = None
    if with_stm:
        stm = y_end[6:].reshape(6, 6).copy()
        if record:
            stm_samples = raw[:, 6:].reshape(-1, 6, 6)

    traj = Trajectory(
        times=times,
        states=states,
        max_energy_drift=drift,
        termination=termination,
        events=hits,
        guard_primary=gp,
        guard_time=gt,
        stm=stm,
        stm_samples=stm_samples,
        n_steps=int(n_steps),
        n_rhs=int(n_rhs),
    )
    if with_stm:
        return traj, stm
    return traj


def trajectory_to_csv(traj: Trajectory, params) -> str:
    """Render a trajectory as CSV: ``t,q1,q2,q3,p1,p2,p3,H`` at 17 digits."""
    h_all = dynamics.hamiltonian(traj.states, params, guarded=False)
    buf = io.StringIO()
    buf.write("t,q1,q2,q3,p1,p2,p3,H\n")
    for t, s, h in zip(traj.times, traj.states, h_all):
        row = [t, *s, h]
        buf.write(",".join("%.17g" % v for v in row))
        buf.write("\n")
    return buf.getvalue()
