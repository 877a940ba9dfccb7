"""Search for trajectories hitting a symmetry locus perpendicularly twice.

A chord is a flow segment whose endpoints both lie on the fixed locus of a
reversing involution: on Fix(rho2) for the ``xz_plane`` target (states
with q2 = 0 crossing the plane orthogonally) or on Fix(rho1) for the
``x_axis`` target.  The pipeline is

    seed_grid -> shoot -> refine -> dedup

over a deterministic grid parameterizing (locus) ∩ {H = h}: integrate each
seed, localize axis crossings by event detection, keep crossings whose
full locus residual is small, polish each candidate by damped Newton
iteration on (chart coordinates, duration), and merge duplicates —
including the same geometric chord discovered from its other end.

Energy closure makes seed residuals exactly zero by construction: free
chart coordinates place the position on the locus, and the remaining
velocity magnitude is fixed by ``|v| = sqrt(2 (h - U_eff))``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import dynamics, hill
from .errors import (
    GuardViolationError,
    IntegrationError,
    PreconditionError,
    RefinementError,
)
from .integration import EventSpec, integrate
from .symmetry import apply_involution, fixed_residual

__all__ = [
    "TARGETS",
    "Seed",
    "Candidate",
    "CandidateList",
    "Chord",
    "Family",
    "PlanarOrbit",
    "SearchConfig",
    "Catalog",
    "seed_grid",
    "shoot",
    "refine",
    "dedup",
    "find_chords",
    "continue_family",
    "planar_symmetric_orbit",
]

# Target tag -> the involution whose fixed locus carries the endpoints.
TARGETS = {"xz_plane": "rho2", "x_axis": "rho1"}

_RESIDUAL_FLOOR = 1e-11
_MIN_DURATION = 1e-3
_ENERGY_MARGIN = 1e-6


def _target_kind(target: str) -> str:
    if target not in TARGETS:
        raise PreconditionError(
            f"unknown chord target {target!r}; expected one of {tuple(TARGETS)}"
        )
    return TARGETS[target]


@dataclass(frozen=True)
class Seed:
    """A start state on the target locus at energy h, with its chart data."""

    state: np.ndarray
    chart_params: tuple[float, float]
    grid_index: tuple[int, int]
    h: float
    branch: int
    target: str


@dataclass(frozen=True)
class Candidate:
    """A locus crossing found while shooting: a potential far endpoint."""

    time: float
    residual_norm: float
    crossing: int
    state: np.ndarray


class CandidateList(list):
    """Candidates from one seed, annotated with how the shoot ended."""

    def __init__(self, items=(), termination: str = "completed"):
        super().__init__(items)
        self.termination = termination


@dataclass(frozen=True)
class Chord:
    """A refined symmetric chord with its verification data."""

    initial: np.ndarray
    duration: float
    target: str
    residual_norm: float
    crossings: int
    prime: bool
    monodromy: np.ndarray
    h: float
    mu: float
    spatial: bool
    stability: np.ndarray
    final: np.ndarray


@dataclass(frozen=True)
class Family:
    """A continuation branch: chords indexed by a monotone parameter."""

    chords: tuple[Chord, ...]
    continuation_parameter: str
    parameter_values: tuple[float, ...]
    failure_reason: str | None = None


@dataclass(frozen=True)
class PlanarOrbit:
    """A planar symmetric periodic orbit (perpendicular axis crossings)."""

    initial: np.ndarray
    period: float
    h: float
    a: float

    @property
    def orbit_id(self) -> str:
        return "planar a=%.17g T=%.17g" % (self.a, self.period)


@dataclass(frozen=True)
class SearchConfig:
    """Everything find_chords needs beyond (params, h, target)."""

    ranges: tuple[tuple[float, float], tuple[float, float]]
    n: int | tuple[int, int] = 64
    component: str | None = None
    t_max: float = 20.0
    coarse_tol: float = 1e-2
    refine_tol: float = 1e-10
    pos_tol: float = 1e-6
    time_tol: float = 1e-6
    min_duration: float = _MIN_DURATION
    shoot_tol: float = 1e-9
    max_iterations: int = 50
    workers: int = 1


@dataclass(frozen=True)
class Catalog:
    """Deduplicated chords in canonical order, plus search statistics."""

    chords: tuple[Chord, ...]
    summary: dict


def _closure_speed_sq(pos, h, params):
    """2 (h - U_eff) at a locus position; negative means forbidden."""
    return 2.0 * (h - dynamics.effective_potential(pos, params, guarded=False))


def _seed_state(target, chart, branch, h, params):
    """Build the locus state at chart coordinates, or None if forbidden.

    Residual coordinates of the result are exactly zero by construction;
    the energy matches h exactly up to rounding in the square root.
    """
    a, b = chart
    if target == "xz_plane":
        pos = np.array([a, 0.0, b])
        v2 = _closure_speed_sq(pos, h, params)
        if v2 < 0.0:
            return None
        w = branch * math.sqrt(v2)
        return np.array([a, 0.0, b, 0.0, w - a, 0.0])
    pos = np.array([a, 0.0, 0.0])
    v2 = _closure_speed_sq(pos, h, params)
    if v2 < 0.0:
        return None
    v = branch * math.sqrt(v2)
    return np.array([a, 0.0, 0.0, 0.0, v * math.cos(b) - a, v * math.sin(b)])


def _seed_state_jacobian(target, chart, branch, h, params):
    """The state plus its partials along the two chart coordinates.

    Derivatives are analytic: moving a chart coordinate moves the position
    on the locus and re-closes the speed against the effective potential.
    """
    a, b = chart
    if target == "xz_plane":
        pos = np.array([a, 0.0, b])
        v2 = _closure_speed_sq(pos, h, params)
        if v2 <= 0.0:
            return None
        v = math.sqrt(v2)
        grad = dynamics.gravitational_gradient(pos, params, guarded=False)
        # dU_eff/dq1 = grad_1 - q1 (centrifugal), dU_eff/dq3 = grad_3.
        u_a = grad[0] - a
        u_b = grad[2]
        w_a = -branch * u_a / v
        w_b = -branch * u_b / v
        s0 = np.array([a, 0.0, b, 0.0, branch * v - a, 0.0])
        d_a = np.array([1.0, 0.0, 0.0, 0.0, w_a - 1.0, 0.0])
        d_b = np.array([0.0, 0.0, 1.0, 0.0, w_b, 0.0])
        return s0, d_a, d_b
    pos = np.array([a, 0.0, 0.0])
    v2 = _closure_speed_sq(pos, h, params)
    if v2 <= 0.0:
        return None
    v = math.sqrt(v2)
    grad = dynamics.gravitational_gradient(pos, params, guarded=False)
    u_a = grad[0] - a
    v_a = -u_a / v
    cb, sb = math.cos(b), math.sin(b)
    w = branch * v
    s0 = np.array([a, 0.0, 0.0, 0.0, w * cb - a, w * sb])
    d_a = np.array([1.0, 0.0, 0.0, 0.0, branch * v_a * cb - 1.0, branch * v_a * sb])
    d_b = np.array([0.0, 0.0, 0.0, 0.0, -w * sb, w * cb])
    return s0, d_a, d_b


def _guard_clear(pos, params) -> bool:
    d_e, d_m = dynamics.primary_distances(pos, params)
    if params.earth_mass > 0.0 and d_e < params.collision_guard:
        return False
    if params.moon_mass > 0.0 and d_m < params.collision_guard:
        return False
    return True


def seed_grid(params, h, target, ranges, n, component=None):
    """Seeds covering (target locus) ∩ {H = h} over a rectangular chart grid.

    For ``xz_plane`` the chart coordinates are (q1, q3); for ``x_axis``
    they are (q1, velocity tilt angle).  Grid cells in the forbidden
    region or inside the collision guard are skipped; both square-root
    branches of the energy closure are emitted.  With ``component`` set,
    only seeds whose position classifies into that Hill component remain.
    """
    _target_kind(target)
    if isinstance(n, int):
        na = nb = n
    else:
        na, nb = n
    if na < 1 or nb < 1:
        raise PreconditionError(f"grid must have at least one point per axis, got {n!r}")
    (a0, a1), (b0, b1) = ranges
    a_vals = np.linspace(a0, a1, na)
    b_vals = np.linspace(b0, b1, nb)
    seeds = []
    for i, a in enumerate(a_vals):
        for j, b in enumerate(b_vals):
            pos = np.array([a, 0.0, b]) if target == "xz_plane" else np.array([a, 0.0, 0.0])
            if not _guard_clear(pos, params):
                continue
            if component is not None:
                if hill.hill_classification(pos, h, params) != component:
                    continue
            v2 = _closure_speed_sq(pos, h, params)
            if v2 < 0.0:
                continue
            branches = (1,) if v2 == 0.0 else (1, -1)
            for branch in branches:
                state = _seed_state(target, (a, b), branch, h, params)
                seeds.append(
                    Seed(state, (float(a), float(b)), (i, j), float(h), branch, target)
                )
    return seeds


def shoot(seed: Seed, params, t_max: float, coarse_tol: float = 1e-2,
          tol: float = 1e-9) -> CandidateList:
    """Integrate a seed and collect locus crossings with small residual.

    Every zero of q2 is localized on the dense output; crossings whose
    full residual (all locus coordinates at the crossing) has 2-norm at
    most ``coarse_tol`` become candidates, annotated with their crossing
    ordinal.  A guard violation truncates the list rather than raising.
    The integrator runs looser than the refinement stage by default: the
    coarse acceptance threshold only needs crossing residuals to a few
    digits, and every kept candidate is re-solved to full precision.
    """
    if t_max <= 0.0:
        raise PreconditionError(f"t_max must be positive, got {t_max!r}")
    kind = _target_kind(seed.target)
    events = [EventSpec(component=1, direction=0, terminal=0, min_time=1e-8)]
    traj = integrate(
        seed.state, (0.0, t_max), params, tol=tol, events=events, record=False
    )
    out = CandidateList(termination=traj.termination)
    for ordinal, hit in enumerate(traj.events, start=1):
        residual = fixed_residual(kind, hit.state)
        norm = float(np.linalg.norm(residual))
        if norm <= coarse_tol:
            out.append(Candidate(hit.time, norm, ordinal, hit.state))
    return out


def _chord_from_solution(seed, chart, branch, duration, params, tol, detection_tol,
                         min_duration):
    """Verification pass: rebuild the chord record from scratch.

    Re-integrates the polished solution with the variational equations and
    dense records, recomputes the far-end residual, counts interior
    near-crossings, measures spatial extent, and extracts stability data.
    """
    kind = _target_kind(seed.target)
    s0 = _seed_state(seed.target, chart, branch, seed.h, params)
    if s0 is None:
        raise RefinementError("solution left the admissible energy region")
    events = [EventSpec(component=1, direction=0, terminal=0, min_time=1e-8)]
    traj, stm = integrate(
        s0, (0.0, duration), params, tol=1e-12, events=events,
        with_stm=True, record=True,
    )
    if traj.termination != "completed":
        raise RefinementError(
            f"verification run ended early ({traj.termination}) at t={traj.final_time!r}"
        )
    residual = fixed_residual(kind, traj.final_state)
    norm = float(np.linalg.norm(residual))
    if norm > tol:
        raise RefinementError(
            f"verification residual {norm:.3e} exceeds tolerance {tol:.1e}"
        )
    crossings = 0
    for hit in traj.events:
        if not min_duration < hit.time < duration - min_duration:
            continue
        if np.linalg.norm(fixed_residual(kind, hit.state)) <= detection_tol:
            crossings += 1
    vertical = np.abs(traj.states[:, 2]) + np.abs(traj.states[:, 5])
    spatial = bool(np.max(vertical) >= 1e-6)
    moduli = np.sort(np.abs(np.linalg.eigvals(stm)))[::-1]
    return Chord(
        initial=s0,
        duration=float(duration),
        target=seed.target,
        residual_norm=max(norm, _RESIDUAL_FLOOR),
        crossings=crossings,
        prime=crossings == 0,
        monodromy=stm,
        h=seed.h,
        mu=params.mu,
        spatial=spatial,
        stability=moduli,
        final=traj.final_state,
    )


def refine(candidate, params, tol: float = 1e-10, min_duration: float = _MIN_DURATION,
           detection_tol: float = 1e-2, max_iterations: int = 50) -> Chord:
    """Newton-polish a candidate into a chord.

    ``candidate`` is a ``(Seed, duration)`` pair.  The unknowns are the
    two chart coordinates and the duration; the residual is the locus
    coordinate vector at the far end, differentiated through the seed
    parameterization by the state-transition matrix.  Steps are damped by
    a halving line search; an ill-conditioned Jacobian or a stalled
    residual raises with the iteration trace attached.
    """
    seed, t1 = candidate
    kind = _target_kind(seed.target)
    idx = list({"rho2": (1, 3, 5), "rho1": (1, 2, 3)}[kind])
    u = np.array([seed.chart_params[0], seed.chart_params[1], float(t1)])
    branch = seed.branch

    def residual_at(u_try, itol):
        if u_try[2] <= min_duration:
            return None
        s0 = _seed_state(seed.target, (u_try[0], u_try[1]), branch, seed.h, params)
        if s0 is None or not _guard_clear(s0[:3], params):
            return None
        traj, stm = integrate(
            s0, (0.0, u_try[2]), params, tol=itol, with_stm=True, record=False
        )
        if traj.termination != "completed":
            return None
        r = fixed_residual(kind, traj.final_state)
        return r, float(np.linalg.norm(r)), traj.final_state, stm

    # Far from the solution a loose integration suffices; the endgame and
    # every reported number run at full precision.
    loose, tight, switch = 1e-10, 1e-12, 1e-8
    itol = loose
    trace = []
    current = residual_at(u, itol)
    if current is None:
        raise RefinementError(
            "candidate is not integrable over its duration "
            f"(u={u.tolist()!r})", trace=tuple(trace)
        )
    for iteration in range(max_iterations):
        if itol != tight and current[1] <= switch:
            itol = tight
            refreshed = residual_at(u, itol)
            if refreshed is None:
                raise RefinementError(
                    "iterate became non-integrable at full precision",
                    trace=tuple(trace),
                )
            current = refreshed
        r, norm, y_end, stm = current
        trace.append((iteration, norm))
        if itol == tight and norm <= 0.1 * tol:
            break
        jac_seed = _seed_state_jacobian(
            seed.target, (u[0], u[1]), branch, seed.h, params
        )
        if jac_seed is None:
            raise RefinementError(
                "iterate left the admissible energy region", trace=tuple(trace)
            )
        _, d_a, d_b = jac_seed
        jcols = np.empty((3, 3))
        jcols[:, 0] = (stm @ d_a)[idx]
        jcols[:, 1] = (stm @ d_b)[idx]
        jcols[:, 2] = dynamics.vector_field(y_end, params)[idx]
        condition = float(np.linalg.cond(jcols))
        if not np.isfinite(condition) or condition >= 1e12:
            raise RefinementError(
                f"shooting Jacobian is numerically singular (cond ~ {condition:.2e})",
                trace=tuple(trace), condition=condition,
            )
        step = np.linalg.solve(jcols, -r)
        accepted = None
        lam = 1.0
        for _ in range(5):
            attempt = residual_at(u + lam * step, itol)
            if attempt is not None and attempt[1] < norm:
                accepted = (u + lam * step, attempt)
                break
            lam *= 0.5
        if accepted is None:
            if itol != tight:
                # A loose-phase stall may just be integration noise:
                # escalate to full precision and keep iterating.
                itol = tight
                refreshed = residual_at(u, itol)
                if refreshed is None:
                    raise RefinementError(
                        "iterate became non-integrable at full precision",
                        trace=tuple(trace),
                    )
                current = refreshed
                continue
            if norm <= tol:
                break
            raise RefinementError(
                f"Newton stalled at residual {norm:.3e}", trace=tuple(trace)
            )
        u, current = accepted
    norm = current[1]
    if itol != tight:
        raise RefinementError(
            f"no convergence after {max_iterations} iterations "
            f"(residual {norm:.3e})", trace=tuple(trace)
        )
    if norm > tol:
        raise RefinementError(
            f"no convergence after {max_iterations} iterations "
            f"(residual {norm:.3e})", trace=tuple(trace)
        )
    if u[2] <= min_duration:
        raise RefinementError(
            f"degenerate chord: duration {u[2]:.3e} at or below {min_duration:.1e}"
        )
    return _chord_from_solution(
        seed, (float(u[0]), float(u[1])), branch, float(u[2]), params,
        tol, detection_tol, min_duration,
    )


def _lex_less(x, y) -> bool:
    for a, b in zip(x, y):
        if a != b:
            return a < b
    return False


def dedup(chords, pos_tol: float = 1e-6, time_tol: float = 1e-6):
    """Merge duplicate chords and order the catalog canonically.

    Two chords are the same when their durations agree within
    ``time_tol`` and their initial states agree within ``pos_tol``
    (sup-norm) — directly, or after swapping ends: reflecting a chord's
    final state through the target involution restarts the same geometric
    chord from its other endpoint.  Each group keeps the lexicographically
    smallest initial state; the catalog sorts by (duration, initial).
    """
    chords = list(chords)
    if not chords:
        return []
    keys = {(c.mu, c.h, c.target) for c in chords}
    if len(keys) > 1:
        raise PreconditionError(
            f"dedup requires chords sharing (mu, h, target); got {sorted(keys)!r}"
        )
    kind = _target_kind(chords[0].target)
    n = len(chords)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    inits = np.array([c.initial for c in chords])
    swaps = np.array([apply_involution(kind, c.final) for c in chords])
    durations = np.array([c.duration for c in chords])
    block = 256
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        near = np.abs(durations[lo:hi, None] - durations[None, :]) <= time_tol
        ii = inits[lo:hi, None, :]
        si = swaps[lo:hi, None, :]
        same = near & (
            (np.abs(ii - inits[None, :, :]).max(axis=2) <= pos_tol)
            | (np.abs(ii - swaps[None, :, :]).max(axis=2) <= pos_tol)
            | (np.abs(si - inits[None, :, :]).max(axis=2) <= pos_tol)
        )
        for bi, j in np.argwhere(same):
            i = lo + int(bi)
            j = int(j)
            if i < j:
                union(i, j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    representatives = []
    for members in groups.values():
        best = members[0]
        for i in members[1:]:
            if _lex_less(inits[i], inits[best]):
                best = i
        representatives.append(chords[best])
    representatives.sort(key=lambda c: (c.duration, *c.initial))
    return representatives


def _summary(seeds, candidate_lists, chords, catalog):
    durations = [c.duration for c in catalog]
    residuals = [c.residual_norm for c in catalog]
    by_crossings = {}
    for c in catalog:
        by_crossings[c.crossings] = by_crossings.get(c.crossings, 0) + 1
    terminations = {}
    for cl in candidate_lists:
        terminations[cl.termination] = terminations.get(cl.termination, 0) + 1
    return {
        "n_seeds": len(seeds),
        "n_candidates": sum(len(cl) for cl in candidate_lists),
        "n_refined": len(chords),
        "n_cataloged": len(catalog),
        "n_prime": sum(1 for c in catalog if c.prime),
        "n_spatial": sum(1 for c in catalog if c.spatial),
        "by_crossings": {str(k): by_crossings[k] for k in sorted(by_crossings)},
        "shoot_terminations": {k: terminations[k] for k in sorted(terminations)},
        "duration_min": min(durations) if durations else None,
        "duration_max": max(durations) if durations else None,
        "residual_max": max(residuals) if residuals else None,
    }


def find_chords(params, h, target, config: SearchConfig) -> Catalog:
    """The full pipeline: seed, shoot, refine, dedup, summarize.

    Deterministic for a fixed config: seeds enumerate in grid order,
    candidates in time order, and results merge in submission order
    regardless of the worker count.
    """
    _target_kind(target)
    if params.mu > 0.0:
        h_l1 = dynamics.lagrange_points(params).energies[0]
        if h >= h_l1 + _ENERGY_MARGIN:
            raise PreconditionError(
                f"h = {h!r} is not below the first critical energy "
                f"H(L1) = {h_l1!r}; the search targets the low-energy regime"
            )
    seeds = seed_grid(
        params, h, target, config.ranges, config.n, component=config.component
    )

    def do_shoot(seed):
        return shoot(seed, params, config.t_max, config.coarse_tol,
                     tol=config.shoot_tol)

    def do_refine(pair):
        try:
            return refine(
                pair, params, tol=config.refine_tol,
                min_duration=config.min_duration,
                detection_tol=config.coarse_tol,
                max_iterations=config.max_iterations,
            )
        except (RefinementError, IntegrationError, GuardViolationError):
            return None

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            candidate_lists = list(pool.map(do_shoot, seeds, chunksize=16))
            pairs = [
                (seed, cand.time)
                for seed, cl in zip(seeds, candidate_lists)
                for cand in cl
            ]
            refined = list(pool.map(do_refine, pairs, chunksize=4))
    else:
        candidate_lists = [do_shoot(s) for s in seeds]
        pairs = [
            (seed, cand.time)
            for seed, cl in zip(seeds, candidate_lists)
            for cand in cl
        ]
        refined = [do_refine(p) for p in pairs]

    chords = [c for c in refined if c is not None]
    catalog = dedup(chords, pos_tol=config.pos_tol, time_tol=config.time_tol)
    summary = _summary(seeds, candidate_lists, chords, catalog)
    summary["n_refine_failed"] = len(pairs) - len(chords)
    return Catalog(tuple(catalog), summary)


def _chart_of(chord: Chord):
    """Recover (chart coordinates, branch) from a chord's initial state."""
    s = chord.initial
    if chord.target == "xz_plane":
        w = s[4] + s[0]  # qdot2
        branch = -1 if w < 0 else 1
        return (float(s[0]), float(s[2])), branch
    wy = s[4] + s[0]
    wz = s[5]
    theta = math.atan2(wz, wy)
    return (float(s[0]), float(theta)), 1


def continue_family(start: Chord, parameter: str, step: float, n_steps: int,
                    params) -> Family:
    """Natural-parameter continuation of a chord in energy or mass ratio.

    Marches from the start chord toward ``start value + n_steps * step``,
    re-closing the seed at the current chart coordinates and refining at
    each stop.  A failed refinement halves the step; steps below 1e-6
    truncate the family with the failure recorded.
    """
    if parameter not in ("h", "mu"):
        raise PreconditionError(
            f"continuation parameter must be 'h' or 'mu', got {parameter!r}"
        )
    if n_steps < 0:
        raise PreconditionError(f"n_steps must be >= 0, got {n_steps}")
    chords = [start]
    p0 = start.h if parameter == "h" else start.mu
    values = [p0]
    if n_steps == 0 or step == 0.0:
        return Family(tuple(chords), parameter, tuple(values))
    end = p0 + n_steps * step
    direction = 1.0 if step > 0 else -1.0
    cur = p0
    cur_step = step
    failure = None
    while direction * (end - cur) > 1e-15 * max(1.0, abs(end)):
        if abs(cur_step) < 1e-6:
            failure = f"step underflow below 1e-6 at {parameter} = {cur!r}"
            break
        nxt = cur + cur_step
        if direction * (nxt - end) > 0:
            nxt = end
        last = chords[-1]
        chart, branch = _chart_of(last)
        if parameter == "h":
            p_new = params
            h_new = nxt
        else:
            if not 0.0 <= nxt < 1.0:
                failure = f"mass ratio {nxt!r} left [0, 1)"
                break
            p_new = replace(params, mu=nxt)
            h_new = last.h
        probe = Seed(None, chart, (-1, -1), h_new, branch, last.target)
        if _seed_state(last.target, chart, branch, h_new, p_new) is None:
            failure = (
                f"energy closure failed at {parameter} = {nxt!r}: the seed "
                "point fell into the forbidden region"
            )
            break
        try:
            member = refine((probe, last.duration), p_new)
        except (RefinementError, IntegrationError, GuardViolationError):
            cur_step *= 0.5
            continue
        chords.append(member)
        values.append(nxt)
        cur = nxt
        cur_step = step if abs(cur_step * 2) > abs(step) else cur_step * 2
    return Family(tuple(chords), parameter, tuple(values), failure)


def planar_symmetric_orbit(params, h, a_range, branch: int = -1, n_scan: int = 33,
                           t_max: float = 50.0) -> PlanarOrbit:
    """A planar periodic orbit crossing the axis perpendicularly twice.

    Scans the axis interval for a sign change of the perpendicularity
    defect (radial momentum at the first axis recrossing) and closes it by
    bisection.  The orbit closes after reflecting through the axis, so the
    period is twice the crossing time.
    """
    lo, hi = a_range
    grid = np.linspace(lo, hi, n_scan)
    event = [EventSpec(component=1, direction=0, terminal=1, min_time=1e-3)]

    def defect(a):
        pos = np.array([a, 0.0, 0.0])
        if not _guard_clear(pos, params):
            return None
        v2 = _closure_speed_sq(pos, h, params)
        if v2 <= 0.0:
            return None
        s0 = np.array([a, 0.0, 0.0, 0.0, branch * math.sqrt(v2) - a, 0.0])
        traj = integrate(s0, (0.0, t_max), params, tol=1e-12, events=event,
                         record=False)
        if traj.termination != "event_hit":
            return None
        return float(traj.final_state[3]), float(traj.final_time), s0

    samples = [(a, defect(a)) for a in grid]
    bracket = None
    for (a0, d0), (a1, d1) in zip(samples, samples[1:]):
        if d0 is None or d1 is None:
            continue
        if d0[0] == 0.0:
            bracket = (a0, a0)
            break
        if d0[0] * d1[0] < 0.0:
            bracket = (a0, a1)
            break
    if bracket is None:
        raise RefinementError(
            f"no perpendicular axis recrossing found over a in [{lo!r}, {hi!r}] "
            f"at h = {h!r}"
        )
    a_lo, a_hi = bracket
    d_lo = defect(a_lo)
    for _ in range(80):
        if a_lo == a_hi:
            break
        mid = 0.5 * (a_lo + a_hi)
        d_mid = defect(mid)
        if d_mid is None:
            raise RefinementError(
                f"perpendicularity defect became undefined at a = {mid!r}"
            )
        if d_lo[0] * d_mid[0] <= 0.0:
            a_hi = mid
        else:
            a_lo = mid
            d_lo = d_mid
    a_star = 0.5 * (a_lo + a_hi) if a_lo != a_hi else a_lo
    d_star = defect(a_star)
    if d_star is None:
        raise RefinementError(f"orbit closure lost at a = {a_star!r}")
    _, t_cross, s0 = d_star
    return PlanarOrbit(initial=s0, period=2.0 * t_cross, h=float(h), a=float(a_star))
