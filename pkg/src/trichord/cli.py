"""Command-line interface: searches, diagnostics, artifacts, verification.

Configuration resolves in a fixed order: built-in defaults, then a JSON
config file (``--config``), then ``TRICHORD_``-prefixed environment
variables (tolerances only), then explicit flags.  Exit codes: 0 on
success, 1 on runtime failures (partial artifacts are left in place),
2 on configuration errors with a message naming the offending field.

All artifacts are deterministic for a fixed configuration — the worker
count never changes output bytes, and the only volatile field (the
timestamp) sits alone on the second line of each catalog.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import chords, dynamics, hill, jsonio, moser, section, symmetry
from ._version import __version__
from .errors import ConfigError, PreconditionError, TrichordError
from .integration import integrate, trajectory_to_csv, warmup

_EM_MU = 0.0121505856  # Earth–Moon (conventional); a configuration default.

_TOL_ENV = {
    "TRICHORD_TOL": "tol",
    "TRICHORD_COARSE_TOL": "coarse_tol",
    "TRICHORD_REFINE_TOL": "refine_tol",
    "TRICHORD_SHOOT_TOL": "shoot_tol",
    "TRICHORD_POS_TOL": "pos_tol",
    "TRICHORD_TIME_TOL": "time_tol",
}


def _parse_floats(text, count, field):
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != count:
        raise ConfigError(field, f"expected {count} comma-separated reals, "
                                 f"got {len(parts)} in {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(field, f"not a real number in {text!r}: {exc}")


def _normalize_target(raw):
    tag = raw.replace("-", "_")
    if tag not in chords.TARGETS:
        raise ConfigError("target", f"unknown target {raw!r}; "
                                    "expected xz-plane or x-axis")
    return tag


def _env_tolerances():
    out = {}
    for var, key in _TOL_ENV.items():
        raw = os.environ.get(var)
        if raw is None:
            continue
        try:
            out[key] = float(raw)
        except ValueError:
            raise ConfigError(var, f"environment override is not a real: {raw!r}")
    return out


def _load_config_file(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read config file: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"config file is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigError("config", "config file must hold a JSON object")
    return data


def _layered(args, file_cfg, key, default, cast=None):
    """defaults < config file < environment (tolerances) < flags."""
    value = default
    if key in file_cfg:
        value = file_cfg[key]
    env = _env_tolerances()
    if key in env:
        value = env[key]
    flag = getattr(args, key, None)
    if flag is not None:
        value = flag
    if cast is not None and value is not None:
        try:
            value = cast(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(key, f"invalid value {value!r}: {exc}")
    return value


def _check_tol(name, value, lo, hi):
    if not (lo <= value <= hi):
        raise ConfigError(name, f"must lie in [{lo:g}, {hi:g}], got {value!r}")
    return value


def _resolve_params(mu):
    if not 0.0 <= mu < 1.0:
        raise ConfigError("mu", f"mass ratio must lie in [0, 1), got {mu!r}")
    return dynamics.SystemParams(mu=mu)


def _resolve_h(args, file_cfg, params):
    h = _layered(args, file_cfg, "h", None, float if "h" in file_cfg or
                 getattr(args, "h", None) is not None else None)
    delta = _layered(args, file_cfg, "l1_delta", None)
    if h is not None and delta is not None:
        raise ConfigError("h", "give either h or l1-delta, not both")
    if h is not None:
        return float(h)
    if delta is not None:
        if params.mu <= 0.0:
            raise ConfigError("l1_delta", "l1-delta needs mu > 0 "
                                          "(no critical point at mu = 0)")
        h_l1 = dynamics.lagrange_points(params).energies[0]
        return float(h_l1) - float(delta)
    raise ConfigError("h", "an energy is required: pass --h or --l1-delta")


def _write_json(path, payload):
    text = jsonio.render_json(payload) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_lagrange(args):
    params = _resolve_params(args.mu)
    eq = dynamics.lagrange_points(params)
    payload = {
        "meta": jsonio.build_meta(params),
        "points": [
            {
                "label": label,
                "state": list(state),
                "h": energy,
                "c": -2.0 * energy,
            }
            for label, state, energy in zip(eq.labels, eq.states, eq.energies)
        ],
    }
    _write_json(args.output, payload)
    return 0


def _cmd_integrate(args):
    params = _resolve_params(args.mu)
    state = np.array(_parse_floats(args.state, 6, "state"))
    file_cfg = _load_config_file(args.config)
    tol = _check_tol("tol", _layered(args, file_cfg, "tol", 1e-12, float),
                     1e-14, 1e-6)
    span = _parse_floats(args.t_span, 2, "t_span")
    warmup()
    traj = integrate(state, (span[0], span[1]), params, tol=tol)
    csv = trajectory_to_csv(traj, params)
    if args.output is None or args.output == "-":
        sys.stdout.write(csv)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(csv)
    if traj.termination != "completed":
        sys.stderr.write(f"integration ended early: {traj.termination}\n")
        return 1
    return 0


def _cmd_regularize(args):
    params = _resolve_params(args.mu)
    state = np.array(_parse_floats(args.state, 6, "state"))
    reg = moser.to_regularized(state)
    back = moser.from_regularized(reg)
    sphere, orth = reg.constraint_residuals()
    payload = {
        "meta": jsonio.build_meta(params),
        "state": list(state),
        "xi": list(reg.xi),
        "eta": list(reg.eta),
        "constraint_residuals": {"sphere": sphere, "orthogonality": orth},
        "round_trip_error": float(np.max(np.abs(back - state))),
    }
    _write_json(args.output, payload)
    return 0


def _search_config(args, file_cfg):
    ranges_raw = _layered(args, file_cfg, "ranges", None)
    if ranges_raw is None:
        raise ConfigError("ranges", "chord searches need --ranges a0,a1,b0,b1")
    if isinstance(ranges_raw, str):
        vals = _parse_floats(ranges_raw, 4, "ranges")
    else:
        vals = [float(v) for v in np.asarray(ranges_raw).ravel()]
        if len(vals) != 4:
            raise ConfigError("ranges", f"expected 4 reals, got {len(vals)}")
    n_raw = _layered(args, file_cfg, "n", 64)
    if isinstance(n_raw, str):
        parts = [int(p) for p in n_raw.replace(",", " ").split()]
        n = parts[0] if len(parts) == 1 else (parts[0], parts[1])
    elif isinstance(n_raw, (list, tuple)):
        n = (int(n_raw[0]), int(n_raw[1]))
    else:
        n = int(n_raw)
    component = _layered(args, file_cfg, "component", None)
    if component is not None and component not in (
        "earth_component", "moon_component", "exterior", "forbidden"
    ):
        raise ConfigError("component", f"unknown Hill label {component!r}")
    cfg = chords.SearchConfig(
        ranges=((vals[0], vals[1]), (vals[2], vals[3])),
        n=n,
        component=component,
        t_max=float(_layered(args, file_cfg, "t_max", 20.0, float)),
        coarse_tol=_check_tol(
            "coarse_tol",
            _layered(args, file_cfg, "coarse_tol", 1e-2, float), 1e-8, 1.0),
        refine_tol=_check_tol(
            "refine_tol",
            _layered(args, file_cfg, "refine_tol", 1e-10, float), 1e-13, 1e-6),
        pos_tol=_check_tol(
            "pos_tol", _layered(args, file_cfg, "pos_tol", 1e-6, float),
            1e-12, 1e-2),
        time_tol=_check_tol(
            "time_tol", _layered(args, file_cfg, "time_tol", 1e-6, float),
            1e-12, 1e-2),
        shoot_tol=_check_tol(
            "shoot_tol", _layered(args, file_cfg, "shoot_tol", 1e-9, float),
            1e-14, 1e-6),
        max_iterations=int(_layered(args, file_cfg, "max_iterations", 50, int)),
        workers=int(_layered(args, file_cfg, "workers", 1, int)),
    )
    if cfg.workers < 1:
        raise ConfigError("workers", f"must be >= 1, got {cfg.workers}")
    if cfg.t_max <= 0:
        raise ConfigError("t_max", f"must be positive, got {cfg.t_max}")
    return cfg


def _config_echo(cfg, target, h, extra=None):
    """The config block recorded in metadata.

    Worker count and output path are deliberately omitted: neither may
    influence artifact bytes.
    """
    echo = {
        "target": target,
        "h": h,
        "ranges": [list(cfg.ranges[0]), list(cfg.ranges[1])],
        "n": list(cfg.n) if isinstance(cfg.n, tuple) else cfg.n,
        "component": cfg.component,
        "t_max": cfg.t_max,
        "coarse_tol": cfg.coarse_tol,
        "refine_tol": cfg.refine_tol,
        "shoot_tol": cfg.shoot_tol,
        "pos_tol": cfg.pos_tol,
        "time_tol": cfg.time_tol,
        "max_iterations": cfg.max_iterations,
        "sampler_seed": 0,
    }
    if extra:
        echo.update(extra)
    return echo


def _cmd_chords_find(args):
    params = _resolve_params(args.mu)
    file_cfg = _load_config_file(args.config)
    h = _resolve_h(args, file_cfg, params)
    target = _normalize_target(args.target)
    cfg = _search_config(args, file_cfg)
    if params.mu > 0.0:
        h_l1 = float(dynamics.lagrange_points(params).energies[0])
        if h >= h_l1 + 1e-6:
            raise ConfigError(
                "h", f"h = {h!r} is not below the first critical energy "
                     f"H(L1) = {h_l1!r}")
    warmup()
    catalog = chords.find_chords(params, h, target, cfg)
    meta = jsonio.build_meta(params, h=h, extra={
        "config": _config_echo(cfg, target, h),
        "summary": catalog.summary,
    })
    out = args.output or "catalog.jsonl"
    jsonio.write_catalog(out, catalog, meta)
    sys.stderr.write(
        f"cataloged {len(catalog.chords)} chords -> {out}\n")
    return 0


def _cmd_chords_continue(args):
    params = _resolve_params(args.mu)
    _, _, records = jsonio.load_catalog(args.catalog)
    if not records:
        raise ConfigError("catalog", f"no chords in {args.catalog!r}")
    if not 0 <= args.index < len(records):
        raise ConfigError("index", f"must lie in [0, {len(records) - 1}], "
                                   f"got {args.index}")
    rec = records[args.index]
    target = _normalize_target(rec["target"])
    if args.parameter not in ("h", "mu"):
        raise ConfigError("parameter", f"must be h or mu, got {args.parameter!r}")
    warmup()
    state = np.array(list(rec["q"]) + list(rec["p"]))
    if target == "xz_plane":
        chart = (float(state[0]), float(state[2]))
        branch = -1 if state[4] + state[0] < 0 else 1
    else:
        chart = (float(state[0]),
                 float(math.atan2(state[5], state[4] + state[0])))
        branch = 1
    seed = chords.Seed(state, chart, (-1, -1), float(rec["h"]), branch, target)
    start = chords.refine((seed, float(rec["duration"])), params)
    family = chords.continue_family(start, args.parameter, args.step,
                                    args.n_steps, params)
    meta = jsonio.build_meta(params, h=start.h, extra={
        "continuation": {
            "parameter": family.continuation_parameter,
            "parameter_values": list(family.parameter_values),
            "failure_reason": family.failure_reason,
            "start_id": jsonio.chord_id(start),
        },
    })
    out = args.output or "family.jsonl"
    fake = chords.Catalog(family.chords, {})
    jsonio.write_catalog(out, fake, meta)
    sys.stderr.write(
        f"continued to {len(family.chords)} members -> {out}\n")
    return 0 if family.failure_reason is None else 1


def _cmd_section_map(args):
    params = _resolve_params(args.mu)
    state = np.array(_parse_floats(args.state, 6, "state"))
    file_cfg = _load_config_file(args.config)
    tol = _check_tol("tol", _layered(args, file_cfg, "tol", 1e-12, float),
                     1e-14, 1e-6)
    h = getattr(args, "h", None)
    if h is None:
        h = float(dynamics.hamiltonian(state, params))
    warmup()
    table = section.return_map_samples(
        [state], args.iterations, params, h,
        page_sign=args.page_sign, t_max=args.t_max, tol=tol)
    meta = jsonio.build_meta(params, h=h)
    _write_json(args.output, jsonio.section_table_record(table, meta))
    if any(flag in ("non_returning", "guard_violation", "energy_drift")
           for flag in table.flags):
        return 1
    return 0


def _cmd_section_twist(args):
    params = _resolve_params(args.mu)
    file_cfg = _load_config_file(args.config)
    h = _resolve_h(args, file_cfg, params)
    a_range = _parse_floats(args.a_range, 2, "a_range")
    amplitudes = [float(v) for v in
                  _parse_floats(args.amplitudes, len(args.amplitudes.split(",")),
                                "amplitudes")]
    if args.n_returns < 1:
        raise ConfigError("n_returns", f"must be >= 1, got {args.n_returns}")
    warmup()
    orbit = chords.planar_symmetric_orbit(
        params, h, (a_range[0], a_range[1]), branch=args.branch)
    report = section.twist_diagnostic(orbit, amplitudes, params, h,
                                      page_sign=args.page_sign,
                                      n_returns=args.n_returns)
    meta = jsonio.build_meta(params, h=h, extra={
        "orbit": {"initial": list(orbit.initial), "period": orbit.period,
                  "a": orbit.a},
    })
    _write_json(args.output, jsonio.twist_report_record(report, meta))
    return 0


# ---------------------------------------------------------------------------
# verify: the invariant suite


def _verify_checks():
    rng = np.random.default_rng(20260821)
    checks = []

    def involution_algebra():
        j = np.zeros((6, 6), dtype=np.int64)
        j[:3, 3:] = np.eye(3, dtype=np.int64)
        j[3:, :3] = -np.eye(3, dtype=np.int64)
        expected = {"r": 1, "rho1": -1, "rho2": -1}
        for kind, sign in expected.items():
            m = symmetry.involution_matrix(kind)
            if not np.array_equal(m @ m, np.eye(6, dtype=np.int64)):
                return False, f"{kind} does not square to the identity"
            if not np.array_equal(m.T @ j @ m, sign * j):
                return False, f"{kind} symplectic sign defect"
        return True, "M^2 = I and M'JM = ±J exact in integers"

    checks.append(("involution-algebra", involution_algebra))

    def hamiltonian_invariance():
        params = dynamics.SystemParams(mu=0.3)
        worst = 0.0
        states = rng.uniform(-2.0, 2.0, size=(2000, 6))
        for kind in symmetry.INVOLUTION_KINDS:
            mapped = symmetry.apply_involution(kind, states)
            for s, ms in zip(states, mapped):
                try:
                    h0 = dynamics.hamiltonian(s, params)
                    h1 = dynamics.hamiltonian(ms, params)
                except TrichordError:
                    continue
                worst = max(worst, abs(h1 - h0) / max(1.0, abs(h0)))
        return worst <= 1e-14, f"max relative deviation {worst:.2e}"

    checks.append(("hamiltonian-invariance", hamiltonian_invariance))

    def moser_round_trip():
        worst = 0.0
        states = rng.uniform(-3.0, 3.0, size=(2000, 6))
        for s in states:
            reg = moser.to_regularized(s)
            sphere, orth = reg.constraint_residuals()
            back = moser.from_regularized(reg)
            worst = max(worst, float(np.max(np.abs(back - s))), sphere, orth)
        return worst <= 1e-12, f"max round-trip/constraint residual {worst:.2e}"

    checks.append(("moser-round-trip", moser_round_trip))

    def locus_transport():
        worst = 0.0
        for kind, tag in (("rho1", "F1tilde"), ("rho2", "F2tilde")):
            free = rng.uniform(-2.0, 2.0, size=(500, 6))
            for s in free:
                signs = symmetry._SIGNS[kind]
                sym = 0.5 * (s + np.array(signs) * s)
                reg = moser.to_regularized(sym)
                residuals, _ = moser.locus_residual(tag, reg)
                worst = max(worst, float(np.max(np.abs(residuals))))
        return worst <= 1e-10, f"max locus residual {worst:.2e}"

    checks.append(("fixed-locus-transport", locus_transport))

    def liouville_on_l2():
        worst = 0.0
        count = 0
        for s in rng.uniform(-2.0, 2.0, size=(2000, 6)):
            sym = 0.5 * (s + np.array(symmetry._SIGNS["rho2"]) * s)
            reg = moser.to_regularized(sym)
            residuals, _ = moser.locus_residual("L2", reg)
            if float(np.max(np.abs(residuals))) > 1e-12:
                continue
            tangent = np.zeros(8)
            tangent[0] = reg.xi[0]
            tangent[2] = reg.xi[2]
            dot = float(np.dot(reg.xi[1:], tangent[1:4]))
            tangent[1:4] -= dot * reg.xi[1:]
            try:
                val = moser.liouville_eval(reg, tangent)
            except TrichordError:
                continue
            worst = max(worst, abs(val))
            count += 1
        return worst <= 1e-12 and count >= 200, (
            f"max |lambda| {worst:.2e} over {count} tangents")

    checks.append(("liouville-on-l2", liouville_on_l2))

    def lagrange_gradients():
        worst = 0.0
        for mu in (1e-4, _EM_MU, 0.3, 0.5):
            params = dynamics.SystemParams(mu=mu)
            eq = dynamics.lagrange_points(params)
            for state in eq.states:
                grad = dynamics.gravitational_gradient(state[:3], params)
                grad = grad - np.array([state[0], state[1], 0.0])
                worst = max(worst, float(np.linalg.norm(grad)))
        params = dynamics.SystemParams(mu=0.5)
        eq = dynamics.lagrange_points(params)
        l1 = eq.states[0]
        sym = max(float(np.max(np.abs(l1))),
                  abs(eq.energies[0] + 2.0))
        return worst <= 1e-12 and sym <= 1e-12, (
            f"max gradient {worst:.2e}, mu=1/2 symmetry defect {sym:.2e}")

    checks.append(("lagrange-gradients", lagrange_gradients))

    def energy_conservation():
        params = dynamics.SystemParams(mu=_EM_MU)
        moon = np.array([1.0 - params.mu, 0.0, 0.0])
        worst = 0.0
        n = 0
        while n < 5:
            offset = rng.uniform(-0.05, 0.05, size=3)
            if not 0.01 <= np.linalg.norm(offset) <= 0.05:
                continue
            q = moon + offset
            qd = rng.uniform(-0.2, 0.2, size=3)
            s = dynamics.make_state(q, qd, params)
            traj = integrate(s, (0.0, 10.0), params, tol=1e-12)
            if traj.termination != "completed":
                continue
            worst = max(worst, traj.max_energy_drift)
            n += 1
        return worst <= 1e-9, f"max drift {worst:.2e} over {n} trajectories"

    checks.append(("energy-conservation", energy_conservation))

    def stm_symplectic():
        params = dynamics.SystemParams(mu=_EM_MU)
        j = np.zeros((6, 6))
        j[:3, 3:] = np.eye(3)
        j[3:, :3] = -np.eye(3)
        worst = 0.0
        for r, tilt in ((0.30, 0.0), (0.40, 0.02)):
            om = math.sqrt((1 - params.mu) / r**3)
            q = np.array([-params.mu + r, 0.0, tilt * r])
            qd = np.array([0.0, r * (1 - om), 0.0])
            s = dynamics.make_state(q, qd, params)
            _, stm = integrate(s, (0.0, 5.0), params, tol=1e-12, with_stm=True,
                               record=False)
            worst = max(worst, float(np.max(np.abs(stm.T @ j @ stm - j))))
        return worst <= 1e-8, f"max symplectic defect {worst:.2e}"

    checks.append(("stm-symplectic", stm_symplectic))

    def binding_invariance():
        params = dynamics.SystemParams(mu=_EM_MU)
        q = np.array([0.3, 0.1, 0.0])
        qd = np.array([0.1, 0.5, 0.0])
        s = dynamics.make_state(q, qd, params)
        traj = integrate(s, (0.0, 50.0), params, tol=1e-12)
        vertical = float(np.max(np.abs(traj.states[:, (2, 5)])))
        return (traj.termination == "completed" and vertical <= 1e-10), (
            f"max vertical leakage {vertical:.2e} over t <= 50")

    checks.append(("binding-invariance", binding_invariance))

    def kepler_chord():
        params = dynamics.SystemParams(mu=0.0)
        r = 0.5
        h = -1.0 / (2 * r) - math.sqrt(r)
        seed = chords.Seed(None, (0.49, 0.002), (0, 0), h, -1, "xz_plane")
        chord = chords.refine((seed, 1.72), params)
        expected = math.pi / abs(r**-1.5 - 1.0)
        err = abs(chord.duration - expected)
        return err <= 1e-8, f"duration error vs closed form {err:.2e}"

    checks.append(("kepler-chord-oracle", kepler_chord))

    return checks


def _cmd_verify(args):
    warmup()
    failures = 0
    for name, fn in _verify_checks():
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        line = "PASS" if ok else "FAIL"
        print(f"{line} {name}: {detail}")
        failures += 0 if ok else 1
    print(f"{len(_verify_checks()) - failures} passed, {failures} failed")
    return 0 if failures == 0 else 1


# ---------------------------------------------------------------------------
# argument wiring


def _add_common(p, mu_default=_EM_MU):
    p.add_argument("--mu", type=float, default=mu_default,
                   help="mass ratio (default: Earth–Moon, conventional)")
    p.add_argument("--config", default=None,
                   help="JSON config file; flags override its entries")
    p.add_argument("--output", "-o", default=None,
                   help="output path ('-' or omitted: stdout where sensible)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="trichord",
        description="Symmetric chords and vertical twist in the spatial "
                    "circular restricted three-body problem.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lagrange", help="equilibrium points and energies")
    _add_common(p)
    p.set_defaults(fn=_cmd_lagrange)

    p = sub.add_parser("integrate", help="integrate a state, write CSV")
    _add_common(p)
    p.add_argument("--state", required=True,
                   help="q1,q2,q3,p1,p2,p3 (canonical momenta)")
    p.add_argument("--t-span", default="0,10", dest="t_span")
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(fn=_cmd_integrate)

    p = sub.add_parser("regularize", help="map a state to the compactified chart")
    _add_common(p)
    p.add_argument("--state", required=True)
    p.set_defaults(fn=_cmd_regularize)

    pc = sub.add_parser("chords", help="chord search and continuation")
    csub = pc.add_subparsers(dest="chords_command", required=True)

    p = csub.add_parser("find", help="grid search for symmetric chords")
    _add_common(p)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--l1-delta", type=float, default=None, dest="l1_delta")
    p.add_argument("--target", default="xz-plane")
    p.add_argument("--ranges", default=None, help="a0,a1,b0,b1")
    p.add_argument("--n", default=None, help="grid points per axis (or na,nb)")
    p.add_argument("--component", default=None)
    p.add_argument("--t-max", type=float, default=None, dest="t_max")
    p.add_argument("--coarse-tol", type=float, default=None, dest="coarse_tol")
    p.add_argument("--refine-tol", type=float, default=None, dest="refine_tol")
    p.add_argument("--shoot-tol", type=float, default=None, dest="shoot_tol")
    p.add_argument("--pos-tol", type=float, default=None, dest="pos_tol")
    p.add_argument("--time-tol", type=float, default=None, dest="time_tol")
    p.add_argument("--max-iterations", type=int, default=None,
                   dest="max_iterations")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(fn=_cmd_chords_find)

    p = csub.add_parser("continue", help="continue a cataloged chord")
    _add_common(p)
    p.add_argument("--catalog", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--parameter", required=True, choices=("h", "mu"))
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--n-steps", type=int, required=True, dest="n_steps")
    p.set_defaults(fn=_cmd_chords_continue)

    ps = sub.add_parser("section", help="page return map and twist diagnostic")
    ssub = ps.add_subparsers(dest="section_command", required=True)

    p = ssub.add_parser("map", help="iterate the page return map")
    _add_common(p)
    p.add_argument("--state", required=True)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--iterations", type=int, default=1)
    p.add_argument("--t-max", type=float, default=100.0, dest="t_max")
    p.add_argument("--page-sign", type=int, default=None, dest="page_sign",
                   choices=(-1, 1))
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(fn=_cmd_section_map)

    p = ssub.add_parser("twist", help="vertical twist profile of a planar orbit")
    _add_common(p)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--l1-delta", type=float, default=None, dest="l1_delta")
    p.add_argument("--a-range", required=True, dest="a_range",
                   help="axis interval lo,hi scanned for the planar orbit")
    p.add_argument("--branch", type=int, default=-1, choices=(-1, 1))
    p.add_argument("--amplitudes", default="1e-3,1e-4,1e-5")
    p.add_argument("--n-returns", type=int, default=1, dest="n_returns")
    p.add_argument("--page-sign", type=int, default=None, dest="page_sign",
                   choices=(-1, 1))
    p.set_defaults(fn=_cmd_section_twist)

    p = sub.add_parser("verify", help="run the invariant suite")
    p.set_defaults(fn=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error [{exc.field}]: {exc}\n")
        return 2
    except PreconditionError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except TrichordError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
