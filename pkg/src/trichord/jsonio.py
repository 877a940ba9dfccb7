"""Deterministic JSON/JSONL rendering for catalogs, tables, and reports.

Every float is rendered with the ``%.17g`` format, which round-trips IEEE
doubles exactly, and every container renders in a fixed key order, so a
byte comparison of two artifacts is a comparison of their contents.  The
one intentionally volatile field — the wall-clock timestamp — is isolated
on its own line of each catalog so consumers can strip it trivially.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone

import numpy as np

from ._version import __version__

__all__ = [
    "render_float",
    "render_json",
    "chord_record",
    "chord_id",
    "catalog_lines",
    "write_catalog",
    "load_catalog",
    "section_table_record",
    "twist_report_record",
]


def render_float(x: float) -> str:
    """Shortest exact decimal form of a double, JSON-compatible.

    ``%.17g`` guarantees bit-exact round trips; infinities and NaNs are
    rejected because JSON has no spelling for them.
    """
    x = float(x)
    if not np.isfinite(x):
        raise ValueError(f"cannot render non-finite float {x!r}")
    out = "%.17g" % x
    return out


def render_json(obj) -> str:
    """Render nested dicts/lists/scalars deterministically.

    Dict insertion order is preserved (callers fix the key order); floats
    go through render_float; numpy scalars and arrays are accepted.
    """
    if isinstance(obj, dict):
        items = ", ".join(
            f"{json.dumps(str(k))}: {render_json(v)}" for k, v in obj.items()
        )
        return "{" + items + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(render_json(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return render_json(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return render_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot render {type(obj).__name__} deterministically")


def chord_id(chord) -> str:
    """Stable 12-hex identifier from the chord's defining data."""
    canonical = ",".join(
        [chord.target]
        + [render_float(v) for v in chord.initial]
        + [render_float(chord.duration)]
    )
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def chord_record(chord) -> dict:
    """One catalog line's payload, in fixed key order."""
    return {
        "id": chord_id(chord),
        "mu": chord.mu,
        "h": chord.h,
        "target": chord.target,
        "q": list(chord.initial[:3]),
        "p": list(chord.initial[3:]),
        "duration": chord.duration,
        "residual_norm": chord.residual_norm,
        "crossings": chord.crossings,
        "prime": chord.prime,
        "spatial": chord.spatial,
        "stability": list(chord.stability),
    }


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def catalog_lines(catalog, meta: dict, timestamp: str | None = None) -> list[str]:
    """Render a catalog to JSONL lines.

    Line 1 is the metadata object, line 2 is the isolated timestamp (the
    only line that varies between identical runs), and each following
    line is one chord record in canonical catalog order.
    """
    lines = [render_json(meta)]
    stamp = timestamp if timestamp is not None else _timestamp()
    lines.append(render_json({"timestamp": stamp}))
    lines.extend(render_json(chord_record(c)) for c in catalog.chords)
    return lines


def write_catalog(path, catalog, meta: dict, timestamp: str | None = None) -> None:
    text = "\n".join(catalog_lines(catalog, meta, timestamp)) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def load_catalog(path):
    """Read a catalog file back: (metadata, timestamp, list of records)."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    if len(lines) < 2:
        raise ValueError(f"not a catalog file: {path!r}")
    meta = json.loads(lines[0])
    stamp = json.loads(lines[1]).get("timestamp")
    records = [json.loads(ln) for ln in lines[2:]]
    return meta, stamp, records


def section_table_record(table, meta: dict) -> dict:
    """A section table as one JSON document."""
    rows = []
    for row, flag in zip(table.rows, table.flags):
        rows.append({
            "flag": flag,
            "points": [
                {
                    "state": list(pt.state),
                    "h": pt.h,
                    "return_time": pt.return_time,
                    "binding": pt.binding,
                }
                for pt in row
            ],
        })
    return {"meta": meta, "rows": rows}


def twist_report_record(report, meta: dict) -> dict:
    """A twist report as one JSON document."""
    return {
        "meta": meta,
        "orbit_id": report.orbit_id,
        "returns_sampled": report.returns_sampled,
        "amplitudes": list(report.amplitudes),
        "vertical_rotation_per_return": list(report.vertical_rotation_per_return),
        "monotonicity_defect": report.monotonicity_defect,
        "return_times": list(report.return_times),
        "zero_amplitude_rotation": report.zero_amplitude_rotation,
        "determinant_defects": list(report.determinant_defects),
    }


def build_meta(params, h=None, extra: dict | None = None) -> dict:
    """The standard metadata block: version, physics context, page sign.

    The Jacobi value c = -2h and the first critical energy H(L1) are
    recorded whenever an energy is in play so artifacts are
    self-describing.
    """
    from . import dynamics, moser

    meta: dict = {"version": __version__, "mu": params.mu}
    if h is not None:
        meta["h"] = float(h)
        meta["c"] = -2.0 * float(h)
    if params.mu > 0.0:
        meta["h_l1"] = float(dynamics.lagrange_points(params).energies[0])
    meta["page_sign"] = moser.page_sign()
    if extra:
        meta.update(extra)
    return meta
