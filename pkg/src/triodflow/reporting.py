"""Report writers: CSV tables, JSON run summaries, SVG snapshots.

All emitted files are deterministic for identical inputs; floats are written
with shortest round-trip formatting so re-parsing recovers them exactly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .mesh import TriodState

CURVE_COLORS = ("#d62728", "#2ca02c", "#1f77b4")


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return path


def _jsonify(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return [_jsonify(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonify(x) for x in v]
    return v


def write_summary(path, params: dict, result: dict) -> Path:
    """Flat JSON document with params.* and result.* key namespaces."""
    doc = {}
    for k, v in params.items():
        doc[f"params.{k}"] = _jsonify(v)
    for k, v in result.items():
        doc[f"result.{k}"] = _jsonify(v)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_snapshot_svg(path, state: TriodState, *, half_extent: float = 1.2,
                       stroke_width: float = 0.012) -> Path:
    """One polyline per curve in a fixed square viewport, y axis upward."""
    e = half_extent
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{-e:g} {-e:g} {2 * e:g} {2 * e:g}" width="480" height="480">',
        f'<rect x="{-e:g}" y="{-e:g}" width="{2 * e:g}" height="{2 * e:g}" fill="white"/>',
    ]
    for i in range(3):
        pts = " ".join(
            f"{x:.8g},{-y:.8g}" for x, y in state.nodes[i]
        )
        lines.append(
            f'<polyline points="{pts}" fill="none" stroke="{CURVE_COLORS[i]}" '
            f'stroke-width="{stroke_width:g}" stroke-linejoin="round"/>'
        )
    lines.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path
