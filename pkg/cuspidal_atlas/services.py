"""
Stateless output services.
- Stable number formatting
- CSV / JSON / aligned-text writers
- SVG rendering of sections and joint-space maps (jinja2 templates)
"""

import csv
import json
import math
import logging

import numpy as np
from jinja2 import Environment

from .classifier import ClassificationReport, ScanResult, SweepRecord, SweepSummary
from .joint_topology import AspectMap, SingularCurve, TorusGrid
from .workspace_analysis import CriticalCurve, CuspPoint, PostureRaster, PostureRegion

RASTER_HEADER = ["rho", "z", "count"]
SWEEP_HEADER = ["d3", "r2", "d4", "kind", "generic", "aspects", "cusps", "class", "status"]
CUSP_HEADER = ["rho", "z", "t", "theta3", "p3"]

SVG_SIZE = 600
SVG_MARGIN = 30
POSTURE_FILL = {2: "#c6dbef", 4: "#2171b5"}
CURVE_STROKE = {"orientation": "#cb181d", "axial": "#238b45", "mixed": "#6a51a3"}

_env = Environment(autoescape=False, trim_blocks=True, lstrip_blocks=True)


def fmt(value):
    """17 significant digits, so files are byte-stable and round-trip exactly."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    logging.info(f"Wrote {path}")


def write_json(path, payload):
    with open(path, "w") as f:
        f.write(json.dumps(payload, indent=2) + "\n")
    logging.info(f"Wrote {path}")


def write_text(path, text):
    with open(path, "w") as f:
        f.write(text)
    logging.info(f"Wrote {path}")


# --- Reports ---

def report_payload(report: ClassificationReport):
    """Fixed field order; the class column is binary, n.g or the homotopy class."""
    p = report.params
    return {
        "d3": p.d3,
        "r2": p.r2,
        "d4": p.d4,
        "kind": report.kind,
        "generic": report.generic,
        "witness": list(report.witness) if report.witness else None,
        "aspects": report.n_aspects,
        "cusps": report.n_cusps,
        "cuspidal": report.cuspidal,
        "class": report.class_label,
        "homotopy": report.homotopy,
        "max_postures": report.max_postures,
        "cusp_points": [c.model_dump() for c in report.cusps],
        "dropped_cusp_candidates": report.dropped_cusp_candidates,
        "section_convention": report.section_convention,
        "meta_rule_violations": report.meta_rule_violations,
        "tolerances": report.tolerances,
    }


def report_text(report: ClassificationReport):
    payload = report_payload(report)
    rows = [(k, v) for k, v in payload.items()
            if k not in ("cusp_points", "tolerances", "meta_rule_violations")]
    rows.append(("violations", "; ".join(report.meta_rule_violations) or "none"))
    width = max(len(k) for k, _ in rows)
    lines = [f"{k.ljust(width)}  {fmt(v) if v is not None else '-'}" for k, v in rows]
    for c in report.cusps:
        lines.append(f"{'cusp'.ljust(width)}  rho={fmt(c.rho)} z={fmt(c.z)} theta3={fmt(c.theta3)}")
    lines.append("")
    lines.append("tolerances")
    tol_width = max(len(k) for k in report.tolerances) if report.tolerances else 0
    for k, v in report.tolerances.items():
        lines.append(f"  {k.ljust(tol_width)}  {fmt(v)}")
    return "\n".join(lines) + "\n"


def sweep_rows(records: list[SweepRecord]):
    for r in records:
        p = r.params
        if r.signature is None:
            yield [p.d3, p.r2, p.d4, "", "", "", "", "", r.status]
        else:
            s = r.signature
            yield [p.d3, p.r2, p.d4, s.kind, s.generic, s.n_aspects, s.n_cusps, s.class_label, r.status]


def summary_payload(summary: SweepSummary):
    return {
        "signatures": dict(sorted(summary.signatures.items())),
        "failed": summary.failed,
        "zones_by_d4": [{"d4": d4, "zones": n} for d4, n in sorted(summary.zones_by_d4.items())],
    }


def summary_text(summary: SweepSummary):
    lines = [f"{n:6d}  {sig}" for sig, n in sorted(summary.signatures.items())]
    lines.append(f"{summary.failed:6d}  failed")
    for d4, n in sorted(summary.zones_by_d4.items()):
        lines.append(f"d4={fmt(d4)}  {n} zones")
    return "\n".join(lines) + "\n"


def cusp_rows(cusps: list[CuspPoint]):
    for c in cusps:
        yield [c.rho, c.z, c.t_triple, c.theta3, c.p3]


def scan_payload(result: ScanResult):
    return {
        "start": result.segment.start.model_dump(),
        "end": result.segment.end.model_dump(),
        "points": [
            {"s": p.s, "signature": str(p.signature) if p.signature else None, "error": p.error}
            for p in result.points
        ],
        "transitions": [
            {
                "s": t.s,
                "params": t.params.model_dump(),
                "before": str(t.before),
                "after": str(t.after),
                "intermediate": [str(sig) for sig in t.intermediate],
                "nearest_roots": t.nearest_roots,
                "distances": t.distances,
            }
            for t in result.transitions
        ],
        "surface_roots": result.surface_roots,
    }


# --- SVG ---

SECTION_TEMPLATE = _env.from_string("""<?xml version="1.0" encoding="UTF-8"?>
<!--
  Workspace section {{ label }}
  Coordinate mapping: px = {{ margin }} + (rho - {{ rho_min }}) * {{ sx }}
                      py = {{ margin }} + ({{ z_max }} - z) * {{ sy }}
  Fill: posture count (white 0, light 2, dark 4). Red: critical value curves.
  Green dots: images of axial singular lines. Black crosses: cusp points.
-->
<svg xmlns="http://www.w3.org/2000/svg" width="{{ width }}" height="{{ height }}" viewBox="0 0 {{ width }} {{ height }}">
<rect x="0" y="0" width="{{ width }}" height="{{ height }}" fill="white"/>
{% for r in rects %}
<rect x="{{ r[0] }}" y="{{ r[1] }}" width="{{ r[2] }}" height="{{ r[3] }}" fill="{{ r[4] }}"/>
{% endfor %}
{% for c in curves %}
<polyline fill="none" stroke="{{ c.stroke }}" stroke-width="1" points="{{ c.points }}"/>
{% endfor %}
{% for d in dots %}
<circle cx="{{ d[0] }}" cy="{{ d[1] }}" r="3" fill="{{ d[2] }}"/>
{% endfor %}
{% for k in cusps %}
<path d="M{{ k[0] - 4 }},{{ k[1] - 4 }} L{{ k[0] + 4 }},{{ k[1] + 4 }} M{{ k[0] - 4 }},{{ k[1] + 4 }} L{{ k[0] + 4 }},{{ k[1] - 4 }}" stroke="black" stroke-width="1.5"/>
{% endfor %}
{% for t in labels %}
<text x="{{ t[0] }}" y="{{ t[1] }}" font-size="12" font-family="sans-serif" text-anchor="middle">{{ t[2] }}</text>
{% endfor %}
<line x1="{{ margin }}" y1="{{ axis_y }}" x2="{{ width - margin }}" y2="{{ axis_y }}" stroke="#999" stroke-dasharray="4 3"/>
<text x="{{ width - margin }}" y="{{ height - 8 }}" font-size="12" text-anchor="end">rho</text>
<text x="8" y="{{ margin - 10 }}" font-size="12">z</text>
</svg>
""")

JOINTSPACE_TEMPLATE = _env.from_string("""<?xml version="1.0" encoding="UTF-8"?>
<!--
  Joint space {{ label }} on the square [-pi, pi] x [-pi, pi] (opposite sides identified)
  Coordinate mapping: px = {{ margin }} + (theta2 + pi) * {{ scale }}
                      py = {{ margin }} + (pi - theta3) * {{ scale }}
  Red: orientation factor curves. Green: axial lines. Purple: merged curves.
  Labels: aspect number and the sign of det J in it.
-->
<svg xmlns="http://www.w3.org/2000/svg" width="{{ width }}" height="{{ height }}" viewBox="0 0 {{ width }} {{ height }}">
<rect x="0" y="0" width="{{ width }}" height="{{ height }}" fill="white"/>
<rect x="{{ margin }}" y="{{ margin }}" width="{{ side }}" height="{{ side }}" fill="none" stroke="black"/>
{% for c in curves %}
<polyline fill="none" stroke="{{ c.stroke }}" stroke-width="1.5"{% if c.dashed %} stroke-dasharray="5 3"{% endif %} points="{{ c.points }}"/>
{% endfor %}
{% for t in labels %}
<text x="{{ t[0] }}" y="{{ t[1] }}" font-size="12" font-family="sans-serif" text-anchor="middle">{{ t[2] }}</text>
{% endfor %}
<text x="{{ width - margin }}" y="{{ height - 8 }}" font-size="12" text-anchor="end">theta2</text>
<text x="8" y="{{ margin - 10 }}" font-size="12">theta3</text>
</svg>
""")


def _num(v):
    return f"{v:.3f}"


def _section_mapping(raster: PostureRaster):
    rho_min, rho_max = raster.rho_bounds
    z_min, z_max = raster.z_bounds
    sx = SVG_SIZE / (rho_max - rho_min)
    sy = SVG_SIZE / (z_max - z_min)

    def to_px(rho, z):
        return SVG_MARGIN + (rho - rho_min) * sx, SVG_MARGIN + (z_max - z) * sy
    return to_px, sx, sy


def section_svg(label, raster: PostureRaster, images: list[CriticalCurve],
                regions: list[PostureRegion], cusps: list[CuspPoint]):
    to_px, sx, sy = _section_mapping(raster)
    drho, dz = raster.pixel_size

    # one rect per run of equal count along each ρ column
    rects = []
    rho_axis, z_axis = raster.rho_axis, raster.z_axis
    for i in range(raster.resolution):
        column = raster.counts[i]
        j = 0
        while j < raster.resolution:
            k = j
            while k + 1 < raster.resolution and column[k + 1] == column[j]:
                k += 1
            fill = POSTURE_FILL.get(int(column[j]))
            if fill:
                x, y = to_px(rho_axis[i] - drho / 2, z_axis[k] + dz / 2)
                rects.append((_num(x), _num(y), _num(drho * sx), _num((k - j + 1) * dz * sy), fill))
            j = k + 1

    curves, dots = [], []
    for image in images:
        if image.degenerate:
            x, y = to_px(*image.points[0])
            dots.append((_num(x), _num(y), CURVE_STROKE["axial"]))
            continue
        pts = " ".join(f"{_num(x)},{_num(y)}" for x, y in (to_px(r, z) for r, z in image.points))
        if image.closed:
            x, y = to_px(*image.points[0])
            pts += f" {_num(x)},{_num(y)}"
        curves.append({"stroke": CURVE_STROKE.get(image.factor, "black"), "points": pts})

    labels = []
    for region in regions:
        if region.count == 0 or region.pixels < 20:
            continue
        x, y = to_px(region.rho, region.z)
        labels.append((_num(x), _num(y + 4), region.count))

    cusp_px = [to_px(c.rho, c.z) for c in cusps]
    _, axis_y = to_px(0.0, 0.0)
    return SECTION_TEMPLATE.render(
        label=label, margin=SVG_MARGIN, width=SVG_SIZE + 2 * SVG_MARGIN, height=SVG_SIZE + 2 * SVG_MARGIN,
        rho_min=fmt(raster.rho_bounds[0]), z_max=fmt(raster.z_bounds[1]), sx=fmt(sx), sy=fmt(sy),
        rects=rects, curves=curves, dots=dots, cusps=cusp_px, labels=labels, axis_y=_num(axis_y))


def _split_on_wrap(points):
    """Breaks a torus polyline where it jumps across the square's edges."""
    pieces, current = [], [points[0]]
    for a, b in zip(points, points[1:]):
        if np.max(np.abs(b - a)) > math.pi:
            pieces.append(current)
            current = []
        current.append(b)
    pieces.append(current)
    return [p for p in pieces if len(p) > 1]


def jointspace_svg(label, curves: list[SingularCurve], aspects: AspectMap):
    scale = SVG_SIZE / (2 * math.pi)

    def to_px(theta2, theta3):
        return SVG_MARGIN + (theta2 + math.pi) * scale, SVG_MARGIN + (math.pi - theta3) * scale

    polylines = []
    for curve in curves:
        pts = curve.points
        if curve.closed:
            pts = np.vstack([pts, pts[:1]])
        for piece in _split_on_wrap(pts):
            polylines.append({
                "stroke": CURVE_STROKE.get(curve.factor, "black"),
                "dashed": curve.suspect,
                "points": " ".join(f"{_num(x)},{_num(y)}" for x, y in (to_px(*p) for p in piece)),
            })

    grid = TorusGrid(aspects.resolution)
    axis2, axis3 = grid.axis(0), grid.axis(1)
    labels = []
    for lab in sorted(aspects.signs):
        cells = np.argwhere(aspects.labels == lab)
        centre = cells.mean(axis=0)
        i, j = cells[int(np.argmin(np.sum((cells - centre) ** 2, axis=1)))]
        x, y = to_px(axis2[i] + grid.step / 2, axis3[j] + grid.step / 2)
        sign = "+" if aspects.signs[lab] > 0 else "-"
        labels.append((_num(x), _num(y), f"A{lab} ({sign})"))

    return JOINTSPACE_TEMPLATE.render(
        label=label, margin=SVG_MARGIN, width=SVG_SIZE + 2 * SVG_MARGIN, height=SVG_SIZE + 2 * SVG_MARGIN,
        side=SVG_SIZE, scale=fmt(scale), curves=polylines, labels=labels)
