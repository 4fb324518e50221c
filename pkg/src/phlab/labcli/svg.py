"""Minimal static SVG 1.1 plots for experiment reports (no scripts, no deps)."""

from __future__ import annotations

import os

import numpy as np

W, H = 640, 440
MARGIN = 60


def _axes(title: str, xlabel: str, ylabel: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W/2}" y="24" text-anchor="middle" font-size="15" font-family="sans-serif">{title}</text>',
        f'<line x1="{MARGIN}" y1="{H-MARGIN}" x2="{W-20}" y2="{H-MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{H-MARGIN}" x2="{MARGIN}" y2="40" stroke="black"/>',
        f'<text x="{W/2}" y="{H-16}" text-anchor="middle" font-size="12" font-family="sans-serif">{xlabel}</text>',
        f'<text x="18" y="{H/2}" text-anchor="middle" font-size="12" font-family="sans-serif" '
        f'transform="rotate(-90 18 {H/2})">{ylabel}</text>',
    ]


def _scale(vals, lo_px, hi_px):
    vmin, vmax = float(min(vals)), float(max(vals))
    if vmax == vmin:
        vmax = vmin + 1.0
    span = vmax - vmin

    def to_px(v):
        return lo_px + (float(v) - vmin) / span * (hi_px - lo_px)

    return to_px, vmin, vmax


def loglog_plot(scales, counts, slope: float, title: str) -> str:
    xs = [-np.log2(s) for s in scales]
    ys = [np.log2(max(c, 1)) for c in counts]
    parts = _axes(title, "log2(1/scale)", "log2(count)")
    to_x, xmin, xmax = _scale(xs, MARGIN, W - 20)
    to_y, ymin, ymax = _scale(ys, H - MARGIN, 40)
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{to_x(x):.2f}" cy="{to_y(y):.2f}" r="4" fill="steelblue"/>')
    # fitted line through the centroid with the reported slope (log2 axes keep it affine)
    cx, cy = float(np.mean(xs)), float(np.mean(ys))
    y0 = cy + slope * (xmin - cx)
    y1 = cy + slope * (xmax - cx)
    parts.append(
        f'<line x1="{to_x(xmin):.2f}" y1="{to_y(y0):.2f}" x2="{to_x(xmax):.2f}" y2="{to_y(y1):.2f}" '
        'stroke="crimson" stroke-dasharray="6,3"/>'
    )
    parts.append(
        f'<text x="{W-30}" y="50" text-anchor="end" font-size="13" font-family="sans-serif" '
        f'fill="crimson">slope = {slope:.4f}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts)


def curve_plot(ks, series: dict, title: str, xlabel: str = "k", ylabel: str = "value") -> str:
    parts = _axes(title, xlabel, ylabel)
    all_vals = [v for vs in series.values() for v in vs]
    to_x, *_ = _scale(ks, MARGIN, W - 20)
    to_y, *_ = _scale(all_vals, H - MARGIN, 40)
    colors = ("steelblue", "seagreen", "darkorange", "purple")
    for i, (label, vs) in enumerate(sorted(series.items())):
        pts = " ".join(f"{to_x(k):.2f},{to_y(v):.2f}" for k, v in zip(ks, vs))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{colors[i % 4]}" stroke-width="2"/>')
        parts.append(
            f'<text x="{W-30}" y="{50+16*i}" text-anchor="end" font-size="12" '
            f'font-family="sans-serif" fill="{colors[i % 4]}">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def scatter_with_thresholds(values, thresholds: dict, title: str) -> str:
    parts = _axes(title, "sample index", "log10(value)")
    ys = [np.log10(max(v, 1e-18)) for v in values]
    lines = {k: np.log10(max(v, 1e-18)) for k, v in thresholds.items()}
    all_y = ys + list(lines.values())
    to_x, *_ = _scale(list(range(len(ys))) or [0, 1], MARGIN, W - 20)
    to_y, *_ = _scale(all_y, H - MARGIN, 40)
    for i, y in enumerate(ys):
        parts.append(f'<circle cx="{to_x(i):.2f}" cy="{to_y(y):.2f}" r="3" fill="steelblue"/>')
    colors = ("crimson", "darkorange", "gray")
    for i, (label, y) in enumerate(sorted(lines.items())):
        parts.append(
            f'<line x1="{MARGIN}" y1="{to_y(y):.2f}" x2="{W-20}" y2="{to_y(y):.2f}" '
            f'stroke="{colors[i % 3]}" stroke-dasharray="4,3"/>'
        )
        parts.append(
            f'<text x="{W-24}" y="{to_y(y)-4:.2f}" text-anchor="end" font-size="11" '
            f'font-family="sans-serif" fill="{colors[i % 3]}">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def emit_svg(report, out_dir: str) -> list[str]:
    """Write the standard plots for whatever stages the report contains."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []

    def write(name: str, text: str):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        paths.append(path)

    stages = report.stages
    for stage in ("boxdim", "weierstrass-reference"):
        rec = stages.get(stage)
        if rec and rec.get("counts"):
            slope = rec.get("fit_slope", rec.get("dimension_fit"))
            write(f"{stage}__sweep.svg",
                  loglog_plot(rec["scales"], rec["counts"], slope, f"{stage}: box counts"))
    rec = stages.get("hoelder")
    if rec and any(v > 0 for v in rec["per_scale_sup_osc"]):
        pairs = [(s, o) for s, o in zip(rec["scales"], rec["per_scale_sup_osc"]) if o > 0]
        write("hoelder__oscillation.svg",
              loglog_plot([1.0 / s for s, _ in pairs], [o for _, o in pairs],
                          -rec["raw_slope"], "sup oscillation vs scale"))
    rec = stages.get("exponents")
    if rec:
        ks = list(range(1, len(rec["per_k_theta_s"]) + 1))
        series = {
            "theta_s(k)": list(rec["per_k_theta_s"]),
            "theta_c(k)": list(rec["per_k_theta_c"]),
            "A_k": [rec["A_k"][str(k)] for k in ks],
        }
        write("exponents__per_k.svg", curve_plot(ks, series, "exponents per k"))
    rec = stages.get("obstruction")
    if rec:
        vals = []
        for tab in report.tables.get("obstruction", []):
            if tab.name == "delta_values":
                vals = [row[-2] for row in tab.rows]
        if vals:
            floor = rec["blocks"][0]["noise_floor"]
            write("obstruction__scan.svg",
                  scatter_with_thresholds(vals, {"3x floor": 3 * floor, "10x floor": 10 * floor},
                                          "obstruction values"))
    return paths
