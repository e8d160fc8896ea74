"""Byte-deterministic artifacts: trajectory CSVs, SVG plots, text tables.

Floats are printed at nine significant digits; the SVG is assembled from
fixed templates with two-decimal coordinates, so identical inputs always
produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..trajectory import Trajectory
from .experiment import ExperimentResult

TRAJECTORY_HEADER = "step,max_x,attention_bus,alpha_s,event,u_norm,violation"

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def fmt(value: float) -> str:
    """Nine-significant-digit float formatting with normalized zero."""
    value = float(value)
    if value == 0.0:
        value = 0.0  # drops the sign of -0.0
    return f"{value:.9g}"


def _event_label(saturation: bool, switch: bool) -> str:
    if saturation and switch:
        return "saturation+switch"
    if saturation:
        return "saturation"
    if switch:
        return "switch"
    return ""


def trajectory_csv_text(traj: Trajectory) -> str:
    """Render one trajectory in the fixed seven-column schema.

    ``attention_bus`` uses 1-based bus labels matching the network file;
    ``violation`` flags steps where any measured deviation exceeds its
    limit by more than 1e-9.
    """
    if traj.x_limit is None:
        raise ValueError("trajectory has no limits attached")
    rows = [TRAJECTORY_HEADER]
    for rec in traj.records:
        violated = int(float(np.max(rec.x - traj.x_limit)) > 1e-9)
        rows.append(
            ",".join(
                (
                    str(rec.step),
                    fmt(rec.max_x),
                    str(rec.attention + 1),
                    fmt(rec.alpha_s),
                    _event_label(rec.saturation_event, rec.switch_event),
                    fmt(float(np.linalg.norm(rec.u))),
                    str(violated),
                )
            )
        )
    return "\n".join(rows) + "\n"


def emit_csv(traj: Trajectory, path: str | Path) -> None:
    Path(path).write_text(trajectory_csv_text(traj), encoding="utf-8")


# ---------------------------------------------------------------------------
# SVG plotting
# ---------------------------------------------------------------------------

_W, _H = 760.0, 440.0
_ML, _MR, _MT, _MB = 80.0, 24.0, 36.0, 56.0


def svg_text(series: dict[str, list[tuple[int, float]]], limit: float, title: str = "") -> str:
    """Line plot of max deviation vs step, limit as a dashed rule.

    ``series`` maps a legend label to ``(step, value)`` pairs. Output is a
    self-contained SVG string built from fixed-precision templates.
    """
    xs = [p[0] for pts in series.values() for p in pts] or [0]
    ys = [p[1] for pts in series.values() for p in pts] or [0.0]
    x_hi = max(max(xs), 1)
    y_lo = min(min(ys), limit)
    y_hi = max(max(ys), limit)
    pad = 0.08 * (y_hi - y_lo) or 0.01
    y_lo -= pad
    y_hi += pad

    def px(step: float) -> float:
        return _ML + (_W - _ML - _MR) * (step / x_hi)

    def py(val: float) -> float:
        return _H - _MB - (_H - _MB - _MT) * ((val - y_lo) / (y_hi - y_lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W:g}" height="{_H:g}" '
        f'viewBox="0 0 {_W:g} {_H:g}">',
        f'<rect width="{_W:g}" height="{_H:g}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_W / 2:.2f}" y="22" font-family="monospace" font-size="14" '
            f'text-anchor="middle">{title}</text>'
        )
    # axes
    parts.append(
        f'<line x1="{_ML:.2f}" y1="{_H - _MB:.2f}" x2="{_W - _MR:.2f}" y2="{_H - _MB:.2f}" '
        f'stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{_ML:.2f}" y1="{_MT:.2f}" x2="{_ML:.2f}" y2="{_H - _MB:.2f}" '
        f'stroke="black" stroke-width="1"/>'
    )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        sx = x_hi * frac
        parts.append(
            f'<text x="{px(sx):.2f}" y="{_H - _MB + 18:.2f}" font-family="monospace" '
            f'font-size="11" text-anchor="middle">{sx:.6g}</text>'
        )
        vy = y_lo + (y_hi - y_lo) * frac
        parts.append(
            f'<text x="{_ML - 6:.2f}" y="{py(vy) + 4:.2f}" font-family="monospace" '
            f'font-size="11" text-anchor="end">{vy:.6g}</text>'
        )
    parts.append(
        f'<text x="{(_ML + _W - _MR) / 2:.2f}" y="{_H - 12:.2f}" font-family="monospace" '
        f'font-size="12" text-anchor="middle">step</text>'
    )
    parts.append(
        f'<text x="18" y="{(_MT + _H - _MB) / 2:.2f}" font-family="monospace" font-size="12" '
        f'text-anchor="middle" transform="rotate(-90 18 {(_MT + _H - _MB) / 2:.2f})">'
        f'max voltage deviation (pu)</text>'
    )
    # safety limit
    parts.append(
        f'<line x1="{_ML:.2f}" y1="{py(limit):.2f}" x2="{_W - _MR:.2f}" y2="{py(limit):.2f}" '
        f'stroke="#555555" stroke-width="1.5" stroke-dasharray="6,4"/>'
    )
    parts.append(
        f'<text x="{_W - _MR - 4:.2f}" y="{py(limit) - 5:.2f}" font-family="monospace" '
        f'font-size="11" text-anchor="end" fill="#555555">limit {limit:.6g}</text>'
    )
    # series + legend
    for idx, (label, pts) in enumerate(series.items()):
        color = _PALETTE[idx % len(_PALETTE)]
        coords = " ".join(f"{px(s):.2f},{py(v):.2f}" for s, v in pts)
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.6"/>'
        )
        ly = _MT + 16 + 16 * idx
        parts.append(
            f'<line x1="{_ML + 10:.2f}" y1="{ly:.2f}" x2="{_ML + 34:.2f}" y2="{ly:.2f}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{_ML + 40:.2f}" y="{ly + 4:.2f}" font-family="monospace" '
            f'font-size="12">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_svg(
    trajectories: dict[str, Trajectory],
    limit: float,
    path: str | Path,
    title: str = "",
) -> None:
    series = {
        name: [(rec.step, rec.max_x) for rec in traj.records]
        for name, traj in trajectories.items()
    }
    Path(path).write_text(svg_text(series, limit, title), encoding="utf-8")


# ---------------------------------------------------------------------------
# text tables
# ---------------------------------------------------------------------------


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(header[c]), *(len(r[c]) for r in rows)) if rows else len(header[c])
              for c in range(len(header))]
    fmt_row = lambda cells: "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    lines = [fmt_row(header), fmt_row(["-" * w for w in widths])]
    lines.extend(fmt_row(r) for r in rows)
    return "\n".join(lines) + "\n"


def summary_table(result: ExperimentResult) -> str:
    """Comparable per-method summary (deviations in pu and displayed kV)."""
    kv = result.scenario.nominal_kv
    header = ["method", "status", "steps", "max_x_pu", "max_v_kv", "viol", "objective", "gap"]
    rows = []
    for m in result.methods.values():
        if m.error is not None:
            rows.append([m.name, "error", "-", "-", "-", "-", "-", m.error])
            continue
        rows.append(
            [
                m.name,
                m.status,
                str(m.steps),
                fmt(m.final_max_x),
                f"{kv * (1.0 + m.final_max_x):.4f}",
                str(m.violations_after_start),
                fmt(m.objective),
                fmt(m.gap) if np.isfinite(m.gap) else "-",
            ]
        )
    head = (
        f"n={result.n}  model_error_norm={fmt(result.eps_b)}  "
        f"relative_error={fmt(result.relative_error)}  "
        f"limit={fmt(result.scenario.x_limit_pu)} pu\n"
    )
    return head + _table(header, rows)


def sweep_table(rows: list[dict]) -> str:
    header = ["magnitude", "eps_b", "rel_error", "status", "steps", "max_x_pu", "viol", "gap"]
    body = []
    for r in rows:
        if r["error"] is not None:
            body.append([fmt(r["magnitude"]), "-", "-", "error", "-", "-", "-", r["error"]])
            continue
        body.append(
            [
                fmt(r["magnitude"]),
                fmt(r["eps_b"]),
                fmt(r["relative_error"]),
                r["status"],
                str(r["steps"]),
                fmt(r["final_max_x"]),
                str(r["violations_after_start"]),
                fmt(r["gap"]) if np.isfinite(r["gap"]) else "-",
            ]
        )
    return _table(header, body)


def sweep_csv_text(rows: list[dict]) -> str:
    out = ["magnitude,eps_b,relative_error,status,steps,final_max_x,violations,objective,gap"]
    for r in rows:
        if r["error"] is not None:
            out.append(f"{fmt(r['magnitude'])},,,error,,,,,")
            continue
        out.append(
            ",".join(
                (
                    fmt(r["magnitude"]),
                    fmt(r["eps_b"]),
                    fmt(r["relative_error"]),
                    r["status"],
                    str(r["steps"]),
                    fmt(r["final_max_x"]),
                    str(r["violations_after_start"]),
                    fmt(r["objective"]),
                    fmt(r["gap"]) if np.isfinite(r["gap"]) else "",
                )
            )
        )
    return "\n".join(out) + "\n"
