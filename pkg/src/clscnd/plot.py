"""Static SVG scatter matrix of a Pareto run (three pairwise panels)."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .domain import OBJECTIVE_NAMES

WIDTH, HEIGHT = 900, 300
PAIRS = ((0, 1), (0, 2), (1, 2))
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 58, 14, 24, 46


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _axis_span(lo: float, hi: float) -> tuple[float, float]:
    if hi - lo <= 1e-12 * max(1.0, abs(lo)):
        pad = max(1.0, abs(lo)) * 0.05
        return lo - pad, hi + pad
    pad = 0.04 * (hi - lo)
    return lo - pad, hi + pad


def front_svg(front) -> str:
    """Render cells (grey) and front members (filled) of a ``ParetoFront``.

    Axis limits come from the payoff extremes widened to cover every plotted
    point, and the extremes are printed at the axis ends.
    """
    panel_w = WIDTH / 3
    plot_w = panel_w - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B
    others = [c.triple.as_tuple() for c in front.cells if c.triple is not None and not c.in_front]
    members = [m.triple.as_tuple() for m in front.members]
    every = others + members
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="10">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    for panel, (ix, iy) in enumerate(PAIRS):
        x0 = panel * panel_w + MARGIN_L
        y0 = MARGIN_T
        ext = []
        for axis in (ix, iy):
            f_min, f_max, _ = front.ranges.of(axis)
            vals = [p[axis] for p in every] + [f_min, f_max]
            ext.append((f_min, f_max, *_axis_span(min(vals), max(vals))))
        (xmin, xmax, xlo, xhi), (ymin, ymax, ylo, yhi) = ext

        def sx(v, xlo=xlo, xhi=xhi, x0=x0):
            return x0 + (v - xlo) / (xhi - xlo) * plot_w

        def sy(v, ylo=ylo, yhi=yhi):
            return y0 + plot_h - (v - ylo) / (yhi - ylo) * plot_h

        out.append(f'<g id="panel-{OBJECTIVE_NAMES[ix]}-{OBJECTIVE_NAMES[iy]}">')
        out.append(f'<rect x="{x0:.1f}" y="{y0:.1f}" width="{plot_w:.1f}" height="{plot_h:.1f}" '
                   'fill="none" stroke="black" stroke-width="0.8"/>')
        for v, anchor in ((xmin, "start"), (xmax, "end")):
            out.append(f'<text x="{sx(v):.1f}" y="{y0 + plot_h + 12:.1f}" text-anchor="{anchor}">'
                       f'{_fmt(v)}</text>')
        for v, dy in ((ymin, 0), (ymax, 8)):
            out.append(f'<text x="{x0 - 3:.1f}" y="{sy(v) + dy:.1f}" text-anchor="end">{_fmt(v)}</text>')
        out.append(f'<text x="{x0 + plot_w / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle">'
                   f'{escape(OBJECTIVE_NAMES[ix])}</text>')
        out.append(f'<text x="{x0 - 46:.1f}" y="{y0 + plot_h / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 {x0 - 46:.1f} {y0 + plot_h / 2:.1f})">'
                   f'{escape(OBJECTIVE_NAMES[iy])}</text>')
        for p in others:
            out.append(f'<circle cx="{sx(p[ix]):.2f}" cy="{sy(p[iy]):.2f}" r="2.5" fill="none" '
                       'stroke="#999999"/>')
        for p in members:
            out.append(f'<circle class="front" cx="{sx(p[ix]):.2f}" cy="{sy(p[iy]):.2f}" r="3" '
                       'fill="#1f5fa8"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
