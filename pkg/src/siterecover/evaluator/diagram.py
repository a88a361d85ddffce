"""SVG reconstruction diagrams.

The core is a disc of radius ``CORE_R``. Its central hole covers the missing
fraction of the disc area, a dark-gray sector covers the changed fraction (so
dark area / disc area = changed), and the rest of the ring is light gray
(identical). Added resources form a crust ring outside the core whose area is
``added`` times the disc area.
"""

from __future__ import annotations

import math
from pathlib import Path

from .compare import DifferenceVector

SIZE = 220
CENTER = 100.0
CORE_R = 60.0
IDENTICAL_FILL = "#d9d9d9"
CHANGED_FILL = "#555555"
CRUST_FILL = "#b5651d"
HOLE_FILL = "#ffffff"


def _f(x: float) -> str:
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("", "-0") else s


def _annular_sector(r_in: float, r_out: float, frac: float) -> str:
    a0 = -math.pi / 2
    a1 = a0 + 2 * math.pi * frac
    large = 1 if frac > 0.5 else 0
    cx = cy = CENTER

    def pt(r, a):
        return f"{_f(cx + r * math.cos(a))} {_f(cy + r * math.sin(a))}"

    d = f"M {pt(r_out, a0)} A {_f(r_out)} {_f(r_out)} 0 {large} 1 {pt(r_out, a1)} "
    if r_in > 0:
        d += f"L {pt(r_in, a1)} A {_f(r_in)} {_f(r_in)} 0 {large} 0 {pt(r_in, a0)} Z"
    else:
        d += f"L {_f(cx)} {_f(cy)} Z"
    return d


def render_recon_diagram(vector: DifferenceVector, out: str | Path | None = None) -> str:
    changed, missing, added = (float(x) for x in vector.as_tuple())
    hole_r = CORE_R * math.sqrt(missing)
    crust_r = CORE_R * math.sqrt(1 + added)
    label = str(vector)
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE + 20}" '
        f'viewBox="0 0 {SIZE} {SIZE + 20}">',
        f"<!-- core radius {_f(CORE_R)}; hole area = missing, dark sector area = changed, "
        f"crust area = added (all relative to core disc area) -->",
        f"<title>reconstruction diagram {label}</title>",
    ]
    if added > 0:
        parts.append(f'<circle id="crust" cx="{_f(CENTER)}" cy="{_f(CENTER)}" r="{_f(crust_r)}" fill="{CRUST_FILL}"/>')
    if missing < 1:
        parts.append(f'<circle id="core" cx="{_f(CENTER)}" cy="{_f(CENTER)}" r="{_f(CORE_R)}" fill="{IDENTICAL_FILL}"/>')
        ring_frac = changed / (1 - missing)
        if ring_frac >= 1:
            parts.append(f'<circle id="changed" cx="{_f(CENTER)}" cy="{_f(CENTER)}" r="{_f(CORE_R)}" '
                         f'fill="{CHANGED_FILL}"/>')
        elif ring_frac > 0:
            parts.append(f'<path id="changed" d="{_annular_sector(hole_r, CORE_R, ring_frac)}" fill="{CHANGED_FILL}"/>')
    else:
        parts.append(f'<circle id="core" cx="{_f(CENTER)}" cy="{_f(CENTER)}" r="{_f(CORE_R)}" '
                     f'fill="none" stroke="{IDENTICAL_FILL}"/>')
    if missing > 0:
        parts.append(f'<circle id="hole" cx="{_f(CENTER)}" cy="{_f(CENTER)}" r="{_f(hole_r)}" fill="{HOLE_FILL}"/>')
    parts.append(f'<text x="{_f(CENTER)}" y="{SIZE + 12}" text-anchor="middle" font-family="sans-serif" '
                 f'font-size="12">{label}</text>')
    parts.append("</svg>")
    svg = "\n".join(parts) + "\n"
    if out is not None:
        Path(out).write_text(svg)
    return svg
