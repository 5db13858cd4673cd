"""Static SVG Gantt charts: one row per machine, one rectangle per job piece."""
from __future__ import annotations

from fractions import Fraction
from xml.sax.saxutils import escape

ROW_H = 36
LABEL_W = 90
WIDTH = 900
PALETTE = ("#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
           "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac")


def _lanes(pieces):
    """Assign overlapping pieces of one row to separate lanes (first fit)."""
    lane_end: list = []
    out = []
    for start, end, label in sorted(pieces, key=lambda p: (p[0], p[1], p[2])):
        for k, e in enumerate(lane_end):
            if e <= start:
                lane_end[k] = end
                out.append((k, start, end, label))
                break
        else:
            lane_end.append(end)
            out.append((len(lane_end) - 1, start, end, label))
    return out, max(1, len(lane_end))


def render(rows: list, title: str = "") -> str:
    """``rows`` is a list of (row label, [(start, end, piece label), ...])."""
    points = [x for _, pieces in rows for s, e, _ in pieces for x in (s, e)]
    lo = min(points, default=Fraction(0))
    hi = max(points, default=Fraction(1))
    if hi == lo:
        hi = lo + 1
    scale = (WIDTH - LABEL_W - 20) / float(hi - lo)
    colour: dict = {}
    body = []
    y = 30
    for name, pieces in rows:
        placed, nlanes = _lanes(pieces)
        lane_h = (ROW_H - 6) / nlanes
        body.append(f'<text x="4" y="{y + ROW_H / 2 + 4:.1f}" font-size="12">{escape(str(name))}</text>')
        body.append(f'<rect x="{LABEL_W}" y="{y}" width="{WIDTH - LABEL_W - 20}" height="{ROW_H}" '
                    f'fill="none" stroke="#ccc"/>')
        for lane, s, e, label in placed:
            fill = colour.setdefault(label, PALETTE[len(colour) % len(PALETTE)])
            x = LABEL_W + float(s - lo) * scale
            w = max(float(e - s) * scale, 1.0)
            ly = y + 3 + lane * lane_h
            body.append(f'<rect x="{x:.2f}" y="{ly:.2f}" width="{w:.2f}" height="{lane_h - 1:.2f}" '
                        f'fill="{fill}" stroke="#333" stroke-width="0.5">'
                        f'<title>{escape(str(label))} [{s}, {e})</title></rect>')
        y += ROW_H + 6
    height = y + 24
    axis = [f'<text x="{LABEL_W}" y="{height - 8}" font-size="11">{lo}</text>',
            f'<text x="{WIDTH - 40}" y="{height - 8}" font-size="11">{hi}</text>']
    head = f'<text x="4" y="18" font-size="14">{escape(title)}</text>' if title else ""
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
            f'font-family="sans-serif">{head}{"".join(body)}{"".join(axis)}</svg>\n')


def active_rows(sched) -> list:
    pieces = [(t - 1, t, jid) for jid, slots in sched.assignment.items() for t in slots]
    return [("machine 0", pieces)]


def bundle_rows(sched) -> list:
    return [(f"machine {k}", [(j.release, j.deadline, j.id) for j in b.jobs])
            for k, b in enumerate(sched.bundles)]


def preemptive_rows(sched) -> list:
    per: dict = {}
    for jid, plist in sched.pieces.items():
        for m, iv in plist:
            per.setdefault(m, []).append((iv.start, iv.end, jid))
    return [(f"machine {m}", per[m]) for m in sorted(per)]
