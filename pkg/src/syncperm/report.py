"""CSV and SVG rendering of rejection tables."""

from __future__ import annotations

import csv
import io
import os
from collections import defaultdict
from xml.sax.saxutils import escape

from .simulation import METHODS, RejectionRow, RejectionTable, build_setting

COLUMNS = (
    "study", "setting", "increment", "distribution", "effect", "method",
    "condition", "delta", "n_sim", "rejections", "rate", "degenerate_count",
)
SKIP_MARKER = "skipped"


def _fmt_opt(v) -> str:
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else str(v)


def table_to_csv(table: RejectionTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in table.rows:
        w.writerow([
            r.study, r.setting, r.increment, r.distribution, r.effect, r.method,
            _fmt_opt(r.condition), _fmt_opt(r.delta), r.n_sim,
            "" if r.skipped else r.rejections,
            SKIP_MARKER if r.skipped else ("" if r.n_sim == 0 else f"{r.rate:.6f}"),
            "" if r.skipped else r.degenerate_count,
        ])
    return buf.getvalue()


def emit_csv(table: RejectionTable, path) -> str:
    """Write ``table`` to ``path``; rates carry 6 decimals, counts are exact."""
    text = table_to_csv(table)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return str(path)


def parse_csv(text: str) -> RejectionTable:
    rows = []
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return RejectionTable()
    missing = [c for c in COLUMNS if c not in reader.fieldnames]
    if missing:
        raise ValueError("CSV is missing columns: " + ", ".join(missing))
    for rec in reader:
        skipped = rec["rate"] == SKIP_MARKER
        rows.append(RejectionRow(
            study=rec["study"],
            setting=int(rec["setting"]),
            increment=int(rec["increment"]),
            distribution=rec["distribution"],
            effect=rec["effect"],
            method=rec["method"],
            condition=int(rec["condition"]) if rec["condition"] else None,
            delta=float(rec["delta"]) if rec["delta"] else None,
            n_sim=int(rec["n_sim"]),
            rejections=None if skipped else int(rec["rejections"]),
            degenerate_count=None if skipped else int(rec["degenerate_count"]),
        ))
    return RejectionTable(rows)


def read_csv(path) -> RejectionTable:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_csv(fh.read())


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

PALETTE = {
    "WTS": "#1f77b4", "ATS": "#ff7f0e", "WTPS": "#2ca02c",
    "CSP": "#d62728", "USP": "#9467bd",
}
W, H = 480, 320
ML, MR, MT, MB = 56, 110, 30, 44


def _chart_groups(table: RejectionTable):
    groups = defaultdict(list)
    for r in table.rows:
        if r.skipped or r.n_sim == 0:
            continue
        if r.study == "null":
            key = ("null", r.setting, r.distribution, r.effect, None)
        else:
            key = ("power", r.setting, r.distribution, r.effect, r.condition)
        groups[key].append(r)
    return groups


def _x_value(r: RejectionRow) -> float:
    if r.study == "null":
        return float(build_setting(r.setting, r.increment).total_n)
    return float(r.delta)


def render_svg(rows, title: str, xlabel: str, alpha: float = 0.05) -> str:
    lines = defaultdict(list)
    for r in rows:
        lines[r.method].append((_x_value(r), r.rate))
    xs = [x for pts in lines.values() for x, _ in pts]
    x0, x1 = min(xs), max(xs)
    if x1 == x0:
        x0, x1 = x0 - 1.0, x1 + 1.0
    ys = [y for pts in lines.values() for _, y in pts] + [alpha]
    y1 = max(0.1, min(1.0, max(ys) * 1.1))
    pw, ph = W - ML - MR, H - MT - MB

    def sx(x):
        return ML + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return MT + ph - y / y1 * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
        f'<title>{escape(title)}</title>',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{ML}" y="18" font-size="13">{escape(title)}</text>',
        f'<line x1="{ML}" y1="{MT + ph}" x2="{ML + pw}" y2="{MT + ph}" stroke="black"/>',
        f'<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{MT + ph}" stroke="black"/>',
    ]
    for k in range(6):
        yv = y1 * k / 5
        out.append(f'<text x="{ML - 6}" y="{sy(yv) + 4:.2f}" text-anchor="end">{yv:.3f}</text>')
    for xv in sorted(set(xs)):
        out.append(f'<text x="{sx(xv):.2f}" y="{MT + ph + 16}" text-anchor="middle">{xv:g}</text>')
    out.append(f'<text x="{ML + pw / 2}" y="{H - 8}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<line class="alpha-reference" data-alpha="{alpha}" x1="{ML}" y1="{sy(alpha):.2f}" '
        f'x2="{ML + pw}" y2="{sy(alpha):.2f}" stroke="red" stroke-width="0.8"/>'
    )
    order = [m for m in METHODS if m in lines] + sorted(m for m in lines if m not in METHODS)
    for i, m in enumerate(order):
        pts = sorted(lines[m])
        color = PALETTE.get(m, "#444444")
        path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        out.append(
            f'<polyline class="method" data-method="{escape(m)}" fill="none" '
            f'stroke="{color}" stroke-width="1.5" points="{path}"/>'
        )
        ly = MT + 12 + 16 * i
        out.append(f'<line x1="{W - MR + 10}" y1="{ly}" x2="{W - MR + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{W - MR + 36}" y="{ly + 4}">{escape(m)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(table: RejectionTable, out_dir, alpha: float = 0.05) -> list:
    """One line chart per (setting, distribution, effect[, condition]).

    Null-study charts plot rate against total sample size, power-study
    charts against delta.
    """
    groups = _chart_groups(table)
    if not groups:
        raise ValueError("no plottable rows in table")
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for (study, setting, dist, effect, cond), rows in sorted(
        groups.items(), key=lambda kv: tuple("" if v is None else str(v) for v in kv[0])
    ):
        if study == "null":
            name = f"null_setting{setting}_{dist}_{effect}.svg"
            title = f"Null study, setting {setting}, {dist}, effect {effect}"
            xlabel = "total N"
        else:
            name = f"power_setting{setting}_{dist}_cond{cond}_{effect}.svg"
            title = f"Power study, setting {setting}, {dist}, condition {cond}, effect {effect}"
            xlabel = "delta"
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(render_svg(rows, title, xlabel, alpha))
        paths.append(path)
    return paths
