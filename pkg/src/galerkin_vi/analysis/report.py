"""CSV and SVG output for convergence reports."""
import math
import os

import numpy as np

from ..errors import IoFailure

FORMATS = ("csv", "svg")


def _columns(report):
    """Metric names with at least one finite positive error; the rest are omitted."""
    keep, empty = [], []
    for name, m in report.metrics.items():
        vals = np.asarray(m.errors, dtype=float)
        if vals.size and np.any(np.isfinite(vals) & (vals > 0)):
            keep.append(name)
        else:
            empty.append(name)
    return keep, empty


def csv_text(report):
    keep, empty = _columns(report)
    lines = [",".join(["h"] + keep)]
    for i, h in enumerate(report.h_values):
        lines.append(",".join([repr(float(h))] + [repr(float(report.metrics[k].errors[i])) for k in keep]))
    for k in keep:
        m = report.metrics[k]
        rel = ">= " if m.mode == "at_least" else ""
        lines.append(f"# slope {k} = {m.slope:.4f} (expected {rel}{m.expected:g})")
        if m.excluded:
            lines.append(f"# excluded {k} h = {' '.join(repr(float(h)) for h in m.excluded)} (below floor)")
        if m.informational:
            lines.append(f"# informational {k}: not part of the verdict")
        if m.note:
            lines.append(f"# note {k}: {m.note}")
    for k in empty:
        lines.append(f"# omitted {k}: no data")
    lines.extend(f"# note: {n}" for n in report.notes)
    return "\n".join(lines) + "\n"


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
W, H, PAD = 640, 480, 60


def svg_text(report):
    """Log-log scatter per metric with its fitted line and one expected-slope guide."""
    keep, empty = _columns(report)
    hs = np.asarray(report.h_values, dtype=float)
    pts = [(h, e) for k in keep for h, e in zip(hs, report.metrics[k].errors) if e > 0 and np.isfinite(e)]
    if not pts:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    else:
        lx = np.log10([p[0] for p in pts])
        ly = np.log10([p[1] for p in pts])
        x0, x1 = lx.min() - 0.1, lx.max() + 0.1
        y0, y1 = ly.min() - 0.5, ly.max() + 0.5
        if x1 - x0 < 1e-9:
            x0, x1 = x0 - 1, x1 + 1

    def X(lh):
        return PAD + (lh - x0) / (x1 - x0) * (W - 2 * PAD)

    def Y(le):
        return H - PAD - (le - y0) / (y1 - y0) * (H - 2 * PAD)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<rect x="{PAD}" y="{PAD}" width="{W - 2 * PAD}" height="{H - 2 * PAD}" fill="none" stroke="black"/>',
           f'<text x="{W / 2}" y="{PAD / 2}" text-anchor="middle" font-size="13">{_escape(report.label)}</text>',
           f'<text x="{W / 2}" y="{H - 15}" text-anchor="middle" font-size="12">log10 h</text>',
           f'<text x="15" y="{H / 2}" text-anchor="middle" font-size="12" '
           f'transform="rotate(-90 15 {H / 2})">log10 error</text>']
    for tick in range(math.ceil(x0), math.floor(x1) + 1):
        out.append(f'<text x="{X(tick):.1f}" y="{H - PAD + 15}" text-anchor="middle" font-size="10">{tick}</text>')
    for tick in range(math.ceil(y0), math.floor(y1) + 1):
        out.append(f'<text x="{PAD - 5}" y="{Y(tick) + 3:.1f}" text-anchor="end" font-size="10">{tick}</text>')
    for i, k in enumerate(keep):
        m = report.metrics[k]
        color = _COLORS[i % len(_COLORS)]
        excluded = set(m.excluded)
        good = [(math.log10(h), math.log10(e), h in excluded)
                for h, e in zip(hs.tolist(), m.errors) if e > 0 and np.isfinite(e)]
        for lh, le, skip in good:
            filled = "none" if skip else color
            out.append(f'<circle class="point" data-metric="{k}" cx="{X(lh):.2f}" cy="{Y(le):.2f}" r="4" '
                       f'fill="{filled}" stroke="{color}"/>')
        used = [(lh, le) for lh, le, skip in good if not skip] or [(lh, le) for lh, le, _ in good]
        ax, ay = np.mean([p[0] for p in used]), np.mean([p[1] for p in used])
        if np.isfinite(m.slope):
            out.append(_line("fit", k, X, Y, ax, ay, m.slope, x0, x1, color, ""))
        out.append(_line("guide", k, X, Y, ax, ay, m.expected, x0, x1, color, ' stroke-dasharray="6,4"'))
        out.append(f'<text x="{W - PAD - 5}" y="{PAD + 15 + 15 * i}" text-anchor="end" font-size="11" '
                   f'fill="{color}">{_escape(k)}: slope {m.slope:.2f} (expected {m.expected:g})</text>')
    for j, k in enumerate(empty):
        out.append(f'<text x="{PAD + 5}" y="{H - PAD - 5 - 12 * j}" font-size="10">omitted {_escape(k)}: no data</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _line(kind, metric, X, Y, ax, ay, slope, x0, x1, color, extra):
    ya, yb = ay + slope * (x0 - ax), ay + slope * (x1 - ax)
    return (f'<line class="{kind}" data-metric="{metric}" x1="{X(x0):.2f}" y1="{Y(ya):.2f}" '
            f'x2="{X(x1):.2f}" y2="{Y(yb):.2f}" stroke="{color}"{extra}/>')


def _escape(text):
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def emit_report(report, fmt, path):
    """Write ``report`` to ``path`` as CSV or SVG and return the path."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown report format {fmt!r}")
    if not report.metrics or not report.h_values:
        raise ValueError("cannot emit an empty report")
    text = csv_text(report) if fmt == "csv" else svg_text(report)
    try:
        folder = os.path.dirname(os.fspath(path))
        if folder:
            os.makedirs(folder, exist_ok=True)
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(f"could not write {path}: {exc}") from exc
    return path
