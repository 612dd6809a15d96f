"""Static SVG figures rendered from a result bundle.

The SVG is written by hand with fixed number formatting so that identical
inputs produce identical bytes.
"""
from __future__ import annotations

from html import escape
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DataError

CELL = 36
PAD = 8
FONT = 11
LABEL_W = 110


def _f(x: float) -> str:
    return f"{x:.2f}"


def _svg(width: float, height: float, body: list[str], title: str) -> str:
    head = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" height="{_f(height)}" '
        f'viewBox="0 0 {_f(width)} {_f(height)}" font-family="sans-serif" font-size="{FONT}">',
        "<defs>",
        '<pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" '
        'patternTransform="rotate(45)">',
        '<rect width="6" height="6" fill="#ffffff"/>',
        '<line x1="0" y1="0" x2="0" y2="6" stroke="#888888" stroke-width="2"/>',
        "</pattern>",
        "</defs>",
        f'<text class="title" x="{PAD}" y="{FONT + PAD}" font-weight="bold">{escape(title)}</text>',
    ]
    return "\n".join(head + body + ["</svg>"]) + "\n"


def _color(v: float, lo: float, hi: float, diverging: bool) -> str:
    if diverging:
        t = 0.0 if hi == lo else float(np.clip(v / max(abs(lo), abs(hi)), -1, 1))
        if t >= 0:
            r, g, b = 255 - 200 * t, 255 - 150 * t, 255
        else:
            r, g, b = 255, 255 + 150 * t, 255 + 200 * t
    else:
        t = 0.0 if hi == lo else float(np.clip((v - lo) / (hi - lo), 0, 1))
        r, g, b = 255 - 220 * t, 255 - 160 * t, 255 - 40 * t
    return f"#{int(round(r)):02x}{int(round(g)):02x}{int(round(b)):02x}"


def heatmap_svg(values, row_labels, col_labels, title: str = "",
                vmin: float | None = None, vmax: float | None = None,
                diverging: bool = False) -> str:
    """One rect per cell; missing (NaN) cells are hatched and marked ``missing``."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 2 or v.shape != (len(row_labels), len(col_labels)):
        raise DataError("heatmap labels do not match the matrix shape")
    finite = v[np.isfinite(v)]
    lo = vmin if vmin is not None else (finite.min() if finite.size else 0.0)
    hi = vmax if vmax is not None else (finite.max() if finite.size else 1.0)
    top = 2 * FONT + 3 * PAD + LABEL_W * 0.6
    left = LABEL_W
    body = []
    for j, lab in enumerate(col_labels):
        x = left + (j + 0.5) * CELL
        y = top - PAD
        body.append(f'<text class="col-label" x="{_f(x)}" y="{_f(y)}" '
                    f'transform="rotate(-45 {_f(x)} {_f(y)})">{escape(str(lab))}</text>')
    for i, lab in enumerate(row_labels):
        y = top + (i + 0.5) * CELL + FONT / 3
        body.append(f'<text class="row-label" x="{_f(left - PAD)}" y="{_f(y)}" '
                    f'text-anchor="end">{escape(str(lab))}</text>')
        for j in range(v.shape[1]):
            x0, y0 = left + j * CELL, top + i * CELL
            if np.isfinite(v[i, j]):
                fill = _color(v[i, j], lo, hi, diverging)
                body.append(f'<rect class="cell" x="{_f(x0)}" y="{_f(y0)}" width="{CELL}" '
                            f'height="{CELL}" fill="{fill}" stroke="#ffffff"/>')
                body.append(f'<text class="value" x="{_f(x0 + CELL / 2)}" '
                            f'y="{_f(y0 + CELL / 2 + FONT / 3)}" text-anchor="middle" '
                            f'font-size="{FONT - 2}">{v[i, j]:.2f}</text>')
            else:
                body.append(f'<rect class="cell missing" x="{_f(x0)}" y="{_f(y0)}" '
                            f'width="{CELL}" height="{CELL}" fill="url(#hatch)" stroke="#ffffff"/>')
    width = left + v.shape[1] * CELL + 2 * PAD
    height = top + v.shape[0] * CELL + 2 * PAD
    return _svg(width, height, body, title)


def _axes(x0, y0, w, h, xlabel, ylabel, xticks, yticks, xmap, ymap) -> list[str]:
    out = [f'<line class="axis" x1="{_f(x0)}" y1="{_f(y0 + h)}" x2="{_f(x0 + w)}" '
           f'y2="{_f(y0 + h)}" stroke="#000000"/>',
           f'<line class="axis" x1="{_f(x0)}" y1="{_f(y0)}" x2="{_f(x0)}" y2="{_f(y0 + h)}" '
           f'stroke="#000000"/>']
    for t in xticks:
        out.append(f'<text class="tick" x="{_f(xmap(t))}" y="{_f(y0 + h + FONT + 2)}" '
                   f'text-anchor="middle">{t:g}</text>')
    for t in yticks:
        out.append(f'<text class="tick" x="{_f(x0 - 4)}" y="{_f(ymap(t) + FONT / 3)}" '
                   f'text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{_f(x0 + w / 2)}" y="{_f(y0 + h + 2 * FONT + 6)}" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="{_f(x0 - 30)}" y="{_f(y0 + h / 2)}" text-anchor="middle" '
               f'transform="rotate(-90 {_f(x0 - 30)} {_f(y0 + h / 2)})">{escape(ylabel)}</text>')
    return out


def curve_svg(curve: pd.DataFrame, title: str = "") -> str:
    """Step plot of components (size > 1) and connected factors against the threshold."""
    x0, y0, w, h = 60.0, 40.0, 320.0, 200.0
    t = curve["threshold"].to_numpy(float)
    series = {"components": "#1f77b4", "factors_connected": "#d62728"}
    ymax = max(1.0, float(max(curve[c].max() for c in series)))
    tmin, tmax = float(min(t.min(), 0.0)), float(max(t.max(), 1.0))

    def xmap(v):
        return x0 + (v - tmin) / (tmax - tmin) * w

    def ymap(v):
        return y0 + h - v / ymax * h

    body = _axes(x0, y0, w, h, "threshold", "count", [tmin, (tmin + tmax) / 2, tmax],
                 sorted({0, int(ymax)}), xmap, ymap)
    order = np.argsort(t, kind="stable")
    for k, (col, color) in enumerate(series.items()):
        ys = curve[col].to_numpy(float)[order]
        xs = t[order]
        d = f"M {_f(xmap(xs[0]))} {_f(ymap(ys[0]))}"
        for i in range(1, len(xs)):
            d += f" H {_f(xmap(xs[i]))} V {_f(ymap(ys[i]))}"
        body.append(f'<path class="series {col}" d="{d}" fill="none" stroke="{color}" '
                    f'stroke-width="2"/>')
        body.append(f'<text x="{_f(x0 + w + 6)}" y="{_f(y0 + 12 + 14 * k)}" '
                    f'fill="{color}">{col}</text>')
    return _svg(x0 + w + 140, y0 + h + 50, body, title)


def dendrogram_svg(merges, factor_names, title: str = "") -> str:
    """Tree with leaves at the bottom and merge height ``1 - threshold``.

    ``merges`` is a sequence of ``(threshold, (a, b))`` with factor indices
    ``a`` and ``b`` belonging to the two clusters being joined.
    """
    k = len(factor_names)
    cluster = {i: i for i in range(k)}
    members = {i: [i] for i in range(k)}
    pos = {}
    height = {i: 0.0 for i in range(k)}
    nodes = []
    next_id = k
    for thr, (a, b) in merges:
        ca, cb = cluster[a], cluster[b]
        if ca == cb:
            continue
        nodes.append((next_id, ca, cb, float(thr)))
        members[next_id] = members.pop(ca) + members.pop(cb)
        for f in members[next_id]:
            cluster[f] = next_id
        height[next_id] = 1.0 - float(thr)
        next_id += 1
    order = [f for c in sorted(members) for f in members[c]]
    x0, y0, w, h = 60.0, 40.0, max(60.0 * k, 120.0), 200.0
    step = w / max(k, 1)
    for idx, f in enumerate(order):
        pos[f] = x0 + (idx + 0.5) * step

    def ymap(v):
        return y0 + h - v * h

    body = _axes(x0, y0, w, h, "", "1 - threshold", [], [0, 0.5, 1],
                 lambda v: v, ymap)
    for f in range(k):
        body.append(f'<text class="leaf" x="{_f(pos[f])}" y="{_f(y0 + h + FONT + 4)}" '
                    f'text-anchor="middle">{escape(str(factor_names[f]))}</text>')
    for nid, ca, cb, thr in nodes:
        xa, xb = pos[ca], pos[cb]
        ya, yb, yn = ymap(height[ca]), ymap(height[cb]), ymap(height[nid])
        pos[nid] = (xa + xb) / 2
        d = (f"M {_f(xa)} {_f(ya)} V {_f(yn)} H {_f(xb)} V {_f(yb)}")
        body.append(f'<g class="merge" data-threshold="{thr:.6g}">'
                    f'<path d="{d}" fill="none" stroke="#333333" stroke-width="1.5"/>'
                    f'<text x="{_f(pos[nid])}" y="{_f(yn - 4)}" text-anchor="middle" '
                    f'font-size="{FONT - 2}">{thr:.3g}</text></g>')
    return _svg(x0 + w + 2 * PAD, y0 + h + 40, body, title)


def scatter_grid_svg(wide: pd.DataFrame, title: str = "", max_metrics: int = 8) -> str:
    """Lower-triangle grid of metric-vs-metric scatter plots."""
    cols = list(wide.columns)[:max_metrics]
    n = len(cols)
    size, gap = 90.0, 12.0
    x0, y0 = 90.0, 40.0
    body = []
    for i in range(n):
        yi = wide[cols[i]].to_numpy(float)
        body.append(f'<text class="row-label" x="{_f(x0 - 6)}" '
                    f'y="{_f(y0 + i * (size + gap) + size / 2)}" text-anchor="end">'
                    f'{escape(cols[i])}</text>')
        body.append(f'<text class="col-label" x="{_f(x0 + i * (size + gap) + size / 2)}" '
                    f'y="{_f(y0 + n * (size + gap) + 4)}" text-anchor="middle">'
                    f'{escape(cols[i])}</text>')
        for j in range(i):
            xj = wide[cols[j]].to_numpy(float)
            px, py = x0 + j * (size + gap), y0 + i * (size + gap)
            body.append(f'<rect class="panel" x="{_f(px)}" y="{_f(py)}" width="{_f(size)}" '
                        f'height="{_f(size)}" fill="none" stroke="#999999"/>')
            ok = np.isfinite(xj) & np.isfinite(yi)
            if not ok.any():
                continue
            lx, hx = xj[ok].min(), xj[ok].max()
            ly, hy = yi[ok].min(), yi[ok].max()
            for a, b in zip(xj[ok], yi[ok]):
                cx = px + 4 + (0.5 if hx == lx else (a - lx) / (hx - lx)) * (size - 8)
                cy = py + size - 4 - (0.5 if hy == ly else (b - ly) / (hy - ly)) * (size - 8)
                body.append(f'<circle cx="{_f(cx)}" cy="{_f(cy)}" r="2" fill="#1f77b4"/>')
    return _svg(x0 + n * (size + gap) + PAD, y0 + n * (size + gap) + 30, body, title)


def _save(path: Path, text: str, written: list) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    written.append(str(path))


def render_report(out) -> dict:
    """Render every figure the bundle supports; absent inputs are listed as missing."""
    out = Path(out)
    fig = out / "figures"
    written: list[str] = []
    missing: list[str] = []

    mroot = out / "matrices"
    mats = sorted(mroot.glob("*/*/seed*_*.csv")) if mroot.is_dir() else []
    if not mats:
        missing.append("matrices")
    for path in mats:
        df = pd.read_csv(path, index_col=0)
        ds, enc = path.parent.parent.name, path.parent.name
        _save(fig / "matrices" / f"{ds}_{enc}_{path.stem}.svg",
              heatmap_svg(df.to_numpy(float), list(df.index), list(df.columns),
                          f"{ds} / {enc} / {path.stem}", vmin=0.0), written)

    scores = out / "scores.csv"
    if scores.is_file():
        table = pd.read_csv(scores, keep_default_na=False, dtype={"dataset_id": str})
        for ds, sub in sorted(table.groupby("dataset_id")):
            wide = sub.pivot_table(index=["encoder_id", "seed"], columns="metric_name",
                                   values="value", aggfunc="mean")
            if wide.shape[1] >= 2:
                _save(fig / f"scatter_{ds}.svg", scatter_grid_svg(wide, f"metrics on {ds}"),
                      written)
    else:
        missing.append("scores.csv")

    adir = out / "analyses"
    if not adir.is_dir():
        missing.append("analyses")
    else:
        for path in sorted(adir.glob("rankcorr_*.csv")):
            df = pd.read_csv(path, index_col=0)
            _save(fig / f"{path.stem}.svg",
                  heatmap_svg(df.to_numpy(float), list(df.index), list(df.columns), path.stem,
                              vmin=-1.0, vmax=1.0, diverging=True), written)
        for path in sorted(adir.glob("confusion_*.csv")):
            df = pd.read_csv(path, index_col=0)
            _save(fig / f"{path.stem}.svg",
                  heatmap_svg(df.to_numpy(float), list(df.index), list(df.columns), path.stem,
                              vmin=0.0, vmax=1.0), written)
        for path in sorted((adir / "curves").glob("*.csv")):
            _save(fig / "curves" / f"{path.stem}.svg", curve_svg(pd.read_csv(path), path.stem),
                  written)
        for path in sorted((adir / "dendrograms").glob("*.csv")):
            df = pd.read_csv(path, dtype={"factor_a": str, "factor_b": str})
            mpath = _dendrogram_source(out, path.stem)
            names = (list(pd.read_csv(mpath, index_col=0).index) if mpath is not None
                     else sorted(set(df["factor_a"]) | set(df["factor_b"])))
            idx = {n: i for i, n in enumerate(names)}
            merges = [(t, (idx[a], idx[b])) for t, a, b in
                      df[["threshold", "factor_a", "factor_b"]].itertuples(index=False)]
            _save(fig / "dendrograms" / f"{path.stem}.svg",
                  dendrogram_svg(merges, names, path.stem), written)
    return {"written": written, "missing": missing}


def _dendrogram_source(out: Path, stem: str) -> Path | None:
    for path in (out / "matrices").glob("*/*/seed*_*.csv"):
        if f"{path.parent.parent.name}_{path.parent.name}_{path.stem}" == stem:
            return path
    return None
