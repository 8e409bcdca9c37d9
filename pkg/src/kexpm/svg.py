"""Minimal self-contained SVG line charts with a log10 y axis."""

import math
import xml.etree.ElementTree as ET

Y_FLOOR, Y_CEIL = 1e-16, 1e16

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 170, 30, 50

# (stroke colour, dash pattern, marker) per series name
STYLES = {
    "err_true": ("#000000", None, None),
    "est_post": ("#d62728", None, "+"),
    "bnd_prior": ("#1f77b4", "8,4", None),
    "bnd_saad": ("#2ca02c", None, "x"),
    "bnd_hl": ("#9467bd", "2,3", None),
}
_DEFAULT_STYLE = ("#7f7f7f", None, None)


def _log_value(y):
    if y is None or not math.isfinite(y) or y < 0:
        return None
    return math.log10(min(max(y, Y_FLOOR), Y_CEIL))


def _segments(ks, ys):
    seg = []
    for k, y in zip(ks, ys):
        ly = _log_value(y)
        if ly is None:
            if seg:
                yield seg
            seg = []
        else:
            seg.append((k, ly))
    if seg:
        yield seg


def y_range(series):
    vals = [v for ys in series.values() for v in map(_log_value, ys) if v is not None]
    if not vals:
        return 0.0, 1.0
    lo, hi = math.floor(min(vals)), math.ceil(max(vals))
    if lo == hi:
        lo, hi = lo - 1, hi + 1
    return float(lo), float(hi)


def emit_svg(ks, series, path, title=""):
    """Write a chart of every series in ``series`` (name -> values over ``ks``).

    Non-finite values are left out, breaking the polyline; the rest are
    clamped to ``[1e-16, 1e16]`` before taking ``log10``.
    """
    ks = list(ks)
    for name, ys in series.items():
        if len(ys) != len(ks):
            raise ValueError(f"series {name!r} has {len(ys)} values for {len(ks)} abscissae")
    kmin, kmax = (min(ks), max(ks)) if ks else (0, 1)
    if kmax == kmin:
        kmax = kmin + 1
    ylo, yhi = y_range(series)
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(k):
        return LEFT + (k - kmin) / (kmax - kmin) * pw

    def py(ly):
        return TOP + (yhi - ly) / (yhi - ylo) * ph

    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(WIDTH),
                     height=str(HEIGHT), viewBox=f"0 0 {WIDTH} {HEIGHT}")
    ET.SubElement(svg, "rect", x="0", y="0", width=str(WIDTH), height=str(HEIGHT), fill="white")
    if title:
        t = ET.SubElement(svg, "text", x=str(LEFT), y="18", **{"font-size": "14"})
        t.text = title
    ET.SubElement(svg, "rect", x=str(LEFT), y=str(TOP), width=str(pw), height=str(ph),
                  fill="none", stroke="black")
    step = max(1, int(math.ceil((yhi - ylo) / 8)))
    d = int(ylo)
    while d <= yhi:
        y = py(d)
        ET.SubElement(svg, "line", x1=str(LEFT), x2=str(LEFT + pw), y1=f"{y:.2f}", y2=f"{y:.2f}",
                      stroke="#dddddd")
        lab = ET.SubElement(svg, "text", x=str(LEFT - 6), y=f"{y + 4:.2f}",
                            **{"text-anchor": "end", "font-size": "11"})
        lab.text = f"1e{d}"
        d += step
    for k in (kmin, (kmin + kmax) // 2, kmax):
        lab = ET.SubElement(svg, "text", x=f"{px(k):.2f}", y=str(TOP + ph + 16),
                            **{"text-anchor": "middle", "font-size": "11"})
        lab.text = str(k)
    xl = ET.SubElement(svg, "text", x=str(LEFT + pw // 2), y=str(HEIGHT - 10),
                       **{"text-anchor": "middle", "font-size": "12"})
    xl.text = "k"

    for idx, (name, ys) in enumerate(series.items()):
        colour, dash, marker = STYLES.get(name, _DEFAULT_STYLE)
        group = ET.SubElement(svg, "g", id=name, stroke=colour, fill="none")
        for seg in _segments(ks, ys):
            pts = " ".join(f"{px(k):.2f},{py(ly):.2f}" for k, ly in seg)
            attrs = {"points": pts, "stroke-width": "1.5"}
            if dash:
                attrs["stroke-dasharray"] = dash
            ET.SubElement(group, "polyline", **attrs)
            if marker:
                for k, ly in seg:
                    x, y = px(k), py(ly)
                    if marker == "+":
                        path_d = f"M{x - 3:.2f},{y:.2f}H{x + 3:.2f}M{x:.2f},{y - 3:.2f}V{y + 3:.2f}"
                    else:
                        path_d = (f"M{x - 3:.2f},{y - 3:.2f}L{x + 3:.2f},{y + 3:.2f}"
                                  f"M{x - 3:.2f},{y + 3:.2f}L{x + 3:.2f},{y - 3:.2f}")
                    ET.SubElement(group, "path", d=path_d)
        ly = TOP + 14 + 18 * idx
        lx = LEFT + pw + 12
        attrs = {"x1": str(lx), "x2": str(lx + 24), "y1": str(ly), "y2": str(ly),
                 "stroke": colour, "stroke-width": "1.5"}
        if dash:
            attrs["stroke-dasharray"] = dash
        ET.SubElement(svg, "line", **attrs)
        lab = ET.SubElement(svg, "text", x=str(lx + 30), y=str(ly + 4), **{"font-size": "11"})
        lab.text = name

    tree = ET.ElementTree(svg)
    ET.indent(tree)
    tree.write(path, encoding="utf-8", xml_declaration=True)
    return path
