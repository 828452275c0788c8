"""Minimal deterministic SVG 1.1 writer."""

from xml.sax.saxutils import escape, quoteattr

PALETTE = (
    "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c",
    "#98df8a", "#d62728", "#ff9896", "#9467bd", "#c5b0d5",
    "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f",
    "#c7c7c7", "#bcbd22", "#dbdb8d", "#17becf", "#9edae5",
)

FONT = "sans-serif"


def fmt(x) -> str:
    """Fixed 3-decimal rendering with no negative zero."""
    s = f"{float(x):.3f}"
    if s.startswith("-") and float(s) == 0.0:
        s = s[1:]
    return s


def color(i: int) -> str:
    return PALETTE[i % len(PALETTE)]


class Svg:
    def __init__(self, width, height):
        self.width = width
        self.height = height
        self._items = []

    def _el(self, tag, text=None, **attrs):
        parts = [tag]
        for key, val in attrs.items():
            if val is None:
                continue
            name = key.rstrip("_").replace("_", "-")
            if isinstance(val, float):
                val = fmt(val)
            parts.append(f"{name}={quoteattr(str(val))}")
        if text is None:
            self._items.append("<" + " ".join(parts) + "/>")
        else:
            self._items.append("<" + " ".join(parts) + ">" + escape(str(text)) + f"</{tag}>")

    def line(self, x1, y1, x2, y2, stroke="#000000", width=1.0, dash=None):
        self._el("line", x1=float(x1), y1=float(y1), x2=float(x2), y2=float(y2),
                 stroke=stroke, stroke_width=float(width), stroke_dasharray=dash)

    def rect(self, x, y, w, h, fill="#000000", stroke=None, opacity=None):
        self._el("rect", x=float(x), y=float(y), width=float(w), height=float(h),
                 fill=fill, stroke=stroke, fill_opacity=opacity)

    def circle(self, cx, cy, r, fill="#000000", stroke=None, opacity=None):
        self._el("circle", cx=float(cx), cy=float(cy), r=float(r), fill=fill,
                 stroke=stroke, fill_opacity=opacity)

    def polygon(self, points, fill="#000000", stroke=None, opacity=None):
        pts = " ".join(f"{fmt(x)},{fmt(y)}" for x, y in points)
        self._el("polygon", points=pts, fill=fill, stroke=stroke, fill_opacity=opacity)

    def polyline(self, points, stroke="#000000", width=1.0, dash=None):
        pts = " ".join(f"{fmt(x)},{fmt(y)}" for x, y in points)
        self._el("polyline", points=pts, fill="none", stroke=stroke,
                 stroke_width=float(width), stroke_dasharray=dash)

    def text(self, x, y, s, size=11, anchor="start", weight=None, rotate=None):
        transform = None
        if rotate is not None:
            transform = f"rotate({fmt(rotate)} {fmt(x)} {fmt(y)})"
        self._el("text", text=s, x=float(x), y=float(y), font_family=FONT,
                 font_size=size, text_anchor=anchor, font_weight=weight, transform=transform)

    def to_string(self) -> str:
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">\n'
        )
        body = "\n".join(self._items)
        return head + f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="#ffffff"/>\n' + body + "\n</svg>\n"


class Axis:
    """Linear map from data interval [lo, hi] to pixel interval [a, b]."""

    def __init__(self, lo, hi, a, b):
        if hi <= lo:
            pad = max(abs(lo) * 0.05, 0.05)
            lo, hi = lo - pad, hi + pad
        self.lo, self.hi, self.a, self.b = float(lo), float(hi), float(a), float(b)

    def __call__(self, x):
        return self.a + (float(x) - self.lo) / (self.hi - self.lo) * (self.b - self.a)

    def to_dict(self):
        return {"data": [self.lo, self.hi], "pixels": [self.a, self.b]}


def nice_ticks(lo, hi, target=5):
    import math

    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / max(target, 1)
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 2.5, 5, 10):
        step = mult * mag
        if step >= raw:
            break
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 10))
        t += step
    return ticks
