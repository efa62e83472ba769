"""Hand-written SVG charts.

Output depends only on the bundle, so bytes are stable across runs.  Bars
and points carry ``data-*`` attributes so tests can read the geometry back.
"""
from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

from ..classify.taxonomy import topic_name
from .aggregate import TimeSeries, TrendBundle, period_bounds

WIDTH, HEIGHT = 960, 540
LEFT, RIGHT, TOP, BOTTOM = 70, 200, 50, 70
PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
           "#bcbd22", "#17becf", "#393b79", "#637939", "#8c6d31", "#843c39", "#7b4173"]
MAX_LINES = 8
# US federal eviction moratorium, CDC order through its end (UTC).
MORATORIUM = (1585267200, 1630022400)  # 2020-03-27 .. 2021-08-27
FILES = {"states": "state_topics.svg", "posts": "post_frequency.svg", "topics": "topic_frequency.svg"}


def _f(x: float) -> str:
    return f"{x:.2f}"


class _Svg:
    def __init__(self, title: str):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
            f'<text x="{WIDTH / 2:.0f}" y="28" text-anchor="middle" font-size="16">{escape(title)}</text>',
        ]

    def add(self, s: str) -> None:
        self.parts.append(s)

    def text(self, x: float, y: float, s: str, anchor: str = "start", **attrs) -> None:
        extra = "".join(f' {k.rstrip("_").replace("_", "-")}="{escape(str(v))}"' for k, v in attrs.items())
        self.add(f'<text x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}"{extra}>{escape(s)}</text>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _plot_box() -> tuple[float, float, float, float]:
    return LEFT, TOP, WIDTH - RIGHT, HEIGHT - BOTTOM


def _nice_max(v: int) -> int:
    if v <= 0:
        return 1
    for step in (1, 2, 5, 10, 20, 25, 50, 100, 200, 250, 500, 1000, 2000, 5000, 10000):
        if v <= step * 5:
            return -(-v // step) * step
    return v


def _axes(svg: _Svg, ymax: int, ylabel: str) -> float:
    x0, y0, x1, y1 = _plot_box()
    svg.add(f'<g class="axes" stroke="#000000">'
            f'<line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/></g>')
    top = _nice_max(ymax)
    for i in range(6):
        v = top * i / 5
        y = y1 - (y1 - y0) * i / 5
        svg.add(f'<line x1="{x0 - 4}" y1="{_f(y)}" x2="{x0}" y2="{_f(y)}" stroke="#000000"/>')
        svg.text(x0 - 8, y + 4, f"{v:g}", "end")
    svg.text(18, (y0 + y1) / 2, ylabel, "middle", transform=f"rotate(-90 18 {_f((y0 + y1) / 2)})")
    return (y1 - y0) / top


def _empty(svg: _Svg) -> None:
    x0, y0, x1, y1 = _plot_box()
    svg.text((x0 + x1) / 2, (y0 + y1) / 2, "empty", "middle", class_="annotation empty")


def state_chart(bundle: TrendBundle) -> str:
    """Grouped bars: one group per state, one bar per display topic present."""
    t = bundle.states
    svg = _Svg("Topic frequencies by state")
    states = t.states
    topics = sorted({topic for s in states for topic in t.counts[s]})
    ymax = max((c for s in states for c in t.counts[s].values()), default=0)
    scale = _axes(svg, ymax, "posts")
    x0, y0, x1, y1 = _plot_box()
    if not states:
        _empty(svg)
        return svg.render()
    colors = {topic: PALETTE[i % len(PALETTE)] for i, topic in enumerate(topics)}
    group_w = (x1 - x0) / len(states)
    bar_w = group_w * 0.8 / max(1, len(topics))
    for gi, s in enumerate(states):
        gx = x0 + gi * group_w + group_w * 0.1
        svg.add(f'<g class="group" data-state="{escape(s)}" data-total="{t.total(s)}">')
        for bi, topic in enumerate(topics):
            c = t.counts[s].get(topic, 0)
            h = c * scale
            svg.add(f'<rect class="bar" data-state="{escape(s)}" data-topic="{escape(topic)}" data-count="{c}" '
                    f'x="{_f(gx + bi * bar_w)}" y="{_f(y1 - h)}" width="{_f(bar_w)}" height="{_f(h)}" '
                    f'fill="{colors[topic]}"/>')
        svg.add("</g>")
        svg.text(gx + group_w * 0.4, y1 + 18, s, "middle")
    _legend(svg, [(topic, colors[topic]) for topic in topics])
    return svg.render()


def _legend(svg: _Svg, items) -> None:
    x = WIDTH - RIGHT + 15
    for i, (topic, color) in enumerate(items):
        y = TOP + 10 + i * 18
        svg.add(f'<rect x="{x}" y="{y - 9}" width="10" height="10" fill="{color}"/>')
        svg.text(x + 16, y, topic_name(topic))


def _x_positions(periods: list[str]) -> dict[str, float]:
    x0, _, x1, _ = _plot_box()
    if len(periods) == 1:
        return {periods[0]: (x0 + x1) / 2}
    step = (x1 - x0 - 40) / (len(periods) - 1)
    return {k: x0 + 20 + i * step for i, k in enumerate(periods)}


def _x_ticks(svg: _Svg, xs: dict[str, float]) -> None:
    _, _, _, y1 = _plot_box()
    every = max(1, len(xs) // 12)
    for i, (k, x) in enumerate(xs.items()):
        if i % every == 0:
            svg.text(x, y1 + 18, k, "middle")


def _line(svg: _Svg, ts: TimeSeries, xs: dict[str, float], scale: float, color: str, name: str) -> None:
    _, _, _, y1 = _plot_box()
    pts = [(xs[k], y1 - c * scale, k, c) for k, c in ts.points]
    path = " ".join(f"{_f(x)},{_f(y)}" for x, y, _, _ in pts)
    svg.add(f'<polyline class="series" data-topic="{escape(name)}" fill="none" stroke="{color}" '
            f'stroke-width="2" points="{path}"/>')
    for x, y, k, c in pts:
        svg.add(f'<circle class="point" data-topic="{escape(name)}" data-period="{k}" data-count="{c}" '
                f'cx="{_f(x)}" cy="{_f(y)}" r="3" fill="{color}"/>')


def _partial_marks(svg: _Svg, ts: TimeSeries, xs: dict[str, float]) -> None:
    _, y0, _, y1 = _plot_box()
    for k in ts.partial:
        x = xs[k]
        svg.add(f'<line class="annotation partial" data-period="{k}" x1="{_f(x)}" y1="{y0}" x2="{_f(x)}" '
                f'y2="{y1}" stroke="#999999" stroke-dasharray="4 3"/>')
        svg.text(x, y0 - 6, f"{k}: partial period", "middle", class_="annotation partial", font_size="10")


def post_chart(bundle: TrendBundle) -> str:
    ts = bundle.posts
    svg = _Svg(f"Post frequency (N={ts.total})")
    scale = _axes(svg, max(ts.counts, default=0), "posts")
    if not ts.points:
        _empty(svg)
        return svg.render()
    xs = _x_positions(ts.periods)
    _x_ticks(svg, xs)
    _partial_marks(svg, ts, xs)
    _line(svg, ts, xs, scale, PALETTE[0], "ALL")
    return svg.render()


def _moratorium(svg: _Svg, ts: TimeSeries, xs: dict[str, float]) -> None:
    inside = [k for k in ts.periods
              if period_bounds(k, ts.period)[0] < MORATORIUM[1] and period_bounds(k, ts.period)[1] > MORATORIUM[0]]
    if not inside:
        return
    _, y0, _, y1 = _plot_box()
    a, b = xs[inside[0]], xs[inside[-1]]
    pad = 8
    svg.add(f'<rect class="annotation moratorium" data-periods="{inside[0]}..{inside[-1]}" '
            f'x="{_f(a - pad)}" y="{y0}" width="{_f(b - a + 2 * pad)}" height="{y1 - y0}" '
            f'fill="#fdd0a2" fill-opacity="0.35"/>')
    svg.text((a + b) / 2, y0 + 14, "eviction moratorium", "middle", class_="annotation moratorium",
             font_size="10")


def topic_chart(bundle: TrendBundle) -> str:
    """Lines for the most frequent topics, with moratorium and partial-period annotations."""
    svg = _Svg("Topic frequency over time")
    series = sorted(bundle.topics.items(), key=lambda kv: (-kv[1].total, kv[0]))
    shown = [(t, s) for t, s in series if s.total > 0][:MAX_LINES]
    ymax = max((c for _, s in shown for c in s.counts), default=0)
    scale = _axes(svg, ymax, "posts")
    if not shown:
        _empty(svg)
        return svg.render()
    ref = shown[0][1]
    xs = _x_positions(ref.periods)
    _x_ticks(svg, xs)
    _moratorium(svg, ref, xs)
    _partial_marks(svg, ref, xs)
    for i, (t, s) in enumerate(shown):
        _line(svg, s, xs, scale, PALETTE[i % len(PALETTE)], t)
    _legend(svg, [(t, PALETTE[i % len(PALETTE)]) for i, (t, _) in enumerate(shown)])
    return svg.render()


def emit_charts(bundle: TrendBundle, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for key, render in (("states", state_chart), ("posts", post_chart), ("topics", topic_chart)):
        p = out / FILES[key]
        p.write_text(render(bundle), "utf-8")
        written.append(p)
    return written
