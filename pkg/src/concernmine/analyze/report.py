"""Deterministic trends.json / CSV output and its loader."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .aggregate import TrendBundle

STATE_CSV_HEADER = ["state", "topic", "count", "fraction"]
SERIES_CSV_HEADER = ["period", "topic", "count", "partial"]
ALL = "ALL"
FILES = {"structured": "trends.json", "state_csv": "state_topics.csv", "series_csv": "timeseries.csv"}


def _csv(rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def state_csv(bundle: TrendBundle) -> str:
    rows: list[list] = [STATE_CSV_HEADER]
    t = bundle.states
    for s in t.states:
        for topic in sorted(t.counts[s]):
            rows.append([s, topic, t.counts[s][topic], f"{t.fraction(s, topic):.6f}"])
    return _csv(rows)


def series_csv(bundle: TrendBundle) -> str:
    rows: list[list] = [SERIES_CSV_HEADER]
    series = [(ALL, bundle.posts)] + sorted(bundle.topics.items())
    for name, ts in series:
        partial = set(ts.partial)
        for k, c in ts.points:
            rows.append([k, name, c, int(k in partial)])
    return _csv(rows)


def structured(bundle: TrendBundle) -> str:
    return json.dumps(bundle.to_json(), indent=1, sort_keys=True, ensure_ascii=False) + "\n"


def emit_report(bundle: TrendBundle, out_dir: str | Path, formats=("csv", "structured")) -> list[Path]:
    """Write the report files and return their paths.  Same bundle, same bytes."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "structured" in formats:
        p = out / FILES["structured"]
        p.write_text(structured(bundle), "utf-8")
        written.append(p)
    if "csv" in formats:
        for key, text in (("state_csv", state_csv(bundle)), ("series_csv", series_csv(bundle))):
            p = out / FILES[key]
            p.write_text(text, "utf-8")
            written.append(p)
    return written


def load_bundle(path: str | Path) -> TrendBundle:
    path = Path(path)
    if path.is_dir():
        path = path / FILES["structured"]
    return TrendBundle.from_json(json.loads(path.read_text("utf-8")))
