"""UMass coherence and plateau-based selection of the topic count."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ..textprep import BagOfWords, Vocabulary
from .model import LdaConfig, LdaModel, fit_lda, top_term_indices

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Coherence:
    per_topic: tuple[float, ...]

    @property
    def mean(self) -> float:
        return sum(self.per_topic) / len(self.per_topic)


def doc_sets(corpus: Sequence[BagOfWords]) -> list[frozenset[int]]:
    return [frozenset(w for w, _ in b.items) for b in corpus]


def umass_topic(top: Sequence[int], docs: Sequence[frozenset[int]]) -> float:
    """UMass score of one ranked term list.

    Sums ``log((D(w_m, w_l) + 1) / D(w_l))`` over every pair where ``w_l``
    ranks above ``w_m``; D counts documents containing the term(s).
    """
    df = {w: sum(w in d for d in docs) for w in top}
    kept = [w for w in top if df[w] > 0]
    if len(kept) < len(top):
        log.warning("%d top term(s) absent from the scoring corpus; excluded",
                    len(top) - len(kept))
    score = 0.0
    for m in range(1, len(kept)):
        for l in range(m):
            wm, wl = kept[m], kept[l]
            co = sum(wm in d and wl in d for d in docs)
            score += math.log((co + 1) / df[wl])
    return score


def umass_coherence(model: LdaModel, corpus: Sequence[BagOfWords], top_n: int = 10) -> Coherence:
    if top_n < 2:
        raise ValueError("top_n must be >= 2")
    docs = doc_sets(corpus)
    return Coherence(tuple(umass_topic(top_term_indices(model, k, top_n), docs)
                           for k in range(model.K)))


@dataclass(frozen=True)
class CoherenceCurve:
    points: tuple[tuple[int, float], ...]

    def __post_init__(self):
        ks = [k for k, _ in self.points]
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValueError("K values must be strictly increasing")

    @property
    def ks(self) -> list[int]:
        return [k for k, _ in self.points]

    @property
    def values(self) -> list[float]:
        return [v for _, v in self.points]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["K", "coherence"])
            for k, v in self.points:
                w.writerow([k, repr(v)])

    @classmethod
    def from_csv(cls, path: str | Path) -> "CoherenceCurve":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        return cls(tuple((int(r["K"]), float(r["coherence"])) for r in rows))


def plateau_k(curve: CoherenceCurve, window: int = 3, epsilon_fraction: float = 0.01) -> int:
    """Smallest K whose mean gain over the next ``window`` points is below epsilon.

    Epsilon is ``epsilon_fraction`` of the curve's total range.  Near the end
    of the curve the window shrinks to whatever points remain.  If no point
    qualifies (or the curve has non-finite values) the argmax is returned.
    """
    ks, vs = curve.ks, curve.values
    if not ks:
        raise ValueError("empty coherence curve")
    if any(not math.isfinite(v) for v in vs):
        finite = [(v, k) for k, v in curve.points if math.isfinite(v)]
        log.warning("non-finite coherence values; falling back to argmax")
        return max(finite, key=lambda t: (t[0], -t[1]))[1] if finite else ks[0]
    span = max(vs) - min(vs)
    if span == 0:
        return ks[0]
    eps = epsilon_fraction * span
    for i in range(len(ks) - 1):
        ahead = vs[i + 1:i + 1 + window]
        gain = (ahead[-1] - vs[i]) / len(ahead)
        if gain < eps:
            return ks[i]
    best = max(range(len(ks)), key=lambda i: (vs[i], -i))
    log.warning("coherence curve never plateaus; falling back to argmax K=%d", ks[best])
    return ks[best]


def coherence_curve(
    corpus: Sequence[BagOfWords],
    vocab: Vocabulary | Sequence[str],
    k_range: Sequence[int],
    base_config: LdaConfig,
    top_n: int = 10,
) -> CoherenceCurve:
    points = []
    for K in sorted(set(k_range)):
        model = fit_lda(corpus, base_config.with_k(K), vocab)
        c = umass_coherence(model, corpus, top_n).mean
        log.info("K=%d mean UMass coherence %.4f", K, c)
        points.append((K, c))
    return CoherenceCurve(tuple(points))


def select_k(
    corpus: Sequence[BagOfWords],
    vocab: Vocabulary | Sequence[str],
    k_range: Sequence[int] = range(1, 26),
    base_config: LdaConfig | None = None,
    top_n: int = 10,
    window: int = 3,
    epsilon_fraction: float = 0.01,
) -> tuple[int, CoherenceCurve]:
    base_config = base_config or LdaConfig(K=1)
    curve = coherence_curve(corpus, vocab, k_range, base_config, top_n)
    return plateau_k(curve, window, epsilon_fraction), curve
