from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..textprep import BagOfWords, Vocabulary
from . import _kernel

log = logging.getLogger(__name__)

MODEL_FORMAT = "concernmine.lda"
MODEL_VERSION = 1


class LdaConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LdaConfig:
    """Sampler hyperparameters.  ``alpha=None`` means 50/K."""

    K: int
    alpha: float | None = None
    beta: float = 0.01
    iterations: int = 1000
    burn_in: int = 200
    seed: int = 0
    check_invariants: bool = False

    def __post_init__(self):
        if self.K < 1:
            raise LdaConfigError("K must be >= 1")
        if self.alpha is not None and self.alpha <= 0:
            raise LdaConfigError("alpha must be > 0")
        if self.beta <= 0:
            raise LdaConfigError("beta must be > 0")
        if self.iterations < 1:
            raise LdaConfigError("iterations must be >= 1")
        if not 0 <= self.burn_in < self.iterations:
            raise LdaConfigError("burn_in must satisfy 0 <= burn_in < iterations")
        if not 0 <= self.seed < 2**64:
            raise LdaConfigError("seed must be an unsigned 64-bit integer")

    @property
    def resolved_alpha(self) -> float:
        return 50.0 / self.K if self.alpha is None else float(self.alpha)

    def with_k(self, K: int) -> "LdaConfig":
        return LdaConfig(K, self.alpha, self.beta, self.iterations, self.burn_in, self.seed,
                         self.check_invariants)

    def to_json(self) -> dict:
        return asdict(self)


def _terms_of(vocab: Vocabulary | Sequence[str]) -> tuple[str, ...]:
    return tuple(vocab.terms) if isinstance(vocab, Vocabulary) else tuple(vocab)


class GibbsSampler:
    """Collapsed Gibbs sampler state for one corpus and configuration.

    Documents are visited in ascending ``post_id`` order, each drawing from
    its own SplitMix64 stream keyed by ``(seed, post_id)``.  Reordering the
    input therefore leaves every document's trajectory unchanged.
    """

    def __init__(self, corpus: Sequence[BagOfWords], V: int, config: LdaConfig):
        ids = [b.post_id for b in corpus]
        if len(set(ids)) != len(ids):
            raise LdaConfigError("document ids must be unique")
        if not corpus:
            raise LdaConfigError("corpus is empty")
        empty = [b.post_id for b in corpus if not b.items]
        if empty:
            log.warning("%d empty document(s) skipped by the sampler", len(empty))
        self.config = config
        self.doc_ids = tuple(ids)
        self.V = V
        K = config.K

        lengths = np.array([b.n_tokens for b in corpus], dtype=np.int64)
        self.doc_ptr = np.zeros(len(corpus) + 1, dtype=np.int64)
        np.cumsum(lengths, out=self.doc_ptr[1:])
        n_tokens = int(self.doc_ptr[-1])
        if K > n_tokens:
            raise LdaConfigError(f"K={K} exceeds the total token count {n_tokens}")
        words = np.empty(n_tokens, dtype=np.int64)
        pos = 0
        for b in corpus:
            for w, c in b.items:
                if not 0 <= w < V:
                    raise LdaConfigError(f"term index {w} out of range for V={V}")
                words[pos:pos + c] = w
                pos += c
        self.words = words
        self.doc_order = np.array(sorted(range(len(ids)), key=ids.__getitem__), dtype=np.int64)

        self.z = np.zeros(n_tokens, dtype=np.int64)
        self.n_dk = np.zeros((len(corpus), K), dtype=np.int64)
        self.n_kw = np.zeros((K, V), dtype=np.int64)
        self.n_k = np.zeros(K, dtype=np.int64)
        self.states = np.array([_kernel.stream_seed(config.seed, i) for i in ids], dtype=np.uint64)
        self._cdf = np.zeros(K, dtype=np.float64)
        _kernel.initialize(self.doc_order, self.doc_ptr, self.words, self.z, self.n_dk,
                           self.n_kw, self.n_k, self.states, K)
        self.n_sweeps = 0
        if config.check_invariants:
            self.check_counts()

    def sweep(self, n: int = 1) -> None:
        c = self.config
        alpha, beta = c.resolved_alpha, c.beta
        for _ in range(n):
            _kernel.sweep(self.doc_order, self.doc_ptr, self.words, self.z, self.n_dk,
                          self.n_kw, self.n_k, self.states, alpha, beta, self.V * beta,
                          c.K, self._cdf)
            self.n_sweeps += 1
            if c.check_invariants:
                self.check_counts()

    def check_counts(self) -> None:
        """Assert every count matrix agrees with the assignment vector."""
        lengths = np.diff(self.doc_ptr)
        assert (self.n_k == self.n_kw.sum(axis=1)).all(), "n_k != row sums of n_kw"
        assert (self.n_dk.sum(axis=1) == lengths).all(), "n_dk rows != document lengths"
        assert int(self.n_k.sum()) == len(self.words), "topic totals != token count"
        assert (self.n_kw >= 0).all() and (self.n_dk >= 0).all(), "negative count"
        docs = np.repeat(np.arange(len(lengths)), lengths)
        n_dk = np.zeros_like(self.n_dk)
        np.add.at(n_dk, (docs, self.z), 1)
        n_kw = np.zeros_like(self.n_kw)
        np.add.at(n_kw, (self.z, self.words), 1)
        assert (n_dk == self.n_dk).all() and (n_kw == self.n_kw).all(), "counts drifted from z"

    def doc_assignments(self, d: int) -> np.ndarray:
        return self.z[self.doc_ptr[d]:self.doc_ptr[d + 1]]


@dataclass
class LdaModel:
    config: LdaConfig
    terms: tuple[str, ...]
    doc_ids: tuple[str, ...]
    n_kw: np.ndarray
    n_dk: np.ndarray
    n_k: np.ndarray
    z: np.ndarray
    doc_ptr: np.ndarray
    words: np.ndarray
    _phi: np.ndarray | None = field(default=None, repr=False)
    _theta: np.ndarray | None = field(default=None, repr=False)

    @property
    def K(self) -> int:
        return self.config.K

    @property
    def V(self) -> int:
        return len(self.terms)

    @property
    def phi(self) -> np.ndarray:
        """K x V topic-term distributions from the smoothed final counts."""
        if self._phi is None:
            b = self.config.beta
            self._phi = (self.n_kw + b) / (self.n_k[:, None] + self.V * b)
        return self._phi

    @property
    def theta(self) -> np.ndarray:
        """D x K doc-topic distributions; empty documents get the uniform prior mean."""
        if self._theta is None:
            a = self.config.resolved_alpha
            lengths = self.n_dk.sum(axis=1)
            self._theta = (self.n_dk + a) / (lengths[:, None] + self.K * a)
        return self._theta

    def vocab_digest(self) -> str:
        return Vocabulary(self.terms, (0,) * len(self.terms)).digest()

    def save(self, path: str | Path) -> None:
        doc = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "config": self.config.to_json(),
            "vocab_sha256": self.vocab_digest(),
            "terms": list(self.terms),
            "doc_ids": list(self.doc_ids),
            "doc_ptr": self.doc_ptr.tolist(),
            "words": self.words.tolist(),
            "z": self.z.tolist(),
            "n_kw": self.n_kw.tolist(),
            "n_dk": self.n_dk.tolist(),
            "n_k": self.n_k.tolist(),
        }
        Path(path).write_text(json.dumps(doc, separators=(",", ":")) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "LdaModel":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if doc.get("format") != MODEL_FORMAT:
            raise ValueError(f"{path}: not an LDA model file")
        if doc.get("version") != MODEL_VERSION:
            raise ValueError(f"{path}: unsupported model version {doc.get('version')}")
        model = cls(
            config=LdaConfig(**doc["config"]),
            terms=tuple(doc["terms"]),
            doc_ids=tuple(doc["doc_ids"]),
            n_kw=np.array(doc["n_kw"], dtype=np.int64).reshape(doc["config"]["K"], -1),
            n_dk=np.array(doc["n_dk"], dtype=np.int64).reshape(len(doc["doc_ids"]), -1),
            n_k=np.array(doc["n_k"], dtype=np.int64),
            z=np.array(doc["z"], dtype=np.int64),
            doc_ptr=np.array(doc["doc_ptr"], dtype=np.int64),
            words=np.array(doc["words"], dtype=np.int64),
        )
        if model.vocab_digest() != doc["vocab_sha256"]:
            raise ValueError(f"{path}: vocabulary hash mismatch")
        return model


def fit_lda(corpus: Sequence[BagOfWords], config: LdaConfig,
            vocab: Vocabulary | Sequence[str]) -> LdaModel:
    """Run ``config.iterations`` sweeps and keep the final sample.

    ``vocab`` supplies the term strings (a :class:`Vocabulary` or plain
    sequence indexed like the bags).
    """
    terms = _terms_of(vocab)
    sampler = GibbsSampler(corpus, len(terms), config)
    sampler.sweep(config.iterations)
    return LdaModel(config, terms, sampler.doc_ids, sampler.n_kw, sampler.n_dk, sampler.n_k,
                    sampler.z, sampler.doc_ptr, sampler.words)


@dataclass(frozen=True)
class TopicSummary:
    topic: int
    terms: tuple[tuple[str, float], ...]
    label: str | None = None

    def words(self) -> list[str]:
        return [t for t, _ in self.terms]

    def to_json(self) -> dict:
        return {"topic": self.topic, "label": self.label,
                "terms": [[t, p] for t, p in self.terms]}


def top_term_indices(model: LdaModel, k: int, n: int) -> list[int]:
    row = model.phi[k]
    order = sorted(range(model.V), key=lambda w: (-row[w], model.terms[w]))
    return order[:max(n, 0)]


def top_terms(model: LdaModel, k: int, n: int = 10, label: str | None = None) -> TopicSummary:
    """The ``n`` most probable terms of topic ``k``; ties go to the lexicographically smaller term."""
    if not 0 <= k < model.K:
        raise IndexError(f"topic {k} out of range for K={model.K}")
    idx = top_term_indices(model, k, min(n, model.V))
    return TopicSummary(k, tuple((model.terms[w], float(model.phi[k, w])) for w in idx), label)
