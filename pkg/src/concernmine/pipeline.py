"""Pipeline stages with persisted artifacts and manifests.

Order: ingest, prep, topics, classify, validate, report.  Each stage reads
its predecessors' files from the output directory and writes its own
artifacts plus ``manifests/<stage>.json``.  A stage's config hash covers the
config fields it reads and the hashes of the stages it depends on, so a
changed upstream setting makes every dependent stage stale.
"""
from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Callable

from . import __version__
from .analyze import build_bundle, emit_charts, emit_report
from .classify import (BackendConfig, ClassificationResult, MergeMap, classify_corpus, make_backend,
                       read_results, write_results)
from .classify.taxonomy import TOPIC_IDS
from .corpus import DEFAULT_WINDOW, CorpusStats, corpus_stats, filter_posts, ingest, read_posts, write_posts, \
    write_rejects
from .lda import LdaConfig, fit_lda, select_k, top_terms, umass_coherence
from .locate import Gazetteer, LocationTag, coverage_stats, extract_location
from .metrics import build_agreement_matrix, fleiss_kappa, load_labels, recall_report
from .textprep import (Vocabulary, build_vocabulary, load_stoplist, preprocess, read_docs, to_bow,
                       write_docs)

log = logging.getLogger(__name__)

STAGES = ("ingest", "prep", "topics", "classify", "validate", "report")
DEPENDS = {
    "ingest": (),
    "prep": ("ingest",),
    "topics": ("prep",),
    "classify": ("ingest",),
    "validate": ("ingest",),
    "report": ("ingest", "prep", "classify"),
}
OUTPUTS = {
    "ingest": ("posts.jsonl", "rejects.jsonl", "corpus_stats.json"),
    "prep": ("tokens.jsonl", "vocab.json", "locations.jsonl", "location_coverage.json"),
    "topics": ("coherence.csv", "lda_model.json", "topics.json"),
    "classify": ("classifications.jsonl",),
    "validate": ("validation.json", "validation_per_topic.csv"),
    "report": ("report/trends.json", "report/state_topics.csv", "report/timeseries.csv",
               "report/state_topics.svg", "report/post_frequency.svg", "report/topic_frequency.svg"),
}
DEFAULT_STATES = ("CA", "FL", "NY", "TX")


class PipelineError(Exception):
    exit_code = 2


class ConfigError(PipelineError):
    exit_code = 1


class MissingArtifact(PipelineError):
    exit_code = 2


class StaleArtifact(PipelineError):
    exit_code = 1


def bundled(name: str) -> Path:
    return Path(str(resources.files("concernmine").joinpath(f"data/{name}")))


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a run depends on.  ``None`` paths fall back to bundled data."""

    corpus: str | None = None
    labels: str | None = None
    stoplist: str | None = None
    gazetteer: str | None = None
    cache: str | None = None
    output: str = "out"
    seed: int = 0
    lda: dict = field(default_factory=lambda: {"alpha": None, "beta": 0.01, "iterations": 1000,
                                               "burn_in": 200})
    k_range: tuple[int, int] = (1, 25)
    top_n: int = 10
    min_df: int = 5
    max_df_fraction: float = 0.5
    keep_title_only: bool = False
    backend: dict = field(default_factory=lambda: {"kind": "mock"})
    mode: str = "direct"
    merges: dict = field(default_factory=lambda: {"health_hazards": ["pest", "mold"]})
    states: tuple[str, ...] = DEFAULT_STATES
    period: str = "year"
    runs: int = 3

    def __post_init__(self):
        a, b = self.k_range
        if not 1 <= a <= b:
            raise ConfigError(f"k_range must satisfy 1 <= a <= b, got {a}..{b}")
        if self.runs < 2:
            raise ConfigError("runs must be >= 2 for agreement")
        if self.period not in ("year", "quarter", "month"):
            raise ConfigError(f"period must be year, quarter or month, got {self.period!r}")
        if self.mode not in ("direct", "with_summary"):
            raise ConfigError(f"mode must be direct or with_summary, got {self.mode!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        for key in ("corpus", "labels", "stoplist", "gazetteer"):
            p = getattr(self, key)
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"{key} file not found: {p}")
        if "api_key" in self.backend or "token" in self.backend:
            raise ConfigError("secrets do not belong in config; set the environment variable named by "
                              "backend.api_key_env instead")
        try:
            self.lda_config(1)
            self.backend_config()
            self.merge_map()
        except (ValueError, TypeError) as e:
            raise ConfigError(str(e)) from None

    # resolved views

    @property
    def corpus_path(self) -> Path:
        return Path(self.corpus) if self.corpus else bundled("synthetic_corpus.jsonl")

    @property
    def labels_path(self) -> Path | None:
        if self.labels:
            return Path(self.labels)
        return bundled("synthetic_labels.jsonl") if self.corpus is None else None

    @property
    def out(self) -> Path:
        return Path(self.output)

    @property
    def cache_dir(self) -> Path:
        return Path(self.cache) if self.cache else self.out / "cache"

    def lda_config(self, K: int) -> LdaConfig:
        return LdaConfig(K=K, seed=self.seed, **self.lda)

    def backend_config(self) -> BackendConfig:
        d = dict(self.backend)
        # The mock is cheap and deterministic, so it is only cached on request.
        if d.get("kind", "mock") != "mock" or self.cache:
            d.setdefault("cache_dir", str(self.cache_dir))
        return BackendConfig(**d)

    def merge_map(self) -> MergeMap:
        return MergeMap.with_merges(self.merges)

    def to_json(self) -> dict:
        d = asdict(self)
        d["k_range"] = list(self.k_range)
        d["states"] = list(self.states)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "PipelineConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
        d = dict(d)
        if "k_range" in d:
            d["k_range"] = parse_k_range(d["k_range"]) if isinstance(d["k_range"], str) else tuple(d["k_range"])
        if "states" in d:
            d["states"] = parse_states(d["states"]) if isinstance(d["states"], str) else tuple(d["states"])
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        try:
            doc = json.loads(Path(path).read_text("utf-8"))
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
        except ValueError as e:
            raise ConfigError(f"config {path} is not valid JSON: {e}") from None
        return cls.from_json(doc)

    def override(self, **kw) -> "PipelineConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self


def parse_k_range(text: str) -> tuple[int, int]:
    try:
        a, b = text.split("..")
        return int(a), int(b)
    except ValueError:
        raise ConfigError(f"k range must look like 'a..b', got {text!r}") from None


def parse_states(text: str) -> tuple[str, ...]:
    if text.strip().lower() in ("", "all"):
        return ()
    return tuple(sorted({s.strip().upper() for s in text.split(",") if s.strip()}))


# Stage hashing

def _file_digest(path: Path | None) -> str | None:
    return sha256_file(path) if path is not None else None


def stage_inputs(cfg: PipelineConfig, stage: str) -> dict:
    """The slice of configuration (and input file contents) a stage reads."""
    if stage == "ingest":
        return {"corpus_sha256": _file_digest(cfg.corpus_path), "window": list(DEFAULT_WINDOW),
                "keep_title_only": cfg.keep_title_only}
    if stage == "prep":
        return {"stoplist_sha256": _file_digest(cfg.stoplist and Path(cfg.stoplist) or bundled("stopwords_en.txt")),
                "gazetteer_sha256": _file_digest(cfg.gazetteer and Path(cfg.gazetteer) or bundled("gazetteer.json")),
                "min_df": cfg.min_df, "max_df_fraction": cfg.max_df_fraction}
    if stage == "topics":
        return {"lda": cfg.lda_config(1).to_json(), "k_range": list(cfg.k_range), "top_n": cfg.top_n}
    backend = cfg.backend_config().to_json()
    for volatile in ("cache_dir", "max_in_flight", "timeout", "max_retries", "backoff_base", "backoff_max"):
        backend.pop(volatile, None)
    if stage == "classify":
        return {"backend": backend, "mode": cfg.mode}
    if stage == "validate":
        return {"backend": backend, "mode": cfg.mode, "runs": cfg.runs,
                "labels_sha256": _file_digest(cfg.labels_path), "merge_map": cfg.merge_map().to_json()}
    if stage == "report":
        return {"merge_map": cfg.merge_map().to_json(), "states": list(cfg.states), "period": cfg.period}
    raise KeyError(stage)


def config_hash(cfg: PipelineConfig, stage: str, _memo: dict | None = None) -> str:
    memo = {} if _memo is None else _memo
    if stage not in memo:
        upstream = {d: config_hash(cfg, d, memo) for d in DEPENDS[stage]}
        blob = canonical({"stage": stage, "inputs": stage_inputs(cfg, stage), "upstream": upstream})
        memo[stage] = hashlib.sha256(blob.encode("utf-8")).hexdigest()
    return memo[stage]


def manifest_path(cfg: PipelineConfig, stage: str) -> Path:
    return cfg.out / "manifests" / f"{stage}.json"


def read_manifest(cfg: PipelineConfig, stage: str) -> dict | None:
    p = manifest_path(cfg, stage)
    if not p.exists():
        return None
    return json.loads(p.read_text("utf-8"))


def write_manifest(cfg: PipelineConfig, stage: str, extra: dict | None = None) -> dict:
    out = cfg.out
    doc = {
        "stage": stage,
        "version": 1,
        "package_version": __version__,
        "config_hash": config_hash(cfg, stage),
        "config": stage_inputs(cfg, stage),
        "upstream": {d: (read_manifest(cfg, d) or {}).get("config_hash") for d in DEPENDS[stage]},
        "inputs": {f"{d}/{name}": sha256_file(out / name) for d in DEPENDS[stage] for name in OUTPUTS[d]},
        "outputs": {name: sha256_file(out / name) for name in OUTPUTS[stage]},
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    if extra:
        doc.update(extra)
    p = manifest_path(cfg, stage)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", "utf-8")
    return doc


def check_upstream(cfg: PipelineConfig, stage: str, allow_stale: bool = False) -> None:
    for dep in DEPENDS[stage]:
        m = read_manifest(cfg, dep)
        missing = [n for n in OUTPUTS[dep] if not (cfg.out / n).exists()]
        if m is None or missing:
            what = ", ".join(missing) if missing else f"manifests/{dep}.json"
            raise MissingArtifact(f"{stage} needs the output of '{dep}' ({what} missing under {cfg.out}); "
                                  f"run `concernmine {dep}` first")
        current = config_hash(cfg, dep)
        if m.get("config_hash") != current:
            msg = (f"'{dep}' artifacts under {cfg.out} were produced with a different configuration; "
                   f"re-run `concernmine {dep}` or pass --allow-stale")
            if not allow_stale:
                raise StaleArtifact(msg)
            log.warning("stale upstream: %s", msg)


def is_up_to_date(cfg: PipelineConfig, stage: str) -> bool:
    m = read_manifest(cfg, stage)
    if m is None or m.get("config_hash") != config_hash(cfg, stage):
        return False
    for name, digest in m.get("outputs", {}).items():
        p = cfg.out / name
        if not p.exists() or sha256_file(p) != digest:
            return False
    for dep in DEPENDS[stage]:
        if not is_up_to_date(cfg, dep):
            return False
        dm = read_manifest(cfg, dep)
        if m.get("upstream", {}).get(dep) != dm.get("config_hash"):
            return False
        for name in OUTPUTS[dep]:
            if m.get("inputs", {}).get(f"{dep}/{name}") != sha256_file(cfg.out / name):
                return False
    return True


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, sort_keys=True, ensure_ascii=False) + "\n", "utf-8")


def _read_json(path: Path):
    return json.loads(path.read_text("utf-8"))


# Stages

def run_ingest(cfg: PipelineConfig) -> dict:
    try:
        res = ingest(cfg.corpus_path)
    except OSError as e:
        raise PipelineError(f"cannot read corpus {cfg.corpus_path}: {e}") from None
    in_window = [p for p in res.posts if p.in_window]
    filtered = filter_posts(in_window, keep_title_only=cfg.keep_title_only)
    clean = sorted(filtered.posts, key=lambda p: p.id)
    if not clean:
        raise PipelineError(f"no usable posts in {cfg.corpus_path} after filtering")
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    write_posts(clean, out / "posts.jsonl")
    write_rejects(res.rejects, out / "rejects.jsonl")
    stats = corpus_stats(res.posts, clean)
    summary = {"stats": stats.to_json(), "rejected_lines": len(res.rejects),
               "out_of_window": res.out_of_window, "dropped": dict(sorted(filtered.dropped.items()))}
    _write_json(out / "corpus_stats.json", summary)
    write_manifest(cfg, "ingest")
    return summary


def _load_posts(cfg: PipelineConfig):
    return read_posts(cfg.out / "posts.jsonl")


def run_prep(cfg: PipelineConfig) -> dict:
    posts = _load_posts(cfg)
    stoplist = load_stoplist(cfg.stoplist)
    docs = [preprocess(p.id, p.text, stoplist) for p in posts]
    try:
        vocab = build_vocabulary(docs, cfg.min_df, cfg.max_df_fraction)
    except ValueError as e:
        raise PipelineError(str(e)) from None
    out = cfg.out
    write_docs(docs, out / "tokens.jsonl")
    _write_json(out / "vocab.json", {"sha256": vocab.digest(), **vocab.to_json()})
    gaz = Gazetteer.load(cfg.gazetteer)
    tags = [extract_location(p.title, p.body, gaz) for p in posts]
    with (out / "locations.jsonl").open("w", encoding="utf-8") as fh:
        for p, t in zip(posts, tags):
            fh.write(json.dumps({"post_id": p.id, "tag": t.to_json() if t else None},
                                sort_keys=True, ensure_ascii=False) + "\n")
    cov = coverage_stats(tags).to_json()
    _write_json(out / "location_coverage.json", cov)
    write_manifest(cfg, "prep")
    return {"documents": len(docs), "vocabulary": vocab.V, "locations": cov}


def _load_bags(cfg: PipelineConfig):
    docs = read_docs(cfg.out / "tokens.jsonl")
    vdoc = _read_json(cfg.out / "vocab.json")
    vocab = Vocabulary.from_json(vdoc)
    bags = [b for b in (to_bow(d, vocab) for d in docs) if b.n_tokens > 0]
    return bags, vocab


def run_topics(cfg: PipelineConfig) -> dict:
    bags, vocab = _load_bags(cfg)
    if not bags:
        raise PipelineError("no document has any in-vocabulary token")
    n_tokens = sum(b.n_tokens for b in bags)
    a, b = cfg.k_range
    ks = [k for k in range(a, b + 1) if k <= n_tokens]
    base = cfg.lda_config(1)
    K, curve = select_k(bags, vocab, ks, base, top_n=cfg.top_n)
    model = fit_lda(bags, base.with_k(K), vocab)
    out = cfg.out
    curve.to_csv(out / "coherence.csv")
    model.save(out / "lda_model.json")
    coh = umass_coherence(model, bags, cfg.top_n)
    topics = [top_terms(model, k, cfg.top_n).to_json() for k in range(model.K)]
    for t, c in zip(topics, coh.per_topic):
        t["coherence"] = c
    _write_json(out / "topics.json", {"K": K, "k_range": [a, b], "mean_coherence": coh.mean, "topics": topics})
    write_manifest(cfg, "topics")
    return {"K": K, "curve": [list(p) for p in curve.points]}


def _backend(cfg: PipelineConfig, backend_factory: Callable | None):
    bc = cfg.backend_config()
    return backend_factory(bc) if backend_factory else make_backend(bc), bc


def run_classify(cfg: PipelineConfig, backend_factory: Callable | None = None) -> dict:
    posts = _load_posts(cfg)
    backend, bc = _backend(cfg, backend_factory)
    results = classify_corpus(posts, backend, cfg.mode, run_index=0, max_in_flight=bc.max_in_flight)
    write_results(cfg.out / "classifications.jsonl", results)
    write_manifest(cfg, "classify", {"backend_model": backend.model, "temperature": backend.temperature})
    return {"classified": len(results)}


def run_validate(cfg: PipelineConfig, backend_factory: Callable | None = None) -> dict:
    if cfg.labels_path is None:
        raise ConfigError("validate needs a labels file (config key 'labels')")
    labels = load_labels(cfg.labels_path)
    by_id = {p.id: p for p in _load_posts(cfg)}
    missing = sorted(pid for pid in labels if pid not in by_id)
    if missing:
        raise PipelineError(f"{len(missing)} labeled post(s) are not in the clean corpus: {missing[:10]}")
    sample = [by_id[pid] for pid in sorted(labels)]
    backend, bc = _backend(cfg, backend_factory)
    mm = cfg.merge_map()
    runs = []
    for i in range(cfg.runs):
        res = classify_corpus(sample, backend, cfg.mode, run_index=i, max_in_flight=bc.max_in_flight)
        runs.append({r.post_id: r.ranked for r in res})
    per_run = [recall_report(run, labels) for run in runs]
    per_run_merged = [recall_report(run, labels, mm) for run in runs]

    def mean(reports, i):
        return sum(r.recall[i] for r in reports) / len(reports)

    kappa_tax = fleiss_kappa(build_agreement_matrix(runs, TOPIC_IDS))
    kappa_disp = fleiss_kappa(build_agreement_matrix(runs, mm.display_topics, mm))
    doc = {
        "n": len(labels),
        "runs": cfg.runs,
        "mode": cfg.mode,
        "backend": {"model": backend.model, "temperature": backend.temperature},
        "recall": {f"@{k}": mean(per_run, k - 1) for k in (1, 2, 3)},
        "merged_recall": {f"@{k}": mean(per_run_merged, k - 1) for k in (1, 2, 3)},
        "per_run": [r.to_json() for r in per_run],
        "per_run_merged": [r.to_json() for r in per_run_merged],
        "kappa": {"taxonomy": kappa_tax, "display": kappa_disp},
    }
    out = cfg.out
    _write_json(out / "validation.json", doc)
    rows = ["topic,n,recall@1,recall@2,recall@3"]
    for row in per_run[0].per_topic_rows(TOPIC_IDS):
        rows.append(",".join(str(x) for x in row))
    (out / "validation_per_topic.csv").write_text("\n".join(rows) + "\n", "utf-8")
    write_manifest(cfg, "validate")
    return {"recall": doc["recall"], "merged_recall": doc["merged_recall"], "kappa": doc["kappa"]}


def _load_tags(cfg: PipelineConfig) -> dict[str, LocationTag | None]:
    tags = {}
    for line in (cfg.out / "locations.jsonl").read_text("utf-8").splitlines():
        if line.strip():
            d = json.loads(line)
            tags[d["post_id"]] = LocationTag.from_json(d["tag"]) if d["tag"] else None
    return tags


def run_report(cfg: PipelineConfig) -> dict:
    posts = _load_posts(cfg)
    results: dict[str, ClassificationResult] = {r.post_id: r for r in read_results(cfg.out / "classifications.jsonl")}
    tags = _load_tags(cfg)
    stats_doc = _read_json(cfg.out / "corpus_stats.json")
    cmanifest = read_manifest(cfg, "classify") or {}
    provenance = {
        "package_version": __version__,
        "config_hashes": {s: config_hash(cfg, s) for s in ("ingest", "prep", "classify", "report")},
        "backend": {"model": cmanifest.get("backend_model"), "temperature": cmanifest.get("temperature"),
                    "mode": cfg.mode},
        "merge_map": cfg.merge_map().to_json(),
        "states": list(cfg.states),
        "period": cfg.period,
    }
    bundle = build_bundle(posts, results, tags, cfg.merge_map(), cfg.states, cfg.period,
                          CorpusStats(**stats_doc["stats"]), provenance)
    rdir = cfg.out / "report"
    emit_report(bundle, rdir)
    emit_charts(bundle, rdir)
    write_manifest(cfg, "report")
    return {"states": bundle.states.totals, "posts": bundle.posts.total}


RUNNERS = {
    "ingest": run_ingest,
    "prep": run_prep,
    "topics": run_topics,
    "classify": run_classify,
    "validate": run_validate,
    "report": run_report,
}


def run_stage(cfg: PipelineConfig, stage: str, allow_stale: bool = False,
              backend_factory: Callable | None = None) -> dict:
    check_upstream(cfg, stage, allow_stale)
    log.info("running stage %s", stage)
    if stage in ("classify", "validate"):
        return RUNNERS[stage](cfg, backend_factory)
    return RUNNERS[stage](cfg)


def run_pipeline(cfg: PipelineConfig, force: bool = False, skip: tuple[str, ...] = (),
                 backend_factory: Callable | None = None) -> dict[str, dict | str]:
    """Run every stage in order, skipping those whose artifacts are already current."""
    done: dict[str, dict | str] = {}
    for stage in STAGES:
        if stage in skip:
            continue
        if stage == "validate" and cfg.labels_path is None:
            log.info("no labels configured; skipping validate")
            done[stage] = "skipped"
            continue
        if not force and is_up_to_date(cfg, stage):
            log.info("stage %s is up to date", stage)
            done[stage] = "up-to-date"
            continue
        done[stage] = run_stage(cfg, stage, backend_factory=backend_factory)
    return done
