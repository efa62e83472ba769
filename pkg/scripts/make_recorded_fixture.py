"""Build tests/fixtures/recorded_validation.json.

A constructed three-run validation record whose recall and agreement line up
with the reference values at n=188.  Expected numbers are computed here with
exact fractions and a brute-force scan, independently of concernmine.metrics,
and stored alongside the data.

    python3 scripts/make_recorded_fixture.py
"""
import json
import random
from fractions import Fraction
from pathlib import Path

from concernmine.classify.taxonomy import TOPIC_IDS, MergeMap

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "recorded_validation.json"
N = 188
SIBLING = {"pest": "mold", "mold": "pest"}

rng = random.Random(20240101)
mm = MergeMap.default()


def others(label, n, exclude=()):
    bad = {label, SIBLING.get(label), *exclude}
    pool = [t for t in TOPIC_IDS if t not in bad]
    return rng.sample(pool, n)


# Label layout: cycle the taxonomy, then give the special merged cases
# pest/mold labels.
labels = [TOPIC_IDS[i % len(TOPIC_IDS)] for i in range(N)]
ids = [f"v{i:03d}" for i in range(N)]

plan = (["r1"] * 130 + ["sib1_r2"] * 3 + ["r2"] * 16 + ["sib2_r3"] + ["r3"] * 13
        + ["sib3_miss"] + ["miss"] * 24)
assert len(plan) == N
specials = [i for i, p in enumerate(plan) if p.startswith("sib")]
pm = [i for i, t in enumerate(labels) if t in SIBLING]
# swap labels so every special slot carries a pest/mold label
for slot, src in zip(specials, [j for j in pm if j not in specials]):
    labels[slot], labels[src] = labels[src], labels[slot]
assert all(labels[i] in SIBLING for i in specials)

run0 = []
for lab, p in zip(labels, plan):
    if p == "r1":
        ranked = [lab] + others(lab, 2)
    elif p == "r2":
        a, b = others(lab, 2)
        ranked = [a, lab, b]
    elif p == "r3":
        ranked = others(lab, 2) + [lab]
    elif p == "sib1_r2":
        ranked = [SIBLING[lab], lab] + others(lab, 1)
    elif p == "sib2_r3":
        ranked = [others(lab, 1)[0], SIBLING[lab], lab]
    elif p == "sib3_miss":
        ranked = others(lab, 2) + [SIBLING[lab]]
    else:
        ranked = others(lab, 3)
    run0.append(ranked)

misses = [i for i, p in enumerate(plan) if p == "miss"]


def brute_recall(run, k, merge=False):
    f = (lambda t: mm(t)) if merge else (lambda t: t)
    hits = 0
    for lab, ranked in zip(labels, run):
        top = [f(t) for t in ranked[:k]]
        for t in top:
            if t == f(lab):
                hits += 1
                break
    return Fraction(hits, N)


def exact_kappa(runs, merge=False):
    f = (lambda t: mm(t)) if merge else (lambda t: t)
    cats = sorted({f(t) for t in TOPIC_IDS})
    n = len(runs)
    rows = []
    for i in range(N):
        row = [0] * len(cats)
        for run in runs:
            row[cats.index(f(run[i][0]))] += 1
        rows.append(row)
    P = [Fraction(sum(c * c for c in r) - n, n * (n - 1)) for r in rows]
    Pbar = sum(P) / N
    p = [Fraction(sum(r[j] for r in rows), N * n) for j in range(len(cats))]
    Pe = sum(x * x for x in p)
    return (Pbar - Pe) / (1 - Pe)


def make_runs(d1, d2):
    r1 = [list(x) for x in run0]
    r2 = [list(x) for x in run0]
    for i in misses[:d1]:
        r1[i][0], r1[i][1] = r1[i][1], r1[i][0]
    for i in misses[len(misses) - d2:]:
        r2[i][0], r2[i][2] = r2[i][2], r2[i][0]
    return [run0, r1, r2]


# smallest total disagreement whose kappa rounds to 0.91
best = None
for d1 in range(0, 25):
    for d2 in range(0, 25):
        k = exact_kappa(make_runs(d1, d2))
        if round(float(k), 2) == 0.91 and (best is None or abs(float(k) - 0.91) < abs(float(best[2]) - 0.91)):
            best = (d1, d2, k)
d1, d2, _ = best
runs = make_runs(d1, d2)

expected = {"n": N, "runs": []}
for r in runs:
    expected["runs"].append({
        "recall": {f"@{k}": str(brute_recall(r, k)) for k in (1, 2, 3)},
        "merged_recall": {f"@{k}": str(brute_recall(r, k, True)) for k in (1, 2, 3)},
    })
kt, kd = exact_kappa(runs), exact_kappa(runs, True)
expected["kappa"] = {"taxonomy": str(kt), "taxonomy_float": float(kt),
                     "display": str(kd), "display_float": float(kd)}

doc = {
    "description": "Recorded three-run validation fixture (constructed; not ground truth). "
                   "Exercises recall@k, merged recall and Fleiss' kappa on a 188-item sample.",
    "merge_map": mm.to_json(),
    "categories": list(TOPIC_IDS),
    "labels": dict(zip(ids, labels)),
    "runs": [dict(zip(ids, r)) for r in runs],
    "expected": expected,
    "reference_values": {"recall@1": 0.6914, "recall@2": 0.7926, "recall@3": 0.8670,
                         "merged_recall@1": 0.7076, "merged_recall@2": 0.7979, "merged_recall@3": 0.8723,
                         "kappa": 0.91},
}
OUT.parent.mkdir(parents=True, exist_ok=True)
OUT.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", "utf-8")
print(OUT, "d1", d1, "d2", d2, "kappa", float(kt), "display", float(kd))
for r in expected["runs"]:
    print({k: float(Fraction(v)) for k, v in r["recall"].items()},
          {k: float(Fraction(v)) for k, v in r["merged_recall"].items()})
