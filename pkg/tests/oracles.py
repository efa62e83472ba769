"""Independent reference implementations used as test oracles."""
import itertools
import math

import numpy as np


def collapsed_joint(z, doc_of, words, K, V, alpha, beta):
    """Unnormalized log p(z | w) for collapsed LDA with symmetric priors."""
    D = max(doc_of) + 1
    n_dk = np.zeros((D, K))
    n_kw = np.zeros((K, V))
    for zi, d, w in zip(z, doc_of, words):
        n_dk[d, zi] += 1
        n_kw[zi, w] += 1
    lg = math.lgamma
    total = 0.0
    for d in range(D):
        total += sum(lg(n_dk[d, k] + alpha) for k in range(K)) - lg(n_dk[d].sum() + K * alpha)
    for k in range(K):
        total += sum(lg(n_kw[k, w] + beta) for w in range(V)) - lg(n_kw[k].sum() + V * beta)
    return total


def enumerate_posterior(doc_of, words, K, V, alpha, beta):
    """Exact posterior over every assignment vector; returns {z tuple: prob}."""
    states = list(itertools.product(range(K), repeat=len(words)))
    logs = np.array([collapsed_joint(z, doc_of, words, K, V, alpha, beta) for z in states])
    p = np.exp(logs - logs.max())
    p /= p.sum()
    return dict(zip(states, p))


def canonical(z):
    """Relabel topics by first appearance, so label-swapped states coincide."""
    seen = {}
    return tuple(seen.setdefault(k, len(seen)) for k in z)


def brute_recall(predictions, labels, k):
    hits = 0
    for pid, label in labels.items():
        for t in list(predictions[pid])[:k]:
            if t == label:
                hits += 1
                break
    return hits, len(labels)
