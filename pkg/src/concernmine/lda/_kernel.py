"""Compiled inner loops for the collapsed Gibbs sampler.

Random numbers come from SplitMix64 (Steele, Lea & Flood 2014), one 64-bit
state per document.  The constants and output function below are the
published ones, so any implementation seeding the same states draws the same
stream.
"""
import hashlib

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

_MASK = (1 << 64) - 1


def splitmix64_py(state: int) -> tuple[int, int]:
    """Reference SplitMix64 step in pure Python: returns (new state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def stream_seed(seed: int, key: str) -> int:
    """Initial state for the stream owned by ``key`` (a document id).

    The key is hashed with BLAKE2b-64, XORed with the run seed, and passed
    through one SplitMix64 step so nearby seeds give unrelated streams.
    """
    h = int.from_bytes(hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest(), "little")
    _, out = splitmix64_py((seed & _MASK) ^ h)
    return out


@njit(cache=True)
def _next(states, d):
    s = states[d] + _GOLDEN
    states[d] = s
    z = s
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def _uniform(states, d):
    return np.float64(_next(states, d) >> _S11) * _INV53


@njit(cache=True)
def initialize(doc_order, doc_ptr, words, z, n_dk, n_kw, n_k, states, K):
    for d in doc_order:
        for i in range(doc_ptr[d], doc_ptr[d + 1]):
            k = int(_uniform(states, d) * K)
            if k >= K:
                k = K - 1
            w = words[i]
            z[i] = k
            n_dk[d, k] += 1
            n_kw[k, w] += 1
            n_k[k] += 1


@njit(cache=True)
def sweep(doc_order, doc_ptr, words, z, n_dk, n_kw, n_k, states, alpha, beta, vbeta, K, cdf):
    """Resample every token once, documents in ``doc_order``."""
    for d in doc_order:
        for i in range(doc_ptr[d], doc_ptr[d + 1]):
            w = words[i]
            k = z[i]
            n_dk[d, k] -= 1
            n_kw[k, w] -= 1
            n_k[k] -= 1
            total = 0.0
            for j in range(K):
                total += (n_dk[d, j] + alpha) * (n_kw[j, w] + beta) / (n_k[j] + vbeta)
                cdf[j] = total
            u = _uniform(states, d) * total
            k = 0
            while k < K - 1 and cdf[k] <= u:
                k += 1
            z[i] = k
            n_dk[d, k] += 1
            n_kw[k, w] += 1
            n_k[k] += 1
