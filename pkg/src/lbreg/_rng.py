"""Deterministic random sources shared by the harness and certificates.

All randomness flows from the Philox counter-based bit generator (64-bit
words) so that a (seed, shape) pair reproduces exactly on any platform
running the same numpy build. Gaussian variates use an explicit
Box-Muller transform on raw words instead of numpy's polar method,
which keeps outputs stable across numpy versions.
"""

import numpy as np

from . import _kernels


def philox(seed):
    """Generator backed by Philox. `seed` is an int or a SeedSequence."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def raw_words(gen, count):
    """`count` uniform uint64 words from the generator."""
    return gen.integers(0, 2 ** 64 - 1, size=count, dtype=np.uint64, endpoint=True)


def normals(gen, count):
    """Standard normal draws via Box-Muller with deterministic pairing.

    Word 2i feeds the radius, word 2i+1 the angle; the pair (z_cos,
    z_sin) lands at positions (2i, 2i+1) of the output.
    """
    half = (count + 1) // 2
    w = raw_words(gen, 2 * half).reshape(half, 2)
    z1, z2 = _kernels.box_muller(np.ascontiguousarray(w[:, 0]),
                                 np.ascontiguousarray(w[:, 1]))
    out = np.empty(2 * half)
    out[0::2] = z1
    out[1::2] = z2
    return out[:count]


def signs(gen, count):
    """Random +/-1 entries from the top bit of each word."""
    w = raw_words(gen, count)
    return np.where((w >> np.uint64(63)).astype(bool), 1.0, -1.0)


def choose(gen, n, k):
    """First k entries of a word-driven Fisher-Yates shuffle of range(n).

    The modulo draw carries a bias of order n / 2^64, which is far
    below anything observable; in exchange the result depends only on
    the Philox word stream.
    """
    if not 0 <= k <= n:
        raise ValueError(f"cannot choose {k} of {n} items")
    idx = np.arange(n)
    w = raw_words(gen, k)
    for i in range(k):
        j = i + int(w[i] % np.uint64(n - i))
        idx[i], idx[j] = idx[j], idx[i]
    return idx[:k].copy()
