"""Deterministic counter-based random numbers.

Every stochastic quantity in this package (phantom noise, sampler noise,
probe sampling) is a pure function of ``(seed, stream tags, counter)``, so
any artifact can be regenerated bit-identically from the seed recorded in
its manifest, independent of call order or process history.

The generator is SplitMix64: the k-th raw word of a stream is
``finalize(key + k * GOLDEN)`` where ``finalize`` is the usual xor-shift /
multiply avalanche and ``GOLDEN = 0x9E3779B97F4A7C15``.  Uniform doubles
take the top 53 bits; Gaussians are produced from uniform pairs by the
Box-Muller transform.  Integer output is bit-stable on every platform;
float output is additionally stable across runs on one platform (it goes
through libm's log/cos/sin).  ``ALGORITHM_ID`` names this construction and
is stamped into every run manifest.
"""

from __future__ import annotations

import numpy as np

ALGORITHM_ID = "ctr-splitmix64-boxmuller/1"

_MASK = (1 << 64) - 1
_GOLDEN_INT = 0x9E3779B97F4A7C15
_MIX1_INT = 0xBF58476D1CE4E5B9
_MIX2_INT = 0x94D049BB133111EB

_GOLDEN = np.uint64(_GOLDEN_INT)
_MIX1 = np.uint64(_MIX1_INT)
_MIX2 = np.uint64(_MIX2_INT)
_TWO_POW_NEG53 = 2.0 ** -53


def _finalize(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _finalize_int(z: int) -> int:
    # Scalar twin of _finalize on Python ints (no numpy overflow warnings).
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1_INT) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2_INT) & _MASK
    return z ^ (z >> 31)


def derive_key(seed: int, *tags: int) -> int:
    """Fold a user seed and a sequence of integer stream tags into a 64-bit key.

    Distinct tag tuples give statistically independent streams for the same
    seed (phantom noise, per-member sampler noise, per-step noise, ...).
    """
    key = _finalize_int(int(seed) & _MASK)
    for tag in tags:
        key = _finalize_int(key ^ _finalize_int((int(tag) + _GOLDEN_INT) & _MASK))
    return key


def raw_words(key: int, count: int, start: int = 0) -> np.ndarray:
    """``count`` raw uint64 words of the stream ``key``, counters ``start..``."""
    counters = np.arange(start, start + count, dtype=np.uint64)
    return _finalize(np.uint64(key & _MASK) + _GOLDEN * counters)


def uniforms(key: int, count: int, start: int = 0) -> np.ndarray:
    """Uniform float64 samples in [0, 1)."""
    return (raw_words(key, count, start) >> np.uint64(11)).astype(np.float64) * _TWO_POW_NEG53


def normals(key: int, shape: tuple[int, ...] | int) -> np.ndarray:
    """Standard-normal field of the given shape via Box-Muller."""
    n = int(np.prod(shape))
    if n == 0:
        return np.zeros(shape, dtype=np.float64)
    pairs = (n + 1) // 2
    # u1 shifted into (0, 1] so log() is always finite.
    u1 = (
        (raw_words(key, pairs, 0) >> np.uint64(11)).astype(np.float64) + 1.0
    ) * _TWO_POW_NEG53
    u2 = uniforms(key, pairs, pairs)
    r = np.sqrt(-2.0 * np.log(u1))
    theta = (2.0 * np.pi) * u2
    z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
    return z.reshape(shape)


def integers(key: int, count: int, upper: int, start: int = 0) -> np.ndarray:
    """Integers in [0, upper) by multiply-shift on the uniform stream.

    The tiny modulo bias of floor(u * upper) is irrelevant for probe
    placement and far below any tolerance used in tests.
    """
    if upper <= 0:
        raise ValueError("upper must be positive")
    u = uniforms(key, count, start)
    return np.minimum((u * upper).astype(np.int64), upper - 1)
