"""Counter-based random streams.

Every random draw in the package is a pure function of a 64-bit key and a
counter, so results do not depend on how work is split across threads.

Derivation scheme (all arithmetic modulo 2**64)::

    mix(x)            = splitmix64 finalizer of x
    derive(key, i)    = mix(key ^ mix(i + GOLDEN))
    uniform(key, c)   = (mix(derive(key, c)) >> 11) * 2**-53

``derive(seed, i)`` is the stream used for sample or shadow ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)


def _mix(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = x.astype(np.uint64, copy=True)
        z ^= z >> np.uint64(30)
        z *= _C1
        z ^= z >> np.uint64(27)
        z *= _C2
        z ^= z >> np.uint64(31)
    return z


def _as_u64(values) -> np.ndarray:
    if isinstance(values, (int, np.integer)):
        return np.uint64(int(values) & MASK64)
    arr = np.asarray(values)
    if arr.dtype == np.uint64:
        return arr
    if arr.dtype.kind not in "iu":
        raise TypeError(f"expected integer keys, got dtype {arr.dtype}")
    return arr.astype(np.uint64)


def mix64(value: int) -> int:
    return int(_mix(np.array([int(value) & MASK64], dtype=np.uint64))[0])


def derive_keys(key, index) -> np.ndarray:
    """Vectorized ``derive``: broadcast over keys and indices."""
    k = _as_u64(key)
    i = _as_u64(index)
    with np.errstate(over="ignore"):
        return _mix(k ^ _mix(i + np.uint64(GOLDEN)))


def derive(key: int, *path: int) -> int:
    """Child key of ``key`` along ``path`` (one derive step per element)."""
    k = int(key) & MASK64
    for i in path:
        k = int(derive_keys(np.uint64(k), np.uint64(int(i) & MASK64)))
    return k


def uniforms(keys, counter: int) -> np.ndarray:
    """Uniform [0, 1) variate number ``counter`` of each stream in ``keys``."""
    bits = _mix(derive_keys(keys, counter))
    return (bits >> np.uint64(11)).astype(np.float64) * (2.0**-53)


@dataclass(frozen=True)
class Stream:
    """A named random stream; cheap to create and to split."""

    key: int

    def child(self, *path: int) -> "Stream":
        return Stream(derive(self.key, *path))

    def children_keys(self, n: int, start: int = 0) -> np.ndarray:
        return derive_keys(np.uint64(self.key & MASK64), np.arange(start, start + n, dtype=np.uint64))

    def uniform(self, counter: int = 0) -> float:
        return float(uniforms(np.array([self.key & MASK64], dtype=np.uint64), counter)[0])

    def generator(self) -> np.random.Generator:
        """A numpy Philox generator keyed by this stream, for bulk draws."""
        return np.random.Generator(np.random.Philox(key=self.key & MASK64))


def as_stream(rng) -> Stream:
    if isinstance(rng, Stream):
        return rng
    if isinstance(rng, (int, np.integer)):
        return Stream(int(rng) & MASK64)
    raise TypeError(f"expected a Stream or an integer seed, got {type(rng).__name__}")
