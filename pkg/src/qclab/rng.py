"""Counter-based random stream.

Every draw is a pure function of ``(seed, counter)``:

    key      = splitmix64(seed)
    word[i]  = splitmix64(key + (i + 1) * 0x9E3779B97F4A7C15)   (mod 2**64)
    uniform  = (word >> 11) * 2**-53                              in [0, 1)

``splitmix64`` is the finalizer of Steele, Lea & Flood's SplitMix64.  All
arithmetic is wrapping unsigned 64-bit, so the raw words and the uniforms are
bit-identical on every platform.  Child streams are derived by hashing the
parent seed together with an integer key, which lets callers give each sample
its own stream (``stream.spawn(sample_index)``) so that serial and parallel
builds agree exactly.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def _mix_int(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_M1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


class RngStream:
    """Deterministic stream of random numbers addressed by a counter."""

    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed) & _MASK
        self.counter = int(counter)
        self._key = _mix_int(self.seed)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, counter={self.counter})"

    def spawn(self, *keys: int) -> "RngStream":
        """Independent child stream labelled by integer ``keys``."""
        s = self._key
        for k in keys:
            s = _mix_int(s ^ _mix_int((int(k) + 0x632BE59BD9B4E019) & _MASK))
        return RngStream(s)

    def words(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit words."""
        idx = np.arange(self.counter + 1, self.counter + 1 + n, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            z = np.uint64(self._key) + idx * np.uint64(_GOLDEN)
            return _mix_array(z)

    def random(self, size=None) -> np.ndarray | float:
        n = 1 if size is None else int(np.prod(size))
        u = (self.words(n) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
        if size is None:
            return float(u[0])
        return u.reshape(size)

    def uniform(self, lo: float = 0.0, hi: float = 1.0, size=None):
        if not lo < hi:
            raise ValidationError(f"empty interval [{lo}, {hi})")
        u = self.random(size)
        out = lo + (hi - lo) * u
        # guard against rounding up to hi
        if size is None:
            return out if out < hi else float(np.nextafter(hi, lo))
        return np.minimum(out, np.nextafter(hi, lo))

    def normal(self, size=None) -> np.ndarray | float:
        """Standard normal variates by the Box-Muller transform."""
        n = 1 if size is None else int(np.prod(size))
        m = (n + 1) // 2
        u = self.random(2 * m)
        r = np.sqrt(-2.0 * np.log1p(-u[:m]))
        phi = 2.0 * np.pi * u[m:]
        z = np.concatenate([r * np.cos(phi), r * np.sin(phi)])[:n]
        if size is None:
            return float(z[0])
        return z.reshape(size)

    def integers(self, lo: int, hi: int, size=None):
        """Integers in ``[lo, hi)``."""
        if not lo < hi:
            raise ValidationError(f"empty integer range [{lo}, {hi})")
        u = self.random(size)
        out = lo + np.floor(u * (hi - lo)).astype(np.int64)
        if size is None:
            return int(out)
        return out

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.random(n), kind="stable")


def rng_uniform(stream: RngStream, lo: float, hi: float) -> float:
    """Single draw from ``[lo, hi)``; advances ``stream`` by one word."""
    return stream.uniform(lo, hi)
