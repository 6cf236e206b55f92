"""xoshiro256** seeded through splitmix64.

The generator is fixed by name so environments reproduce bit-for-bit across
platforms and implementations; numpy's bit generators do not include it.
"""
from __future__ import annotations

import math

MASK = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step; returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return state, z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Independent 64-bit stream seed for sub-task ``index`` (e.g. a trial)."""
    _, out = splitmix64((seed + index) & MASK)
    return out


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK


class Xoshiro256:
    """xoshiro256** with the float, normal and gamma samplers the generators need."""

    def __init__(self, seed: int):
        st = seed & MASK
        s = []
        for _ in range(4):
            st, out = splitmix64(st)
            s.append(out)
        self.s = s
        self._spare_normal = None

    def next_u64(self) -> int:
        s = self.s
        result = (_rotl((s[1] * 5) & MASK, 7) * 9) & MASK
        t = (s[1] << 17) & MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def random(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def standard_normal(self) -> float:
        # Marsaglia polar method; caches the second variate.
        if self._spare_normal is not None:
            z, self._spare_normal = self._spare_normal, None
            return z
        while True:
            u = 2.0 * self.random() - 1.0
            v = 2.0 * self.random() - 1.0
            s = u * u + v * v
            if 0.0 < s < 1.0:
                break
        f = math.sqrt(-2.0 * math.log(s) / s)
        self._spare_normal = v * f
        return u * f

    def gamma(self, alpha: float) -> float:
        """Gamma(alpha, 1) by Marsaglia-Tsang; alpha < 1 uses the U^(1/alpha) boost."""
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        if alpha < 1.0:
            u = self.random()
            while u == 0.0:
                u = self.random()
            return self.gamma(alpha + 1.0) * u ** (1.0 / alpha)
        d = alpha - 1.0 / 3.0
        c = 1.0 / math.sqrt(9.0 * d)
        while True:
            x = self.standard_normal()
            v = 1.0 + c * x
            if v <= 0.0:
                continue
            v = v * v * v
            u = self.random()
            if u < 1.0 - 0.0331 * x ** 4:
                return d * v
            if u > 0.0 and math.log(u) < 0.5 * x * x + d * (1.0 - v + math.log(v)):
                return d * v

    def dirichlet(self, alpha: float, n: int) -> list[float]:
        while True:
            g = [self.gamma(alpha) for _ in range(n)]
            total = math.fsum(g)
            if total > 0.0:
                return [x / total for x in g]
