"""Seedable random source with a documented normal transform.

Uniform draws come from numpy's PCG64 generator, which guarantees an
identical stream for an identical seed across platforms.  Standard normals
are derived from uniforms with the Box-Muller transform rather than numpy's
ziggurat so the exact mapping is pinned down here:

    u1 = 1 - U  in (0, 1],   u2 = U' in [0, 1)
    r  = sqrt(-2 ln u1)
    z0 = r cos(2 pi u2),  z1 = r sin(2 pi u2)

``normal`` consumes uniforms in pairs (u1 then u2 per pair) and emits the
interleaved sequence z0, z1, z0, z1, ...; an odd-sized request discards the
trailing z1.  Given the fixed uniform stream this makes the normal stream
bit-reproducible as well.
"""

import numpy as np

_TWO_PI = 2.0 * np.pi


class Rng:
    """Deterministic random-number source for the whole pipeline."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, size=None) -> np.ndarray:
        """Uniform samples in [0, 1)."""
        return self._gen.random(size)

    def integers(self, low: int, high: int, size=None):
        """Integers drawn uniformly from [low, high)."""
        return self._gen.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def normal(self, size=None) -> np.ndarray:
        """Standard normals via the Box-Muller transform described above."""
        if size is None:
            return self.normal(1)[0]
        shape = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(shape)) if shape else 1
        pairs = (n + 1) // 2
        u1 = 1.0 - self._gen.random(pairs)  # in (0, 1]
        u2 = self._gen.random(pairs)
        r = np.sqrt(-2.0 * np.log(u1))
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(_TWO_PI * u2)
        out[1::2] = r * np.sin(_TWO_PI * u2)
        return out[:n].reshape(shape)
