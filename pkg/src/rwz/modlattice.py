"""Scalar modulo-lattice arithmetic shared by the encoder and the decoder.

Folding maps reals into the half-open cell [-A/2, A/2) by subtracting the
nearest multiple of A; exact half-boundary ties pick the multiple toward
+infinity, which is what keeps the cell half-open.
"""

from __future__ import annotations

import numpy as np

__all__ = ["mod_reduce", "mod_distance", "sample_dither"]


def _check_mod_size(a) -> float:
    a = float(a)
    if not np.isfinite(a) or a <= 0.0:
        raise ValueError(f"modulo size must be a positive finite real, got {a!r}")
    return a


def mod_reduce(x, a):
    """Fold x entrywise into [-a/2, a/2).

    Each entry becomes x_i - k_i * a where k_i is the integer nearest to
    x_i / a, half-way ties rounded up, so +a/2 folds to -a/2 while -a/2
    stays put.
    """
    a = _check_mod_size(a)
    x = np.asarray(x, dtype=np.float64)
    if x.size and not np.all(np.isfinite(x)):
        raise ValueError("mod_reduce: input contains non-finite entries")
    k = np.floor(x / a + 0.5)
    return x - k * a


def mod_distance(u, v, a):
    """Squared folded distance sum_i ((v_i - u_i) mod a)^2."""
    uv = np.asarray(u, dtype=np.float64)
    vv = np.asarray(v, dtype=np.float64)
    if uv.shape != vv.shape:
        raise ValueError(f"mod_distance: shape mismatch {uv.shape} vs {vv.shape}")
    d = mod_reduce(vv - uv, a)
    return float(np.dot(d, d))


def sample_dither(n, a, rng):
    """Draw n i.i.d. dither samples uniform on [-a/2, a/2).

    The same realization must be shared by encoder and decoder; callers are
    expected to draw a fresh dither per source block from a seeded stream.
    """
    a = _check_mod_size(a)
    n = int(n)
    if n < 1:
        raise ValueError("dither length must be >= 1")
    return rng.uniform(-a / 2.0, a / 2.0, n)
