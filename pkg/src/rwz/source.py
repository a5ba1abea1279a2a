"""Correlated source generation and rate-distortion bookkeeping.

The source is x = y_a + v with v ~ N(0, P_V) i.i.d. and independent of the
side information y_a, whose marginal may be any finite-variance law.  The
coding rate needed at distortion D depends only on P_V, not on the side
information distribution.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = ["SideInfoDist", "SourceBlock", "sample_source", "mse", "wyner_ziv_rate"]

_KINDS = ("uniform", "gaussian", "two_point")


@dataclass(frozen=True)
class SideInfoDist:
    """Marginal law of the side information y_a.

    kind is one of "uniform" (low, high), "gaussian" (mean, var) or
    "two_point" (p, a, b) meaning y_a = a with probability p, else b.
    """

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown side-info kind {self.kind!r}, expected one of {_KINDS}")
        p = tuple(float(v) for v in self.params)
        object.__setattr__(self, "params", p)
        if any(not math.isfinite(v) for v in p):
            raise ValueError("side-info parameters must be finite")
        if self.kind == "uniform":
            if len(p) != 2 or p[0] >= p[1]:
                raise ValueError(f"uniform needs (low, high) with low < high, got {p}")
        elif self.kind == "gaussian":
            if len(p) != 2 or p[1] < 0:
                raise ValueError(f"gaussian needs (mean, var) with var >= 0, got {p}")
        else:
            if len(p) != 3 or not (0.0 <= p[0] <= 1.0):
                raise ValueError(f"two_point needs (p, a, b) with 0 <= p <= 1, got {p}")

    @staticmethod
    def uniform(low, high) -> "SideInfoDist":
        return SideInfoDist("uniform", (low, high))

    @staticmethod
    def gaussian(mean, var) -> "SideInfoDist":
        return SideInfoDist("gaussian", (mean, var))

    @staticmethod
    def two_point(p, a, b) -> "SideInfoDist":
        return SideInfoDist("two_point", (p, a, b))

    def variance(self) -> float:
        p = self.params
        if self.kind == "uniform":
            return (p[1] - p[0]) ** 2 / 12.0
        if self.kind == "gaussian":
            return p[1]
        q, a, b = p
        m = q * a + (1.0 - q) * b
        return q * a * a + (1.0 - q) * b * b - m * m

    def sample(self, n, rng) -> np.ndarray:
        p = self.params
        if self.kind == "uniform":
            return rng.uniform(p[0], p[1], n)
        if self.kind == "gaussian":
            return p[0] + math.sqrt(p[1]) * rng.standard_normal(n)
        q, a, b = p
        return np.where(rng.uniform(0.0, 1.0, n) < q, a, b)

    def to_string(self) -> str:
        args = ",".join(repr(v) for v in self.params)
        return f"{self.kind}({args})"

    @staticmethod
    def from_string(text) -> "SideInfoDist":
        m = re.fullmatch(r"\s*([a-z_]+)\s*\(([^()]*)\)\s*", text)
        if m is None:
            raise ValueError(f"cannot parse side-info distribution {text!r}")
        kind = m.group(1)
        try:
            params = tuple(float(v) for v in m.group(2).split(","))
        except ValueError as exc:
            raise ValueError(f"bad side-info parameters in {text!r}") from exc
        return SideInfoDist(kind, params)


@dataclass
class SourceBlock:
    """One block of source, side information and correlation noise, x = y_a + v."""

    x: np.ndarray
    y_a: np.ndarray
    v: np.ndarray

    @property
    def n(self) -> int:
        return self.x.size


def sample_source(n, dist: SideInfoDist, p_v, rng) -> SourceBlock:
    """Draw a block: y_a from dist, v ~ N(0, p_v) independent, x = y_a + v."""
    n = int(n)
    if n < 1:
        raise ValueError("block length must be >= 1")
    p_v = float(p_v)
    if not (p_v > 0.0 and math.isfinite(p_v)):
        raise ValueError(f"correlation noise variance must be positive, got {p_v}")
    y_a = dist.sample(n, rng)
    v = math.sqrt(p_v) * rng.standard_normal(n)
    return SourceBlock(x=y_a + v, y_a=y_a, v=v)


def mse(x, x_hat) -> float:
    """Mean squared reconstruction error."""
    xv = np.asarray(x, dtype=np.float64)
    hv = np.asarray(x_hat, dtype=np.float64)
    if xv.shape != hv.shape:
        raise ValueError(f"mse: shape mismatch {xv.shape} vs {hv.shape}")
    d = hv - xv
    return float(np.dot(d, d) / d.size)


def wyner_ziv_rate(p_v, d) -> float:
    """Rate-distortion function max(0, 0.5*log2(p_v/d)) bits per sample."""
    p_v = float(p_v)
    d = float(d)
    if p_v <= 0 or d <= 0:
        raise ValueError("variances must be positive")
    return max(0.0, 0.5 * math.log2(p_v / d))
