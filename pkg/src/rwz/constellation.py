"""PAM constellations with Gray labeling used by both code stages.

The binary stage signals on two levels at quarter-cell spacing; the
four-level stage spaces its points uniformly under a prescribed average
energy.  Labels are kept next to the levels so likelihood routines can
marginalize per bit position without guessing conventions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["ConstellationMap", "pam2", "pam4", "pam2_map", "pam4_gray_map"]


@dataclass(frozen=True)
class ConstellationMap:
    """Amplitude levels plus the bit label attached to each level.

    levels are ascending and symmetric about zero.  gray_labels[j] is the
    integer bit pattern mapped to levels[j]; for multi-bit symbols the
    first code bit of the symbol is the most significant bit of the
    pattern.  mod_size is the folding cell the map is meant to live in.
    """

    levels: tuple
    gray_labels: tuple
    mod_size: float

    def __post_init__(self):
        lv = tuple(float(v) for v in self.levels)
        lb = tuple(int(v) for v in self.gray_labels)
        object.__setattr__(self, "levels", lv)
        object.__setattr__(self, "gray_labels", lb)
        m = len(lv)
        if m < 2 or m & (m - 1):
            raise ValueError("level count must be a power of two >= 2")
        if len(lb) != m or sorted(lb) != list(range(m)):
            raise ValueError("gray_labels must be a permutation of 0..len(levels)-1")
        if any(lv[i] >= lv[i + 1] for i in range(m - 1)):
            raise ValueError("levels must be strictly ascending")
        if any(abs(lv[i] + lv[m - 1 - i]) > 1e-12 for i in range(m)):
            raise ValueError("levels must be symmetric about zero")
        # Gray property: adjacent levels differ in exactly one bit.
        for i in range(m - 1):
            if bin(lb[i] ^ lb[i + 1]).count("1") != 1:
                raise ValueError("labels of adjacent levels must differ in one bit")
        if not (float(self.mod_size) > 0):
            raise ValueError("mod_size must be positive")
        if lv[-1] >= float(self.mod_size) / 2:
            raise ValueError("levels must fit inside [-mod_size/2, mod_size/2)")

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(len(self.levels)))

    @property
    def power(self) -> float:
        """Average energy over a uniform draw of the levels."""
        return float(np.mean(np.square(self.levels)))

    @property
    def peak_power_constant(self) -> float:
        """k = mod_size^2 / power, e.g. 16 for two levels at +-mod_size/4."""
        return float(self.mod_size) ** 2 / self.power

    def _label_to_index(self) -> np.ndarray:
        inv = np.empty(len(self.levels), dtype=np.int64)
        inv[np.asarray(self.gray_labels)] = np.arange(len(self.levels))
        return inv

    def bits_to_levels(self, bits) -> np.ndarray:
        """Map a flat bit vector (bits_per_symbol per symbol, first bit = MSB)."""
        b = np.asarray(bits, dtype=np.int64).ravel()
        if np.any((b != 0) & (b != 1)):
            raise ValueError("bits must be 0/1")
        bps = self.bits_per_symbol
        if b.size % bps:
            raise ValueError(f"bit count {b.size} not a multiple of {bps}")
        pattern = np.zeros(b.size // bps, dtype=np.int64)
        for t in range(bps):
            pattern = (pattern << 1) | b[t::bps]
        return np.asarray(self.levels)[self._label_to_index()[pattern]]

    def negated(self) -> "ConstellationMap":
        """Map of the negated signal: same levels, label association flipped."""
        order = np.argsort(-np.asarray(self.levels))  # index of -level, ascending
        labels = tuple(self.gray_labels[i] for i in order)
        return ConstellationMap(self.levels, labels, self.mod_size)


def pam2(mod_size) -> ConstellationMap:
    """Binary map: bit 0 -> -mod_size/4, bit 1 -> +mod_size/4."""
    a = float(mod_size)
    return ConstellationMap((-a / 4.0, a / 4.0), (0, 1), a)


def pam4(energy, mod_size) -> ConstellationMap:
    """Four uniformly spaced levels {-3c, -c, +c, +3c} with mean energy `energy`.

    Gray labels run 00, 01, 11, 10 from the lowest level up, so 5c^2 = energy.
    """
    e = float(energy)
    if e <= 0:
        raise ValueError("energy must be positive")
    c = math.sqrt(e / 5.0)
    return ConstellationMap((-3 * c, -c, c, 3 * c), (0b00, 0b01, 0b11, 0b10), float(mod_size))


def pam2_map(bits, mod_size) -> np.ndarray:
    """Convenience: binary antipodal mapping at quarter-cell amplitude."""
    return pam2(mod_size).bits_to_levels(bits)


def pam4_gray_map(bits, energy, mod_size=None) -> np.ndarray:
    """Convenience: consecutive bit pairs to the Gray-labeled 4-level alphabet.

    mod_size only matters for range checks; by default a cell wide enough
    for the levels is used.
    """
    if mod_size is None:
        mod_size = 8.0 * math.sqrt(float(energy) / 5.0)
    return pam4(energy, mod_size).bits_to_levels(bits)
