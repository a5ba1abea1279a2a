"""Sum-product decoding over the folded Gaussian channel.

The decoder sees w = (s + g) mod A where s is a constellation point and g is
Gaussian; bit L-values therefore come from a wrapped likelihood, a small sum
over fold offsets.  Decoding itself is plain flooding belief propagation on
the parity-check graph with the check update in guarded log-tanh form.
Everything here is vectorized over the edge list, so one iteration is a
handful of gathers and segmented sums.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .modlattice import mod_reduce

__all__ = [
    "L_CLIP",
    "ChannelObservation",
    "BpResult",
    "ThresholdBracketError",
    "wrapped_gaussian_llr",
    "bp_decode",
    "find_noise_threshold",
    "write_probe_csv",
]

L_CLIP = 50.0


class ThresholdBracketError(RuntimeError):
    """Bisection could not bracket the target BER; carries the probe curve."""

    def __init__(self, message, probes):
        self.probes = list(probes)
        super().__init__(message)


@dataclass
class ChannelObservation:
    """Folded channel output with its cell size and noise variance."""

    w: np.ndarray
    mod_size: float
    noise_var: float

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if not (float(self.mod_size) > 0):
            raise ValueError("mod_size must be positive")
        if not (float(self.noise_var) > 0):
            raise ValueError("noise_var must be positive")
        half = float(self.mod_size) / 2
        if self.w.size and (self.w.min() < -half or self.w.max() >= half):
            raise ValueError("observations must lie in [-mod_size/2, mod_size/2)")


@dataclass
class BpResult:
    bits: np.ndarray
    converged: bool
    iterations: int


def wrapped_symbol_logliks(x, levels, mod_size, var, wrap_limit):
    """log sum_{|b|<=wrap_limit} exp(-(x - s + A*b)^2 / (2 var)), one column
    per level.  The Gaussian normalizer is dropped; only differences matter."""
    x = np.asarray(x, dtype=np.float64)
    levels = np.asarray(levels, dtype=np.float64)
    offsets = float(mod_size) * np.arange(-int(wrap_limit), int(wrap_limit) + 1)
    z = x[:, None, None] - levels[None, :, None] + offsets[None, None, :]
    return _logsumexp_last(-np.square(z) / (2.0 * float(var)))


def _logsumexp_last(a):
    m = np.max(a, axis=-1, keepdims=True)
    return (m + np.log(np.sum(np.exp(a - m), axis=-1, keepdims=True)))[..., 0]


def wrapped_gaussian_llr(obs: ChannelObservation, cmap, wrap_limit=3) -> np.ndarray:
    """Per-bit L-values log P(bit=0 | w) - log P(bit=1 | w) for a binary map,
    clipped to +-L_CLIP."""
    if int(wrap_limit) < 1:
        raise ValueError("wrap_limit must be >= 1")
    if len(cmap.levels) != 2:
        raise ValueError("wrapped_gaussian_llr expects a binary constellation")
    ll = wrapped_symbol_logliks(obs.w, cmap.levels, obs.mod_size, obs.noise_var,
                                wrap_limit)
    i0 = cmap.gray_labels.index(0)
    i1 = cmap.gray_labels.index(1)
    return np.clip(ll[:, i0] - ll[:, i1], -L_CLIP, L_CLIP)


def _phi(x):
    """-log tanh(x/2) for x > 0, guarded so exact zeros stay finite."""
    return -np.log(np.tanh(0.5 * np.clip(x, 1e-12, None)))


def check_node_update(q, edge_chk, n_chk):
    """Extrinsic check-to-variable messages from variable-to-check messages q.

    Magnitudes go through the log-tanh transform, signs through a parity
    count; both are segmented sums over the check index.
    """
    f = _phi(np.abs(q))
    neg = (q < 0).astype(np.float64)
    f_tot = np.bincount(edge_chk, weights=f, minlength=n_chk)
    n_tot = np.bincount(edge_chk, weights=neg, minlength=n_chk)
    mag = _phi(np.maximum(f_tot[edge_chk] - f, 0.0))
    odd = (np.rint(n_tot[edge_chk] - neg).astype(np.int64) & 1).astype(np.float64)
    return np.clip((1.0 - 2.0 * odd) * mag, -L_CLIP, L_CLIP)


def bp_decode(graph, llr, max_iters=200) -> BpResult:
    """Flooding sum-product decoding; stops at the first zero-syndrome
    decision with no undecided (exactly zero) marginals."""
    if graph.kind != "parity-check":
        raise ValueError("bp_decode needs a parity-check graph")
    llr = np.asarray(llr, dtype=np.float64)
    if llr.size != graph.n_var:
        raise ValueError(f"expected {graph.n_var} L-values, got {llr.size}")
    if int(max_iters) < 1:
        raise ValueError("max_iters must be >= 1")
    ev = graph.edge_var
    ec = graph.edge_chk
    r = np.zeros(ev.size)
    bits = (llr < 0).astype(np.int64)
    for it in range(1, int(max_iters) + 1):
        var_tot = np.bincount(ev, weights=r, minlength=graph.n_var)
        q = np.clip(llr[ev] + var_tot[ev] - r, -L_CLIP, L_CLIP)
        r = check_node_update(q, ec, graph.n_chk)
        marg = llr + np.bincount(ev, weights=r, minlength=graph.n_var)
        bits = (marg < 0).astype(np.int64)
        if not np.any(graph.check_parities(bits)) and np.all(marg != 0.0):
            return BpResult(bits=bits, converged=True, iterations=it)
    return BpResult(bits=bits, converged=False, iterations=int(max_iters))


def find_noise_threshold(graph, cmap, target_ber, rng, *, blocks_per_probe=20,
                         var_tol=1e-3, max_iters=200, wrap_limit=3,
                         var_cap=None, csv_path=None) -> float:
    """Largest noise variance whose Monte Carlo BER stays at or below
    target_ber, found by doubling then bisecting to var_tol.

    Probes transmit the all-zero codeword; the folded channel plus the
    symmetric constellation make the error rate codeword-independent.  A
    probe curve is written to csv_path when given, and attached to the
    bracketing error when even the smallest probe fails.
    """
    target_ber = float(target_ber)
    if not (0 < target_ber < 1):
        raise ValueError("target_ber must be in (0, 1)")
    a = float(cmap.mod_size)
    s = cmap.bits_to_levels(np.zeros(graph.n_var, dtype=np.int64))
    sigma_cap = a * a if var_cap is None else float(var_cap)
    probes = []

    def ber_at(v):
        errs = 0
        for _ in range(int(blocks_per_probe)):
            w = mod_reduce(s + math.sqrt(v) * rng.standard_normal(graph.n_var), a)
            llr = wrapped_gaussian_llr(ChannelObservation(w, a, v), cmap, wrap_limit)
            errs += int(np.count_nonzero(bp_decode(graph, llr, max_iters).bits))
        ber = errs / (int(blocks_per_probe) * graph.n_var)
        probes.append((v, ber, int(blocks_per_probe), errs))
        return ber

    lo = cmap.power / 16.0
    if ber_at(lo) > target_ber:
        if csv_path:
            write_probe_csv(csv_path, probes)
        raise ThresholdBracketError(
            f"BER {probes[-1][1]:.3g} above target {target_ber:.3g} already at "
            f"variance {lo:.3g}", probes)
    hi = lo
    while True:
        hi = hi * 2.0
        if hi >= sigma_cap:
            if ber_at(sigma_cap) <= target_ber:
                if csv_path:
                    write_probe_csv(csv_path, probes)
                return sigma_cap
            hi = sigma_cap
            break
        if ber_at(hi) > target_ber:
            break
        lo = hi
    while hi - lo > float(var_tol):
        mid = 0.5 * (lo + hi)
        if ber_at(mid) <= target_ber:
            lo = mid
        else:
            hi = mid
    if csv_path:
        write_probe_csv(csv_path, probes)
    return lo


def write_probe_csv(path, probes) -> None:
    """Probe curve as CSV rows (noise_var, ber, blocks, errors)."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["noise_var", "ber", "blocks", "errors"])
        for v, ber, blocks, errs in probes:
            wr.writerow([f"{v:.12g}", f"{ber:.12g}", blocks, errs])
