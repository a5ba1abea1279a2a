"""Reinforced message-passing quantization for both code families.

Plain sum-product has no incentive to settle on a single codeword when used
as a lossy quantizer.  Here each variable's local field is its source
evidence plus a growing fraction pi(t) = 1 - gamma0 * gamma1^t of its own
previous marginal, which anneals the iteration into hard decisions: a
codeword near the target.  Source evidence enters as folded-Gaussian
per-bit L-values around the target vector.

The parity-check family quantizes with the code bits as variables and stops
on a zero syndrome.  The generator family adds each generated bit as a
degree-one leaf on its check; the information bits themselves carry no
evidence, so that family needs randomized message initialization to break
the all-zero fixed point, and it stops once hard decisions sit still.
Stability is only trusted in the back half of the iteration budget and once
pi(t) has reached PI_STABILITY_FLOOR: with pi(t) near zero the iteration
parks on the plain sum-product fixed point within a few steps, and stopping
there would return decisions the reinforcement never shaped.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .bp import L_CLIP, check_node_update, wrapped_symbol_logliks
from .modlattice import mod_reduce

__all__ = [
    "STABLE_DECISION_ITERS",
    "PI_STABILITY_FLOOR",
    "RbpConfig",
    "QuantizeResult",
    "QuantizerDivergenceError",
    "apriori_llr",
    "rbp_run",
    "quantize_ldpc_stage",
    "quantize_ldgm_stage",
]

STABLE_DECISION_ITERS = 5
# minimum reinforcement weight before decision stability counts as
# convergence; below this the iteration is still essentially plain
# sum-product, whose fixed point is stable but is not a quantization
PI_STABILITY_FLOOR = 0.1


class QuantizerDivergenceError(RuntimeError):
    """All restarts exhausted; .result holds the best-effort quantization."""

    def __init__(self, message, result):
        self.result = result
        super().__init__(message)


@dataclass(frozen=True)
class RbpConfig:
    """Reinforcement schedule and evidence model for one quantizer stage.

    prior_var is the variance of the folded Gaussian used to turn the target
    into per-bit evidence; pi(t) = 1 - gamma0 * gamma1^t controls how fast
    marginals feed back.  Each restart raises gamma1 by restart_increment
    (slower hardening) and reruns from fresh messages.
    """

    prior_var: float
    gamma0: float = 1.0
    gamma1: float = 0.9998
    max_iters: int = 3000
    restart_increment: float = 1e-5
    max_restarts: int = 10
    wrap_limit: int = 3

    def __post_init__(self):
        if not (0.0 <= self.gamma0 <= 1.0 and 0.0 <= self.gamma1 <= 1.0):
            raise ValueError("gamma0 and gamma1 must lie in [0, 1]")
        if self.prior_var is not None and not (float(self.prior_var) > 0):
            raise ValueError("prior_var must be positive")
        if int(self.max_iters) < 1 or int(self.max_restarts) < 0:
            raise ValueError("max_iters must be >= 1 and max_restarts >= 0")
        if not (float(self.restart_increment) > 0):
            raise ValueError("restart_increment must be positive")
        if int(self.wrap_limit) < 1:
            raise ValueError("wrap_limit must be >= 1")


@dataclass
class QuantizeResult:
    """Outcome of one quantizer run.

    code_bits is the full codeword; info_bits is the generator-family index
    (None for the parity-check family).  symbols is the constellation image
    of code_bits and error the folded difference target - symbols.
    """

    code_bits: np.ndarray
    info_bits: np.ndarray
    symbols: np.ndarray
    error: np.ndarray
    distortion: float
    converged: bool
    iterations: int
    restarts: int


def apriori_llr(target, cmap, mod_size, cfg: RbpConfig) -> np.ndarray:
    """Per-bit evidence around the target: fold-aware Gaussian likelihoods of
    each level, marginalized per bit position, clipped to +-L_CLIP.

    Returns one L-value per code bit, symbol-major (the first bit of a
    symbol is the most significant bit of its Gray label).
    """
    target = np.asarray(target, dtype=np.float64)
    ll = wrapped_symbol_logliks(target, cmap.levels, mod_size,
                                float(cfg.prior_var), int(cfg.wrap_limit))
    bps = cmap.bits_per_symbol
    labels = np.asarray(cmap.gray_labels, dtype=np.int64)
    out = np.empty((target.size, bps))
    for t in range(bps):
        bit = (labels >> (bps - 1 - t)) & 1
        l0 = np.logaddexp.reduce(ll[:, bit == 0], axis=1)
        l1 = np.logaddexp.reduce(ll[:, bit == 1], axis=1)
        out[:, t] = l0 - l1
    return np.clip(out.ravel(), -L_CLIP, L_CLIP)


def _anneal(ev, ec, n_var, n_chk, priors, cfg, gamma1, generator, rng, noisy_init,
            syndrome_of):
    """One reinforced flooding run; returns (bits, converged, iterations)."""
    r = np.zeros(ev.size)
    if rng is not None and noisy_init:
        # break ties and decorrelate restarts; decays after a few iterations
        r = rng.uniform(-0.1, 0.1, ev.size)
    m_prev = np.zeros(n_var)
    prev_bits = None
    stable = 0
    bits = np.zeros(n_var, dtype=np.int64)
    max_iters = int(cfg.max_iters)
    stability_from = max_iters // 2  # annealed enough for decisions to mean something
    for t in range(max_iters):
        pi = 1.0 - cfg.gamma0 * gamma1 ** t
        local = priors + pi * m_prev
        var_tot = np.bincount(ev, weights=r, minlength=n_var)
        q = np.clip(local[ev] + var_tot[ev] - r, -L_CLIP, L_CLIP)
        r = check_node_update(q, ec, n_chk)
        m_prev = np.clip(local + np.bincount(ev, weights=r, minlength=n_var),
                         -L_CLIP, L_CLIP)
        bits = (m_prev < 0).astype(np.int64)
        if generator:
            if t >= stability_from and pi >= PI_STABILITY_FLOOR \
                    and prev_bits is not None and np.array_equal(bits, prev_bits):
                stable += 1
                if stable >= STABLE_DECISION_ITERS:
                    return bits, True, t + 1
            else:
                stable = 0
            prev_bits = bits
        elif not np.any(syndrome_of(bits)):
            return bits, True, t + 1
    return bits, False, int(cfg.max_iters)


def rbp_run(graph, apriori, cfg: RbpConfig, rng=None, *, cmap=None, target=None,
            mod_size=None) -> QuantizeResult:
    """Run the reinforced quantizer with restarts on either graph family.

    For parity-check graphs apriori has one entry per variable; for
    generator graphs one entry per generated code bit.  When cmap, target
    and mod_size are supplied the result carries symbols, folded error and
    distortion (stage wrappers always do this).  Exhausting the restart
    budget raises QuantizerDivergenceError with the best effort attached.
    """
    apriori = np.asarray(apriori, dtype=np.float64)
    generator = graph.kind == "generator"
    if generator:
        k = graph.n_var
        m = graph.n_chk
        if apriori.size != m:
            raise ValueError(f"expected {m} code-bit L-values, got {apriori.size}")
        ev = np.concatenate([graph.edge_var, k + np.arange(m, dtype=np.int64)])
        ec = np.concatenate([graph.edge_chk, np.arange(m, dtype=np.int64)])
        priors = np.concatenate([np.zeros(k), apriori])
        n_var = k + m
    else:
        if apriori.size != graph.n_var:
            raise ValueError(f"expected {graph.n_var} L-values, got {apriori.size}")
        ev, ec = graph.edge_var, graph.edge_chk
        priors = apriori
        n_var = graph.n_var

    best = None
    best_score = None
    iters_total = 0
    attempts = int(cfg.max_restarts) + 1
    for attempt in range(attempts):
        gamma1 = min(1.0, cfg.gamma1 + attempt * cfg.restart_increment)
        # generator runs always start noisy (ties lock up a cold start);
        # parity-check runs stay deterministic until a restart is needed
        noisy_init = generator or attempt > 0
        bits, converged, iters = _anneal(ev, ec, n_var, graph.n_chk, priors, cfg,
                                         gamma1, generator, rng, noisy_init,
                                         graph.check_parities)
        iters_total += iters
        if generator:
            info = bits[:graph.n_var]
            code = graph.generate_bits(info)
            # rank failed attempts by quantization quality, not recency: a
            # run that never sat still can nonetheless leave a fine codeword
            if cmap is not None and target is not None and mod_size is not None:
                err = mod_reduce(np.asarray(target, dtype=np.float64)
                                 - cmap.bits_to_levels(code), mod_size)
                score = (0 if converged else 1, float(np.dot(err, err) / err.size))
            else:
                score = (0 if converged else 1, 0.0)
        else:
            info = None
            code = bits
            score = (int(graph.check_parities(code).sum()), 0.0)
        if best is None or score < best_score:
            best = (code, info)
            best_score = score
        if converged:
            return _finish(code, info, True, iters_total, attempt,
                           cmap, target, mod_size)
    result = _finish(best[0], best[1], False, iters_total, attempts - 1,
                     cmap, target, mod_size)
    raise QuantizerDivergenceError(
        f"quantizer did not settle after {attempts} attempts "
        f"({iters_total} iterations)", result)


def _finish(code_bits, info_bits, converged, iterations, restarts,
            cmap, target, mod_size):
    symbols = error = None
    distortion = float("nan")
    if cmap is not None and target is not None and mod_size is not None:
        symbols = cmap.bits_to_levels(code_bits)
        error = mod_reduce(np.asarray(target, dtype=np.float64) - symbols, mod_size)
        distortion = float(np.dot(error, error) / error.size)
    return QuantizeResult(code_bits=code_bits, info_bits=info_bits, symbols=symbols,
                          error=error, distortion=distortion, converged=converged,
                          iterations=iterations, restarts=restarts)


def quantize_ldpc_stage(graph, cmap, target, mod_size, cfg: RbpConfig,
                        rng=None) -> QuantizeResult:
    """Quantize target onto the binary parity-check code.

    The chosen codeword's constellation image s approximates target modulo
    the cell, so the additive codeword is -s and the residual is
    result.error = (target - s) mod A.
    """
    if graph.kind != "parity-check":
        raise ValueError("stage 1 needs a parity-check graph")
    if len(cmap.levels) != 2:
        raise ValueError("stage 1 signals on a binary constellation")
    target = mod_reduce(np.asarray(target, dtype=np.float64), mod_size)
    if target.size != graph.n_var:
        raise ValueError(f"expected {graph.n_var} samples, got {target.size}")
    ap = apriori_llr(target, cmap, mod_size, cfg)
    return rbp_run(graph, ap, cfg, rng, cmap=cmap, target=target, mod_size=mod_size)


def quantize_ldgm_stage(graph, cmap, target, mod_size, cfg: RbpConfig,
                        rng=None) -> QuantizeResult:
    """Quantize target onto the generator code's constellation image.

    info_bits in the result is the transmitted index; code_bits is its
    deterministic re-encoding and symbols its constellation image.
    """
    if graph.kind != "generator":
        raise ValueError("stage 2 needs a generator graph")
    bps = cmap.bits_per_symbol
    if graph.n_chk % bps:
        raise ValueError(f"{graph.n_chk} code bits do not tile {bps}-bit symbols")
    target = mod_reduce(np.asarray(target, dtype=np.float64), mod_size)
    if target.size != graph.n_chk // bps:
        raise ValueError(f"expected {graph.n_chk // bps} samples, got {target.size}")
    ap = apriori_llr(target, cmap, mod_size, cfg)
    return rbp_run(graph, ap, cfg, rng, cmap=cmap, target=target, mod_size=mod_size)


def faster_schedule(cfg: RbpConfig, gamma1, max_iters) -> RbpConfig:
    """Derive a cheaper schedule (desk-scale runs) from an existing config."""
    return replace(cfg, gamma1=float(gamma1), max_iters=int(max_iters))
