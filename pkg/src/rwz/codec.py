"""End-to-end residual coder: parameters, code sets, encoder, decoder,
Monte Carlo evaluation, and payload serialization.

The encoder folds the scaled-and-dithered input, shapes it onto the
parity-check codebook, and indexes the residual on the generator codebook;
the transmitted payload is the generator's information bits.  The decoder
rebuilds the generator codeword, forms its noisy view of the shaping
codeword, channel-decodes it, and unfolds the reconstruction against the
side information.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .bp import ChannelObservation, bp_decode, wrapped_gaussian_llr
from .constellation import ConstellationMap, pam2, pam4
from .design import alpha_factor, rate_R1, target_distortion
from .graphs import (DEFAULT_LDGM_CHK_ENTRIES, TannerGraph, build_graph,
                     default_ldgm_profile, default_ldpc_profile)
from .modlattice import mod_reduce, sample_dither
from .rbp import (QuantizerDivergenceError, RbpConfig, quantize_ldgm_stage,
                  quantize_ldpc_stage)
from .source import SideInfoDist

__all__ = [
    "WzParams",
    "CodeSet",
    "EncodeTrace",
    "DecodeTrace",
    "BlockResult",
    "RateDistortionReport",
    "encode",
    "decode",
    "evaluate",
    "pack_payload",
    "unpack_payload",
    "default_stage1_cfg",
    "default_stage2_cfg",
    "run_stage2",
    "PAYLOAD_HEADER_BYTES",
]

PAYLOAD_HEADER_BYTES = 16


@dataclass(frozen=True)
class WzParams:
    """Operating point of the coder; every field is pinned by the rate and
    the two modulo sizes."""

    p_v: float
    d: float
    alpha: float
    a_eps: float
    a_p: float
    r1: float
    r2: float
    epsilon: float = 0.005

    def __post_init__(self):
        if not self.p_v > self.d > 0:
            raise ValueError(f"need P_V > D > 0, got P_V={self.p_v}, D={self.d}")
        if abs(self.alpha - (1.0 - self.d / self.p_v)) > 1e-12:
            raise ValueError(
                f"alpha={self.alpha} inconsistent with 1 - D/P_V "
                f"= {1.0 - self.d / self.p_v}")
        if not self.a_p >= self.a_eps > 0:
            raise ValueError(
                f"need A_p >= A_eps > 0, got A_p={self.a_p}, A_eps={self.a_eps}")
        if abs(self.r2 - 0.5 * math.log2(self.p_v / self.d)) > 1e-9:
            raise ValueError(
                f"rate {self.r2} inconsistent with (1/2) log2(P_V/D) "
                f"= {0.5 * math.log2(self.p_v / self.d)}")

    @classmethod
    def from_rate(cls, p_v, r2, a_eps, a_p, r1=None, epsilon=0.005) -> "WzParams":
        d = target_distortion(p_v, r2)
        alpha = alpha_factor(p_v, d)
        if r1 is None:
            r1 = rate_R1(a_eps, alpha, p_v)
        return cls(p_v=float(p_v), d=d, alpha=alpha, a_eps=float(a_eps),
                   a_p=float(a_p), r1=float(r1), r2=float(r2),
                   epsilon=float(epsilon))

    @property
    def rho(self) -> float:
        """Modulo scale-up factor A_p/A_eps."""
        return self.a_p / self.a_eps

    @property
    def rho2(self) -> float:
        return self.rho * self.rho

    @property
    def equivalent_noise_var(self) -> float:
        """Design-assumption variance of the decoder's equivalent channel:
        the stage-2 budget scaled to A_p plus the unquantized residual term."""
        return self.rho2 * self.alpha * self.d + self.alpha ** 2 * self.p_v


def default_stage1_cfg(params: WzParams, sigma2_n_eps=None) -> RbpConfig:
    """Shaping-stage schedule tuned at n=10^4.  The a-priori variance follows
    the decoder threshold when one is known; otherwise the stage budget
    alpha P_V (= alpha D + alpha^2 P_V) stands in."""
    base = sigma2_n_eps if sigma2_n_eps is not None else params.alpha * params.p_v
    return RbpConfig(prior_var=float(base) * params.rho2, gamma1=0.9995,
                     max_iters=3000, restart_increment=5e-5, max_restarts=10)


def default_stage2_cfg(params: WzParams) -> RbpConfig:
    """Indexing-stage schedule tuned at n=10^4; the a-priori variance is the
    stage-2 budget alpha D at the practical modulo scale."""
    return RbpConfig(prior_var=params.alpha * params.d * params.rho2,
                     gamma1=0.9999, max_iters=4000, restart_increment=1e-5,
                     max_restarts=10)


@dataclass(frozen=True)
class CodeSet:
    """The two code graphs with their constellation maps at one modulo size."""

    ldpc_graph: TannerGraph
    ldgm_graph: TannerGraph
    stage1_map: ConstellationMap
    stage2_map: ConstellationMap

    def __post_init__(self):
        if self.ldpc_graph.kind != "parity-check":
            raise ValueError("stage-1 graph must be a parity-check graph")
        if self.ldgm_graph.kind != "generator":
            raise ValueError("stage-2 graph must be a generator graph")
        per_symbol = self.stage2_map.bits_per_symbol
        if self.ldgm_graph.n_chk != per_symbol * self.ldpc_graph.n_var:
            raise ValueError(
                f"generator code emits {self.ldgm_graph.n_chk} bits but the "
                f"block needs {per_symbol} * {self.ldpc_graph.n_var}")
        if abs(self.stage1_map.mod_size - self.stage2_map.mod_size) > 1e-12:
            raise ValueError("stage maps disagree on the modulo size")

    @property
    def n(self) -> int:
        return self.ldpc_graph.n_var

    @property
    def payload_bits(self) -> int:
        return self.ldgm_graph.n_var

    @property
    def modulo(self) -> float:
        return self.stage1_map.mod_size

    @classmethod
    def build(cls, params: WzParams, n, *, ldpc_profile=None,
              ldgm_chk_entries=None, ldpc_seed=7, ldgm_seed=8,
              ldpc_graph=None, ldgm_graph=None) -> "CodeSet":
        """Construct (or adopt) the graphs and derive the maps at A_p.

        The payload carries round(n * R2) bits, so the generator graph has
        exactly that many information bits and one code bit per transmitted
        symbol bit.
        """
        n = int(n)
        k = _payload_len(n, params.r2)
        if ldpc_graph is None:
            ldpc_graph = build_graph(n, ldpc_profile or default_ldpc_profile(),
                                     "parity-check", seed=ldpc_seed)
        if ldpc_graph.n_var != n:
            raise ValueError(
                f"stage-1 graph has {ldpc_graph.n_var} variables, expected {n}")
        stage2_bits = 2 * n  # 4-ary map, two bits per symbol
        if ldgm_graph is None:
            prof = default_ldgm_profile(
                k, stage2_bits, ldgm_chk_entries or DEFAULT_LDGM_CHK_ENTRIES)
            ldgm_graph = build_graph(k, prof, "generator", seed=ldgm_seed,
                                     n_chk=stage2_bits)
        if ldgm_graph.n_var != k or ldgm_graph.n_chk != stage2_bits:
            raise ValueError(
                f"stage-2 graph is {ldgm_graph.n_var}x{ldgm_graph.n_chk}, "
                f"expected {k}x{stage2_bits}")
        return cls(ldpc_graph=ldpc_graph, ldgm_graph=ldgm_graph,
                   stage1_map=pam2(params.a_p),
                   stage2_map=pam4(params.rho2 * params.alpha ** 2 * params.p_v,
                                   params.a_p))

    def rescaled(self, params: WzParams) -> "CodeSet":
        """Same graphs, maps rebuilt for params.a_p (step-5 probes)."""
        return CodeSet(
            ldpc_graph=self.ldpc_graph, ldgm_graph=self.ldgm_graph,
            stage1_map=pam2(params.a_p),
            stage2_map=pam4(params.rho2 * params.alpha ** 2 * params.p_v,
                            params.a_p))


@dataclass(frozen=True)
class EncodeTrace:
    """Intermediate encoder quantities, kept for identity checks and genie
    experiments."""

    dither: np.ndarray
    scaled: np.ndarray          # (alpha x + d) mod A
    c1: np.ndarray              # shaping codeword (negated symbol image)
    e1: np.ndarray              # (scaled + c1) mod A
    c2: np.ndarray              # indexed codeword (symbol image)
    e2: np.ndarray              # (e1 - c2) mod A
    index_bits: np.ndarray
    stage1_converged: bool
    stage2_converged: bool
    stage1_restarts: int
    stage2_restarts: int


@dataclass(frozen=True)
class DecodeTrace:
    w: np.ndarray               # (c2 - alpha y_a - d) mod A
    c1_hat: np.ndarray
    v_hat: np.ndarray           # (w - c1_hat) mod A
    x_hat: np.ndarray


def run_stage2(codes: CodeSet, e1, a, cfg: RbpConfig, rng=None):
    """Index the stage-1 residual on the generator codebook."""
    return quantize_ldgm_stage(codes.ldgm_graph, codes.stage2_map, e1, a,
                               cfg, rng)


def encode(x, params: WzParams, codes: CodeSet, dither, cfg: RbpConfig = None,
           stage2_cfg: RbpConfig = None, rng=None, strict=True):
    """Quantize one block; returns (index_bits, EncodeTrace).

    strict=True propagates quantizer divergence; strict=False keeps the
    best-effort codeword and reports the failure through the trace flags.
    """
    x = np.asarray(x, dtype=np.float64)
    dither = np.asarray(dither, dtype=np.float64)
    if x.size != codes.n or dither.size != codes.n:
        raise ValueError(f"expected blocks of {codes.n} samples")
    a = params.a_p
    cfg = cfg or default_stage1_cfg(params)
    stage2_cfg = stage2_cfg or default_stage2_cfg(params)

    u = mod_reduce(params.alpha * x + dither, a)
    res1, ok1 = _quantize_leniently(
        quantize_ldpc_stage, (codes.ldpc_graph, codes.stage1_map, u, a, cfg),
        rng, strict)
    c1 = -res1.symbols
    e1 = res1.error
    res2, ok2 = _quantize_leniently(
        quantize_ldgm_stage, (codes.ldgm_graph, codes.stage2_map, e1, a,
                              stage2_cfg), rng, strict)
    trace = EncodeTrace(dither=dither, scaled=u, c1=c1, e1=e1,
                        c2=res2.symbols, e2=res2.error,
                        index_bits=res2.info_bits,
                        stage1_converged=ok1, stage2_converged=ok2,
                        stage1_restarts=res1.restarts,
                        stage2_restarts=res2.restarts)
    return res2.info_bits, trace


def _quantize_leniently(stage, args, rng, strict):
    try:
        return stage(*args, rng), True
    except QuantizerDivergenceError as exc:
        if strict:
            raise
        return exc.result, False


def decode(index_bits, y_a, dither, params: WzParams, codes: CodeSet,
           max_iters=200, noise_var=None, wrap_limit=3):
    """Reconstruct one block; returns (x_hat, DecodeTrace, converged).

    The channel decoder assumes the design-flow equivalent noise
    (stage-2 budget at A_p plus alpha^2 P_V) unless noise_var overrides it.
    A non-convergent decode still emits the best-effort reconstruction.
    """
    y_a = np.asarray(y_a, dtype=np.float64)
    dither = np.asarray(dither, dtype=np.float64)
    a = params.a_p
    c2 = codes.stage2_map.bits_to_levels(
        codes.ldgm_graph.generate_bits(index_bits))
    w = mod_reduce(c2 - params.alpha * y_a - dither, a)
    if noise_var is None:
        noise_var = params.equivalent_noise_var
    # the shaping codeword enters w negated, so decode bits against -w
    obs = ChannelObservation(mod_reduce(-w, a), a, float(noise_var))
    llr = wrapped_gaussian_llr(obs, codes.stage1_map, wrap_limit=wrap_limit)
    res = bp_decode(codes.ldpc_graph, llr, max_iters=max_iters)
    c1_hat = -codes.stage1_map.bits_to_levels(res.bits)
    v_hat = mod_reduce(w - c1_hat, a)
    x_hat = y_a + v_hat
    return x_hat, DecodeTrace(w=w, c1_hat=c1_hat, v_hat=v_hat, x_hat=x_hat), \
        res.converged


@dataclass(frozen=True)
class BlockResult:
    block: int
    mse: float
    encoder_converged: bool
    decoder_converged: bool
    stage1_restarts: int
    stage2_restarts: int
    symbol_errors: int

    CSV_HEADER = "block,mse,encoder_converged,decoder_converged," \
        "stage1_restarts,stage2_restarts,symbol_errors"

    def csv_row(self) -> str:
        return (f"{self.block},{self.mse:.12g},{int(self.encoder_converged)},"
                f"{int(self.decoder_converged)},{self.stage1_restarts},"
                f"{self.stage2_restarts},{self.symbol_errors}")


@dataclass(frozen=True)
class RateDistortionReport:
    """Aggregate Monte Carlo outcome; per-block rows keep the full detail."""

    n: int
    blocks: int
    side_info: str
    payload_bits_per_sample: float
    mse: float
    loss_db: float
    decoder_convergence_rate: float
    encoder_divergence_rate: float
    symbol_error_rate: float
    per_block: tuple
    wall_clock_s: float

    def to_dict(self) -> dict:
        # wall clock stays out: serialized outputs are byte-deterministic
        out = {k: getattr(self, k) for k in self.__dataclass_fields__
               if k not in ("per_block", "wall_clock_s")}
        return out

    def csv_lines(self):
        yield BlockResult.CSV_HEADER
        for row in self.per_block:
            yield row.csv_row()


def evaluate(blocks, params: WzParams, codes: CodeSet, dist: SideInfoDist,
             seed, *, cfg: RbpConfig = None, stage2_cfg: RbpConfig = None,
             decode_iters=200, noise_var=None, wrap_limit=3,
             threads=1) -> RateDistortionReport:
    """Monte Carlo over independent blocks.

    Block b draws everything from SeedSequence((seed, b)), so results are
    reproducible and independent of the thread count; per-block rows are
    ordered by index regardless of completion order.
    """
    import time

    blocks = int(blocks)
    if blocks < 1:
        raise ValueError("need at least one block")
    n = codes.n
    cfg = cfg or default_stage1_cfg(params)
    stage2_cfg = stage2_cfg or default_stage2_cfg(params)

    def one_block(b):
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), b)))
        y_a = dist.sample(n, rng)
        v = rng.normal(0.0, math.sqrt(params.p_v), n)
        x = y_a + v
        dither = sample_dither(n, params.a_p, rng)
        index_bits, tr = encode(x, params, codes, dither, cfg, stage2_cfg,
                                rng, strict=False)
        x_hat, dtr, conv = decode(index_bits, y_a, dither, params, codes,
                                  max_iters=decode_iters, noise_var=noise_var,
                                  wrap_limit=wrap_limit)
        err = x_hat - x
        sym_errors = int(np.count_nonzero(
            np.abs(dtr.c1_hat - tr.c1) > 1e-9))
        return BlockResult(
            block=b, mse=float(np.dot(err, err) / n),
            encoder_converged=tr.stage1_converged and tr.stage2_converged,
            decoder_converged=bool(conv),
            stage1_restarts=tr.stage1_restarts,
            stage2_restarts=tr.stage2_restarts,
            symbol_errors=sym_errors)

    t0 = time.perf_counter()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            results = list(pool.map(one_block, range(blocks)))
    else:
        results = [one_block(b) for b in range(blocks)]
    wall = time.perf_counter() - t0

    mse = float(np.mean([r.mse for r in results]))
    return RateDistortionReport(
        n=n, blocks=blocks, side_info=dist.to_string(),
        payload_bits_per_sample=codes.payload_bits / n,
        mse=mse, loss_db=10.0 * math.log10(mse / params.d),
        decoder_convergence_rate=float(
            np.mean([r.decoder_converged for r in results])),
        encoder_divergence_rate=float(
            np.mean([not r.encoder_converged for r in results])),
        symbol_error_rate=float(
            sum(r.symbol_errors for r in results) / (blocks * n)),
        per_block=tuple(results), wall_clock_s=wall)


def _payload_len(n, r2) -> int:
    return int(round(n * float(r2)))


def _rate_fraction(r2) -> Fraction:
    fr = Fraction(str(float(r2)))
    if fr.numerator >= 2 ** 32 or fr.denominator >= 2 ** 32:
        raise ValueError(f"rate {r2} does not fit the payload header")
    return fr


def pack_payload(index_bits, n, r2, seed=0) -> bytes:
    """Serialize index bits: 16-byte header (n, rate numerator, rate
    denominator, seed; little-endian uint32 each) then bits packed
    little-endian into bytes."""
    bits = np.asarray(index_bits)
    expected = _payload_len(n, r2)
    if bits.size != expected:
        raise ValueError(
            f"payload for n={n} at rate {r2} is {expected} bits, "
            f"got {bits.size}")
    fr = _rate_fraction(r2)
    header = np.array([int(n), fr.numerator, fr.denominator, int(seed)],
                      dtype="<u4").tobytes()
    body = np.packbits(bits.astype(np.uint8), bitorder="little").tobytes()
    return header + body


def unpack_payload(buf: bytes):
    """Inverse of pack_payload; returns (index_bits, n, r2, seed)."""
    if len(buf) < PAYLOAD_HEADER_BYTES:
        raise ValueError(f"payload shorter than the {PAYLOAD_HEADER_BYTES}-byte"
                         f" header: {len(buf)} bytes")
    n, num, den, seed = np.frombuffer(buf[:PAYLOAD_HEADER_BYTES], dtype="<u4")
    if den == 0:
        raise ValueError("zero rate denominator in payload header")
    r2 = num / den
    expected = _payload_len(int(n), r2)
    body = buf[PAYLOAD_HEADER_BYTES:]
    if len(body) != (expected + 7) // 8:
        raise ValueError(
            f"payload body is {len(body)} bytes, expected "
            f"{(expected + 7) // 8} for {expected} bits")
    bits = np.unpackbits(np.frombuffer(body, dtype=np.uint8),
                         count=expected, bitorder="little")
    return bits.astype(np.int64), int(n), float(r2), int(seed)
