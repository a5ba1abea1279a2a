"""Five-step parameter selection for the residual coder.

Step 1 fixes the target distortion and scaling factor from the rate, step 2
sizes the modulo interval through the wrapped-entropy gap, step 3 sets the
stage-1 code rate, step 4 measures the decoder noise threshold and the
stage-2 distortion, and step 5 enlarges the modulo until an end-to-end probe
decodes cleanly.  Everything except the two measurement hooks is plain
arithmetic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .bp import find_noise_threshold
from .rbp import RbpConfig, QuantizerDivergenceError, quantize_ldpc_stage

__all__ = [
    "InfeasibleDesignError",
    "DesignReport",
    "DesignSettings",
    "target_distortion",
    "alpha_factor",
    "entropy_gap_epsilon1",
    "find_A_eps",
    "rate_R1",
    "modulo_for_rate",
    "practical_modulo_bound",
    "snr_diagnostics",
    "SnrDiagnostics",
    "run_design_flow",
]

TWO_PI_E = 2.0 * math.pi * math.e

# wrapped-density integration: grid resolution and wrap depth chosen so the
# no-wrap limit (A >= 20 sigma) evaluates below 1e-9
_GAP_GRID = 2 ** 14
_GAP_WRAPS = 10


class InfeasibleDesignError(ValueError):
    """The requested operating point cannot be reached by modulo scaling."""


def target_distortion(p_v, r2) -> float:
    """Ideal squared-error distortion at r2 bits/sample: P_V * 2^(-2 R2)."""
    p_v = float(p_v)
    r2 = float(r2)
    if p_v <= 0:
        raise ValueError(f"residual variance must be positive, got {p_v}")
    if r2 <= 0 and r2 != 0.0:
        raise ValueError(f"rate must be nonnegative, got {r2}")
    return p_v * 2.0 ** (-2.0 * r2)


def alpha_factor(p_v, d) -> float:
    """Estimation-theoretic scaling 1 - D/P_V."""
    p_v = float(p_v)
    d = float(d)
    if not 0 < d <= p_v:
        raise ValueError(f"need 0 < D <= P_V, got D={d}, P_V={p_v}")
    return 1.0 - d / p_v


def entropy_gap_epsilon1(a, noise_var) -> float:
    """Differential-entropy loss (bits) from folding N(0, noise_var) into
    [-A/2, A/2).

    The folded density is summed over wrap offsets |b| <= 10 and integrated
    with the trapezoid rule on a 2^14-point grid; the unfolded entropy has
    the closed form (1/2) log2(2 pi e var).
    """
    a = float(a)
    noise_var = float(noise_var)
    if a <= 0:
        raise ValueError(f"modulo size must be positive, got {a}")
    if noise_var <= 0:
        raise ValueError(f"variance must be positive, got {noise_var}")
    x = np.linspace(-a / 2.0, a / 2.0, _GAP_GRID)
    offsets = a * np.arange(-_GAP_WRAPS, _GAP_WRAPS + 1)
    z = x[:, None] + offsets[None, :]
    dens = np.exp(-0.5 * z * z / noise_var).sum(axis=1)
    dens /= math.sqrt(2.0 * math.pi * noise_var)
    h_folded = -np.trapezoid(dens * np.log2(dens, where=dens > 0,
                                            out=np.zeros_like(dens)), x)
    h_open = 0.5 * math.log2(TWO_PI_E * noise_var)
    return h_open - h_folded


def find_A_eps(epsilon, noise_var, a_max=50.0, step=0.01) -> float:
    """Smallest modulo size on a 0.01 grid whose entropy gap is below epsilon.

    The gap decreases in A, so the first grid point that clears the
    threshold is the answer.
    """
    epsilon = float(epsilon)
    if epsilon <= 0:
        raise ValueError(f"threshold must be positive, got {epsilon}")
    k = 1
    while k * step <= a_max:
        a = k * step
        if entropy_gap_epsilon1(a, noise_var) < epsilon:
            return round(a, 10)
        k += 1
    raise InfeasibleDesignError(
        f"no modulo size up to {a_max} brings the entropy gap below {epsilon}")


def rate_R1(a_eps, alpha, p_v) -> float:
    """Stage-1 code rate log2(A) - (1/2) log2(2 pi e alpha P_V), floored at 0."""
    a_eps = float(a_eps)
    alpha = float(alpha)
    p_v = float(p_v)
    if min(a_eps, alpha, p_v) <= 0:
        raise ValueError("arguments must be positive")
    return max(0.0, math.log2(a_eps) - 0.5 * math.log2(TWO_PI_E * alpha * p_v))


def modulo_for_rate(r1, alpha, p_v) -> float:
    """Inverse of rate_R1 on its increasing branch: the modulo size whose
    stage-1 rate equals r1.  Used to pin A to the rate of a shipped code."""
    r1 = float(r1)
    if r1 < 0:
        raise ValueError(f"rate must be nonnegative, got {r1}")
    return 2.0 ** (r1 + 0.5 * math.log2(TWO_PI_E * float(alpha) * float(p_v)))


def practical_modulo_bound(a_eps, alpha, p_v, sigma2_n_eps, d2_eps) -> float:
    """Smallest practical modulo size closing the beyond-capacity gap:
    sqrt(A_eps^2 alpha^2 P_V / (sigma2_n_eps - D2_eps))."""
    a_eps = float(a_eps)
    alpha = float(alpha)
    p_v = float(p_v)
    sigma2_n_eps = float(sigma2_n_eps)
    d2_eps = float(d2_eps)
    if sigma2_n_eps <= d2_eps:
        raise InfeasibleDesignError(
            "decoder threshold must exceed the stage-2 distortion for modulo "
            f"scaling to close the gap; got sigma2_n_eps={sigma2_n_eps} "
            f"<= D2_eps={d2_eps}")
    return math.sqrt(a_eps * a_eps * alpha * alpha * p_v
                     / (sigma2_n_eps - d2_eps))


@dataclass(frozen=True)
class SnrDiagnostics:
    snr_eps: float
    snr_p: float
    d2_p: float
    sigma2_n_p: float


def snr_diagnostics(a_eps, a_p, k, alpha, p_v, d2_eps,
                    sigma2_n_eps=None) -> SnrDiagnostics:
    """Operating-point diagnostics at both modulo sizes.

    snr at scale A is (A^2/k)/(equivalent noise); distortion and threshold
    scale with (A_p/A_eps)^2.  sigma2_n_p needs the measured threshold; when
    it is not supplied the design-assumption value d2_p + alpha^2 P_V is
    reported instead.
    """
    a_eps = float(a_eps)
    a_p = float(a_p)
    if a_p < a_eps:
        raise ValueError(f"practical modulo {a_p} below design modulo {a_eps}")
    k = float(k)
    alpha = float(alpha)
    p_v = float(p_v)
    d2_eps = float(d2_eps)
    rho2 = (a_p / a_eps) ** 2
    a2pv = alpha * alpha * p_v
    d2_p = rho2 * d2_eps
    snr_eps = (a_eps * a_eps / k) / (d2_eps + a2pv)
    snr_p = (a_p * a_p / k) / (d2_p + a2pv)
    if sigma2_n_eps is None:
        sigma2_n_p = d2_p + a2pv
    else:
        sigma2_n_p = rho2 * float(sigma2_n_eps)
    return SnrDiagnostics(snr_eps=snr_eps, snr_p=snr_p, d2_p=d2_p,
                          sigma2_n_p=sigma2_n_p)


@dataclass(frozen=True)
class DesignSettings:
    """Knobs for the measurement hooks and the step-5 search.

    stage1_cfg/stage2_cfg priors are read at the design modulo scale; the
    step-5 probes rescale them to each candidate practical modulo."""

    ber_target: float = 1e-4
    probe_blocks: int = 20
    pre_probe_blocks: int = 2
    measure_blocks: int = 8
    threshold_blocks: int = 20
    threshold_var_tol: float = 1e-3
    decode_iters: int = 200
    wrap_limit: int = 3
    grid_step: float = 0.01
    ap_cap_factor: float = 3.0
    stage1_cfg: RbpConfig | None = None
    stage2_cfg: RbpConfig | None = None
    sigma2_override: float | None = None
    d2_override: float | None = None
    threads: int = 1


@dataclass(frozen=True)
class DesignReport:
    """Outcome of the five design steps plus the step-5 probe measurements."""

    D: float
    alpha: float
    A_eps: float
    epsilon1: float
    R1: float
    sigma2_n_eps: float
    D2_eps: float
    A_p_bound: float
    A_p: float
    D2_p: float
    sigma2_n_p: float
    SNR_eps: float
    SNR_p: float
    final_mse: float | None = None
    final_ber: float | None = None
    probe_blocks: int = 0

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def format_table(self) -> str:
        lines = [
            "step 1  target distortion      D         = %.6f" % self.D,
            "        scaling factor         alpha     = %.6f" % self.alpha,
            "step 2  design modulo size     A_eps     = %.4f" % self.A_eps,
            "        entropy gap            epsilon1  = %.6f bits" % self.epsilon1,
            "step 3  stage-1 code rate      R1        = %.6f bits/symbol" % self.R1,
            "step 4  decoder threshold      sigma2    = %.6f" % self.sigma2_n_eps,
            "        stage-2 distortion     D2_eps    = %.6f" % self.D2_eps,
            "step 5  modulo lower bound     A_p_bound = %.6f" % self.A_p_bound,
            "        practical modulo size  A_p       = %.4f" % self.A_p,
            "        predicted distortion   D2_p      = %.6f" % self.D2_p,
            "        predicted noise        sigma2_p  = %.6f" % self.sigma2_n_p,
            "        SNR at A_eps / A_p               = %.4f / %.4f"
            % (self.SNR_eps, self.SNR_p),
        ]
        if self.final_mse is not None:
            lines.append(
                "        probe MSE over %-3d blocks        = %.6f"
                % (self.probe_blocks, self.final_mse))
        if self.final_ber is not None:
            lines.append(
                "        probe symbol error rate          = %.3g" % self.final_ber)
        return "\n".join(lines) + "\n"


def _measure_d2_eps(codes, params, settings: DesignSettings, seed) -> float:
    """Stage-2 distortion over uniform modulo-folded inputs at the design
    scale; the dithered front end makes the quantizer input uniform, so
    sampling it directly is exact."""
    from . import codec  # measurement probes ride on the codec; late import

    a = codes.stage1_map.mod_size
    total = 0.0
    for b in range(settings.measure_blocks):
        rng = np.random.default_rng(np.random.SeedSequence((seed, 0x0D2, b)))
        u = rng.uniform(-a / 2.0, a / 2.0, codes.n)
        cfg1 = settings.stage1_cfg or codec.default_stage1_cfg(params)
        cfg2 = settings.stage2_cfg or codec.default_stage2_cfg(params)
        r1 = quantize_ldpc_stage(codes.ldpc_graph, codes.stage1_map, u, a,
                                 cfg1, rng)
        try:
            r2 = codec.run_stage2(codes, r1.error, a, cfg2, rng)
        except QuantizerDivergenceError as exc:
            # an unsettled run still leaves a valid codeword; measure it
            r2 = exc.result
        total += r2.distortion
    return total / settings.measure_blocks


def _scaled_cfg(cfg: RbpConfig | None, rho2: float) -> RbpConfig | None:
    """Settings priors are stated at the design scale; probes rescale them."""
    if cfg is None:
        return None
    return replace(cfg, prior_var=cfg.prior_var * rho2)


def _probe_operating_point(a_p, params, codes, settings: DesignSettings,
                           seed, blocks, noise_var=None) -> tuple:
    """(symbol error rate, decode convergence rate, MSE) of an end-to-end
    Monte Carlo run at modulo size a_p.  The side-information law does not
    matter here (dither uniformizes the quantizer input), so the probe uses
    a unit Gaussian.  noise_var lets the caller decode against the measured
    operating noise instead of the idealized equivalent noise."""
    from . import codec
    from .source import SideInfoDist

    p = replace(params, a_p=float(a_p))
    scaled = codes.rescaled(p)
    dist = SideInfoDist.gaussian(0.0, 1.0)
    rep = codec.evaluate(blocks, p, scaled, dist, seed,
                         cfg=_scaled_cfg(settings.stage1_cfg, p.rho2),
                         stage2_cfg=_scaled_cfg(settings.stage2_cfg, p.rho2),
                         decode_iters=settings.decode_iters,
                         noise_var=noise_var,
                         wrap_limit=settings.wrap_limit,
                         threads=settings.threads)
    return rep.symbol_error_rate, rep.decoder_convergence_rate, rep.mse


def run_design_flow(p_v, r2, epsilon, codes, settings: DesignSettings | None = None,
                    seed=0) -> DesignReport:
    """Execute the five design steps against a concrete code set.

    The design modulo size is pinned to the supplied stage-1 code through
    the rate equality (the flow then verifies the entropy gap really is
    below epsilon there); the search in step 5 walks up from the practical
    lower bound in grid_step increments, accepting the first size whose
    probe decodes with symbol error rate below ber_target.
    """
    from . import codec

    settings = settings or DesignSettings()
    p_v = float(p_v)
    r2 = float(r2)
    epsilon = float(epsilon)

    # step 1: rate -> distortion target and scaling factor
    d = target_distortion(p_v, r2)
    alpha = alpha_factor(p_v, d)
    a2pv = alpha * alpha * p_v

    # step 2: modulo size from the shipped code's rate; feasibility check
    a_eps = modulo_for_rate(codes.ldpc_graph.rate, alpha, p_v)
    eps1 = entropy_gap_epsilon1(a_eps, a2pv + alpha * d)
    if eps1 >= epsilon:
        raise InfeasibleDesignError(
            f"entropy gap {eps1:.6f} at A_eps={a_eps:.4f} (pinned by the "
            f"stage-1 code rate) is not below epsilon={epsilon}")

    # step 3
    r1 = rate_R1(a_eps, alpha, p_v)

    # step 4: measurement hooks (overridable with recorded values)
    base = codec.WzParams.from_rate(p_v, r2, a_eps=a_eps, a_p=a_eps,
                                    epsilon=epsilon)
    eps_codes = codes if abs(codes.stage1_map.mod_size - a_eps) < 1e-9 \
        else codes.rescaled(base)
    if settings.sigma2_override is not None:
        sigma2 = float(settings.sigma2_override)
    else:
        sigma2 = find_noise_threshold(
            eps_codes.ldpc_graph, eps_codes.stage1_map, settings.ber_target,
            np.random.default_rng(np.random.SeedSequence((seed, 0x51))),
            blocks_per_probe=settings.threshold_blocks,
            var_tol=settings.threshold_var_tol,
            max_iters=settings.decode_iters,
            wrap_limit=settings.wrap_limit)
    if settings.d2_override is not None:
        d2_eps = float(settings.d2_override)
    else:
        d2_eps = _measure_d2_eps(eps_codes, base, settings, seed)

    # step 5: walk the modulo size up from the bound until the probe decodes
    bound = practical_modulo_bound(a_eps, alpha, p_v, sigma2, d2_eps)
    step = settings.grid_step
    a_p = math.ceil(bound / step - 1e-9) * step
    cap = settings.ap_cap_factor * a_eps
    final_mse = None
    final_ber = None
    if settings.probe_blocks > 0:
        while True:
            if a_p > cap:
                raise InfeasibleDesignError(
                    f"no modulo size up to {cap:.4f} decodes with symbol "
                    f"error rate below {settings.ber_target}")
            # decode the probe against the noise the measurements predict at
            # this size, not the idealized equivalent noise
            nv = (a_p / a_eps) ** 2 * d2_eps + a2pv
            if settings.pre_probe_blocks > 0:
                ber, conv, _ = _probe_operating_point(
                    a_p, base, codes, settings, seed,
                    settings.pre_probe_blocks, noise_var=nv)
                if ber >= settings.ber_target or conv < 1.0:
                    a_p = round(a_p + step, 10)
                    continue
            ber, conv, mse = _probe_operating_point(
                a_p, base, codes, settings, seed, settings.probe_blocks,
                noise_var=nv)
            if ber < settings.ber_target and conv == 1.0:
                final_mse = mse
                final_ber = ber
                break
            a_p = round(a_p + step, 10)

    diag = snr_diagnostics(a_eps, a_p, codes.stage1_map.peak_power_constant,
                           alpha, p_v, d2_eps, sigma2)
    return DesignReport(
        D=d, alpha=alpha, A_eps=a_eps, epsilon1=eps1, R1=r1,
        sigma2_n_eps=sigma2, D2_eps=d2_eps, A_p_bound=bound, A_p=a_p,
        D2_p=diag.d2_p, sigma2_n_p=diag.sigma2_n_p, SNR_eps=diag.snr_eps,
        SNR_p=diag.snr_p, final_mse=final_mse, final_ber=final_ber,
        probe_blocks=settings.probe_blocks)
