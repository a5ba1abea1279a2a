"""Command-line front end.

Subcommands: design (five-step parameter flow), run (Monte Carlo rate-
distortion), bench (component timing sweeps), quantize-bench (two-stage
shaping distortion), channel-bench (decoder noise threshold).  File outputs
are byte-deterministic for a fixed config and seed; wall-clock figures go to
stderr only.

Exit codes: 0 success, 2 configuration error, 3 infeasible design,
4 divergence-dominated run.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import codec
from .bp import (ChannelObservation, bp_decode, find_noise_threshold,
                 wrapped_gaussian_llr)
from .config import ConfigError, parse_config, serialize_config
from .design import InfeasibleDesignError, modulo_for_rate, run_design_flow
from .graphs import build_graph, default_ldpc_profile
from .modlattice import mod_reduce, sample_dither
from .rbp import QuantizerDivergenceError, RbpConfig, quantize_ldpc_stage
from .source import SideInfoDist

__all__ = ["main"]

_DIVERGENCE_EXIT_FRACTION = 0.10


def _load(args):
    cfg = parse_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.out is not None:
        overrides["out_dir"] = args.out
    return cfg.override(**overrides) if overrides else cfg


def _outdir(cfg):
    os.makedirs(cfg.out_dir, exist_ok=True)
    return cfg.out_dir


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def cmd_design(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg)
    # the design modulo is pinned by the stage-1 code rate unless stated
    profile = cfg.ldpc_profile()
    p_v = cfg.p_v_variance
    r2 = cfg.rate_r2_bits_per_sample
    from .design import alpha_factor, target_distortion
    alpha = alpha_factor(p_v, target_distortion(p_v, r2))
    a0 = cfg.a_eps_modulo or modulo_for_rate(profile.ldpc_rate, alpha, p_v)
    params0 = codec.WzParams.from_rate(p_v, r2, a_eps=a0, a_p=a0,
                                       epsilon=cfg.epsilon_entropy_gap_bits)
    codes = cfg.build_codes(params0)
    report = run_design_flow(p_v, r2, cfg.epsilon_entropy_gap_bits, codes,
                             cfg.design_settings(params0), seed=cfg.seed)
    _write(os.path.join(out, "design.json"), report.to_json())
    _write(os.path.join(out, "design.txt"), report.format_table())
    sys.stdout.write(report.format_table())
    return 0


def cmd_run(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg)
    params = cfg.params()
    codes = cfg.build_codes(params)
    t0 = time.perf_counter()
    report = codec.evaluate(
        cfg.blocks, params, codes, cfg.side_info_dist(), cfg.seed,
        cfg=cfg.stage1_cfg(params), stage2_cfg=cfg.stage2_cfg(params),
        decode_iters=cfg.decode_max_iters,
        noise_var=cfg.decode_noise_variance, wrap_limit=cfg.wrap_limit,
        threads=cfg.threads)
    elapsed = time.perf_counter() - t0
    _write(os.path.join(out, "run_blocks.csv"),
           "\n".join(report.csv_lines()) + "\n")
    payload = {"config": _config_echo(cfg), "report": report.to_dict()}
    _write(os.path.join(out, "run_summary.json"),
           json.dumps(payload, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(
        f"blocks={report.blocks} n={report.n} mse={report.mse:.6g} "
        f"loss_db={report.loss_db:.4f} "
        f"decoder_convergence={report.decoder_convergence_rate:.3f}\n")
    sys.stderr.write(f"wall clock: {elapsed:.1f} s\n")
    flagged = sum(1 for r in report.per_block
                  if not (r.encoder_converged and r.decoder_converged))
    if flagged > _DIVERGENCE_EXIT_FRACTION * report.blocks:
        sys.stderr.write(
            f"{flagged}/{report.blocks} blocks flagged; run is "
            f"divergence-dominated\n")
        return 4
    return 0


def _config_echo(cfg) -> dict:
    return {line.split(" = ")[0]: line.split(" = ", 1)[1]
            for line in serialize_config(cfg).strip().splitlines()}


def _bench_sizes(text):
    if text is None or text.strip() == "":
        return []
    return [int(piece) for piece in text.split(",") if piece.strip()]


def _time_op(op, reps) -> float:
    best = math.inf
    for _ in range(reps):
        t0 = time.perf_counter()
        op()
        best = min(best, time.perf_counter() - t0)
    return best


def cmd_bench(args) -> int:
    sizes = _bench_sizes(args.sizes)
    reps = args.reps
    rows = ["component,n,reps,seconds_per_iteration"]
    iters = 30
    for n in sizes:
        rng = np.random.default_rng(args.seed or 0)
        if args.component == "mod":
            x = rng.normal(0.0, 3.0, n)
            sec = _time_op(lambda: mod_reduce(x, 3.0), reps)
            rows.append(f"mod,{n},{reps},{sec:.6g}")
            continue
        from .constellation import pam2
        cmap = pam2(3.0)
        if args.component == "llr":
            w = rng.uniform(-1.5, 1.5, n)
            obs = ChannelObservation(w, 3.0, 0.2)
            sec = _time_op(lambda: wrapped_gaussian_llr(obs, cmap), reps)
            rows.append(f"llr,{n},{reps},{sec:.6g}")
            continue
        graph = build_graph(n, default_ldpc_profile(), "parity-check", seed=7)
        if args.component == "bp":
            # heavy noise keeps the decoder busy for all iterations
            w = mod_reduce(rng.normal(0.0, 1.0, n), 3.0)
            llr = wrapped_gaussian_llr(ChannelObservation(w, 3.0, 0.9), cmap)
            sec = _time_op(lambda: bp_decode(graph, llr, max_iters=iters),
                           reps) / iters
            rows.append(f"bp,{n},{reps},{sec:.6g}")
        else:  # rbp
            u = rng.uniform(-1.5, 1.5, n)
            bcfg = RbpConfig(prior_var=0.2053, gamma1=0.9995, max_iters=iters,
                             max_restarts=0)

            def one():
                try:
                    quantize_ldpc_stage(graph, cmap, u, 3.0, bcfg)
                except QuantizerDivergenceError:
                    pass  # expected at this iteration budget; timing only

            sec = _time_op(one, reps) / iters
            rows.append(f"rbp,{n},{reps},{sec:.6g}")
    text = "\n".join(rows) + "\n"
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write(os.path.join(args.out, f"bench_{args.component}.csv"), text)
    sys.stdout.write(text)
    return 0


def cmd_quantize_bench(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg)
    params = cfg.params()
    codes = cfg.build_codes(params)
    cfg1 = cfg.stage1_cfg(params)
    cfg2 = cfg.stage2_cfg(params)
    budget1 = params.alpha * params.p_v * params.rho2
    budget2 = params.alpha * params.d * params.rho2
    blocks = args.blocks if args.blocks is not None else cfg.blocks
    rows = ["stage,n,iterations,restarts,distortion,budget"]
    d1s, d2s = [], []
    for b in range(blocks):
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, b)))
        u = rng.uniform(-params.a_p / 2.0, params.a_p / 2.0, codes.n)
        try:
            r1 = quantize_ldpc_stage(codes.ldpc_graph, codes.stage1_map, u,
                                     params.a_p, cfg1, rng)
        except QuantizerDivergenceError as exc:
            r1 = exc.result
        rows.append(f"ldpc,{codes.n},{r1.iterations},{r1.restarts},"
                    f"{r1.distortion:.12g},{budget1:.12g}")
        d1s.append(r1.distortion)
        try:
            r2 = codec.run_stage2(codes, r1.error, params.a_p, cfg2, rng)
        except QuantizerDivergenceError as exc:
            r2 = exc.result
        rows.append(f"ldgm,{codes.n},{r2.iterations},{r2.restarts},"
                    f"{r2.distortion:.12g},{budget2:.12g}")
        d2s.append(r2.distortion)
    _write(os.path.join(out, "quantize_bench.csv"), "\n".join(rows) + "\n")
    loss1 = 10.0 * math.log10(np.mean(d1s) / budget1)
    sys.stdout.write(
        f"stage1 mean distortion {np.mean(d1s):.6g} (budget {budget1:.6g}, "
        f"shaping loss {loss1:.3f} dB); "
        f"stage2 mean distortion {np.mean(d2s):.6g} (budget {budget2:.6g})\n")
    return 0


def cmd_channel_bench(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg)
    params = cfg.params()
    codes = cfg.build_codes(params)
    csv_path = os.path.join(out, "channel_probes.csv")
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0xC4)))
    threshold = find_noise_threshold(
        codes.ldpc_graph, codes.stage1_map, cfg.ber_target, rng,
        blocks_per_probe=cfg.threshold_blocks, var_tol=cfg.threshold_var_tol,
        max_iters=cfg.decode_max_iters, wrap_limit=cfg.wrap_limit,
        csv_path=csv_path)
    summary = {"threshold_variance": threshold, "ber_target": cfg.ber_target,
               "n": codes.n, "modulo": codes.modulo,
               "blocks_per_probe": cfg.threshold_blocks}
    _write(os.path.join(out, "channel_threshold.json"),
           json.dumps(summary, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(f"noise threshold variance {threshold:.6g} at target "
                     f"ber {cfg.ber_target:g}\n")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="rwz",
        description="Residual Wyner-Ziv coder: design flow and simulator")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True,
                           help="path to a key = value config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--threads", type=int, default=None,
                       help="override the config thread count")
        p.add_argument("--out", default=None,
                       help="override the config output directory")

    p = sub.add_parser("design", help="run the five-step design flow")
    common(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("run", help="Monte Carlo rate-distortion run")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="component timing sweep")
    p.add_argument("--component", choices=("llr", "bp", "rbp", "mod"),
                   required=True)
    p.add_argument("--sizes", default="",
                   help="comma-separated block lengths (empty for none)")
    p.add_argument("--reps", type=int, default=5)
    common(p, needs_config=False)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("quantize-bench",
                       help="two-stage quantizer distortion vs budget")
    common(p)
    p.add_argument("--blocks", type=int, default=None)
    p.set_defaults(func=cmd_quantize_bench)

    p = sub.add_parser("channel-bench",
                       help="decoder noise-threshold measurement")
    common(p)
    p.set_defaults(func=cmd_channel_bench)
    return top


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except InfeasibleDesignError as exc:
        sys.stderr.write(f"infeasible design: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
