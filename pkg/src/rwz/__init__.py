"""Residual Wyner-Ziv coder for quadratic-Gaussian sources with arbitrary
side information: dithered modulo-lattice two-stage quantization, belief-
propagation channel decoding, and the five-step design-flow calculator."""

from .bp import (BpResult, ChannelObservation, ThresholdBracketError,
                 bp_decode, check_node_update, find_noise_threshold,
                 wrapped_gaussian_llr, wrapped_symbol_logliks)
from .codec import (BlockResult, CodeSet, DecodeTrace, EncodeTrace,
                    RateDistortionReport, WzParams, decode, encode, evaluate,
                    pack_payload, unpack_payload)
from .config import ConfigError, SimConfig, parse_config, serialize_config
from .constellation import ConstellationMap, pam2, pam4
from .design import (DesignReport, DesignSettings, InfeasibleDesignError,
                     SnrDiagnostics, alpha_factor, entropy_gap_epsilon1,
                     find_A_eps, modulo_for_rate, practical_modulo_bound,
                     rate_R1, run_design_flow, snr_diagnostics,
                     target_distortion)
from .graphs import (AlistParseError, DegreeProfile, GraphConstructionError,
                     TannerGraph, build_graph, default_ldgm_profile,
                     default_ldpc_profile, load_graph, save_graph)
from .modlattice import mod_distance, mod_reduce, sample_dither
from .rbp import (QuantizeResult, QuantizerDivergenceError, RbpConfig,
                  apriori_llr, quantize_ldgm_stage, quantize_ldpc_stage,
                  rbp_run)
from .source import SideInfoDist, SourceBlock, mse, sample_source, \
    wyner_ziv_rate

__version__ = "0.1.0"

__all__ = [
    "BpResult", "ChannelObservation", "ThresholdBracketError", "bp_decode",
    "check_node_update", "find_noise_threshold", "wrapped_gaussian_llr",
    "wrapped_symbol_logliks",
    "BlockResult", "CodeSet", "DecodeTrace", "EncodeTrace",
    "RateDistortionReport", "WzParams", "decode", "encode", "evaluate",
    "pack_payload", "unpack_payload",
    "ConfigError", "SimConfig", "parse_config", "serialize_config",
    "ConstellationMap", "pam2", "pam4",
    "DesignReport", "DesignSettings", "InfeasibleDesignError",
    "SnrDiagnostics", "alpha_factor", "entropy_gap_epsilon1", "find_A_eps",
    "modulo_for_rate", "practical_modulo_bound", "rate_R1", "run_design_flow",
    "snr_diagnostics", "target_distortion",
    "AlistParseError", "DegreeProfile", "GraphConstructionError",
    "TannerGraph", "build_graph", "default_ldgm_profile",
    "default_ldpc_profile", "load_graph", "save_graph",
    "mod_distance", "mod_reduce", "sample_dither",
    "QuantizeResult", "QuantizerDivergenceError", "RbpConfig", "apriori_llr",
    "quantize_ldgm_stage", "quantize_ldpc_stage", "rbp_run",
    "SideInfoDist", "SourceBlock", "mse", "sample_source", "wyner_ziv_rate",
    "__version__",
]
