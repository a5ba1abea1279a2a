"""Flat text configuration for the simulator.

One `key = value` pair per line, `#` comments, every key typed against a
fixed schema (unknown keys are errors).  Values that parameterize physical
quantities carry the unit in the key name.  Priors are stated at the design
modulo scale; the codec rescales them by (A_p/A_eps)^2.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace

from .codec import CodeSet, WzParams
from .design import DesignSettings
from .graphs import DegreeProfile, load_graph
from .rbp import RbpConfig
from .source import SideInfoDist

__all__ = ["ConfigError", "SimConfig", "parse_config", "serialize_config"]


class ConfigError(ValueError):
    """Config file problem, pointing at the offending line when known."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"line {line}: "
        elif path is not None:
            where += " "
        super().__init__(where + message)


# key -> (type tag, default); None default means optional
_SCHEMA = {
    "p_v_variance": ("float", 0.28),
    "rate_r2_bits_per_sample": ("float", 0.9531),
    "epsilon_entropy_gap_bits": ("float", 0.005),
    "side_info": ("str", "gaussian(0.0,1.0)"),
    "n_samples": ("int", 10000),
    "blocks": ("int", 50),
    "seed": ("int", 0),
    "threads": ("int", 1),
    "out_dir": ("str", "out"),
    "a_eps_modulo": ("float", None),
    "a_p_modulo": ("float", None),
    "r1_bits_per_symbol": ("float", None),
    "ldpc_var_profile": ("str", "2:0.3536,3:0.4474,9:0.1989"),
    "ldpc_chk_profile": ("str", "12:1.0"),
    "ldgm_chk_profile": ("str", "1:0.06,2:0.64,6:0.30"),
    "ldpc_graph_file": ("path", None),
    "ldgm_graph_file": ("path", None),
    "ldpc_graph_seed": ("int", 7),
    "ldgm_graph_seed": ("int", 8),
    "stage1_prior_variance": ("float", None),
    "stage1_gamma0": ("float", 1.0),
    "stage1_gamma1": ("float", 0.9995),
    "stage1_max_iters": ("int", 3000),
    "stage1_restart_increment": ("float", 5e-5),
    "stage1_max_restarts": ("int", 10),
    "stage2_prior_variance": ("float", None),
    "stage2_gamma0": ("float", 1.0),
    "stage2_gamma1": ("float", 0.9999),
    "stage2_max_iters": ("int", 4000),
    "stage2_restart_increment": ("float", 1e-5),
    "stage2_max_restarts": ("int", 10),
    "decode_max_iters": ("int", 200),
    "decode_noise_variance": ("float", None),
    "wrap_limit": ("int", 3),
    "ber_target": ("float", 1e-4),
    "probe_blocks": ("int", 20),
    "pre_probe_blocks": ("int", 2),
    "measure_blocks": ("int", 8),
    "threshold_blocks": ("int", 20),
    "threshold_var_tol": ("float", 1e-3),
    "sigma2_n_eps_variance": ("float", None),
    "d2_eps_variance": ("float", None),
}


@dataclass(frozen=True)
class SimConfig:
    p_v_variance: float
    rate_r2_bits_per_sample: float
    epsilon_entropy_gap_bits: float
    side_info: str
    n_samples: int
    blocks: int
    seed: int
    threads: int
    out_dir: str
    a_eps_modulo: float | None
    a_p_modulo: float | None
    r1_bits_per_symbol: float | None
    ldpc_var_profile: str
    ldpc_chk_profile: str
    ldgm_chk_profile: str
    ldpc_graph_file: str | None
    ldgm_graph_file: str | None
    ldpc_graph_seed: int
    ldgm_graph_seed: int
    stage1_prior_variance: float | None
    stage1_gamma0: float
    stage1_gamma1: float
    stage1_max_iters: int
    stage1_restart_increment: float
    stage1_max_restarts: int
    stage2_prior_variance: float | None
    stage2_gamma0: float
    stage2_gamma1: float
    stage2_max_iters: int
    stage2_restart_increment: float
    stage2_max_restarts: int
    decode_max_iters: int
    decode_noise_variance: float | None
    wrap_limit: int
    ber_target: float
    probe_blocks: int
    pre_probe_blocks: int
    measure_blocks: int
    threshold_blocks: int
    threshold_var_tol: float
    sigma2_n_eps_variance: float | None
    d2_eps_variance: float | None

    # -- derived objects ---------------------------------------------------

    def side_info_dist(self) -> SideInfoDist:
        return SideInfoDist.from_string(self.side_info)

    def ldpc_profile(self) -> DegreeProfile:
        return DegreeProfile.from_strings(self.ldpc_var_profile,
                                          self.ldpc_chk_profile)

    def ldgm_chk_entries(self) -> tuple:
        entries = DegreeProfile.from_strings(self.ldgm_chk_profile,
                                             self.ldgm_chk_profile)
        return entries.chk_entries

    def params(self) -> WzParams:
        if self.a_eps_modulo is None or self.a_p_modulo is None:
            raise ConfigError(
                "a_eps_modulo and a_p_modulo are required here; run the "
                "design step first or state them explicitly")
        return WzParams.from_rate(
            self.p_v_variance, self.rate_r2_bits_per_sample,
            a_eps=self.a_eps_modulo, a_p=self.a_p_modulo,
            r1=self.r1_bits_per_symbol, epsilon=self.epsilon_entropy_gap_bits)

    def build_codes(self, params: WzParams) -> CodeSet:
        ldpc = load_graph(self.ldpc_graph_file) if self.ldpc_graph_file else None
        ldgm = load_graph(self.ldgm_graph_file, kind="generator") \
            if self.ldgm_graph_file else None
        return CodeSet.build(
            params, self.n_samples,
            ldpc_profile=self.ldpc_profile(),
            ldgm_chk_entries=self.ldgm_chk_entries(),
            ldpc_seed=self.ldpc_graph_seed, ldgm_seed=self.ldgm_graph_seed,
            ldpc_graph=ldpc, ldgm_graph=ldgm)

    def stage1_cfg(self, params: WzParams) -> RbpConfig:
        prior = self.stage1_prior_variance
        if prior is None:
            prior = params.alpha * params.p_v
        return RbpConfig(prior_var=prior * params.rho2,
                         gamma0=self.stage1_gamma0,
                         gamma1=self.stage1_gamma1,
                         max_iters=self.stage1_max_iters,
                         restart_increment=self.stage1_restart_increment,
                         max_restarts=self.stage1_max_restarts,
                         wrap_limit=self.wrap_limit)

    def stage2_cfg(self, params: WzParams) -> RbpConfig:
        prior = self.stage2_prior_variance
        if prior is None:
            prior = params.alpha * params.d
        return RbpConfig(prior_var=prior * params.rho2,
                         gamma0=self.stage2_gamma0,
                         gamma1=self.stage2_gamma1,
                         max_iters=self.stage2_max_iters,
                         restart_increment=self.stage2_restart_increment,
                         max_restarts=self.stage2_max_restarts,
                         wrap_limit=self.wrap_limit)

    def design_settings(self, params: WzParams) -> DesignSettings:
        return DesignSettings(
            ber_target=self.ber_target,
            probe_blocks=self.probe_blocks,
            pre_probe_blocks=self.pre_probe_blocks,
            measure_blocks=self.measure_blocks,
            threshold_blocks=self.threshold_blocks,
            threshold_var_tol=self.threshold_var_tol,
            decode_iters=self.decode_max_iters,
            wrap_limit=self.wrap_limit,
            stage1_cfg=self.stage1_cfg(params),
            stage2_cfg=self.stage2_cfg(params),
            sigma2_override=self.sigma2_n_eps_variance,
            d2_override=self.d2_eps_variance,
            threads=self.threads)

    def override(self, **kwargs) -> "SimConfig":
        return replace(self, **kwargs)


def _convert(key, raw, kind, line, path):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"key {key} expects a {kind}, got {raw!r}",
                          line=line, path=path) from None


def parse_config(path_or_text, *, is_text=False) -> SimConfig:
    """Parse a config file (or literal text with is_text=True)."""
    if is_text:
        text = path_or_text
        path = None
        base = os.getcwd()
    else:
        path = os.fspath(path_or_text)
        if not os.path.exists(path):
            raise ConfigError("config file not found", path=path)
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        base = os.path.dirname(os.path.abspath(path))

    values = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {raw_line!r}",
                              line=lineno, path=path)
        key, raw = (piece.strip() for piece in line.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}", line=lineno, path=path)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", line=lineno, path=path)
        if not raw:
            raise ConfigError(f"empty value for key {key!r}", line=lineno,
                              path=path)
        kind, _ = _SCHEMA[key]
        value = _convert(key, raw, kind, lineno, path)
        if kind == "path":
            value = os.path.normpath(os.path.join(base, value))
            if not os.path.exists(value):
                raise ConfigError(f"file referenced by {key} does not exist: "
                                  f"{value}", line=lineno, path=path)
        values[key] = value

    merged = {key: values.get(key, default)
              for key, (kind, default) in _SCHEMA.items()}
    cfg = SimConfig(**merged)
    _validate(cfg, path)
    return cfg


def _validate(cfg: SimConfig, path):
    if cfg.n_samples < 1:
        raise ConfigError(f"n_samples must be positive, got {cfg.n_samples}",
                          path=path)
    if cfg.blocks < 1:
        raise ConfigError(f"blocks must be positive, got {cfg.blocks}",
                          path=path)
    if cfg.threads < 1:
        raise ConfigError(f"threads must be positive, got {cfg.threads}",
                          path=path)
    try:
        SideInfoDist.from_string(cfg.side_info)
    except ValueError as exc:
        raise ConfigError(f"bad side_info: {exc}", path=path) from None
    try:
        cfg.ldpc_profile()
        cfg.ldgm_chk_entries()
    except ValueError as exc:
        raise ConfigError(f"bad degree profile: {exc}", path=path) from None


def serialize_config(cfg: SimConfig) -> str:
    """Canonical text form; parse(serialize(cfg)) reproduces cfg exactly."""
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        if isinstance(value, float):
            lines.append(f"{f.name} = {value!r}")
        else:
            lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
