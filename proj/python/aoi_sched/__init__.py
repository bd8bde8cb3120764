"""Age-of-information sensor scheduling: simulator, baselines and actor-critic training."""

from ._core import (
    Checkpoint,
    ConfigError,
    Env,
    EnvConfig,
    NumericError,
    ParseError,
    RunConfig,
    SensorConfig,
    ShapeError,
    Trace,
    edf_select,
    evaluate,
    gen_synthetic,
    generate_traces,
    load_checkpoint,
    load_run_config,
    load_trace,
    osrp_probs,
    paper_env_config,
    paper_iv_defaults,
    parse_run_config,
    save_checkpoint,
    save_trace,
    train,
)

__all__ = [
    "Checkpoint",
    "ConfigError",
    "Env",
    "EnvConfig",
    "NumericError",
    "ParseError",
    "RunConfig",
    "SensorConfig",
    "ShapeError",
    "Trace",
    "edf_select",
    "evaluate",
    "gen_synthetic",
    "generate_traces",
    "load_checkpoint",
    "load_run_config",
    "load_trace",
    "osrp_probs",
    "paper_env_config",
    "paper_iv_defaults",
    "parse_run_config",
    "save_checkpoint",
    "save_trace",
    "train",
]
