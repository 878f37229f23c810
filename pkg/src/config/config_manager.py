"""Configuration manager for BeamEngineer"""

import copy
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple

import yaml

from ..baselines.ccp import CcpConfig
from ..errors import ConfigError
from ..model.decoder import DecoderConfig
from ..model.params import EncoderHyper
from ..scenario import ScenarioConfig
from ..train.trainer import TrainConfig

logger = logging.getLogger(__name__)

YAML_SUFFIXES = (".yaml", ".yml")
TRAIN_PRESETS = {"desk": TrainConfig.desk, "full": TrainConfig.full}


@dataclass(frozen=True)
class EvalSettings:
    """Evaluation harness settings"""

    r_max: int = 500
    # r_test is the smallest r with mean CV below this
    cv_target: float = 0.01
    # power is averaged over instances with CV at most this
    report_cv: float = 0.05
    count: int = 1280
    seed: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.r_max < 0:
            raise ConfigError(f"eval.r_max must be >= 0, got {self.r_max}")
        for name in ("cv_target", "report_cv"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"eval.{name} must be positive, got {getattr(self, name)}")
        if self.count < 1 or self.workers < 1:
            raise ConfigError(f"eval.count and eval.workers must be >= 1, got {self.count} and {self.workers}")
        if self.seed < 0:
            raise ConfigError(f"eval.seed must be non-negative, got {self.seed}")


def parse_value(text: str) -> Any:
    """Type a scalar or list by YAML rules ("8" → 8, "[4, 4]" → [4, 4], "null" → None)"""
    try:
        value = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse value {text!r}: {e}") from e
    # YAML 1.1 reads "1e-3" as a string
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    return value


def parse_assignment(text: str) -> Tuple[str, Any]:
    """Split "section.key=value" into the key path and its typed value"""
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"expected section.key=value, got {text!r}")
    return key.strip(), parse_value(value.strip())


def parse_key_value_file(path: Path) -> Dict[str, Any]:
    """
    Read a plain-text config file

    Each non-empty line is `dotted.key = value`; `#` starts a comment.

    Returns:
        Flat mapping of key path to typed value
    """
    entries: Dict[str, Any] = {}
    with open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                key, value = parse_assignment(line)
            except ConfigError as e:
                raise ConfigError(f"{path}:{number}: {e}") from e
            entries[key] = value
    return entries


class ConfigManager:
    """Manages experiment configuration from a YAML or key=value file"""

    def __init__(self, config_path: Optional[str] = "config.yaml", overrides: Iterable[str] = ()):
        """
        Initialize configuration manager

        Args:
            config_path: Path to the configuration file (None uses the defaults only)
            overrides: "section.key=value" assignments applied after the file
        """
        self.config_path = Path(config_path) if config_path is not None else None
        self.config: Dict[str, Any] = self.get_default_config()
        self.load_config()
        for assignment in overrides:
            key, value = parse_assignment(assignment)
            self.set(key, value)

    def load_config(self) -> None:
        """Load configuration from file, writing the defaults if it does not exist"""
        if self.config_path is None:
            return
        if not self.config_path.exists():
            self.create_default_config()
            return

        if self.config_path.suffix.lower() in YAML_SUFFIXES:
            try:
                with open(self.config_path, "r", encoding="utf-8") as f:
                    loaded = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigError(f"error loading {self.config_path}: {e}") from e
            if not isinstance(loaded, dict):
                raise ConfigError(f"{self.config_path} must hold a mapping of sections")
            entries = dict(self._flatten(loaded))
        else:
            entries = parse_key_value_file(self.config_path)

        for key, value in entries.items():
            self.set(key, value)
        logger.debug(f"Loaded {len(entries)} settings from {self.config_path}")

    def create_default_config(self) -> None:
        """Create default configuration file if it doesn't exist"""
        with open(self.config_path, "w", encoding="utf-8") as f:
            yaml.dump(self.get_default_config(), f, default_flow_style=False, sort_keys=False)
        print(f"Created default configuration at {self.config_path}")

    def get_default_config(self) -> Dict[str, Any]:
        """Get default configuration dictionary"""
        return {
            "logging": {"level": "INFO"},
            "scenario": {
                "n_antennas": 8,
                "group_sizes": [4],
                "sinr_target_db": [10.0],
                "noise_dbm": -100.0,
                "bs_xyz": [0.0, 0.0, 20.0],
                "user_box": [85.0, 95.0, 85.0, 115.0],
                "seed": 0,
            },
            "encoder": {"d": 128, "n_layers": 2, "n_heads": 4, "d_ff": 512},
            "decoder": {"eta": 0.01, "r_train": 5, "r_test": 50, "use_woodbury": None},
            "train": {
                "preset": "desk",
                "epochs": None,
                "steps_per_epoch": None,
                "batch_size": None,
                "lr": None,
                "decay": None,
                "rho": 0.5,
                "seed": 0,
                "workers": 1,
                "model_kind": "hpe",
            },
            "ccp": {
                "max_outer": 10,
                "outer_tol": 1e-10,
                "inner_tol": 1e-9,
                "inner_max_iter": 30,
                "lbfgs_max_iter": 2000,
                "penalty_init": 10.0,
                "penalty_growth": 10.0,
                "penalty_max": 1e10,
                "margin": 1e-8,
                "backtrack_steps": 30,
            },
            "eval": {"r_max": 500, "cv_target": 0.01, "report_cv": 0.05, "count": 1280, "seed": 1, "workers": 1},
        }

    @staticmethod
    def _flatten(tree: Dict[str, Any], prefix: str = ""):
        for key, value in tree.items():
            path = f"{prefix}{key}"
            if isinstance(value, dict):
                yield from ConfigManager._flatten(value, f"{path}.")
            else:
                yield path, value

    def get(self, key_path: str, default: Any = None) -> Any:
        """
        Get configuration value by dot-separated key path

        Args:
            key_path: Dot-separated path to config value (e.g., "decoder.eta")
            default: Default value if key not found

        Returns:
            Configuration value or default
        """
        value = self.config
        for key in key_path.split("."):
            if isinstance(value, dict) and key in value:
                value = value[key]
            else:
                return default
        return value

    def set(self, key_path: str, value: Any) -> None:
        """
        Set configuration value by dot-separated key path

        Raises:
            ConfigError: The key is not part of the configuration schema
        """
        keys = key_path.split(".")
        section = self.config
        for key in keys[:-1]:
            if not isinstance(section.get(key), dict):
                raise ConfigError(f"unknown configuration key {key_path!r}")
            section = section[key]
        if keys[-1] not in section or isinstance(section[keys[-1]], dict):
            raise ConfigError(f"unknown configuration key {key_path!r}")
        section[keys[-1]] = value

    def section(self, name: str) -> Dict[str, Any]:
        return copy.deepcopy(self.config[name])

    def save(self, path: Optional[str] = None) -> None:
        """Save current configuration as YAML"""
        target = Path(path) if path is not None else self.config_path
        with open(target, "w", encoding="utf-8") as f:
            yaml.dump(self.config, f, default_flow_style=False, sort_keys=False)

    def _typed(self, cls, name: str, values: Dict[str, Any]):
        try:
            return cls(**values)
        except TypeError as e:
            raise ConfigError(f"invalid {name} section: {e}") from e

    def scenario_config(self) -> ScenarioConfig:
        values = self.section("scenario")
        for key in ("group_sizes", "sinr_target_db", "bs_xyz", "user_box"):
            raw = values[key]
            values[key] = tuple(raw) if isinstance(raw, (list, tuple)) else (raw,)
        return self._typed(ScenarioConfig, "scenario", values)

    def encoder_hyper(self) -> EncoderHyper:
        return self._typed(EncoderHyper, "encoder", self.section("encoder"))

    def decoder_config(self) -> DecoderConfig:
        return self._typed(DecoderConfig, "decoder", self.section("decoder"))

    def ccp_config(self) -> CcpConfig:
        return self._typed(CcpConfig, "ccp", self.section("ccp"))

    def eval_settings(self) -> EvalSettings:
        return self._typed(EvalSettings, "eval", self.section("eval"))

    def train_config(self) -> TrainConfig:
        """
        Training configuration: the selected preset, then every non-null train key

        Raises:
            ConfigError: Unknown preset or invalid values
        """
        values = self.section("train")
        preset = values.pop("preset")
        if preset not in TRAIN_PRESETS:
            raise ConfigError(f"unknown train.preset {preset!r}; expected one of {sorted(TRAIN_PRESETS)}")
        explicit = {key: value for key, value in values.items() if value is not None}
        try:
            return TRAIN_PRESETS[preset](
                scenario=self.scenario_config(),
                encoder=self.encoder_hyper(),
                decoder=self.decoder_config(),
                **explicit,
            )
        except TypeError as e:
            raise ConfigError(f"invalid train section: {e}") from e
