"""Configuration management for polcoh."""

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from xdg_base_dirs import xdg_config_home

from .errors import ConfigError


def default_config_path() -> Path:
    return xdg_config_home() / "polcoh" / "config.toml"


@dataclass
class Config:
    """Defaults for simulation and output, overridden by CLI flags."""

    shots: int = 100_000
    seed: int = 0
    workers: int = 1
    indent: int = 2
    project_psd: bool = False

    @classmethod
    def load(cls, config_path: Optional[Path] = None) -> "Config":
        """Load configuration from file.

        Args:
            config_path: Path to config file, defaults to XDG_CONFIG_HOME/polcoh/config.toml

        Returns:
            Config instance with loaded settings
        """
        if config_path is None:
            config_path = default_config_path()

        config = cls()

        if config_path.exists():
            try:
                with open(config_path, "rb") as f:
                    data = tomllib.load(f)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"invalid TOML in {config_path}: {exc}") from exc

            for item in fields(cls):
                if item.name not in data:
                    continue
                value = data[item.name]
                expected = bool if item.type in (bool, "bool") else int
                # bool is an int subclass, so check it both ways
                if not isinstance(value, expected) or (expected is int and isinstance(value, bool)):
                    raise ConfigError(
                        f"{item.name} in {config_path} must be {expected.__name__}, got {value!r}"
                    )
                setattr(config, item.name, value)

        if config.shots < 1 or config.workers < 1 or config.seed < 0:
            raise ConfigError("shots and workers must be positive and seed non-negative")
        return config
