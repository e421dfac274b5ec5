"""Configuration file manager for the CAPFI toolkit."""

import json
from pathlib import Path
from typing import Generic, Optional, TypeVar

import pydantic
from loguru import logger
from pydantic import BaseModel

from capfi.utils.exceptions import ConfigError
from capfi.utils.serialization import write_canonical

ModelT = TypeVar("ModelT", bound=BaseModel)


class ConfigManager(Generic[ModelT]):
    """Loads and saves one JSON configuration file as a pydantic model."""

    def __init__(self, config_file: Path, model_cls: type[ModelT]):
        """Initialize config manager.

        Args:
            config_file: Path to configuration file.
            model_cls: Pydantic model the file must validate against.
        """
        self.config_file = Path(config_file)
        self.model_cls = model_cls
        self._settings: Optional[ModelT] = None

    def load(self) -> ModelT:
        """Load and validate the configuration file.

        Returns:
            Validated model.

        Raises:
            ConfigError: If the file is missing, not JSON, or invalid.
        """
        if self._settings is not None:
            return self._settings

        if not self.config_file.exists():
            raise ConfigError(f"Config file not found: {self.config_file}")

        try:
            with open(self.config_file, "r", encoding="utf-8") as f:
                data = json.load(f)
            self._settings = self.model_cls.model_validate(data)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Invalid JSON in config file {self.config_file}: {e}") from e
        except pydantic.ValidationError as e:
            raise ConfigError(f"Invalid {self.model_cls.__name__} in {self.config_file}: {e}") from e
        except OSError as e:
            raise ConfigError(f"Failed to read config {self.config_file}: {e}") from e

        logger.info(f"Loaded {self.model_cls.__name__} from {self.config_file}")
        return self._settings

    def save(self, settings: Optional[ModelT] = None) -> None:
        """Save settings to file.

        Args:
            settings: Settings to save. If None, saves current settings.

        Raises:
            ConfigError: If save fails.
        """
        to_save = settings or self._settings

        if to_save is None:
            raise ConfigError("No settings to save")

        try:
            write_canonical(to_save.model_dump(mode="json"), self.config_file)
        except (OSError, TypeError, ValueError) as e:
            raise ConfigError(f"Failed to save config: {e}") from e

        self._settings = to_save
        logger.info(f"Saved {self.model_cls.__name__} to {self.config_file}")
