"""
ConfigManager centralizes configuration handling for every command.
Values come from a flat ``key = value`` file and ``--set key=value`` overrides,
and are validated against the command's schema before any work starts.
"""
import hashlib
import json
import logging
from typing import Any, Dict, Iterable, Optional

from config.defaults import EXECUTION_KEYS
from config.schemas import REQUIRED_WHEN, schema_for
from engine.errors import ConfigError

logger = logging.getLogger(__name__)


class ConfigManager:
    """Central configuration manager.

    Keeps one flat dictionary of raw values plus the line each key was read
    from, so validation errors can point at the offending line.
    """

    def __init__(self, initial_config: Optional[Dict[str, Any]] = None):
        """Initialize the configuration manager.

        Args:
            initial_config: Optional initial configuration dictionary
        """
        self._config: Dict[str, Any] = dict(initial_config or {})
        self._lines: Dict[str, int] = {}
        self._validated: Optional[Dict[str, Any]] = None
        self._command: Optional[str] = None

    def load_file(self, path: str) -> None:
        """Read a flat ``key = value`` file; blank lines and ``#`` comments are ignored.

        Raises:
            ConfigError: On a line without ``=``, an empty key or a repeated key
        """
        try:
            with open(path, "r", encoding="utf-8") as f:
                lines = f.readlines()
        except OSError as e:
            raise ConfigError(f"[utils/config_manager.py] cannot read config file {path}: {e}") from e

        for number, raw in enumerate(lines, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError("[utils/config_manager.py] expected 'key = value'", line=number)
            key, value = (part.strip() for part in text.split("=", 1))
            if not key:
                raise ConfigError("[utils/config_manager.py] empty key", line=number)
            if key in self._lines:
                raise ConfigError(
                    f"[utils/config_manager.py] key repeated (first set on line {self._lines[key]})",
                    field=key, line=number,
                )
            self._config[key] = value
            self._lines[key] = number
        self._validated = None
        logger.debug("loaded %d keys from %s", len(self._lines), path)

    def apply_overrides(self, overrides: Iterable[str]) -> None:
        """Apply ``key=value`` strings, e.g. from repeated ``--set`` options."""
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"[utils/config_manager.py] override {item!r} is not of the form key=value")
            key, value = (part.strip() for part in item.split("=", 1))
            if not key:
                raise ConfigError(f"[utils/config_manager.py] override {item!r} has an empty key")
            self._config[key] = value
            # overrides have no file line
            self._lines.pop(key, None)
        self._validated = None

    def update(self, new_config: Dict[str, Any]) -> None:
        """Update the configuration with new values.

        Args:
            new_config: New configuration values to apply
        """
        self._config.update(new_config or {})
        self._validated = None

    def set(self, key: str, value: Any) -> None:
        self._config[key] = value
        self._validated = None

    def get(self, key: str, default: Any = None) -> Any:
        """Get a configuration value, validated when ``validate`` has run.

        Args:
            key: Configuration key
            default: Default value if key does not exist
        """
        source = self._validated if self._validated is not None else self._config
        return source.get(key, default)

    def get_all(self) -> Dict[str, Any]:
        """Get a copy of the configuration dictionary."""
        source = self._validated if self._validated is not None else self._config
        return dict(source)

    def validate(self, command: str) -> Dict[str, Any]:
        """Parse every value against the command schema and fill defaults.

        Returns:
            The validated configuration

        Raises:
            ConfigError: Naming the field (and line, when read from a file) of the first problem
        """
        schema = schema_for(command)
        if schema is None:
            raise ConfigError(f"[utils/config_manager.py] unknown command '{command}'", field="command")

        for key in sorted(self._config, key=lambda k: (self._lines.get(k, 1 << 30), k)):
            if key not in schema:
                raise ConfigError(f"[utils/config_manager.py] unknown key for '{command}'",
                                  field=key, line=self._lines.get(key))

        validated: Dict[str, Any] = {}
        for key, spec in schema.items():
            if key in self._config and self._config[key] is not None:
                try:
                    validated[key] = spec.parser(self._config[key])
                except (TypeError, ValueError) as e:
                    raise ConfigError(f"[utils/config_manager.py] invalid value {self._config[key]!r}: {e}",
                                      field=key, line=self._lines.get(key)) from None
            elif spec.required:
                raise ConfigError(f"[utils/config_manager.py] missing required key for '{command}'", field=key)
            else:
                validated[key] = spec.default

        for (cmd, key), (other, value) in REQUIRED_WHEN.items():
            if cmd == command and validated.get(other) == value and validated.get(key) is None:
                raise ConfigError(f"[utils/config_manager.py] required when {other} = {value}", field=key)

        self._validated = validated
        self._command = command
        return dict(validated)

    def config_hash(self) -> str:
        """SHA-256 over the canonical JSON of the validated config, execution keys excluded."""
        if self._validated is None:
            raise ConfigError("[utils/config_manager.py] config_hash requires a validated config")
        payload = {k: v for k, v in self._validated.items() if k not in EXECUTION_KEYS}
        payload["command"] = self._command
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=list)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
