"""Loading the configuration of the application from the defaults module,
configuration files and the environment.
"""

import errno
import os

from copy import deepcopy
from dataclasses import dataclass
from enum import Enum
from importlib import import_module
from inspect import ismodule
from json import load as load_json
from json5 import load as load_json5, loads as load_json5_from_string
from logging import Logger
from re import sub
from typing import IO, Any, Callable, Dict, Iterable, List, Optional, Tuple, Union

try:
    from tomllib import load as load_toml
except ImportError:
    from tomli import load as load_toml


__all__ = (
    "AppConfigurator",
    "Configuration",
    "ConfigurationFormat",
    "MERGED_KEYS",
    "is_configuration_key",
)

Configuration = Dict[str, Any]
"""Type specification for configuration objects"""

MERGED_KEYS = frozenset({"COSTS", "SIMULATION", "SOLVER", "SWEEP"})
"""Top-level keys whose values are dictionaries that configuration files
extend instead of replacing.
"""


def is_configuration_key(key: str) -> bool:
    """Returns whether the given top-level key may appear in the configuration.

    Only uppercase keys are considered; lowercase names in configuration
    modules are helpers, not settings.
    """
    return key.isupper() and not key.startswith("_")


def _merge_dicts(source, into) -> None:
    """Merges a source dictionary into a target dictionary recursively."""
    for key, value in source.items():
        if isinstance(value, dict):
            existing_value = into.get(key)
            if isinstance(existing_value, dict):
                _merge_dicts(value, into=existing_value)
            else:
                into[key] = value
        else:
            into[key] = value


def _load_jsonc(input: IO[bytes], *, encoding: str = "utf-8") -> Any:
    """Loads a JSON file with comments, accepting hashmark-style comment lines
    in addition to what JSON5 allows.
    """
    lines = [sub(rb"^\s*#.*", b"", line) for line in input]  # type: ignore
    return load_json5_from_string(b"".join(lines).decode(encoding))


class ConfigurationFormat(Enum):
    """Configuration file formats understood by the configurator."""

    JSON = "json"
    JSONC = "jsonc"
    JSON5 = "json5"
    PYTHON = "python"
    TOML = "toml"

    @classmethod
    def from_filename(cls, filename: str) -> Optional["ConfigurationFormat"]:
        """Guesses the format of a configuration file from its extension;
        returns ``None`` for unknown extensions.
        """
        _, ext = os.path.splitext(filename.lower())
        return _FORMATS_BY_EXTENSION.get(ext)


_FORMATS_BY_EXTENSION = {
    ".json": ConfigurationFormat.JSON,
    ".jsonc": ConfigurationFormat.JSONC,
    ".cjson": ConfigurationFormat.JSONC,
    ".json5": ConfigurationFormat.JSON5,
    ".toml": ConfigurationFormat.TOML,
    ".py": ConfigurationFormat.PYTHON,
    ".cfg": ConfigurationFormat.PYTHON,
}


@dataclass(frozen=True)
class LoadedConfigurationFile:
    """Name and format of a configuration file that the configurator loaded."""

    name: str
    """Name of the file that was loaded."""

    format: ConfigurationFormat
    """Format of the file that was loaded."""


class AppConfigurator:
    """Helper object that assembles the configuration of the application from
    the defaults module of the package, an optional configuration file and an
    optional file named by an environment variable.
    """

    _config: Configuration
    _default_filenames: Tuple[str, ...]
    _environment_variable: Optional[str]
    _key_filter: Callable[[str], bool]
    _loaded_files: List[LoadedConfigurationFile]
    _log: Optional[Logger]
    _merge_keys: Callable[[str], bool]
    _package_name: Optional[str]
    _safe: bool

    def __init__(
        self,
        config: Optional[Configuration] = None,
        *,
        default_filename: Optional[Union[str, Iterable[str]]] = None,
        environment_variable: Optional[str] = None,
        log: Optional[Logger] = None,
        package_name: Optional[str] = None,
        safe: bool = True,
    ):
        """Constructor.

        Parameters:
            config: the configuration object that the configurator will
                populate. May contain default values.
            default_filename: name of the configuration file that the
                configurator looks for in the current working directory when
                no explicit file is given. Multiple names may be given; the
                first one that exists is used.
            environment_variable: name of the environment variable that may
                hold the name of an additional configuration file
            log: logger to report loaded and missing files to
            package_name: name of the package whose ``config`` submodule
                holds the defaults
            safe: whether to refuse configuration files that would have to be
                executed as Python code
        """
        self._config = config if config is not None else {}
        if default_filename is None:
            self._default_filenames = ()
        elif isinstance(default_filename, str):
            self._default_filenames = (default_filename,)
        else:
            self._default_filenames = tuple(default_filename)
        self._environment_variable = environment_variable
        self._key_filter = is_configuration_key
        self._merge_keys = MERGED_KEYS.__contains__
        self._loaded_files = []
        self._log = log
        self._package_name = package_name
        self._safe = bool(safe)

    def configure(self, filename: Optional[str] = None) -> bool:
        """Populates the configuration object.

        Parameters:
            filename: name of the configuration file given on the command line

        Returns:
            whether all configuration sources were processed successfully
        """
        self._load_base_configuration()

        config_files: List[Tuple[str, bool]] = []
        if filename:
            config_files.append((filename, True))
        else:
            for default_filename in self._default_filenames:
                if os.path.isfile(default_filename):
                    config_files.append((default_filename, False))
                    break

        if self._environment_variable:
            env_filename = os.environ.get(self._environment_variable)
            if env_filename:
                config_files.append((env_filename, True))

        return all(
            self._load_configuration_from_file(name, mandatory)
            for name, mandatory in config_files
        )

    @property
    def loaded_files(self) -> List[LoadedConfigurationFile]:
        """Returns the list of loaded configuration files."""
        return self._loaded_files

    @property
    def result(self) -> Configuration:
        """Returns the result of the configuration process."""
        return self._config

    @property
    def safe(self) -> bool:
        """Returns whether the configurator object is in safe mode."""
        return self._safe

    def load_dict(self, config: Dict[str, Any]) -> None:
        """Merges settings from the given dictionary into the configuration.

        Items are used as-is, without deep-copying them.
        """
        for key, value in config.items():
            if not self._key_filter(key):
                continue
            if isinstance(value, dict) and self._merge_keys(key):
                existing_value = self._config.get(key)
                if isinstance(existing_value, dict):
                    _merge_dicts(value, into=existing_value)
                    continue
            self._config[key] = value

    def _load_base_configuration(self) -> None:
        """Loads the defaults of the application from the ``config`` submodule
        of the associated package, deep-copying its contents.
        """
        if not self._package_name:
            return

        try:
            module = import_module(".config", self._package_name)
        except ModuleNotFoundError:
            return

        contents = {
            key: getattr(module, key)
            for key in dir(module)
            if not key.startswith("__")
        }
        contents = deepcopy({k: v for k, v in contents.items() if not ismodule(v)})
        self.load_dict(contents)

    def _load_configuration_from_file(
        self, filename: str, mandatory: bool = True
    ) -> bool:
        """Loads configuration settings from the given file.

        Parameters:
            filename: name of the configuration file to load. Relative
                paths are resolved from the current directory.
            mandatory: whether the configuration file must exist

        Returns:
            whether the configuration was loaded successfully
        """
        filename = os.path.abspath(filename)
        cfg_format = ConfigurationFormat.from_filename(filename)

        if cfg_format is None or (
            cfg_format is ConfigurationFormat.PYTHON and self._safe
        ):
            if self._log:
                message = f"Configuration file {filename!r} is in an unsupported format"
                if mandatory:
                    self._log.error(message)
                else:
                    self._log.warning(message)
            return False

        try:
            with open(filename, mode="rb") as config_file:
                config = self._parse(config_file, cfg_format, filename)
        except IOError as e:
            if e.errno in (errno.ENOENT, errno.EISDIR, errno.ENOTDIR):
                if mandatory and self._log:
                    self._log.error(f"Cannot load configuration from {filename!r}")
                return not mandatory
            raise

        self.load_dict(config)
        self._loaded_files.append(LoadedConfigurationFile(filename, cfg_format))
        if self._log:
            self._log.info(
                f"Loaded configuration from {filename!r}",
                extra={"semantics": "success"},
            )
        return True

    @staticmethod
    def _parse(
        fp: IO[bytes], cfg_format: ConfigurationFormat, filename: str
    ) -> Dict[str, Any]:
        if cfg_format is ConfigurationFormat.JSON:
            return load_json(fp)
        elif cfg_format is ConfigurationFormat.JSONC:
            return _load_jsonc(fp)
        elif cfg_format is ConfigurationFormat.JSON5:
            return load_json5(fp)
        elif cfg_format is ConfigurationFormat.TOML:
            return load_toml(fp)
        else:
            namespace: Dict[str, Any] = {}
            exec(compile(fp.read(), filename, "exec"), namespace)
            return {k: v for k, v in namespace.items() if not k.startswith("__")}
