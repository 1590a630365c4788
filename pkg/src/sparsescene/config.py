"""Layered option resolution for the command-line tools.

Every option can come from four places; later sources win:

1. built-in default,
2. a plain ``key = value`` configuration file (``--config``),
3. an environment variable ``SPARSESCENE_<OPTION>``,
4. an explicit command-line flag.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Callable

from .errors import DataError

__all__ = ["ENV_PREFIX", "load_config_file", "resolve", "parse_bool"]

ENV_PREFIX = "SPARSESCENE_"

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def parse_bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise ValueError(f"not a boolean: {text!r}")


def load_config_file(path: Path | str | None) -> dict[str, str]:
    """Read a ``key = value`` file; ``#`` starts a comment, blanks ignored."""
    if path is None:
        return {}
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from exc
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip().lower().replace("-", "_")] = value.strip()
    return values


def resolve(
    name: str,
    cli_value: Any,
    *,
    file_values: dict[str, str],
    default: Any,
    parse: Callable[[str], Any] = str,
) -> Any:
    """Resolve one option through the default < file < env < CLI chain.

    ``cli_value`` is taken as "explicitly set" when it is not None (the CLI
    parser must therefore default every flag to None).
    """
    if cli_value is not None:
        return cli_value
    env_key = ENV_PREFIX + name.upper()
    if env_key in os.environ:
        try:
            return parse(os.environ[env_key])
        except (TypeError, ValueError) as exc:
            raise DataError(f"invalid value for {env_key}: {exc}") from exc
    if name in file_values:
        try:
            return parse(file_values[name])
        except (TypeError, ValueError) as exc:
            raise DataError(f"invalid config value for {name!r}: {exc}") from exc
    return default
