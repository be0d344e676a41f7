import copy
import json
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Type, TypeVar

from pydantic import BaseModel

from ..errors import ConfigError

ModelT = TypeVar("ModelT", bound=BaseModel)


def load_config_file(path: Optional[str | os.PathLike]) -> Dict[str, Any]:
    """Reads a JSON config object; no path means an empty config."""
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def _set_dotted(data: Dict[str, Any], dotted_key: str, value: Any) -> None:
    *parents, leaf = dotted_key.split(".")
    node = data
    for key in parents:
        child = node.get(key)
        if not isinstance(child, dict):
            child = {}
            node[key] = child
        node = child
    node[leaf] = value


def merge_config(
    model_cls: Type[ModelT],
    file_data: Optional[Mapping[str, Any]],
    overrides: Mapping[str, Any],
) -> ModelT:
    """
    Defaults < config file < flags. ``overrides`` maps dotted field paths
    (``model.stride``) to flag values; ``None`` means the flag was not given.
    """
    data = copy.deepcopy(dict(file_data or {}))
    for key, value in overrides.items():
        if value is not None:
            _set_dotted(data, key, value)
    return model_cls.model_validate(data)
