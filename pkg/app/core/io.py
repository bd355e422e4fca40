"""
Structured document I/O shared by the modules and the CLI.
Output is byte-stable for identical inputs so repeated runs diff cleanly.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Type, TypeVar, Union

import pandas as pd
import yaml
from pydantic import BaseModel, ValidationError
from pydantic_core import to_jsonable_python

from app.core.errors import MalformedConfig

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)


def read_structured(path: Union[str, Path]) -> Any:
    """Read a JSON document, or YAML when the suffix says so"""
    path = Path(path)
    if not path.is_file():
        raise MalformedConfig(f"File not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            return yaml.safe_load(text)
        return json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise MalformedConfig(f"Could not parse {path}: {e}") from e


def describe_validation_error(error: ValidationError) -> str:
    """One-line summary naming the offending key(s)"""
    parts = []
    for item in error.errors():
        location = ".".join(str(p) for p in item.get("loc", ()))
        parts.append(f"{location or '<root>'}: {item.get('msg', 'invalid')}")
    return "; ".join(parts)


def parse_model(model: Type[ModelT], data: Any, source: str = "document") -> ModelT:
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise MalformedConfig(f"Invalid {source}: {describe_validation_error(e)}") from e


def load_model(model: Type[ModelT], path: Union[str, Path]) -> ModelT:
    return parse_model(model, read_structured(path), source=str(path))


def dumps_json(data: Any) -> str:
    """Models may sit anywhere inside data, nested in dicts or lists"""
    return json.dumps(to_jsonable_python(data), indent=2, ensure_ascii=False) + "\n"


def write_json(path: Union[str, Path], data: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(data), encoding="utf-8")
    logger.debug(f"Wrote {path}")
    return path


def write_csv(path: Union[str, Path], rows: List[Dict[str, Any]], columns: List[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(rows, columns=columns)
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.9g")
    logger.debug(f"Wrote {path} ({len(frame)} rows)")
    return path
