"""分段 key=value 配置：按 _conf_schema.json 校验类型、拒绝未知键"""

import configparser
import copy
import hashlib
import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

from .api import ConfigError, logger

SCHEMA_FILE = Path(__file__).with_name("_conf_schema.json")


def load_schema() -> Dict[str, Any]:
    with open(SCHEMA_FILE, "r", encoding="utf-8") as file:
        return json.load(file)


def parse_rational(text: Union[str, int, float, Fraction], key: str = "") -> Fraction:
    """精确有理数；小数写法可接受但会警告"""
    if isinstance(text, Fraction):
        return text
    raw = str(text).strip()
    try:
        value = Fraction(raw)
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"{key} 不是合法的有理数：{raw}") from e
    if "." in raw or "e" in raw.lower():
        logger.warning(f"{key} 以小数形式给出（{raw}），按 {value} 精确解释")
    return value


def _parse_bool(raw: str, key: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key} 不是合法的布尔值：{raw}")


def coerce(value: Any, item: Mapping[str, Any], key: str) -> Any:
    """按 schema 类型转换单个取值"""
    kind = item.get("type", "string")
    try:
        if kind == "rational":
            return parse_rational(value, key)
        if kind == "float":
            return float(value)
        if kind == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(str(value).strip()) if isinstance(value, str) else int(value)
        if kind == "bool":
            return value if isinstance(value, bool) else _parse_bool(str(value), key)
        if kind == "list":
            if isinstance(value, (list, tuple)):
                return [float(v) for v in value]
            text = str(value).strip()
            return [float(parse_rational(v, key)) for v in text.split(",") if v.strip()] if text else []
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{key} 的取值 {value!r} 不是 {kind}") from e
    text = str(value)
    options = item.get("options")
    if options and text not in options:
        raise ConfigError(f"{key} 的取值 {text!r} 不在可选项 {options} 中")
    return text


def _serialize(value: Any) -> Any:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, list):
        return [float(v) for v in value]
    return value


class ExperimentConfig:
    """一次实验的完整配置；默认值来自 schema，文件与命令行逐层覆盖"""

    def __init__(self, values: Optional[Dict[str, Dict[str, Any]]] = None, schema: Optional[Dict[str, Any]] = None):
        self.schema = schema or load_schema()
        self._values: Dict[str, Dict[str, Any]] = {}
        for section, spec in self.schema.items():
            self._values[section] = {
                key: coerce(item.get("default", ""), item, f"{section}.{key}")
                for key, item in spec.get("items", {}).items()
            }
        for section, entries in (values or {}).items():
            for key, value in entries.items():
                self.set(section, key, value)

    @classmethod
    def from_file(cls, path: Union[str, Path], overrides: Optional[Mapping[str, Any]] = None) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"配置文件不存在：{path}")
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as e:
            raise ConfigError(f"配置文件无法解析：{e}") from e
        values = {section: dict(parser.items(section)) for section in parser.sections()}
        config = cls(values)
        config.apply_overrides(overrides or {})
        logger.info(f"已加载配置：{path}")
        return config

    def item(self, section: str, key: str) -> Mapping[str, Any]:
        if section not in self.schema:
            raise ConfigError(f"未知配置段：[{section}]，可选 {sorted(self.schema)}")
        items = self.schema[section].get("items", {})
        if key not in items:
            raise ConfigError(f"未知配置键：{section}.{key}")
        return items[key]

    def set(self, section: str, key: str, value: Any) -> None:
        item = self.item(section, key)
        self._values[section][key] = coerce(value, item, f"{section}.{key}")

    def apply_overrides(self, overrides: Mapping[str, Any]) -> None:
        """键形如 "section.key" 的覆盖项，None 值跳过"""
        for dotted, value in overrides.items():
            if value is None:
                continue
            section, _, key = dotted.partition(".")
            if not key:
                raise ConfigError(f"覆盖项必须写成 section.key，收到 {dotted}")
            self.set(section, key, value)

    def get(self, section: str, key: str, default: Any = None) -> Any:
        return self._values.get(section, {}).get(key, default)

    def section(self, section: str) -> Dict[str, Any]:
        if section not in self._values:
            raise ConfigError(f"未知配置段：[{section}]")
        return dict(self._values[section])

    @property
    def seed(self) -> int:
        return int(self.get("general", "seed", 0))

    def to_dict(self) -> Dict[str, Dict[str, Any]]:
        return {
            section: {key: _serialize(value) for key, value in sorted(entries.items())}
            for section, entries in sorted(self._values.items())
        }

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def copy(self) -> "ExperimentConfig":
        clone = ExperimentConfig.__new__(ExperimentConfig)
        clone.schema = self.schema
        clone._values = copy.deepcopy(self._values)
        return clone

    def sections(self) -> List[str]:
        return list(self._values)
