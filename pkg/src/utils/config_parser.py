#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Разбор текстового файла конфигурации:

    [section]
    key = value

Каждый ключ запоминает номер строки, поэтому ошибки проверки
(pydantic) сообщаются с номером строки.
"""

from pathlib import Path
from typing import Dict, Optional, Tuple, Union

from pydantic import ValidationError

from src.core.exceptions import ConfigurationError
from src.core.models import RunConfig
from src.utils.logger import logger
from src.utils.utils import format_value, split_key, strip_comment

SECTIONS = tuple(RunConfig.model_fields)


class ParsedText:
    """Секции, значения и номера строк"""

    def __init__(self):
        self.values: Dict[str, Dict[str, str]] = {}
        self.lines: Dict[Tuple[str, ...], int] = {}

    def line_of(self, loc: Tuple) -> Optional[int]:
        while loc:
            if tuple(loc) in self.lines:
                return self.lines[tuple(loc)]
            loc = loc[:-1]
        return None


def parse_text(text: str) -> ParsedText:
    """
    Разбирает текст в словарь секций, не проверяя значения.

    :param text: Содержимое файла
    :return: ParsedText
    """
    parsed = ParsedText()
    section = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = strip_comment(raw)
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigurationError(f"Незакрытый заголовок секции: {raw.strip()}", line=number)
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigurationError(f"Неизвестная секция [{section}], допустимы {SECTIONS}", line=number)
            if section in parsed.values:
                raise ConfigurationError(f"Секция [{section}] повторяется", line=number)
            parsed.values[section] = {}
            parsed.lines[(section,)] = number
            continue
        if "=" not in line:
            raise ConfigurationError(f"Ожидается 'ключ = значение': {raw.strip()}", line=number)
        if section is None:
            raise ConfigurationError("Ключ вне секции", line=number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigurationError("Пустой ключ", line=number)
        if key in parsed.values[section]:
            raise ConfigurationError(f"Ключ {section}.{key} повторяется", line=number, key=f"{section}.{key}")
        parsed.values[section][key] = value
        parsed.lines[(section, key)] = number
    return parsed


def _to_configuration_error(error: ValidationError, parsed: ParsedText) -> ConfigurationError:
    first = error.errors()[0]
    loc = tuple(str(part) for part in first["loc"])
    message = first["msg"]
    # ошибки model_validator привязаны к секции; ключ указан в начале сообщения
    if len(loc) == 1:
        for key in parsed.values.get(loc[0], {}):
            if f"{key}:" in message:
                loc = (loc[0], key)
                break
    key = ".".join(loc)
    return ConfigurationError(f"{key}: {message}", line=parsed.line_of(loc), key=key)


def config_from_text(text: str, overrides: Optional[Dict[str, str]] = None) -> RunConfig:
    """
    Строит RunConfig из текста. Переопределения задаются как
    {"scheme.dt": "1e-3"} и применяются до проверки.

    :param text: Содержимое файла
    :param overrides: Переопределения ключей
    :return: RunConfig
    """
    parsed = parse_text(text)
    for dotted, value in (overrides or {}).items():
        section, key = split_key(dotted)
        if section not in SECTIONS:
            raise ConfigurationError(f"Неизвестная секция в переопределении: {dotted}", key=dotted)
        parsed.values.setdefault(section, {})[key] = str(value)
    try:
        return RunConfig.model_validate(parsed.values)
    except ValidationError as e:
        raise _to_configuration_error(e, parsed) from e


def load_config(path: Union[str, Path], overrides: Optional[Dict[str, str]] = None) -> RunConfig:
    """
    Загружает конфигурацию из файла.

    :param path: Путь к файлу
    :param overrides: Переопределения ключей
    :return: RunConfig
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"Не удалось прочитать {path}: {e}") from e
    config = config_from_text(text, overrides)
    logger.info(f"📄 Загружена конфигурация {path}")
    return config


def serialize_config(config: RunConfig) -> str:
    """
    Текст, который разбирается обратно в равную конфигурацию.

    :param config: Конфигурация
    :return: Текст файла
    """
    blocks = []
    for section in SECTIONS:
        model = getattr(config, section)
        lines = [f"[{section}]"]
        for key in type(model).model_fields:
            value = getattr(model, key)
            if value is None:
                continue
            lines.append(f"{key} = {format_value(value)}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"
