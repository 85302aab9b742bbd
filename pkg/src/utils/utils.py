#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Вспомогательные функции форматирования и разбора значений.
"""

import math
from typing import Iterable, List, Sequence

from src.utils.logger import logger

SIGNIFICANT_DIGITS = 17


def format_number(value) -> str:
    """
    Число с 17 значащими цифрами (точное восстановление double),
    независимо от локали. Булевы и целые значения пишутся как есть.

    :param value: Число
    :return: Строка
    """
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.{SIGNIFICANT_DIGITS}g}"


def format_sequence(values: Iterable) -> str:
    """Список чисел через запятую"""
    return ", ".join(format_number(v) for v in values)


def format_value(value) -> str:
    """
    Значение для файла конфигурации или отчета: числа - 17 цифр,
    последовательности - через запятую, остальное - str().
    """
    if isinstance(value, (bool, int, float)):
        return format_number(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(format_value(v) for v in value)
    return str(value)


def parse_float_list(text: str) -> List[float]:
    """
    Разбирает список чисел через запятую.

    :param text: Строка вида "1e-2, 1e-3, 1e-4"
    :return: Список чисел
    """
    values = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            values.append(float(item))
        except ValueError:
            logger.error(f"❌ Не удалось преобразовать значение: {item}")
            raise
    return values


def strip_comment(line: str) -> str:
    """Удаляет комментарий (# или ;) и пробелы по краям"""
    for marker in ("#", ";"):
        position = line.find(marker)
        if position >= 0:
            line = line[:position]
    return line.strip()


def split_key(dotted: str) -> Sequence[str]:
    """'scheme.dt' -> ('scheme', 'dt')"""
    parts = dotted.split(".")
    if len(parts) != 2 or not all(parts):
        raise ValueError(f"Ключ должен иметь вид секция.ключ: {dotted}")
    return parts[0], parts[1]
