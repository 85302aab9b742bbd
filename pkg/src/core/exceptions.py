#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Исключения библиотеки. Библиотечный код их поднимает, CLI ловит,
логирует и переводит в код возврата.
"""

from typing import Optional, Sequence


class SolverLibraryError(Exception):
    """Базовое исключение решателя"""


class ShapeError(SolverLibraryError):
    """Несовпадение размерностей массивов"""


class ContractError(SolverLibraryError):
    """Нарушение контракта входных данных (SPD, знаки, выпуклость)"""


class DiagnosticsError(SolverLibraryError):
    """Диагностическая процедура не сошлась или обнаружила расходимость"""


class CapabilityError(SolverLibraryError):
    """Запрошенная величина недоступна для данного варианта закона"""


class DomainError(SolverLibraryError):
    """Аргумент вне области определения (NaN, бесконечность, r < 0)"""


class ConfigurationError(SolverLibraryError):
    """
    Ошибка конфигурации. Хранит номер строки файла, если он известен.
    """

    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        self.line = line
        self.key = key
        prefix = f"строка {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class SolverError(SolverLibraryError):
    """
    Внутренний решатель шага не сошелся.

    :param message: Описание
    :param residuals: История невязок
    :param step: Индекс временного шага (если известен)
    """

    def __init__(self, message: str, residuals: Sequence[float] = (), step: Optional[int] = None):
        self.residuals = list(residuals)
        self.step = step
        where = f" (шаг {step})" if step is not None else ""
        super().__init__(f"{message}{where}")
