#!/usr/bin/env python
# -*- coding: utf-8 -*-

import os
import sys
from loguru import logger

# Флаг, показывающий, были ли уже добавлены файловые обработчики
_logger_initialized = False

CONSOLE_FORMAT = "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}"


def setup_logger(debug: bool = False, save_logs: bool = True, log_dir: str = None, force: bool = False):
    """
    Настройка логгера. Повторный вызов без force только возвращает
    уже настроенный экземпляр.

    :param debug: Включить отладочный режим
    :param save_logs: Сохранять логи в файл
    :param log_dir: Директория логов (по умолчанию RSC_LOG_DIR или logs)
    :param force: Перенастроить даже если логгер уже инициализирован
    :return: Объект логгера
    """
    global _logger_initialized

    if _logger_initialized and not force:
        logger.debug("Логгер уже инициализирован, пропускаем настройку")
        return logger

    # Удаляем стандартный обработчик
    logger.remove()

    logger.add(
        sys.stderr,
        format=CONSOLE_FORMAT,
        level="DEBUG" if debug else "INFO"
    )

    if save_logs:
        log_dir = log_dir or os.getenv("RSC_LOG_DIR", "logs")
        os.makedirs(log_dir, exist_ok=True)

        logger.add(
            os.path.join(log_dir, "rate_state_contact.log"),
            format=FILE_FORMAT,
            level="DEBUG" if debug else "INFO",
            rotation="50 MB",                # Ротация по размеру (50 МБ)
            compression="zip",               # Сжатие старых логов
            retention=10,                    # Хранить только 10 последних файлов
            enqueue=True,
            backtrace=True
        )

        # Отдельный файл для ошибок
        logger.add(
            os.path.join(log_dir, "rate_state_contact_error.log"),
            format=FILE_FORMAT,
            level="ERROR",
            rotation="10 MB",
            compression="zip",
            retention=10,
            enqueue=True,
            backtrace=True,
            diagnose=True
        )

    _logger_initialized = True

    return logger


# При импорте библиотеки - только консоль, без файлов
logger.remove()
logger.add(sys.stderr, format=CONSOLE_FORMAT, level=os.getenv("RSC_LOG_LEVEL", "INFO"))
