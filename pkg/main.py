#!/usr/bin/env python
# -*- coding: utf-8 -*-

import argparse
import sys

from dotenv import load_dotenv

from src.cli.commands import (EXIT_ERROR, cmd_check, cmd_flowmap, cmd_rsf_curves, cmd_run, cmd_sweep,
                              describe_exit, execute, output_dir, resolve_config)
from src.cli.presets import preset_names
from src.utils.logger import logger, setup_logger
from src.utils.utils import parse_float_list


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument('--config', help='Путь к файлу конфигурации')
    parser.add_argument('--preset', help=f'Имя пресета: {", ".join(preset_names())}')
    parser.add_argument('--out', help='Каталог вывода (по умолчанию output.directory)')
    parser.add_argument('--seed', type=int, help='Зерно генераторов (scheme.seed)')
    parser.add_argument('--dt', help='Шаг по времени (scheme.dt)')
    parser.add_argument('--T', dest='horizon', help='Горизонт (scheme.T)')
    parser.add_argument('--tol', help='Допуск внешней итерации (scheme.outer_tol)')
    parser.add_argument('--debug', action='store_true', help='Включить отладочный режим')
    parser.add_argument('--no-logs', action='store_true', help='Не сохранять логи в файл')


def parse_arguments(argv=None):
    """
    Парсинг аргументов командной строки
    """
    parser = argparse.ArgumentParser(description='Решатель фрикционного вязкоупругого контакта (rate-and-state)')
    commands = parser.add_subparsers(dest='command', required=True)

    run = commands.add_parser('run', help='Расчет траектории')
    _add_common(run)

    check = commands.add_parser('check', help='Условия малости и проверки гипотез')
    _add_common(check)
    check.add_argument('--samples', type=int, default=100_000, help='Размер выборки на гипотезу')
    check.add_argument('--budget', action='store_true', help='Сравнить бюджет сжатия с прогонами на T и T/2')

    flowmap = commands.add_parser('flowmap', help='Зависимость от начальных данных')
    _add_common(flowmap)
    flowmap.add_argument('--deltas', default='1e-2, 1e-3, 1e-4', help='Лестница δ (в единицах ‖w0‖_V)')

    curves = commands.add_parser('rsf-curves', help='Кривые точного и линеаризованного законов')
    _add_common(curves)
    curves.add_argument('--alpha-min', type=float, help='Левый конец диапазона α (по умолчанию α0 − 1)')
    curves.add_argument('--alpha-max', type=float, help='Правый конец диапазона α (по умолчанию α0 + 1)')
    curves.add_argument('--points', type=int, default=401, help='Число точек по α')
    curves.add_argument('--rate', type=float, help='Скорость скольжения r (по умолчанию v0)')

    sweep = commands.add_parser('sweep', help='Серия расчетов по значениям одного ключа')
    _add_common(sweep)
    sweep.add_argument('--key', required=True, help='Ключ вида секция.ключ, например scheme.dt')
    sweep.add_argument('--values', required=True, help='Значения через запятую')
    sweep.add_argument('--workers', type=int, help='Число потоков')

    return parser.parse_args(argv)


def collect_overrides(args) -> dict:
    """
    Переопределения ключей конфигурации из флагов
    """
    flags = {
        'scheme.seed': args.seed,
        'scheme.dt': args.dt,
        'scheme.T': args.horizon,
        'scheme.outer_tol': args.tol,
    }
    return {key: str(value) for key, value in flags.items() if value is not None}


def dispatch(args) -> int:
    """
    Запуск выбранной команды

    :param args: Разобранные аргументы
    :return: Код возврата
    """
    config = resolve_config(args.config, args.preset, collect_overrides(args))
    out = output_dir(config, args.out)

    if args.command == 'run':
        return cmd_run(config, out)
    if args.command == 'check':
        return cmd_check(config, out, n_samples=args.samples, budget=args.budget)
    if args.command == 'flowmap':
        return cmd_flowmap(config, out, parse_float_list(args.deltas))
    if args.command == 'rsf-curves':
        return cmd_rsf_curves(config, out, args.alpha_min, args.alpha_max, args.points, args.rate)
    values = [value.strip() for value in args.values.split(',') if value.strip()]
    return cmd_sweep(config, out, args.key, values, args.workers)


def main(argv=None) -> int:
    """
    Основная функция
    """
    args = parse_arguments(argv)

    # Загружаем переменные окружения из .env файла до настройки логов
    load_dotenv()
    setup_logger(debug=args.debug, save_logs=not args.no_logs)
    logger.info(f"🚀 Запуск команды {args.command}")

    code = EXIT_ERROR
    try:
        code = execute(dispatch, args)
    except KeyboardInterrupt:
        logger.warning("⚠️  Получен сигнал завершения работы")
    except ValueError as e:
        logger.error(f"❌ Некорректный аргумент: {e}")
    except Exception as e:
        logger.exception(f"❌ Критическая ошибка: {str(e)}")
    finally:
        logger.info(f"👋 Завершение работы (код {code}: {describe_exit(code)})")
    return code


if __name__ == "__main__":
    sys.exit(main())
