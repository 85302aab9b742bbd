#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Запись результатов: траектории и кривые в CSV (pandas), отчеты в
формате key = value. Все числа - 17 значащих цифр, порядок колонок
фиксирован, время работы не записывается.
"""

from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.core.discrete import TrajectoryState
from src.core.scheme import FlowMapTable, SchemeReport
from src.utils.logger import logger
from src.utils.utils import format_value

FLOAT_FORMAT = "%.17g"


def trajectory_frame(traj: TrajectoryState) -> pd.DataFrame:
    """
    Колонки: t, w_0..w_{n−1}, u_0..u_{n−1}, alpha_0..alpha_{m−1};
    одна строка на t_k.
    """
    columns: Dict[str, np.ndarray] = {"t": traj.times}
    for i in range(traj.n_dof):
        columns[f"w_{i}"] = traj.w[:, i]
    for i in range(traj.n_dof):
        columns[f"u_{i}"] = traj.u[:, i]
    for i in range(traj.alpha.shape[1]):
        columns[f"alpha_{i}"] = traj.alpha[:, i]
    return pd.DataFrame(columns)


def flow_map_frame(table: FlowMapTable) -> pd.DataFrame:
    return pd.DataFrame({"delta": [row.delta for row in table.rows],
                         "distance": [row.distance for row in table.rows],
                         "ratio": [row.ratio for row in table.rows]})


def report_items(report: SchemeReport) -> List[Tuple[str, object]]:
    """Пары ключ-значение отчета прогона (без времени работы)"""
    items: List[Tuple[str, object]] = [
        ("mode", report.mode),
        ("converged", report.converged),
        ("iterations", report.iterations),
        ("increments_w", report.increments_w),
        ("increments_alpha", report.increments_alpha),
        ("ratios", report.ratios),
        ("asymptotic_ratio", report.asymptotic_ratio),
        ("energy_defect", report.energy_defect),
        ("worst_vi_violation", report.worst_vi_violation),
        ("max_kkt_residual", report.max_kkt_residual),
    ]
    items += [(f"margin.{name}", margin) for name, margin in sorted(report.condition_margins.items())]
    return items


class ReportWriter:
    """
    Пишет файлы результатов в каталог вывода.

    :param out_dir: Каталог вывода (создается при необходимости)
    """

    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)
        logger.debug(f"Инициализация ReportWriter (out_dir={self.out_dir})")

    def _path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / name

    def write_frame(self, frame: pd.DataFrame, name: str) -> Path:
        """
        Записывает DataFrame в CSV.

        :param frame: Данные
        :param name: Имя файла
        :return: Путь к файлу
        """
        path = self._path(name)
        try:
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        except OSError as e:
            logger.error(f"❌ Ошибка при записи {path}: {e}")
            raise
        logger.info(f"💾 Записан файл {path} ({len(frame)} строк)")
        return path

    def write_items(self, items: Iterable[Tuple[str, object]], name: str) -> Path:
        """
        Записывает пары key = value.

        :param items: Пары ключ-значение
        :param name: Имя файла
        :return: Путь к файлу
        """
        path = self._path(name)
        text = "".join(f"{key} = {format_value(value)}\n" for key, value in items)
        try:
            path.write_text(text, encoding="utf-8")
        except OSError as e:
            logger.error(f"❌ Ошибка при записи {path}: {e}")
            raise
        logger.info(f"💾 Записан отчет {path}")
        return path

    def write_trajectory(self, traj: TrajectoryState, name: str = "trajectory.csv") -> Path:
        return self.write_frame(trajectory_frame(traj), name)

    def write_report(self, report: SchemeReport, name: str = "report.txt") -> Path:
        return self.write_items(report_items(report), name)

    def write_curve(self, alpha: Sequence[float], exact: Sequence[float], first_order: Sequence[float],
                    name: str) -> Path:
        """Кривая с колонками alpha, exact, first_order"""
        frame = pd.DataFrame({"alpha": np.asarray(alpha, dtype=float),
                              "exact": np.asarray(exact, dtype=float),
                              "first_order": np.asarray(first_order, dtype=float)})
        return self.write_frame(frame, name)

    def write_flow_map(self, table: FlowMapTable, name: str = "flowmap.csv") -> Path:
        return self.write_frame(flow_map_frame(table), name)
