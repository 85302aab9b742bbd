#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Именованные сценарии. Каждый задан текстом конфигурации, поэтому
пресет можно сохранить в файл и отредактировать.
"""

from typing import Dict, Optional

from src.core.exceptions import ConfigurationError
from src.core.models import RunConfig
from src.utils.config_parser import config_from_text
from src.utils.logger import logger

# Прямоугольник с контактом снизу, опорный набор RSF, линеаризованные законы
TABLE1_COMPLIANCE = """
[mesh]
dimension = 2
extent_x = 1.0
extent_y = 0.5
subdivisions_x = 4
subdivisions_y = 2
dirichlet = left
contact = bottom
contact_offset = 1e-3

[material]
density = 1.0
viscosity = 1.0
elasticity_lambda = 0.5
elasticity_mu = 0.5

[loads]
body_force_x = 1.0
body_force_y = -1.0
profile = ramp
period = 0.01

[contact]
model = compliance
friction = first-order
state = first-order-aging
c_p = 1.0
exponent = 1
r_star = 1.0

[scheme]
T = 0.01
dt = 1e-3

[initial]
w0_x = 1e-9
"""

TABLE1_DAMPED = TABLE1_COMPLIANCE.replace("model = compliance", "model = damped\ndamping = quadratic\nkappa = 1.0")

# Линейная задача без трения: итерация сводится к памяти упругости
FRICTIONLESS = """
[mesh]
dimension = 1
subdivisions_x = 4
dirichlet = left
contact = right

[material]
density = 1.0
viscosity = 1.0
elasticity_mu = 0.5

[loads]
body_force_x = 1.0
profile = sine

[contact]
model = none
friction = none
state = none

[scheme]
T = 0.1
dt = 1e-3
outer_tol = 1e-12

[initial]
w0_x = 1.0
"""

# Цепочка с фрикционным концом; параметры проходят условие cor-6.24 (rsf-compliance)
CHAIN_1D = """
[mesh]
dimension = 1
extent_x = 1.0
subdivisions_x = 8
dirichlet = left
contact = right
contact_offset = 0.5

[material]
density = 1.0
viscosity = 2.0
elasticity_mu = 0.5

[loads]
body_force_x = 1.0
profile = sine

[contact]
model = compliance
friction = first-order
state = first-order-aging
a = 0.011
b = 0.014
mu0 = 0.05
v0 = 1.0
L = 1.0
c_p = 1.0
exponent = 1
r_star = 1.0

[scheme]
T = 0.1
dt = 1e-3
outer_tol = 1e-10
max_outer = 30

[initial]
w0_x = 0.1
"""

PRESET_TEXTS: Dict[str, str] = {
    "table1-compliance": TABLE1_COMPLIANCE,
    "table1-damped": TABLE1_DAMPED,
    "frictionless": FRICTIONLESS,
    "chain-1d": CHAIN_1D,
}
ALIASES = {"table1": "table1-compliance"}


def preset_names():
    return tuple(PRESET_TEXTS)


def preset_text(name: str) -> str:
    """
    Текст конфигурации пресета.

    :param name: Имя пресета
    :return: Текст
    """
    name = ALIASES.get(name, name)
    if name not in PRESET_TEXTS:
        raise ConfigurationError(f"Неизвестный пресет '{name}', доступны {preset_names()}", key="preset")
    return PRESET_TEXTS[name]


def load_preset(name: str, overrides: Optional[Dict[str, str]] = None) -> RunConfig:
    """
    Конфигурация пресета с переопределениями ключей.

    :param name: Имя пресета
    :param overrides: {"scheme.dt": "5e-4", ...}
    :return: RunConfig
    """
    config = config_from_text(preset_text(name), overrides)
    logger.info(f"📄 Пресет {ALIASES.get(name, name)}")
    return config
