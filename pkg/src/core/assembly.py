#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Сборка дискретной задачи: вязкоупругая цепочка (1D) с фрикционным
концевым узлом и P1 МКЭ на прямоугольнике (2D).

Тензоры 4-го ранга хранятся как матрицы Манделя: в 2D действуют на
(ε11, ε22, √2·ε12), так что норма Фробениуса тензора деформаций
сохраняется; в 1D - скаляр 1×1.
"""

from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np

from src.core.discrete import DiscreteProblem
from src.core.exceptions import ConfigurationError
from src.core.models import MeshSpec
from src.utils.logger import logger

SQRT2 = np.sqrt(2.0)
ForceSampler = Callable[[np.ndarray, float], np.ndarray]


def mandel_size(dimension: int) -> int:
    return 1 if dimension == 1 else 3


def isotropic_tensor(dimension: int, lam: float, mu: float) -> np.ndarray:
    """
    Изотропный тензор λ·(I⊗I) + 2μ·I в представлении Манделя.
    В 1D - модуль одноосной деформации λ + 2μ.
    """
    if dimension == 1:
        return np.array([[lam + 2.0 * mu]])
    trace = np.array([1.0, 1.0, 0.0])
    return lam * np.outer(trace, trace) + 2.0 * mu * np.eye(3)


@dataclass(frozen=True)
class MaterialSpec:
    """
    Материал: плотность, тензор вязкости a, тензор упругости b
    (матрицы Манделя) и ядро релаксации amplitude·exp(−t/τ)·I.
    """

    dimension: int
    density: float
    viscosity: np.ndarray
    elasticity: np.ndarray
    relaxation_amplitude: float = 0.0
    relaxation_time: float = 1.0

    def __post_init__(self):
        size = mandel_size(self.dimension)
        for name in ("viscosity", "elasticity"):
            tensor = np.array(getattr(self, name), dtype=float, copy=True)
            if tensor.shape != (size, size):
                raise ConfigurationError(f"{name}: ожидается матрица {size}×{size}, получено {tensor.shape}")
            if not np.allclose(tensor, tensor.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(tensor).max())):
                raise ConfigurationError(f"Тензор {name} не обладает главной симметрией")
            tensor.setflags(write=False)
            object.__setattr__(self, name, tensor)
        if not self.density > 0:
            raise ConfigurationError(f"Плотность должна быть положительна: {self.density}")
        if not self.relaxation_time > 0:
            raise ConfigurationError(f"Время релаксации должно быть положительно: {self.relaxation_time}")

    @classmethod
    def isotropic(cls, dimension: int, density: float, viscosity: float, elasticity_lambda: float,
                  elasticity_mu: float, relaxation_amplitude: float = 0.0,
                  relaxation_time: float = 1.0) -> "MaterialSpec":
        """
        Материал Кельвина-Фойгта: a = η·I на 𝕊^d, b - изотропный тензор Ламе.
        """
        return cls(
            dimension=dimension,
            density=density,
            viscosity=viscosity * np.eye(mandel_size(dimension)),
            elasticity=isotropic_tensor(dimension, elasticity_lambda, elasticity_mu),
            relaxation_amplitude=relaxation_amplitude,
            relaxation_time=relaxation_time,
        )

    def scaled(self, factor: float) -> "MaterialSpec":
        """Материал с тензорами a и b, умноженными на factor"""
        return MaterialSpec(self.dimension, self.density, factor * self.viscosity,
                            factor * self.elasticity, self.relaxation_amplitude, self.relaxation_time)


class KelvinVoigtConstants(NamedTuple):
    m_A: float
    L_A: float
    L_B: float


def kelvin_voigt_constants(mat: MaterialSpec) -> KelvinVoigtConstants:
    """
    Аналитические константы: эллиптичность m_A и липшицевость L_A тензора
    вязкости, L_B тензора упругости. Для неэллиптичного тензора m_A ≤ 0.

    :param mat: Материал
    :return: (m_A, L_A, L_B)
    """
    eig_a = np.linalg.eigvalsh(mat.viscosity)
    eig_b = np.linalg.eigvalsh(mat.elasticity)
    return KelvinVoigtConstants(float(eig_a[0]), float(np.max(np.abs(eig_a))), float(np.max(np.abs(eig_b))))


@dataclass(frozen=True)
class LoadSpec:
    """
    Нагрузки: объемная сила f_0(x, t) и поверхностная f_N(x, t)
    (значения - векторы длины d), сетка времени t_k = k·dt, k = 0..n_steps.
    """

    dt: float
    n_steps: int
    body_force: Optional[ForceSampler] = None
    traction: Optional[ForceSampler] = None

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)


class _Element(NamedTuple):
    nodes: Tuple[int, ...]
    measure: float
    strain: np.ndarray      # матрица деформаций (Мандель) по локальным степеням свободы
    centroid: np.ndarray


class _BoundaryNode(NamedTuple):
    node: int
    weight: float
    tangent: np.ndarray
    normal: np.ndarray


class FemSpace:
    """
    Сетка, степени свободы и элементные матрицы деформаций.

    :param mesh: Описание сетки
    """

    def __init__(self, mesh: MeshSpec):
        self.mesh = mesh
        self.dimension = mesh.dimension
        logger.debug(f"Инициализация FemSpace (dimension={mesh.dimension})")

        if not mesh.dirichlet:
            raise ConfigurationError("Пустая граница Γ_D: meas(Γ_D) должна быть положительна", key="mesh.dirichlet")
        if not mesh.contact:
            raise ConfigurationError("Пустая граница Γ_C: meas(Γ_C) должна быть положительна", key="mesh.contact")

        if self.dimension == 1:
            self._build_chain()
        else:
            self._build_rectangle()

        fixed = np.zeros(self.n_nodes * self.dofs_per_node, dtype=bool)
        for node in self.dirichlet_nodes:
            fixed[node * self.dofs_per_node:(node + 1) * self.dofs_per_node] = True
        self.free_dofs = np.flatnonzero(~fixed)
        self.n_total = fixed.size

    # --- геометрия ---------------------------------------------------

    def _build_chain(self):
        mesh = self.mesh
        n_el = mesh.subdivisions_x
        h = mesh.extent_x / n_el
        self.dofs_per_node = 1
        self.coordinates = (h * np.arange(n_el + 1))[:, None]
        self.n_nodes = n_el + 1
        self.elements: List[_Element] = []
        for e in range(n_el):
            strain = np.array([[-1.0 / h, 1.0 / h]])
            self.elements.append(_Element((e, e + 1), h, strain, np.array([(e + 0.5) * h])))

        edge_nodes = {"left": 0, "right": n_el}
        self.dirichlet_nodes = sorted({edge_nodes[edge] for edge in mesh.dirichlet})
        # точечный контакт: единичный вес
        self.contact_nodes = [_BoundaryNode(edge_nodes[edge], 1.0, np.array([1.0]), np.array([0.0]))
                              for edge in mesh.contact]
        self.neumann_nodes = [_BoundaryNode(edge_nodes[edge], 1.0, np.array([1.0]), np.array([0.0]))
                              for edge in mesh.neumann_edges()]

    def _build_rectangle(self):
        mesh = self.mesh
        nx, ny = mesh.subdivisions_x, mesh.subdivisions_y
        hx, hy = mesh.extent_x / nx, mesh.extent_y / ny
        self.dofs_per_node = 2
        self.n_nodes = (nx + 1) * (ny + 1)
        node = lambda i, j: j * (nx + 1) + i  # noqa: E731
        self.coordinates = np.array([[i * hx, j * hy] for j in range(ny + 1) for i in range(nx + 1)])

        self.elements = []
        for j in range(ny):
            for i in range(nx):
                n00, n10, n11, n01 = node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)
                for triangle in ((n00, n10, n11), (n00, n11, n01)):
                    self.elements.append(self._p1_element(triangle))

        edges = {
            "bottom": ([node(i, 0) for i in range(nx + 1)], hx, (1.0, 0.0), (0.0, -1.0)),
            "top": ([node(i, ny) for i in range(nx + 1)], hx, (1.0, 0.0), (0.0, 1.0)),
            "left": ([node(0, j) for j in range(ny + 1)], hy, (0.0, 1.0), (-1.0, 0.0)),
            "right": ([node(nx, j) for j in range(ny + 1)], hy, (0.0, 1.0), (1.0, 0.0)),
        }
        self.dirichlet_nodes = sorted({n for edge in mesh.dirichlet for n in edges[edge][0]})
        self.contact_nodes = [b for edge in mesh.contact for b in self._edge_quadrature(*edges[edge])]
        self.neumann_nodes = [b for edge in mesh.neumann_edges() for b in self._edge_quadrature(*edges[edge])]

    def _p1_element(self, triangle) -> _Element:
        xy = self.coordinates[list(triangle)]
        (x1, y1), (x2, y2), (x3, y3) = xy
        det = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)
        area = 0.5 * abs(det)
        b = np.array([y2 - y3, y3 - y1, y1 - y2]) / det
        c = np.array([x3 - x2, x1 - x3, x2 - x1]) / det
        strain = np.zeros((3, 6))
        strain[0, 0::2] = b
        strain[1, 1::2] = c
        strain[2, 0::2] = c / SQRT2
        strain[2, 1::2] = b / SQRT2
        return _Element(tuple(triangle), area, strain, xy.mean(axis=0))

    @staticmethod
    def _edge_quadrature(nodes, h, tangent, normal) -> List[_BoundaryNode]:
        # формула трапеций: h/2 в концах ребра, h во внутренних узлах
        weights = np.full(len(nodes), h)
        weights[[0, -1]] = 0.5 * h
        return [_BoundaryNode(n, float(w), np.array(tangent), np.array(normal)) for n, w in zip(nodes, weights)]

    # --- операторы ---------------------------------------------------

    def _element_dofs(self, element: _Element) -> np.ndarray:
        d = self.dofs_per_node
        return np.array([n * d + c for n in element.nodes for c in range(d)])

    def operator(self, tensor: np.ndarray) -> np.ndarray:
        """
        Матрица ∫ ε(u):D:ε(v) dx на свободных степенях свободы.

        :param tensor: Матрица Манделя D
        :return: Квадратная матрица n_dof × n_dof
        """
        full = np.zeros((self.n_total, self.n_total))
        for element in self.elements:
            dofs = self._element_dofs(element)
            full[np.ix_(dofs, dofs)] += element.measure * element.strain.T @ tensor @ element.strain
        return full[np.ix_(self.free_dofs, self.free_dofs)]

    def mass(self, density: float, consistent: bool = False) -> np.ndarray:
        """
        Матрица масс: диагональная (по умолчанию) или согласованная.
        """
        d = self.dofs_per_node
        n_local = len(self.elements[0].nodes)
        if consistent:
            local = (np.ones((n_local, n_local)) + np.eye(n_local)) / ((n_local + 1) * n_local)
        else:
            local = np.eye(n_local) / n_local
        full = np.zeros((self.n_total, self.n_total))
        for element in self.elements:
            dofs = self._element_dofs(element)
            full[np.ix_(dofs, dofs)] += density * element.measure * np.kron(local, np.eye(d))
        return full[np.ix_(self.free_dofs, self.free_dofs)]

    def _restrict_rows(self, rows: np.ndarray) -> np.ndarray:
        return rows[:, self.free_dofs]

    def traces(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """
        Отображения M (касательное), N (нормальное), веса и маска
        контактных степеней свободы.
        """
        d = self.dofs_per_node
        nc = len(self.contact_nodes)
        tau = np.zeros((nc, self.n_total))
        nu = np.zeros((nc, self.n_total))
        mask = np.zeros(self.n_total, dtype=bool)
        for row, boundary in enumerate(self.contact_nodes):
            dofs = slice(boundary.node * d, (boundary.node + 1) * d)
            tau[row, dofs] = boundary.tangent
            nu[row, dofs] = boundary.normal
            mask[dofs] = True
        weights = np.array([b.weight for b in self.contact_nodes])
        return self._restrict_rows(tau), self._restrict_rows(nu), weights, mask[self.free_dofs]

    def load(self, loads: LoadSpec) -> np.ndarray:
        """
        Векторы ⟨f(t_k), v⟩ = (f_0, v)_Ω + (f_N, v)_{Γ_N}: объемная сила в
        центре элемента, поверхностная - по трапециям на ребрах Γ_N.
        """
        d = self.dofs_per_node
        result = np.zeros((loads.n_steps + 1, self.n_total))
        for k, t in enumerate(loads.times()):
            if loads.body_force is not None:
                for element in self.elements:
                    force = np.asarray(loads.body_force(element.centroid, float(t)), dtype=float).reshape(d)
                    share = element.measure / len(element.nodes)
                    for n in element.nodes:
                        result[k, n * d:(n + 1) * d] += share * force
            if loads.traction is not None:
                for boundary in self.neumann_nodes:
                    force = np.asarray(loads.traction(self.coordinates[boundary.node], float(t)), dtype=float).reshape(d)
                    result[k, boundary.node * d:(boundary.node + 1) * d] += boundary.weight * force
        return result[:, self.free_dofs]

    def reference_tensor(self) -> np.ndarray:
        """Единичный тензор на 𝕊^d: ‖v‖_V = ‖ε(v)‖_{L²}"""
        return np.eye(mandel_size(self.dimension))


def assemble(mesh: MeshSpec, mat: MaterialSpec, loads: LoadSpec,
             visc_map: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> DiscreteProblem:
    """
    Собирает DiscreteProblem: исключает степени свободы Γ_D, строит
    массу, вязкость, норму V, следы на Γ_C и нагрузку.

    :param mesh: Сетка
    :param mat: Материал
    :param loads: Нагрузки и временная сетка
    :param visc_map: Нелинейный оператор вязкости A (необязательно)
    :return: DiscreteProblem
    """
    if mat.dimension != mesh.dimension:
        raise ConfigurationError(f"Размерность материала {mat.dimension} не совпадает с сеткой {mesh.dimension}")
    constants = kelvin_voigt_constants(mat)
    if constants.m_A <= 0:
        raise ConfigurationError(f"Тензор вязкости не эллиптичен: m_A = {constants.m_A}")

    space = FemSpace(mesh)
    mass = space.mass(mat.density, consistent=mesh.consistent_mass)
    trace_tau, trace_nu, weights, mask = space.traces()
    problem = DiscreteProblem(
        mass=mass,
        visc=space.operator(mat.viscosity),
        v_norm=space.operator(space.reference_tensor()),
        h_norm=mass,
        trace_tau=trace_tau,
        trace_nu=trace_nu,
        contact_weights=weights,
        load=space.load(loads),
        contact_dofs=mask,
        normal_offset=np.full(len(weights), mesh.contact_offset),
        visc_map=visc_map,
    )
    logger.info(f"Собрана задача: {problem.n_dof} степеней свободы, {problem.n_contact} контактных узлов, "
                f"{problem.n_steps} шагов, meas(Γ_C) = {problem.contact_measure:.6g}")
    return problem


def elasticity_operator(mesh: MeshSpec, mat: MaterialSpec) -> np.ndarray:
    """Оператор упругости ∫ b ε(u):ε(v) на свободных степенях свободы"""
    return FemSpace(mesh).operator(mat.elasticity)


def relaxation_operator(mesh: MeshSpec, mat: MaterialSpec) -> np.ndarray:
    """Пространственная часть ядра релаксации (единичный тензор)"""
    space = FemSpace(mesh)
    return space.operator(space.reference_tensor())


def relaxation_profile(mat: MaterialSpec, dt: float, n_steps: int) -> np.ndarray:
    """Амплитуды ядра на лагах 0..n_steps: amplitude·exp(−lag·dt/τ)"""
    lags = dt * np.arange(n_steps + 1)
    return mat.relaxation_amplitude * np.exp(-lags / mat.relaxation_time)
