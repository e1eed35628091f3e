"""
Inverse-demand and cost families for the Cournot model

Every family evaluates on scalars or numpy arrays.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from utils.core.errors import DomainError


class InverseDemand(ABC):
    """p(Q), clamped to zero at and beyond q_max"""

    @property
    @abstractmethod
    def q_max(self) -> float:
        pass

    @abstractmethod
    def price(self, Q):
        pass

    @abstractmethod
    def slope(self, Q):
        """p'(Q); zero beyond q_max"""
        pass

    def is_strictly_decreasing(self, upper: float, samples: int = 200) -> bool:
        grid = np.linspace(0.0, min(upper, self.q_max), samples)
        return bool(np.all(np.diff(self.price(grid)) < 0))

    def is_weakly_concave(self, upper: float, samples: int = 200) -> bool:
        """Second differences spot-checked on [0, min(upper, q_max)]"""
        grid = np.linspace(0.0, min(upper, self.q_max), samples)
        second = np.diff(self.price(grid), n=2)
        return bool(np.all(second <= 1e-9 * max(1.0, float(self.price(0.0)))))


@dataclass(frozen=True)
class LinearDemand(InverseDemand):
    intercept: float
    slope_coeff: float

    @property
    def q_max(self) -> float:
        if self.slope_coeff <= 0:
            return float("inf")
        return self.intercept / self.slope_coeff

    def price(self, Q):
        return np.maximum(self.intercept - self.slope_coeff * np.asarray(Q, dtype=float), 0.0)

    def slope(self, Q):
        Q = np.asarray(Q, dtype=float)
        return np.where(Q < self.q_max, -self.slope_coeff, 0.0)


@dataclass(frozen=True)
class TableDemand(InverseDemand):
    """Piecewise-linear demand through (Q, p) points; zero past the last point"""

    points: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        if len(self.points) < 2:
            raise DomainError("table demand needs at least two points")
        xs = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise DomainError("table demand points must have strictly increasing Q")
        if xs[0] != 0:
            raise DomainError("table demand must start at Q=0")

    @property
    def _xs(self) -> np.ndarray:
        return np.array([p[0] for p in self.points], dtype=float)

    @property
    def _ys(self) -> np.ndarray:
        return np.array([p[1] for p in self.points], dtype=float)

    @property
    def q_max(self) -> float:
        ys = self._ys
        zero = np.nonzero(ys <= 0)[0]
        return float(self._xs[zero[0]]) if zero.size else float(self._xs[-1])

    def price(self, Q):
        Q = np.asarray(Q, dtype=float)
        value = np.interp(Q, self._xs, self._ys, right=0.0)
        return np.where(Q >= self.q_max, 0.0, np.maximum(value, 0.0))

    def slope(self, Q):
        Q = np.asarray(Q, dtype=float)
        xs, ys = self._xs, self._ys
        slopes = np.diff(ys) / np.diff(xs)
        idx = np.clip(np.searchsorted(xs, Q, side="right") - 1, 0, len(slopes) - 1)
        return np.where(Q < self.q_max, slopes[idx], 0.0)


@dataclass(frozen=True, eq=False)
class CallableDemand(InverseDemand):
    """User-supplied p with declared Q_max; trusted, spot-checked by validate()"""

    func: Callable[[float], float]
    declared_q_max: float
    derivative: Optional[Callable[[float], float]] = None
    step: float = field(default=1e-6)

    @property
    def q_max(self) -> float:
        return self.declared_q_max

    def price(self, Q):
        Q = np.asarray(Q, dtype=float)
        raw = np.vectorize(self.func, otypes=[float])(Q)
        return np.where(Q >= self.q_max, 0.0, np.maximum(raw, 0.0))

    def slope(self, Q):
        Q = np.asarray(Q, dtype=float)
        if self.derivative is not None:
            d = np.vectorize(self.derivative, otypes=[float])(Q)
        else:
            h = self.step
            d = (self.price(Q + h) - self.price(np.maximum(Q - h, 0.0))) / (
                Q + h - np.maximum(Q - h, 0.0)
            )
        return np.where(Q < self.q_max, d, 0.0)


class CostFunction(ABC):
    @abstractmethod
    def cost(self, q):
        pass

    @abstractmethod
    def marginal(self, q):
        pass


@dataclass(frozen=True)
class PowerCost(CostFunction):
    """c(q) = coeff * q**exponent"""

    coeff: float
    exponent: float

    def __post_init__(self):
        if self.coeff <= 0 or self.exponent < 1:
            raise DomainError("power cost needs coeff > 0 and exponent >= 1")

    def cost(self, q):
        return self.coeff * np.power(np.asarray(q, dtype=float), self.exponent)

    def marginal(self, q):
        q = np.asarray(q, dtype=float)
        return self.coeff * self.exponent * np.power(q, self.exponent - 1)


@dataclass(frozen=True)
class QuadraticCost(CostFunction):
    """c(q) = linear * q + quadratic * q**2"""

    linear: float = 0.0
    quadratic: float = 0.5

    def __post_init__(self):
        if self.linear < 0 or self.quadratic < 0 or (self.linear == 0 and self.quadratic == 0):
            raise DomainError("quadratic cost must be strictly increasing and convex")

    def cost(self, q):
        q = np.asarray(q, dtype=float)
        return self.linear * q + self.quadratic * q * q

    def marginal(self, q):
        return self.linear + 2.0 * self.quadratic * np.asarray(q, dtype=float)


@dataclass(frozen=True, eq=False)
class CallableCost(CostFunction):
    func: Callable[[float], float]
    derivative: Callable[[float], float]

    def cost(self, q):
        return np.vectorize(self.func, otypes=[float])(np.asarray(q, dtype=float))

    def marginal(self, q):
        return np.vectorize(self.derivative, otypes=[float])(np.asarray(q, dtype=float))
