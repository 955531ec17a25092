"""Primal-dual points, KKT residuals and active-set classification."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from src.config import Config
from src.errors import DimensionMismatchError, NotStationaryError
from src.model.autodiff import DerivativeBundle, eval_derivatives, lagrangian_from_bundle
from src.model.problem import ParametricNLP

logger = logging.getLogger(__name__)


def _vec(values) -> np.ndarray:
    return np.asarray(values if values is not None else [], dtype=float).reshape(-1)


@dataclass(frozen=True)
class PrimalDualPoint:
    """(x, y, z) at parameter p."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        for name in ("x", "y", "z", "p"):
            object.__setattr__(self, name, _vec(getattr(self, name)))

    def check(self, nlp: ParametricNLP) -> PrimalDualPoint:
        shapes = (self.x.size, self.y.size, self.z.size, self.p.size)
        expected = (nlp.n, nlp.m_e, nlp.m_i, nlp.ell)
        if shapes != expected:
            raise DimensionMismatchError(f"point has sizes (x, y, z, p) = {shapes}, expected {expected}")
        return self

    def clamped(self, eps: float = Config.ACTIVE_TOL) -> PrimalDualPoint:
        """Round multipliers in [-eps, 0) up to zero."""
        z = np.where((self.z < 0.0) & (self.z >= -eps), 0.0, self.z)
        return replace(self, z=z)

    def moved(self, dx=None, dy=None, dz=None, dp=None) -> PrimalDualPoint:
        return PrimalDualPoint(
            x=self.x + (0.0 if dx is None else np.asarray(dx)),
            y=self.y + (0.0 if dy is None else np.asarray(dy)),
            z=self.z + (0.0 if dz is None else np.asarray(dz)),
            p=self.p + (0.0 if dp is None else np.asarray(dp)),
        )


@dataclass(frozen=True)
class KKTResidual:
    stationarity: float
    primal_eq: float
    primal_ineq: float
    complementarity: float
    dual_sign: float

    def max(self) -> float:
        return max(self.as_dict().values())

    def accepted(self, tol: float = Config.KKT_TOL) -> bool:
        return all(value <= tol for value in self.as_dict().values())

    def as_dict(self) -> dict[str, float]:
        return {
            "stationarity": self.stationarity,
            "primal_eq": self.primal_eq,
            "primal_ineq": self.primal_ineq,
            "complementarity": self.complementarity,
            "dual_sign": self.dual_sign,
        }


@dataclass(frozen=True)
class ActiveSetInfo:
    """Index sets at a KKT point; strongly and weakly active partition ``active``."""

    active: tuple[int, ...]
    strongly_active: tuple[int, ...]
    weakly_active: tuple[int, ...]
    inactive: tuple[int, ...]
    tolerance: float
    residual: KKTResidual | None = field(default=None, compare=False)


def kkt_residual(nlp: ParametricNLP, point: PrimalDualPoint, bundle: DerivativeBundle | None = None) -> KKTResidual:
    """Infinity-norm breakdown of the KKT conditions for L = f + y'g + z'h."""
    point.check(nlp)
    if bundle is None:
        bundle = eval_derivatives(nlp, point.x, point.p)
    grad = lagrangian_from_bundle(bundle, point.y, point.z).grad_x

    def norm(v) -> float:
        return float(np.max(np.abs(v), initial=0.0))

    return KKTResidual(
        stationarity=norm(grad),
        primal_eq=norm(bundle.g),
        primal_ineq=float(np.max(np.maximum(bundle.h, 0.0), initial=0.0)),
        complementarity=norm(point.z * bundle.h),
        dual_sign=float(np.max(np.maximum(-point.z, 0.0), initial=0.0)),
    )


def partition_active(
    h: np.ndarray,
    jac_x_h: np.ndarray,
    z: np.ndarray,
    eps: float = Config.ACTIVE_TOL,
) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
    """(active, strongly active, weakly active, inactive) from values alone."""
    scale = 1.0 + np.max(np.abs(jac_x_h), axis=1, initial=0.0) if h.size else np.zeros(0)
    active = [i for i in range(h.size) if abs(h[i]) <= eps * scale[i]]
    z_scale = 1.0 + float(np.max(np.abs(z), initial=0.0))
    strongly = [i for i in active if z[i] > eps * z_scale]
    weakly = [i for i in active if i not in strongly]
    inactive = [i for i in range(h.size) if i not in active]
    return tuple(active), tuple(strongly), tuple(weakly), tuple(inactive)


def classify_active(
    nlp: ParametricNLP,
    point: PrimalDualPoint,
    eps: float = Config.ACTIVE_TOL,
    kkt_tol: float = Config.KKT_TOL,
    bundle: DerivativeBundle | None = None,
) -> ActiveSetInfo:
    """Active, strongly active and weakly active inequality indices at a KKT point."""
    if bundle is None:
        bundle = eval_derivatives(nlp, point.x, point.p)
    residual = kkt_residual(nlp, point, bundle)
    if not residual.accepted(kkt_tol):
        breakdown = residual.as_dict()
        worst = max(breakdown, key=breakdown.get)
        raise NotStationaryError(
            f"point is not a KKT point: {worst} residual {breakdown[worst]:.3e} exceeds {kkt_tol:.1e}",
            residual=breakdown,
        )

    active, strongly, weakly, inactive = partition_active(bundle.h, bundle.jac_x_h, point.z, eps)
    logger.debug(f"active={active} strongly={strongly} weakly={weakly}")
    return ActiveSetInfo(active, strongly, weakly, inactive, eps, residual)
