"""Derivatives of the optimal value function phi(p) = f(x(p), p)."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from src.analysis.kkt import PrimalDualPoint, classify_active
from src.analysis.polytope import build_multiplier_polytope
from src.config import Config
from src.errors import (
    ConstraintsDependOnParameterError,
    EmptyPolytopeError,
    NotCanonicalFormError,
    RegimeMismatchError,
    UnboundedMultiplierError,
)
from src.kernels.lp import UNBOUNDED, LinearProgram, lp_maximize, lp_solve
from src.model.autodiff import DerivativeBundle, eval_derivatives, eval_values, lagrangian_from_bundle
from src.model.expr import count_param_occurrences, param_coefficients
from src.model.problem import ParametricNLP
from src.sensitivity.fiacco import Regime, SensitivityResult, fiacco_jacobian

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DirectionalValue:
    h: np.ndarray
    value: float
    lower: float
    upper: float


@dataclass(frozen=True)
class ValueReport:
    phi: float
    gradient: np.ndarray | None
    hessian: np.ndarray | None
    regime: str
    method: str
    asymmetry: float = 0.0
    directional: tuple[DirectionalValue, ...] = field(default=())


def _symmetrized(H: np.ndarray) -> tuple[np.ndarray, float]:
    asymmetry = float(np.max(np.abs(H - H.T), initial=0.0))
    if asymmetry > 1e-7 * (1.0 + float(np.max(np.abs(H), initial=0.0))):
        logger.warning(f"Value Hessian asymmetry {asymmetry:.3e} before symmetrization")
    return 0.5 * (H + H.T), asymmetry


def _require_fiacco(sens: SensitivityResult, context: str):
    if sens.regime != Regime.FIACCO:
        raise RegimeMismatchError(
            f"{context} needs Fiacco-regime sensitivities, got '{sens.regime.value}'",
            regime=sens.regime.value,
        )


def value_gradient_hessian(
    nlp: ParametricNLP,
    point: PrimalDualPoint,
    sens: SensitivityResult,
    bundle: DerivativeBundle | None = None,
) -> ValueReport:
    """grad phi = grad_p L and Hess phi = L_pp + L_px J_x + J_p g' J_y + J_p h' J_z."""
    _require_fiacco(sens, "value_gradient_hessian")
    if bundle is None:
        bundle = eval_derivatives(nlp, point.x, point.p)
    lag = lagrangian_from_bundle(bundle, point.y, point.z)

    hessian = (
        lag.hess_pp
        + lag.hess_px @ sens.jac_x
        + bundle.jac_p_g.T @ sens.jac_y
        + bundle.jac_p_h.T @ sens.jac_z
    )
    hessian, asymmetry = _symmetrized(hessian)
    return ValueReport(
        phi=float(bundle.f),
        gradient=lag.grad_p,
        hessian=hessian,
        regime=Regime.FIACCO.value,
        method="lagrangian",
        asymmetry=asymmetry,
    )


def value_gradient_objective_only(
    nlp: ParametricNLP,
    point: PrimalDualPoint,
    sens: SensitivityResult | None = None,
    bundle: DerivativeBundle | None = None,
    tol: float = 1e-12,
) -> ValueReport:
    """Envelope form for parameter-free constraints: only derivatives of f enter."""
    if bundle is None:
        bundle = eval_derivatives(nlp, point.x, point.p)
    dependence = max(
        float(np.max(np.abs(bundle.jac_p_g), initial=0.0)),
        float(np.max(np.abs(bundle.jac_p_h), initial=0.0)),
    )
    if dependence > tol:
        raise ConstraintsDependOnParameterError(
            f"constraint Jacobian in p is nonzero ({dependence:.3e}); use value_gradient_hessian",
            dependence=dependence,
        )
    if sens is None:
        sens = fiacco_jacobian(nlp, point, bundle=bundle)
    _require_fiacco(sens, "value_gradient_objective_only")

    hessian, asymmetry = _symmetrized(bundle.hess_pp_f + bundle.hess_xp_f.T @ sens.jac_x)
    return ValueReport(
        phi=float(bundle.f),
        gradient=bundle.grad_p_f.copy(),
        hessian=hessian,
        regime=Regime.FIACCO.value,
        method="objective-only",
        asymmetry=asymmetry,
    )


def _canonical_rows(nlp: ParametricNLP) -> list[tuple[str, int, float]]:
    """(kind, row, coefficient) of the single constraint each parameter enters."""
    name = nlp.param_names
    if any(count_param_occurrences(nlp.objective).values()):
        used = sorted(k for k, c in count_param_occurrences(nlp.objective).items() if c)
        raise NotCanonicalFormError(
            f"parameter '{name[used[0]]}' appears in the objective", parameter=name[used[0]]
        )

    rows = [("eq", i, e) for i, e in enumerate(nlp.equalities)]
    rows += [("ineq", i, e) for i, e in enumerate(nlp.inequalities)]
    placement: list[tuple[str, int, float]] = []
    for k in range(nlp.ell):
        hits = [(kind, i, e) for kind, i, e in rows if count_param_occurrences(e).get(k, 0)]
        total = sum(count_param_occurrences(e).get(k, 0) for _, _, e in hits)
        if total != 1:
            raise NotCanonicalFormError(
                f"parameter '{name[k]}' occurs {total} times in the constraints, expected once",
                parameter=name[k],
            )
        kind, i, expr = hits[0]
        coefficients = param_coefficients(expr)
        if coefficients is None or coefficients.get(k, 0.0) == 0.0:
            raise NotCanonicalFormError(
                f"parameter '{name[k]}' does not enter {kind}[{i}] as an additive right-hand side",
                parameter=name[k],
            )
        placement.append((kind, i, coefficients[k]))
    return placement


def shadow_prices(
    nlp: ParametricNLP,
    point: PrimalDualPoint,
    sens: SensitivityResult | None = None,
) -> ValueReport:
    """Right-hand-side perturbations: grad phi_k = c_k * multiplier of the row holding p_k.

    With rows written g(x) - p_k the coefficient is -1, giving -y and -z.
    """
    placement = _canonical_rows(nlp)
    if sens is None:
        sens = fiacco_jacobian(nlp, point)
    _require_fiacco(sens, "shadow_prices")

    gradient = np.zeros(nlp.ell)
    hessian = np.zeros((nlp.ell, nlp.ell))
    for k, (kind, i, coefficient) in enumerate(placement):
        multiplier, jacobian = (point.y, sens.jac_y) if kind == "eq" else (point.z, sens.jac_z)
        gradient[k] = coefficient * multiplier[i]
        hessian[k] = coefficient * jacobian[i]
    hessian, asymmetry = _symmetrized(hessian)
    f, _, _ = eval_values(nlp, point.x, point.p)
    return ValueReport(
        phi=float(f),
        gradient=gradient,
        hessian=hessian,
        regime=Regime.FIACCO.value,
        method="shadow-prices",
        asymmetry=asymmetry,
    )


def _inner_extrema(
    nlp: ParametricNLP, point: PrimalDualPoint, h: np.ndarray, index: int, eps: float
) -> tuple[float, float]:
    """min and max of grad_p L(x, y, z, p)'h over the multiplier polytope at ``point``."""
    bundle = eval_derivatives(nlp, point.x, point.p)
    info = classify_active(nlp, point, eps, bundle=bundle)
    polytope = build_multiplier_polytope(
        nlp, point.x, point.p, info.active, with_vertices=False, bundle=bundle
    )
    constant = float(bundle.grad_p_f @ h)
    coefficients = np.concatenate([bundle.jac_p_g @ h, bundle.jac_p_h[list(info.active)] @ h])
    if polytope.dimension == 0:
        return constant, constant

    bounds = ((None, None),) * nlp.m_e + ((0.0, None),) * len(info.active)
    lp = LinearProgram(coefficients, polytope.matrix, polytope.rhs, bounds=bounds)
    low, high = lp_solve(lp), lp_maximize(lp)
    for result in (low, high):
        if result.status == UNBOUNDED:
            raise UnboundedMultiplierError(
                f"multiplier LP unbounded at solution {index}; MFCQ fails there", solution=index
            )
        if not result.optimal:
            raise EmptyPolytopeError(f"multiplier LP at solution {index} ended {result.status}")
    return constant + float(low.objective), constant + float(high.objective)


def _directions(nlp: ParametricNLP, solutions, h) -> tuple[list[PrimalDualPoint], np.ndarray]:
    h = np.asarray(h, dtype=float).reshape(-1)
    solutions = list(solutions)
    if not solutions:
        raise ValueError("at least one solution is required")
    for point in solutions:
        point.check(nlp)
    return solutions, h


def value_directional(
    nlp: ParametricNLP, solutions, h, eps: float = Config.ACTIVE_TOL
) -> float:
    """min over the supplied solutions of max over their multipliers of grad_p L'h."""
    solutions, h = _directions(nlp, solutions, h)
    if not np.any(h):
        return 0.0
    return min(_inner_extrema(nlp, point, h, k, eps)[1] for k, point in enumerate(solutions))


def dini_bounds(
    nlp: ParametricNLP, solutions, h, eps: float = Config.ACTIVE_TOL
) -> tuple[float, float]:
    """(lower, upper) bounds on the Dini derivatives of phi along h."""
    solutions, h = _directions(nlp, solutions, h)
    if not np.any(h):
        return 0.0, 0.0
    extrema = [_inner_extrema(nlp, point, h, k, eps) for k, point in enumerate(solutions)]
    lower = min(low for low, _ in extrema)
    upper = min(high for _, high in extrema)
    logger.debug(f"Dini bounds along h={h.tolist()}: [{lower:.6g}, {upper:.6g}]")
    return lower, upper


def directional_summary(
    nlp: ParametricNLP, solutions, h, eps: float = Config.ACTIVE_TOL
) -> DirectionalValue:
    solutions, h = _directions(nlp, solutions, h)
    lower, upper = dini_bounds(nlp, solutions, h, eps)
    return DirectionalValue(h, value_directional(nlp, solutions, h, eps), lower, upper)
