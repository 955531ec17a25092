"""Directional derivatives of the primal-dual solution when strict complementarity or LICQ fail."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from src.analysis.cq import CQReport, check_cq
from src.analysis.kkt import PrimalDualPoint
from src.analysis.polytope import MultiplierPolytope
from src.config import Config
from src.errors import (
    DimensionMismatchError,
    EmptyPolytopeError,
    InfeasibleProblemError,
    SensikitError,
    ToleranceConflictError,
    UnboundedMultiplierError,
)
from src.kernels.lp import UNBOUNDED, LinearProgram, lp_maximize
from src.kernels.qp import QPResult, QuadraticProgram, qp_solve
from src.model.autodiff import DerivativeBundle, eval_derivatives, lagrangian_from_bundle
from src.model.problem import ParametricNLP
from src.sensitivity.fiacco import Regime

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DirectionalDerivative:
    """w'(p; h). ``dy``/``dz`` are None when the regime gives no dual derivative."""

    h: np.ndarray
    dx: np.ndarray
    dy: np.ndarray | None
    dz: np.ndarray | None
    regime: Regime
    vertex: tuple[np.ndarray, np.ndarray] | None = None
    log: tuple[str, ...] = field(default=())


@dataclass(frozen=True)
class DempeSelection:
    """Multiplier vertices maximizing y'(J_p g)h + z'(J_p h)h over the polytope."""

    vertices: tuple[tuple[np.ndarray, np.ndarray], ...]
    value: float
    coefficients: np.ndarray
    exhaustive: bool = True


@dataclass(frozen=True)
class LDStage:
    index: int
    plus: tuple[int, ...]
    zero: tuple[int, ...]


@dataclass(frozen=True)
class LDDerivative:
    R: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    stages: tuple[LDStage, ...]


def _direction(nlp: ParametricNLP, h) -> np.ndarray:
    h = np.asarray(h, dtype=float).reshape(-1)
    if h.size != nlp.ell:
        raise DimensionMismatchError(f"direction has length {h.size}, expected {nlp.ell}")
    return h


def _linearized_qp(
    bundle: DerivativeBundle,
    y: np.ndarray,
    z: np.ndarray,
    equality_h: tuple[int, ...],
    inequality_h: tuple[int, ...],
    r: np.ndarray,
) -> QuadraticProgram:
    """min 1/2 d'Hd + d'H_xp r over the linearized constraints along r.

    g and the rows in ``equality_h`` are kept as equalities, ``inequality_h``
    as <= rows; every other inequality is dropped.
    """
    lag = lagrangian_from_bundle(bundle, y, z)
    eq, ub = list(equality_h), list(inequality_h)
    A_eq = np.vstack([bundle.jac_x_g, bundle.jac_x_h[eq]])
    b_eq = -np.vstack([bundle.jac_p_g, bundle.jac_p_h[eq]]) @ r
    return QuadraticProgram(
        H=lag.hess_xx,
        q=lag.hess_xp @ r,
        A_eq=A_eq,
        b_eq=b_eq,
        A_ub=bundle.jac_x_h[ub],
        b_ub=-bundle.jac_p_h[ub] @ r,
    )


def _multipliers(
    result: QPResult, m_e: int, m_i: int, equality_h, inequality_h
) -> tuple[np.ndarray, np.ndarray]:
    dz = np.zeros(m_i)
    dz[list(equality_h)] = result.eq_multipliers[m_e:]
    dz[list(inequality_h)] = result.ub_multipliers
    return result.eq_multipliers[:m_e].copy(), dz


def _strong_split(active, z: np.ndarray, eps: float) -> tuple[tuple[int, ...], tuple[int, ...]]:
    cutoff = eps * (1.0 + float(np.max(np.abs(z), initial=0.0)))
    strong = tuple(i for i in active if z[i] > cutoff)
    return strong, tuple(i for i in active if i not in strong)


def directional_qp(
    nlp: ParametricNLP,
    point: PrimalDualPoint,
    h,
    cq: CQReport | None = None,
    bundle: DerivativeBundle | None = None,
) -> DirectionalDerivative:
    """Primal-dual directional derivative from one QP; needs LICQ and SSOSC, not SCS."""
    h = _direction(nlp, h)
    if bundle is None:
        bundle = eval_derivatives(nlp, point.x, point.p)
    if cq is None:
        cq = check_cq(nlp, point, bundle=bundle, crcq=False)
    cq.require("licq", "ssosc_subspace", context="directional_qp")

    info = cq.active
    qp = _linearized_qp(bundle, point.y, point.z, info.strongly_active, info.weakly_active, h)
    try:
        result = qp_solve(qp)
    except InfeasibleProblemError as e:
        logger.error(f"Linearized constraints are inconsistent along h={h.tolist()}: {e}")
        raise

    dy, dz = _multipliers(result, nlp.m_e, nlp.m_i, info.strongly_active, info.weakly_active)
    log = (f"weakly active {list(info.weakly_active)}, QP working set {list(result.working_set)}",)
    logger.info(f"Directional QP solved in {result.iterations} iterations")
    return DirectionalDerivative(h, result.x, dy, dz, Regime.DIRECTIONAL, log=log)


def dempe_lp(
    nlp: ParametricNLP,
    point: PrimalDualPoint,
    polytope: MultiplierPolytope,
    h,
    bundle: DerivativeBundle | None = None,
    tol: float = 1e-9,
) -> DempeSelection:
    h = _direction(nlp, h)
    if bundle is None:
        bundle = eval_derivatives(nlp, point.x, point.p)
    active = list(polytope.active)
    coefficients = np.concatenate([bundle.jac_p_g @ h, bundle.jac_p_h[active] @ h])

    if polytope.dimension == 0:
        y, z = polytope.split(np.zeros(0))
        return DempeSelection(((y, z),), 0.0, coefficients)

    bounds = ((None, None),) * polytope.m_e + ((0.0, None),) * len(active)
    result = lp_maximize(LinearProgram(coefficients, polytope.matrix, polytope.rhs, bounds=bounds))
    if result.status == UNBOUNDED:
        if polytope.bounded:
            raise ToleranceConflictError(
                "multiplier LP is unbounded although the polytope was certified bounded (MFCQ)"
            )
        raise UnboundedMultiplierError("multiplier LP is unbounded; MFCQ does not hold")
    if not result.optimal:
        raise EmptyPolytopeError(f"multiplier LP ended {result.status}")

    value = float(result.objective)
    if polytope.vertices is None:
        logger.warning("Multiplier vertices unavailable; using the LP solution only")
        return DempeSelection((polytope.split(result.x),), value, coefficients, exhaustive=False)

    cutoff = value - tol * (1.0 + abs(value))
    selected = tuple(polytope.split(v) for v in polytope.vertices if coefficients @ v >= cutoff)
    if not selected:
        selected = (polytope.split(result.x),)
    logger.info(f"Multiplier LP selected {len(selected)} of {polytope.n_vertices} vertices (value {value:.6g})")
    return DempeSelection(selected, value, coefficients, exhaustive=polytope.vertices.exhaustive)


def degenerate_directional(
    nlp: ParametricNLP,
    point: PrimalDualPoint,
    h,
    cq: CQReport | None = None,
    bundle: DerivativeBundle | None = None,
    eps: float = Config.ACTIVE_TOL,
    spread_tol: float = 1e-7,
) -> DirectionalDerivative:
    """Primal directional derivative under MFCQ, CRCQ and GSSOSC.

    Every vertex picked by the multiplier LP is tried and the resulting
    primal derivatives must coincide.
    """
    h = _direction(nlp, h)
    if bundle is None:
        bundle = eval_derivatives(nlp, point.x, point.p)
    if cq is None:
        cq = check_cq(nlp, point, bundle=bundle)
    cq.require("mfcq", "crcq_sampled", "gssosc_subspace", context="degenerate_directional")

    selection = dempe_lp(nlp, point, cq.polytope, h, bundle)
    active = cq.active.active
    derivatives = []
    log = [f"multiplier LP value {selection.value:.6g}, {len(selection.vertices)} optimal vertices"]
    for k, (y_v, z_v) in enumerate(selection.vertices):
        strong, weak = _strong_split(active, z_v, eps)
        qp = _linearized_qp(bundle, y_v, z_v, strong, weak, h)
        try:
            result = qp_solve(qp)
        except InfeasibleProblemError as e:
            logger.error(f"Critical set empty at vertex {k}: {e}")
            raise ToleranceConflictError(
                f"critical set at multiplier vertex {k} is empty although the multiplier LP is solvable",
                row=e.row,
            ) from e
        derivatives.append(result.x)
        log.append(f"vertex {k}: z={z_v.tolist()} strongly active {list(strong)} dx={result.x.tolist()}")

    dx = derivatives[0]
    spread = max(float(np.max(np.abs(d - dx), initial=0.0)) for d in derivatives)
    if spread > spread_tol * (1.0 + float(np.max(np.abs(dx), initial=0.0))):
        raise ToleranceConflictError(
            f"primal directional derivative differs across multiplier vertices (spread {spread:.3e})",
            spread=spread,
        )
    logger.info(f"Degenerate directional derivative from {len(derivatives)} vertices (spread {spread:.1e})")
    return DirectionalDerivative(h, dx, None, None, Regime.DEGENERATE, selection.vertices[0], tuple(log))


def ld_derivative(
    nlp: ParametricNLP,
    point: PrimalDualPoint,
    R,
    cq: CQReport | None = None,
    bundle: DerivativeBundle | None = None,
    eps: float = Config.ACTIVE_TOL,
) -> LDDerivative:
    """Lexicographic directional derivative along the columns of R, one QP per column."""
    R = np.asarray(R, dtype=float)
    if R.ndim == 1:
        R = R.reshape(-1, 1)
    if R.shape[0] != nlp.ell:
        raise DimensionMismatchError(f"direction matrix has {R.shape[0]} rows, expected {nlp.ell}")
    if bundle is None:
        bundle = eval_derivatives(nlp, point.x, point.p)
    if cq is None:
        cq = check_cq(nlp, point, bundle=bundle, crcq=False)
    cq.require("licq", "ssosc_subspace", context="ld_derivative")

    k = R.shape[1]
    X = np.zeros((nlp.n, k))
    Y = np.zeros((nlp.m_e, k))
    Z = np.zeros((nlp.m_i, k))
    plus, zero = tuple(cq.active.strongly_active), tuple(cq.active.weakly_active)
    stages = []
    for j in range(k):
        r = R[:, j]
        stages.append(LDStage(j, plus, zero))
        try:
            result = qp_solve(_linearized_qp(bundle, point.y, point.z, plus, zero, r))
        except SensikitError as e:
            e.details["stage"] = j
            logger.error(f"LD-derivative stage {j} failed: {e}")
            raise

        X[:, j] = result.x
        Y[:, j], Z[:, j] = _multipliers(result, nlp.m_e, nlp.m_i, plus, zero)

        gamma = result.ub_multipliers
        cutoff = eps * (1.0 + float(np.max(np.abs(gamma), initial=0.0)))
        moved = bundle.jac_x_h[list(zero)] @ result.x + bundle.jac_p_h[list(zero)] @ r
        scale = eps * (1.0 + np.abs(result.x).max(initial=0.0) + np.abs(r).max(initial=0.0))
        promoted = tuple(i for i, g in zip(zero, gamma) if g > cutoff)
        plus = tuple(sorted(plus + promoted))
        zero = tuple(
            i for i, g, m in zip(zero, gamma, moved) if g <= cutoff and abs(m) <= scale
        )
        logger.debug(f"LD stage {j}: promoted {list(promoted)}, still undecided {list(zero)}")

    return LDDerivative(R, X, Y, Z, tuple(stages))
