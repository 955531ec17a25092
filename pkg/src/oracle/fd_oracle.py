"""Brute-force finite-difference oracle built on independent re-solves."""

from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.analysis.kkt import PrimalDualPoint, classify_active
from src.config import Config
from src.errors import (
    ActiveSetChangeError,
    DimensionMismatchError,
    EvaluationDomainError,
    ResolveError,
    SensikitError,
)
from src.model.autodiff import eval_values
from src.model.problem import ParametricNLP
from src.solvers.barrier import BarrierState, sumt_solve
from src.solvers.corrector import CorrectionResult, guess_active, newton_correct

logger = logging.getLogger(__name__)


class OracleConfig(BaseModel):
    """Step ladder and re-solve accuracy of the oracle."""

    model_config = ConfigDict(frozen=True)

    central_step: float = Field(default=Config.FD_STEP, gt=0.0)
    one_sided_steps: tuple[float, ...] = Field(default_factory=Config.fd_one_sided_steps)
    value_step: float = Field(default=1e-3, gt=0.0)
    resolve_tol: float = Field(default=Config.RESOLVE_TOL, gt=0.0)
    r_schedule: tuple[float, ...] = Field(default_factory=Config.r_schedule)

    @field_validator("one_sided_steps", "r_schedule")
    @classmethod
    def _positive_decreasing(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if not value or any(v <= 0.0 for v in value):
            raise ValueError("steps must be positive")
        if any(b >= a for a, b in zip(value, value[1:])):
            raise ValueError("steps must be strictly decreasing")
        return value


@dataclass(frozen=True)
class Resolution:
    point: PrimalDualPoint
    value: float
    active: tuple[int, ...]
    states: tuple[BarrierState, ...]
    correction: CorrectionResult


@dataclass(frozen=True)
class FDJacobian:
    jac_x: np.ndarray
    jac_y: np.ndarray
    jac_z: np.ndarray
    steps: np.ndarray
    active: tuple[int, ...]


@dataclass(frozen=True)
class FDDirectional:
    h: np.ndarray
    steps: tuple[float, ...]
    quotients: np.ndarray
    estimate: np.ndarray
    monotone: bool


@dataclass(frozen=True)
class FDValueDerivatives:
    phi: float
    gradient: np.ndarray
    hessian: np.ndarray
    steps: np.ndarray


@dataclass(frozen=True)
class DiniQuotients:
    h: np.ndarray
    steps: tuple[float, ...]
    quotients: tuple[float, ...]
    lower: float
    upper: float


def _parameter(nlp: ParametricNLP, p) -> np.ndarray:
    if p is None:
        if nlp.p0 is None:
            raise DimensionMismatchError(f"{nlp.name} has no default parameter; pass p explicitly")
        p = nlp.p0
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size != nlp.ell:
        raise DimensionMismatchError(f"parameter has length {p.size}, expected {nlp.ell}")
    return p


def _direction(nlp: ParametricNLP, h) -> np.ndarray:
    h = np.asarray(h, dtype=float).reshape(-1)
    if h.size != nlp.ell:
        raise DimensionMismatchError(f"direction has length {h.size}, expected {nlp.ell}")
    return h


def _start(nlp: ParametricNLP, p: np.ndarray, warm: PrimalDualPoint | None):
    if warm is not None:
        try:
            _, _, h = eval_values(nlp, warm.x, p)
            if h.size == 0 or np.max(h) < 0.0:
                return warm.x
        except EvaluationDomainError:
            pass
    return nlp.x0


def resolve(
    nlp: ParametricNLP,
    p=None,
    config: OracleConfig | None = None,
    warm: PrimalDualPoint | None = None,
) -> Resolution:
    """SUMT followed by an active-set Newton polish to ``resolve_tol``.

    ``warm`` is used as the SUMT start when it is strictly feasible at p.
    """
    config = config or OracleConfig()
    p = _parameter(nlp, p)
    try:
        barrier_point, states = sumt_solve(
            nlp, p, _start(nlp, p, warm), config.r_schedule, strict=False
        )
        correction = newton_correct(
            nlp, barrier_point, guess_active(nlp, barrier_point), tol=config.resolve_tol
        )
        active = classify_active(nlp, correction.point).active
        f, _, _ = eval_values(nlp, correction.point.x, p)
    except SensikitError as e:
        logger.error(f"Re-solve at p={p.tolist()} failed: {e}")
        raise ResolveError(f"re-solve at p={p.tolist()} failed: {e}", p=p.tolist()) from e
    logger.debug(f"Re-solved {nlp.name} at p={p.tolist()}: active={active}, phi={f:.12g}")
    return Resolution(correction.point, float(f), active, tuple(states), correction)


async def _resolve_many_async(
    nlp: ParametricNLP,
    parameters: list[np.ndarray],
    config: OracleConfig,
    warm: PrimalDualPoint | None,
) -> list[Resolution]:
    tasks = [asyncio.to_thread(resolve, nlp, p, config, warm) for p in parameters]
    return list(await asyncio.gather(*tasks))


def _resolve_many(nlp, parameters, config, warm) -> list[Resolution]:
    return asyncio.run(_resolve_many_async(nlp, parameters, config, warm))


def _stencil_steps(p: np.ndarray, step: float) -> np.ndarray:
    return step * np.maximum(1.0, np.abs(p))


async def fd_jacobian_async(
    nlp: ParametricNLP, p=None, config: OracleConfig | None = None
) -> FDJacobian:
    """Central differences of re-solved primal-dual points, stencil solved concurrently.

    Duals are compared index by index, which is only meaningful while the
    active set stays the same; any change inside the stencil raises.
    """
    config = config or OracleConfig()
    p = _parameter(nlp, p)
    base = await asyncio.to_thread(resolve, nlp, p, config)
    steps = _stencil_steps(p, config.central_step)

    parameters = []
    for k in range(nlp.ell):
        e = np.zeros(nlp.ell)
        e[k] = steps[k]
        parameters.extend([p + e, p - e])
    results = await _resolve_many_async(nlp, parameters, config, base.point)

    for q, result in zip(parameters, results):
        if result.active != base.active:
            raise ActiveSetChangeError(
                f"active set changes from {list(base.active)} to {list(result.active)} "
                f"inside the stencil at p={q.tolist()}; shrink the step or use one-sided differences",
                base=list(base.active),
                perturbed=list(result.active),
                p=q.tolist(),
            )

    jac_x = np.zeros((nlp.n, nlp.ell))
    jac_y = np.zeros((nlp.m_e, nlp.ell))
    jac_z = np.zeros((nlp.m_i, nlp.ell))
    for k in range(nlp.ell):
        plus, minus = results[2 * k].point, results[2 * k + 1].point
        scale = 2.0 * steps[k]
        jac_x[:, k] = (plus.x - minus.x) / scale
        jac_y[:, k] = (plus.y - minus.y) / scale
        jac_z[:, k] = (plus.z - minus.z) / scale
    logger.info(f"FD Jacobian of {nlp.name} from {len(parameters)} re-solves")
    return FDJacobian(jac_x, jac_y, jac_z, steps, base.active)


def fd_jacobian(nlp: ParametricNLP, p=None, config: OracleConfig | None = None) -> FDJacobian:
    return asyncio.run(fd_jacobian_async(nlp, p, config))


def _monotone(quotients: np.ndarray, tol: float = 1e-9) -> bool:
    diffs = np.diff(quotients, axis=0)
    rising = np.all(diffs >= -tol, axis=0)
    falling = np.all(diffs <= tol, axis=0)
    return bool(np.all(rising | falling))


def fd_directional(
    nlp: ParametricNLP, p=None, h=None, config: OracleConfig | None = None
) -> FDDirectional:
    """One-sided quotients (x(p + t h) - x(p)) / t over the step ladder.

    The estimate is the quotient at the smallest step; ``monotone`` tells
    whether every component moves in one direction along the ladder.
    """
    config = config or OracleConfig()
    p = _parameter(nlp, p)
    h = _direction(nlp, np.zeros(nlp.ell) if h is None else h)
    steps = config.one_sided_steps
    if not np.any(h):
        zeros = np.zeros((len(steps), nlp.n))
        return FDDirectional(h, steps, zeros, np.zeros(nlp.n), True)

    base = resolve(nlp, p, config)
    results = _resolve_many(nlp, [p + t * h for t in steps], config, base.point)
    quotients = np.array([(r.point.x - base.point.x) / t for r, t in zip(results, steps)])
    monotone = _monotone(quotients)
    logger.info(f"FD directional estimate {quotients[-1].tolist()} (monotone={monotone})")
    return FDDirectional(h, steps, quotients, quotients[-1].copy(), monotone)


def fd_value_derivatives(
    nlp: ParametricNLP, p=None, config: OracleConfig | None = None
) -> FDValueDerivatives:
    """Central gradient and second-difference Hessian of the re-solved value."""
    config = config or OracleConfig()
    p = _parameter(nlp, p)
    base = resolve(nlp, p, config)
    steps = _stencil_steps(p, config.value_step)
    ell = nlp.ell
    E = np.diag(steps)

    parameters: list[np.ndarray] = []
    for k in range(ell):
        parameters.extend([p + E[k], p - E[k]])
    pairs = [(k, j) for k in range(ell) for j in range(k + 1, ell)]
    for k, j in pairs:
        parameters.extend([p + E[k] + E[j], p + E[k] - E[j], p - E[k] + E[j], p - E[k] - E[j]])
    values = [r.value for r in _resolve_many(nlp, parameters, config, base.point)]

    phi = base.value
    gradient = np.zeros(ell)
    hessian = np.zeros((ell, ell))
    for k in range(ell):
        plus, minus = values[2 * k], values[2 * k + 1]
        gradient[k] = (plus - minus) / (2.0 * steps[k])
        hessian[k, k] = (plus - 2.0 * phi + minus) / steps[k] ** 2
    offset = 2 * ell
    for index, (k, j) in enumerate(pairs):
        pp, pm, mp, mm = values[offset + 4 * index : offset + 4 * index + 4]
        hessian[k, j] = hessian[j, k] = (pp - pm - mp + mm) / (4.0 * steps[k] * steps[j])
    return FDValueDerivatives(phi, gradient, hessian, steps)


def fd_dini_quotients(
    nlp: ParametricNLP, p=None, h=None, config: OracleConfig | None = None
) -> DiniQuotients:
    """(phi(p + t h) - phi(p)) / t over the ladder; min and max bracket the Dini derivatives."""
    config = config or OracleConfig()
    p = _parameter(nlp, p)
    h = _direction(nlp, np.zeros(nlp.ell) if h is None else h)
    steps = config.one_sided_steps
    if not np.any(h):
        return DiniQuotients(h, steps, tuple(0.0 for _ in steps), 0.0, 0.0)

    base = resolve(nlp, p, config)
    results = _resolve_many(nlp, [p + t * h for t in steps], config, base.point)
    quotients = tuple((r.value - base.value) / t for r, t in zip(results, steps))
    return DiniQuotients(h, steps, quotients, min(quotients), max(quotients))


def compare(analytic, estimate) -> dict[str, float]:
    """Absolute and relative max-norm gap between an analytic and an FD quantity."""
    analytic = np.asarray(analytic, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    if analytic.shape != estimate.shape:
        raise DimensionMismatchError(f"cannot compare shapes {analytic.shape} and {estimate.shape}")
    gap = float(np.max(np.abs(analytic - estimate), initial=0.0))
    scale = max(1.0, float(np.max(np.abs(estimate), initial=0.0)))
    return {"max_abs_error": gap, "max_rel_error": gap / scale}
