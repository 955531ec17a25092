"""Newton corrector on the KKT equations with a frozen active set."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from src.analysis.kkt import PrimalDualPoint, kkt_residual
from src.config import Config
from src.errors import EvaluationDomainError, MaxIterationsError, SingularMatrixError
from src.linalg.dense import lu_factor, lu_solve, matrix_rank
from src.model.autodiff import eval_derivatives, eval_values, lagrangian_from_bundle
from src.model.problem import ParametricNLP

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CorrectionResult:
    point: PrimalDualPoint
    active: tuple[int, ...]
    iterations: int
    residual: float
    repairs: tuple[str, ...] = field(default=())

    @property
    def repaired(self) -> bool:
        return bool(self.repairs)


def guess_active(nlp: ParametricNLP, point: PrimalDualPoint) -> tuple[int, ...]:
    """Rows whose multiplier dominates the constraint value, z_i >= |h_i|."""
    _, _, h = eval_values(nlp, point.x, point.p)
    return tuple(i for i in range(nlp.m_i) if point.z[i] >= abs(h[i]))


def _equations(nlp: ParametricNLP, x, y, z_active, active, p):
    """F = [grad_x L; g; h_A] and its Jacobian in (x, y, z_A); inactive z are zero."""
    z = np.zeros(nlp.m_i)
    z[list(active)] = z_active
    bundle = eval_derivatives(nlp, x, p)
    lag = lagrangian_from_bundle(bundle, y, z)
    rows = np.vstack([bundle.jac_x_g, bundle.jac_x_h[list(active)]])
    F = np.concatenate([lag.grad_x, bundle.g, bundle.h[list(active)]])

    n, k = nlp.n, rows.shape[0]
    J = np.zeros((n + k, n + k))
    J[:n, :n] = lag.hess_xx
    J[:n, n:] = rows.T
    J[n:, :n] = rows
    return F, J, bundle


def _newton_step(J: np.ndarray, F: np.ndarray) -> tuple[np.ndarray, bool]:
    try:
        return lu_solve(lu_factor(J), -F), True
    except SingularMatrixError:
        # dependent active gradients: minimum-norm step keeps the multipliers bounded
        return np.linalg.lstsq(J, -F, rcond=None)[0], False


def _solve_fixed(nlp, point: PrimalDualPoint, active, tol: float, max_iter: int):
    n = nlp.n
    x, y = point.x.copy(), point.y.copy()
    z_active = point.z[list(active)].copy()
    stalled = False
    for iteration in range(max_iter + 1):
        F, J, bundle = _equations(nlp, x, y, z_active, active, point.p)
        norm = float(np.max(np.abs(F), initial=0.0))
        if norm <= tol:
            return x, y, z_active, iteration, bundle
        if iteration == max_iter:
            break

        d, exact = _newton_step(J, F)
        alpha = 1.0
        merit = float(np.linalg.norm(F))
        while alpha > 1e-4:
            try:
                trial, _, _ = _equations(
                    nlp, x + alpha * d[:n], y + alpha * d[n : n + nlp.m_e],
                    z_active + alpha * d[n + nlp.m_e :], active, point.p,
                )
                if np.linalg.norm(trial) < merit:
                    break
            except EvaluationDomainError:
                pass
            alpha *= 0.5
        else:
            if not exact:
                # least-squares point of an inconsistent system
                stalled = True
                break
            alpha = 1.0
        x = x + alpha * d[:n]
        y = y + alpha * d[n : n + nlp.m_e]
        z_active = z_active + alpha * d[n + nlp.m_e :]
        logger.debug(f"corrector it={iteration} |F|={norm:.3e} alpha={alpha:.3g}")
    raise MaxIterationsError(
        f"Newton corrector stopped at |F| = {norm:.3e} after {iteration} iterations (target {tol:.1e})",
        residual=norm,
        active=list(active),
        stalled=stalled,
        x=x.tolist(),
    )


def _drop_dependent(nlp: ParametricNLP, x, p, active) -> tuple[int, ...]:
    """Largest independent subset of the active rows, taking the most violated rows first."""
    bundle = eval_derivatives(nlp, np.asarray(x, dtype=float), p)
    kept: list[int] = []
    rank = matrix_rank(bundle.jac_x_g) if nlp.m_e else 0
    for i in sorted(active, key=lambda i: (-bundle.h[i], i)):
        grown = matrix_rank(np.vstack([bundle.jac_x_g, bundle.jac_x_h[kept + [i]]]))
        if grown > rank:
            kept.append(i)
            rank = grown
    return tuple(sorted(kept))


def newton_correct(
    nlp: ParametricNLP,
    point: PrimalDualPoint,
    active=None,
    tol: float = Config.CORRECTOR_TOL,
    max_iter: int = Config.CORRECTOR_MAX_ITER,
    repairs: int = 3,
    eps: float = Config.ACTIVE_TOL,
) -> CorrectionResult:
    """Solve grad_x L = 0, g = 0, h_A = 0 for (x, y, z_A), then re-validate signs.

    An active row whose multiplier turns negative is released, an inactive
    row that became violated is added, and the solve is repeated up to
    ``repairs`` times. When the active rows are dependent and cannot all be
    tight, the rows that add no rank are dropped, least violated first.
    """
    point.check(nlp)
    if active is None:
        active = guess_active(nlp, point)
    active = tuple(sorted(int(i) for i in active))
    log: list[str] = []
    total = 0
    released: list[int] = []
    violated: list[int] = []

    for attempt in range(repairs + 1):
        try:
            x, y, z_active, iterations, bundle = _solve_fixed(nlp, point, active, tol, max_iter)
        except MaxIterationsError as e:
            kept = _drop_dependent(nlp, e.details["x"], point.p, active)
            if kept == active or attempt == repairs:
                raise
            message = f"repair {attempt}: drop dependent {sorted(set(active) - set(kept))}"
            logger.info(f"Inconsistent active set during correction ({message})")
            log.append(message)
            active = kept
            continue
        total += iterations
        z = np.zeros(nlp.m_i)
        z[list(active)] = z_active

        z_scale = eps * (1.0 + float(np.max(np.abs(z), initial=0.0)))
        h_scale = eps * (1.0 + np.max(np.abs(bundle.jac_x_h), axis=1, initial=0.0)) if nlp.m_i else np.zeros(0)
        released = [i for i in active if z[i] < -z_scale]
        violated = [i for i in range(nlp.m_i) if i not in active and bundle.h[i] > h_scale[i]]
        if not released and not violated:
            corrected = PrimalDualPoint(x, y, np.maximum(z, 0.0), point.p)
            residual = kkt_residual(nlp, corrected, bundle).max()
            return CorrectionResult(corrected, active, total, residual, tuple(log))
        if attempt == repairs:
            break

        message = f"repair {attempt}: release {released}, add {violated}"
        logger.info(f"Active set changed during correction ({message})")
        log.append(message)
        active = tuple(sorted((set(active) - set(released)) | set(violated)))
        point = PrimalDualPoint(x, y, z, point.p)

    raise MaxIterationsError(
        f"active set still inconsistent after {repairs} repairs (release {released}, add {violated})",
        active=list(active),
    )
