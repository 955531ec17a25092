"""SUMT log-barrier / quadratic-penalty solver and barrier-path sensitivities.

The merit function is

    W(x; r, p) = f(x, p) - r * sum(log(-h_i(x, p))) + sum(g_j(x, p)^2) / (2 r)

and its stationary points recover multipliers y = g / r and z = -r / h, so
that grad_x W coincides with grad_x L(x, y, z, p).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from src.analysis.kkt import PrimalDualPoint, kkt_residual
from src.config import Config
from src.errors import (
    EvaluationDomainError,
    IndefiniteHessianError,
    InfeasibleStartError,
    LineSearchError,
    MaxIterationsError,
    NotStationaryError,
)
from src.linalg.dense import lu_factor, lu_solve
from src.model.autodiff import DerivativeBundle, eval_derivatives, eval_values, lagrangian_from_bundle
from src.model.expr import var
from src.model.problem import ParametricNLP
from src.sensitivity.fiacco import Regime, SensitivityResult

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NewtonStep:
    iteration: int
    merit: float
    grad_norm: float
    step_norm: float
    alpha: float
    shift: float


@dataclass(frozen=True)
class BarrierState:
    """Minimizer of W for one value of r, with the recovered multipliers."""

    x: np.ndarray
    r: float
    p: np.ndarray
    y: np.ndarray
    z: np.ndarray
    iterations: int
    grad_norm: float
    log: tuple[NewtonStep, ...] = field(default=())

    def point(self) -> PrimalDualPoint:
        return PrimalDualPoint(self.x, self.y, self.z, self.p)


def _parameter(nlp: ParametricNLP, p) -> np.ndarray:
    if p is None:
        if nlp.p0 is None:
            raise InfeasibleStartError(f"{nlp.name}: no parameter value given and no 'at p' default")
        p = nlp.p0
    return np.asarray(p, dtype=float).reshape(-1)


def _schedule(r_schedule) -> tuple[float, ...]:
    schedule = tuple(float(r) for r in (Config.r_schedule() if r_schedule is None else r_schedule))
    if not schedule or any(r <= 0.0 for r in schedule):
        raise ValueError(f"barrier schedule must be non-empty and positive, got {schedule}")
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError(f"barrier schedule must be strictly decreasing, got {schedule}")
    return schedule


def merit_value(nlp: ParametricNLP, x, p, r: float) -> float:
    """W(x; r, p), or +inf outside the strict interior or the function domain."""
    try:
        f, g, h = eval_values(nlp, x, p)
    except EvaluationDomainError:
        return np.inf
    if h.size and np.max(h) >= 0.0:
        return np.inf
    return float(f - r * np.sum(np.log(-h)) + np.sum(g**2) / (2.0 * r))


def barrier_hessians(bundle: DerivativeBundle, y, z, r: float) -> tuple[np.ndarray, np.ndarray]:
    """(W_xx, W_xp) at a barrier iterate with multipliers y = g/r, z = -r/h."""
    lag = lagrangian_from_bundle(bundle, y, z)
    weights = r / bundle.h**2
    W_xx = (
        lag.hess_xx
        + bundle.jac_x_g.T @ bundle.jac_x_g / r
        + bundle.jac_x_h.T @ (weights[:, None] * bundle.jac_x_h)
    )
    W_xp = (
        lag.hess_xp
        + bundle.jac_x_g.T @ bundle.jac_p_g / r
        + bundle.jac_x_h.T @ (weights[:, None] * bundle.jac_p_h)
    )
    return 0.5 * (W_xx + W_xx.T), W_xp


def _newton_direction(H: np.ndarray, grad: np.ndarray) -> tuple[np.ndarray, float]:
    """Solve (H + shift I) d = -grad with the smallest shift that admits a Cholesky factor."""
    base = 1e-8 * max(1.0, float(np.max(np.abs(H), initial=0.0)))
    shift = 0.0
    for _ in range(30):
        try:
            factor = cho_factor(H + shift * np.eye(H.shape[0]))
            return cho_solve(factor, -grad), shift
        except LinAlgError:
            shift = base if shift == 0.0 else 10.0 * shift
    raise IndefiniteHessianError("no positive shift makes the barrier Hessian definite")


def _max_step(h: np.ndarray, jac_h: np.ndarray, d: np.ndarray, fraction: float) -> float:
    """Fraction-to-boundary cap from the linearized inequalities."""
    if h.size == 0:
        return 1.0
    rates = jac_h @ d
    growing = rates > 0.0
    if not np.any(growing):
        return 1.0
    return min(1.0, fraction * float(np.min(-h[growing] / rates[growing])))


def _minimize_merit(
    nlp: ParametricNLP,
    x: np.ndarray,
    p: np.ndarray,
    r: float,
    tol: float,
    max_iter: int,
    armijo: float = Config.ARMIJO_C,
    fraction: float = Config.FRACTION_TO_BOUNDARY,
) -> BarrierState:
    """Damped Newton on grad_x W = 0 for one barrier parameter."""
    log: list[NewtonStep] = []
    for iteration in range(max_iter + 1):
        bundle = eval_derivatives(nlp, x, p)
        y, z = bundle.g / r, -r / bundle.h
        grad = lagrangian_from_bundle(bundle, y, z).grad_x
        grad_norm = float(np.max(np.abs(grad), initial=0.0))
        if grad_norm <= tol:
            return BarrierState(x, r, p, y, z, iteration, grad_norm, tuple(log))
        if iteration == max_iter:
            break

        W_xx, _ = barrier_hessians(bundle, y, z, r)
        d, shift = _newton_direction(W_xx, grad)
        merit = merit_value(nlp, x, p, r)
        slope = float(grad @ d)
        if -slope <= 1e-13 * (1.0 + abs(merit)):
            logger.debug(f"r={r:.1e}: predicted decrease below roundoff at |grad W|={grad_norm:.2e}")
            return BarrierState(x, r, p, y, z, iteration, grad_norm, tuple(log))

        alpha = _max_step(bundle.h, bundle.jac_x_h, d, fraction)
        while alpha > 1e-16:
            trial = x + alpha * d
            if merit_value(nlp, trial, p, r) <= merit + armijo * alpha * slope:
                break
            alpha *= 0.5
        else:
            logger.error(f"Barrier line search failed at r={r:.1e}, |grad W|={grad_norm:.3e}")
            raise LineSearchError(f"no acceptable step at r={r:.1e} (|grad W| = {grad_norm:.3e})", x)

        x = trial
        _, _, h = eval_values(nlp, x, p)
        if h.size and np.max(h) >= 0.0:
            raise LineSearchError(f"accepted iterate left the interior at r={r:.1e}", x)
        step = NewtonStep(iteration, merit, grad_norm, float(np.max(np.abs(d))), alpha, shift)
        log.append(step)
        logger.debug(
            f"r={r:.1e} it={iteration} W={merit:.10g} |grad|={grad_norm:.2e} alpha={alpha:.3g} shift={shift:.1e}"
        )
    raise MaxIterationsError(
        f"barrier Newton did not converge in {max_iter} iterations at r={r:.1e}", r=r, grad_norm=grad_norm
    )


def _strictly_feasible(nlp: ParametricNLP, x: np.ndarray, p: np.ndarray) -> bool:
    try:
        _, _, h = eval_values(nlp, x, p)
    except EvaluationDomainError:
        return False
    return h.size == 0 or bool(np.max(h) < 0.0)


def find_interior_point(
    nlp: ParametricNLP,
    p,
    x0=None,
    r_schedule=None,
    tol: float = Config.NEWTON_TOL,
    max_iter: int = Config.NEWTON_MAX_ITER,
) -> np.ndarray:
    """Phase 1: min s s.t. h_i(x, p) - s <= 0, s >= -1, stopped once max h < 0."""
    p = _parameter(nlp, p)
    x0 = np.zeros(nlp.n) if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    try:
        _, _, h0 = eval_values(nlp, x0, p)
    except EvaluationDomainError as e:
        raise InfeasibleStartError(f"start point is outside the function domain: {e}") from e
    if h0.size == 0 or np.max(h0) < 0.0:
        return x0

    s = var(nlp.n)
    phase1 = ParametricNLP(
        n=nlp.n + 1,
        ell=nlp.ell,
        objective=s,
        inequalities=tuple(h - s for h in nlp.inequalities) + (-s - 1.0,),
        name=f"{nlp.name}-phase1",
    )
    w = np.concatenate([x0, [float(np.max(h0)) + 1.0]])
    for r in _schedule(r_schedule):
        state = _minimize_merit(phase1, w, p, r, tol, max_iter)
        w = state.x
        if _strictly_feasible(nlp, w[:-1], p):
            logger.info(f"Phase 1 found a strictly feasible start (s = {w[-1]:.3e})")
            return w[:-1]
    raise InfeasibleStartError(
        f"phase 1 ended with max h = {w[-1]:.3e}; no strictly feasible point found", phase1_value=float(w[-1])
    )


def sumt_solve(
    nlp: ParametricNLP,
    p=None,
    x0=None,
    r_schedule=None,
    tol: float = Config.NEWTON_TOL,
    max_iter: int = Config.NEWTON_MAX_ITER,
    find_start: bool = True,
    strict: bool = True,
) -> tuple[PrimalDualPoint, list[BarrierState]]:
    """Sequential unconstrained minimization over a decreasing r schedule, warm-started.

    With ``strict`` the recovered point must have KKT residual at most
    1e-6 (1 + scale), scale being the largest primal or dual entry; callers
    that polish the point afterwards pass ``strict=False``.
    """
    p = _parameter(nlp, p)
    schedule = _schedule(r_schedule)
    if x0 is None:
        x0 = nlp.x0 if nlp.x0 is not None else np.zeros(nlp.n)
    x = np.asarray(x0, dtype=float).reshape(-1)

    if not _strictly_feasible(nlp, x, p):
        if not find_start:
            raise InfeasibleStartError("start point is not strictly feasible for the inequalities")
        logger.info("Start point not strictly feasible; running phase 1")
        x = find_interior_point(nlp, p, x, r_schedule, tol, max_iter)

    if nlp.m_e + nlp.m_i == 0:
        schedule = schedule[:1]

    states: list[BarrierState] = []
    for r in schedule:
        state = _minimize_merit(nlp, x, p, r, tol, max_iter)
        states.append(state)
        x = state.x
        logger.debug(f"SUMT stage r={r:.1e}: {state.iterations} Newton iterations")

    point = states[-1].point()
    residual = kkt_residual(nlp, point)
    scale = 1.0 + float(np.max(np.abs(np.concatenate([point.x, point.y, point.z])), initial=0.0))
    if residual.max() > 1e-6 * scale:
        message = f"SUMT finished with KKT residual {residual.max():.3e} at r={states[-1].r:.1e}"
        if strict:
            logger.error(message)
            raise MaxIterationsError(message, residual=residual.max(), r=states[-1].r)
        logger.warning(message)
    logger.info(f"SUMT solved {nlp.name} at p={p.tolist()} in {len(states)} stages")
    return point, states


def barrier_sensitivity(nlp: ParametricNLP, state: BarrierState) -> SensitivityResult:
    """J_p x = -W_xx^-1 W_xp, with y and z differentiated through y = g/r, z = -r/h."""
    bundle = eval_derivatives(nlp, state.x, state.p)
    W_xx, W_xp = barrier_hessians(bundle, state.y, state.z, state.r)
    try:
        factor = cho_factor(W_xx)
    except LinAlgError as e:
        logger.error(f"Barrier Hessian not positive definite at r={state.r:.1e}: {e}")
        raise IndefiniteHessianError(
            f"barrier Hessian is not positive definite at r={state.r:.1e}; not a barrier minimizer"
        ) from e

    jac_x = -cho_solve(factor, W_xp)
    jac_y = (bundle.jac_x_g @ jac_x + bundle.jac_p_g) / state.r
    jac_z = (state.r / bundle.h**2)[:, None] * (bundle.jac_x_h @ jac_x + bundle.jac_p_h)
    return SensitivityResult(jac_x, jac_y, jac_z, Regime.BARRIER, details={"r": state.r})


def barrier_sweep(
    nlp: ParametricNLP, p=None, r_schedule=None, x0=None
) -> list[SensitivityResult]:
    """Barrier sensitivities at every stage of one SUMT run."""
    _, states = sumt_solve(nlp, p, x0, r_schedule, strict=False)
    return [barrier_sensitivity(nlp, state) for state in states]


@dataclass(frozen=True)
class BarrierKKTPoint:
    """Root of F_mu(w) = [grad_x L; g; h + s; S z - mu e] over w = (x, s, y, z)."""

    x: np.ndarray
    s: np.ndarray
    y: np.ndarray
    z: np.ndarray
    mu: float
    p: np.ndarray
    iterations: int = 0
    residual: float = 0.0

    def point(self) -> PrimalDualPoint:
        return PrimalDualPoint(self.x, self.y, self.z, self.p)


def _barrier_kkt_system(nlp: ParametricNLP, x, s, y, z, mu: float, p):
    bundle = eval_derivatives(nlp, x, p)
    lag = lagrangian_from_bundle(bundle, y, z)
    n, m_e, m_i = nlp.n, nlp.m_e, nlp.m_i
    F = np.concatenate([lag.grad_x, bundle.g, bundle.h + s, s * z - mu])

    size = n + 2 * m_i + m_e
    J = np.zeros((size, size))
    xs, ss, ys, zs = slice(0, n), slice(n, n + m_i), slice(n + m_i, n + m_i + m_e), slice(n + m_i + m_e, size)
    rg, rh, rc = slice(n, n + m_e), slice(n + m_e, n + m_e + m_i), slice(n + m_e + m_i, size)
    J[xs, xs] = lag.hess_xx
    J[xs, ys] = bundle.jac_x_g.T
    J[xs, zs] = bundle.jac_x_h.T
    J[rg, xs] = bundle.jac_x_g
    J[rh, xs] = bundle.jac_x_h
    J[rh, ss] = np.eye(m_i)
    J[rc, ss] = np.diag(z)
    J[rc, zs] = np.diag(s)
    Jp = np.vstack([lag.hess_xp, bundle.jac_p_g, bundle.jac_p_h, np.zeros((m_i, nlp.ell))])
    return F, J, Jp


def barrier_kkt_residual(nlp: ParametricNLP, point: BarrierKKTPoint) -> float:
    F, _, _ = _barrier_kkt_system(nlp, point.x, point.s, point.y, point.z, point.mu, point.p)
    return float(np.max(np.abs(F), initial=0.0))


def barrier_kkt_solve(
    nlp: ParametricNLP,
    p=None,
    mu: float = 1e-8,
    start: PrimalDualPoint | None = None,
    tol: float = 1e-10,
    max_iter: int = Config.NEWTON_MAX_ITER,
    fraction: float = Config.FRACTION_TO_BOUNDARY,
) -> BarrierKKTPoint:
    """Newton on F_mu = 0 with a fraction-to-boundary rule on the slack/multiplier pairs."""
    p = _parameter(nlp, p)
    if mu <= 0.0:
        raise ValueError(f"barrier parameter must be positive, got {mu}")
    if start is None:
        start, _ = sumt_solve(nlp, p, strict=False)

    x, y = start.x.copy(), start.y.copy()
    _, _, h = eval_values(nlp, x, p)
    s = np.maximum(-h, np.sqrt(mu))
    z = np.maximum(start.z, mu / s)
    n, m_i, m_e = nlp.n, nlp.m_i, nlp.m_e

    for iteration in range(max_iter + 1):
        F, J, _ = _barrier_kkt_system(nlp, x, s, y, z, mu, p)
        norm = float(np.max(np.abs(F), initial=0.0))
        if norm <= tol:
            logger.info(f"Barrier KKT system solved at mu={mu:.1e} in {iteration} iterations")
            return BarrierKKTPoint(x, s, y, z, mu, p, iterations=iteration, residual=norm)
        if iteration == max_iter:
            break

        d = lu_solve(lu_factor(J), -F)
        dx, ds, dy, dz = np.split(d, [n, n + m_i, n + m_i + m_e])
        alpha = 1.0
        for value, change in ((s, ds), (z, dz)):
            shrinking = change < 0.0
            if np.any(shrinking):
                alpha = min(alpha, fraction * float(np.min(-value[shrinking] / change[shrinking])))

        merit = float(np.linalg.norm(F))
        while alpha > 1e-16:
            try:
                trial, _, _ = _barrier_kkt_system(
                    nlp, x + alpha * dx, s + alpha * ds, y + alpha * dy, z + alpha * dz, mu, p
                )
                if np.linalg.norm(trial) <= (1.0 - 1e-4 * alpha) * merit:
                    break
            except EvaluationDomainError:
                pass
            alpha *= 0.5
        else:
            raise LineSearchError(f"barrier KKT Newton stalled at |F| = {norm:.3e}", x)

        x, s, y, z = x + alpha * dx, s + alpha * ds, y + alpha * dy, z + alpha * dz
        logger.debug(f"mu={mu:.1e} it={iteration} |F|={norm:.3e} alpha={alpha:.3g}")
    raise MaxIterationsError(f"barrier KKT Newton did not converge in {max_iter} iterations", mu=mu)


def barrier_kkt_sensitivity(
    nlp: ParametricNLP, point: BarrierKKTPoint, tol: float = 1e-8
) -> SensitivityResult:
    """J_p w(mu, p) = -(J_w F_mu)^-1 J_p F_mu with one LU and ell backsolves."""
    F, J, Jp = _barrier_kkt_system(nlp, point.x, point.s, point.y, point.z, point.mu, point.p)
    residual = float(np.max(np.abs(F), initial=0.0))
    if residual > tol:
        raise NotStationaryError(
            f"point does not solve the barrier KKT system (residual {residual:.3e})",
            residual={"barrier_kkt": residual},
        )

    jac = -lu_solve(lu_factor(J), Jp)
    n, m_i, m_e = nlp.n, nlp.m_i, nlp.m_e
    jac_x, jac_s, jac_y, jac_z = np.split(jac, [n, n + m_i, n + m_i + m_e])
    return SensitivityResult(
        jac_x, jac_y, jac_z, Regime.BARRIER, details={"mu": point.mu, "jac_s": jac_s}
    )
