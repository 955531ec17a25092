"""Predictor-corrector tracking of x(p) along p(t) = p + t (p' - p)."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from src.analysis.cq import CQReport, check_cq, crcq_sampled
from src.analysis.kkt import PrimalDualPoint, classify_active
from src.config import Config
from src.errors import DimensionMismatchError, NoConstraintQualificationError, SensikitError
from src.model.autodiff import eval_derivatives, eval_values
from src.model.problem import ParametricNLP
from src.sensitivity.directional import degenerate_directional, directional_qp
from src.sensitivity.fiacco import Regime, build_fiacco_system, forward_sensitivity
from src.solvers.corrector import newton_correct

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HomotopySchedule:
    p_start: np.ndarray
    p_end: np.ndarray
    breakpoints: tuple[float, ...]

    def __post_init__(self):
        p_start = np.asarray(self.p_start, dtype=float).reshape(-1)
        p_end = np.asarray(self.p_end, dtype=float).reshape(-1)
        if p_start.shape != p_end.shape:
            raise DimensionMismatchError(f"endpoints have lengths {p_start.size} and {p_end.size}")
        t = tuple(float(v) for v in self.breakpoints)
        if len(t) < 2 or t[0] != 0.0 or t[-1] != 1.0 or any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError(f"breakpoints must increase strictly from 0 to 1, got {t}")
        object.__setattr__(self, "p_start", p_start)
        object.__setattr__(self, "p_end", p_end)
        object.__setattr__(self, "breakpoints", t)

    @classmethod
    def uniform(cls, p_start, p_end, steps: int) -> HomotopySchedule:
        if steps < 1:
            raise ValueError(f"need at least one step, got {steps}")
        return cls(p_start, p_end, tuple(np.linspace(0.0, 1.0, steps + 1)))

    @property
    def steps(self) -> int:
        return len(self.breakpoints) - 1

    def parameter(self, t: float) -> np.ndarray:
        return self.p_start + t * (self.p_end - self.p_start)

    def perturbations(self) -> list[np.ndarray]:
        """h_(m) = (t_(m+1) - t_(m)) (p' - p); they sum to p' - p."""
        delta = self.p_end - self.p_start
        return [(b - a) * delta for a, b in zip(self.breakpoints, self.breakpoints[1:])]


@dataclass(frozen=True)
class TaylorPrediction:
    point: PrimalDualPoint
    dx: np.ndarray
    regime: Regime | None
    duals_updated: bool
    log: tuple[str, ...] = field(default=())


def choose_regime(cq: CQReport) -> Regime:
    if cq.licq and cq.scs and cq.sosc_subspace:
        return Regime.FIACCO
    if cq.licq:
        return Regime.DIRECTIONAL
    if cq.mfcq:
        return Regime.DEGENERATE
    raise NoConstraintQualificationError()


def taylor_update(
    nlp: ParametricNLP, point: PrimalDualPoint, h, cq: CQReport | None = None
) -> TaylorPrediction:
    """First-order prediction of the primal-dual point at p + h.

    Duals are moved when the regime provides their derivative; the
    degenerate regime moves them to the multiplier vertex picked by the LP
    and holds them there.
    """
    h = np.asarray(h, dtype=float).reshape(-1)
    if h.size != nlp.ell:
        raise DimensionMismatchError(f"step has length {h.size}, expected {nlp.ell}")
    if not np.any(h):
        return TaylorPrediction(point, np.zeros(nlp.n), None, True)

    bundle = eval_derivatives(nlp, point.x, point.p)
    if cq is None:
        cq = check_cq(nlp, point, bundle=bundle, crcq=False)
    regime = choose_regime(cq)

    if regime == Regime.FIACCO:
        system = build_fiacco_system(nlp, point, cq.active.active, bundle)
        dx, dy, dz = system.expand(forward_sensitivity(system, h))
        predicted = point.moved(dx, dy, dz, h)
        return TaylorPrediction(predicted, dx, regime, True)

    if regime == Regime.DIRECTIONAL:
        d = directional_qp(nlp, point, h, cq=cq, bundle=bundle)
        return TaylorPrediction(point.moved(d.dx, d.dy, d.dz, h), d.dx, regime, True, d.log)

    if cq.crcq is None:
        cq = replace(cq, crcq=crcq_sampled(nlp, point, cq.active.active))
    d = degenerate_directional(nlp, point, h, cq=cq, bundle=bundle)
    y, z = d.vertex
    logger.info(f"Degenerate step: multipliers moved to LP vertex z={z.tolist()}")
    predicted = PrimalDualPoint(point.x + d.dx, y, z, point.p + h)
    return TaylorPrediction(predicted, d.dx, regime, False, d.log)


@dataclass(frozen=True)
class PathStep:
    t: float
    point: PrimalDualPoint
    regime: str
    active: tuple[int, ...]
    added: tuple[int, ...]
    removed: tuple[int, ...]
    corrector_iterations: int
    predictor_error: float
    kkt_residual: float
    log: tuple[str, ...] = field(default=())


@dataclass
class PathTrace:
    schedule: HomotopySchedule
    steps: list[PathStep] = field(default_factory=list)
    failure: dict | None = None

    @property
    def completed(self) -> bool:
        return self.failure is None

    @property
    def final(self) -> PrimalDualPoint:
        return self.steps[-1].point

    def active_set_changes(self) -> list[tuple[float, float, tuple[int, ...], tuple[int, ...]]]:
        """(t_before, t_after, added, removed) for every step that changed the active set."""
        return [
            (before.t, after.t, after.added, after.removed)
            for before, after in zip(self.steps, self.steps[1:])
            if after.added or after.removed
        ]


def _predicted_active(nlp: ParametricNLP, prediction: TaylorPrediction, previous, eps: float):
    point = prediction.point
    _, _, h = eval_values(nlp, point.x, point.p)
    jac_h = eval_derivatives(nlp, point.x, point.p).jac_x_h
    scale = eps * (1.0 + np.max(np.abs(jac_h), axis=1, initial=0.0)) if nlp.m_i else np.zeros(0)
    z_cut = eps * (1.0 + float(np.max(np.abs(point.z), initial=0.0)))
    near = {i for i in range(nlp.m_i) if h[i] >= -scale[i]}
    held = {i for i in previous if point.z[i] > z_cut}
    return tuple(sorted(near | held))


def follow_path(
    nlp: ParametricNLP,
    start: PrimalDualPoint,
    schedule: HomotopySchedule,
    adaptive: bool = False,
    tol: float = Config.CORRECTOR_TOL,
    max_iter: int = Config.CORRECTOR_MAX_ITER,
    adaptive_iter: int = Config.ADAPTIVE_ITER,
    eps: float = Config.ACTIVE_TOL,
    max_bisections: int = 20,
) -> PathTrace:
    """Taylor predictor plus Newton corrector at every breakpoint.

    A failing corrector ends the trace early with ``failure`` set. In
    adaptive mode a step is bisected instead when the corrector fails or
    needs more than ``adaptive_iter`` iterations.
    """
    if not np.allclose(start.p, schedule.p_start):
        raise DimensionMismatchError("start point is not at the first parameter of the schedule")
    info = classify_active(nlp, start, eps)
    trace = PathTrace(schedule)
    trace.steps.append(
        PathStep(0.0, start, "start", info.active, (), (), 0, 0.0, info.residual.max() if info.residual else 0.0)
    )

    breakpoints = list(schedule.breakpoints)
    current, active = start, info.active
    m, bisections = 0, 0
    while m < len(breakpoints) - 1:
        t0, t1 = breakpoints[m], breakpoints[m + 1]
        h = (t1 - t0) * (schedule.p_end - schedule.p_start)
        try:
            prediction = taylor_update(nlp, current, h)
            guess = _predicted_active(nlp, prediction, active, eps)
            correction = newton_correct(nlp, prediction.point, guess, tol, max_iter, eps=eps)
            after = classify_active(nlp, correction.point, eps)
        except NoConstraintQualificationError:
            raise
        except SensikitError as e:
            if adaptive and bisections < max_bisections:
                breakpoints.insert(m + 1, 0.5 * (t0 + t1))
                bisections += 1
                logger.info(f"Step to t={t1:.6g} failed ({e}); bisecting")
                continue
            logger.error(f"Path following stopped before t={t1:.6g}: {e}")
            trace.failure = {"step": m, "t": t1, "error": str(e), "type": type(e).__name__}
            break

        if adaptive and correction.iterations > adaptive_iter and bisections < max_bisections:
            breakpoints.insert(m + 1, 0.5 * (t0 + t1))
            bisections += 1
            logger.info(f"Corrector needed {correction.iterations} iterations; bisecting [{t0:.6g}, {t1:.6g}]")
            continue

        added = tuple(i for i in after.active if i not in active)
        removed = tuple(i for i in active if i not in after.active)
        if added or removed:
            logger.info(f"Active set change in t=({t0:.6g}, {t1:.6g}]: added {list(added)}, removed {list(removed)}")
        error = float(np.max(np.abs(correction.point.x - prediction.point.x), initial=0.0))
        regime = prediction.regime.value if prediction.regime is not None else "none"
        trace.steps.append(
            PathStep(
                t=t1,
                point=correction.point,
                regime=regime,
                active=after.active,
                added=added,
                removed=removed,
                corrector_iterations=correction.iterations,
                predictor_error=error,
                kkt_residual=after.residual.max() if after.residual else 0.0,
                log=prediction.log + correction.repairs,
            )
        )
        current, active = correction.point, after.active
        m += 1

    trace.schedule = HomotopySchedule(schedule.p_start, schedule.p_end, tuple(breakpoints))
    logger.info(f"Path following finished {len(trace.steps) - 1} of {len(breakpoints) - 1} steps")
    return trace
