"""Conversion of domain results into report models."""

from __future__ import annotations

import time
from dataclasses import fields, is_dataclass
from enum import Enum
from typing import Any

import numpy as np

from src.analysis.cq import CQReport
from src.analysis.kkt import PrimalDualPoint, kkt_residual
from src.config import Config
from src.conic.residual import ConicProblem, ConicSensitivity
from src.errors import SensikitError
from src.model.problem import ParametricNLP
from src.path.following import PathTrace
from src.report.schemas import (
    BarrierStageModel,
    ConicModel,
    CQReportModel,
    CRCQModel,
    DirectionalModel,
    DirectionalValueModel,
    ErrorModel,
    LDModel,
    LDStageModel,
    NewtonStepModel,
    OracleModel,
    PathModel,
    PathStepModel,
    PointModel,
    Report,
    SensitivityModel,
    SolverTrailModel,
    ValueModel,
)
from src.sensitivity.directional import DirectionalDerivative, LDDerivative
from src.sensitivity.fiacco import SensitivityResult
from src.solvers.barrier import BarrierState
from src.value.value_function import ValueReport


def plain(value: Any) -> Any:
    """numpy values, enums and dataclasses to JSON-ready Python values."""
    if hasattr(value, "summary"):
        return plain(value.summary())
    if is_dataclass(value) and not isinstance(value, type):
        return {f.name: plain(getattr(value, f.name)) for f in fields(value)}
    if isinstance(value, Enum):
        return plain(value.value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    return value


def _list(values) -> list[float]:
    return np.asarray(values, dtype=float).reshape(-1).tolist()


def new_report(problem: str, command: str) -> Report:
    return Report(version=Config.get_tool_info()["version"], problem=problem, command=command)


def finish(report: Report, started: float, exit_code: int = 0) -> Report:
    report.wall_time = round(time.perf_counter() - started, 6)
    report.exit_code = exit_code
    return report


def point_model(nlp: ParametricNLP, point: PrimalDualPoint) -> PointModel:
    return PointModel(
        x=_list(point.x),
        y=_list(point.y),
        z=_list(point.z),
        p=_list(point.p),
        kkt_residual=kkt_residual(nlp, point).as_dict(),
    )


def cq_model(cq: CQReport) -> CQReportModel:
    crcq = None
    if cq.crcq is not None:
        crcq = CRCQModel(
            verdict=cq.crcq.verdict,
            samples=cq.crcq.samples,
            ranks=list(cq.crcq.ranks),
            radius=cq.crcq.radius,
            heuristic=cq.crcq.heuristic,
        )
    vertices = None
    if cq.polytope is not None and cq.polytope.vertices is not None:
        vertices = [_list(np.concatenate(cq.polytope.split(v))) for v in cq.polytope.vertices]
    return CQReportModel(
        active=list(cq.active.active),
        strongly_active=list(cq.active.strongly_active),
        weakly_active=list(cq.active.weakly_active),
        inactive=list(cq.active.inactive),
        licq=cq.licq,
        mfcq=cq.mfcq,
        mfcq_dual=cq.mfcq_dual,
        mfcq_margin=cq.mfcq_margin,
        smfcq=cq.smfcq,
        scs=cq.scs,
        sosc_subspace=cq.sosc_subspace,
        ssosc_subspace=cq.ssosc_subspace,
        gssosc_subspace=cq.gssosc_subspace,
        crcq=crcq,
        polytope_bounded=cq.polytope_bounded,
        n_vertices=cq.n_vertices,
        vertices=vertices,
        scs_per_vertex=list(cq.scs_per_vertex),
        tolerances=dict(cq.tolerances),
        notes=list(cq.notes),
    )


def sensitivity_model(sens: SensitivityResult) -> SensitivityModel:
    return SensitivityModel(
        regime=sens.regime.value,
        jac_x=sens.jac_x.tolist(),
        jac_y=sens.jac_y.tolist(),
        jac_z=sens.jac_z.tolist(),
        details=plain(sens.details),
    )


def directional_model(d: DirectionalDerivative) -> DirectionalModel:
    vertex_y = vertex_z = None
    if d.vertex is not None:
        vertex_y, vertex_z = _list(d.vertex[0]), _list(d.vertex[1])
    return DirectionalModel(
        regime=d.regime.value,
        h=_list(d.h),
        dx=_list(d.dx),
        dy=None if d.dy is None else _list(d.dy),
        dz=None if d.dz is None else _list(d.dz),
        vertex_y=vertex_y,
        vertex_z=vertex_z,
        log=list(d.log),
    )


def ld_model(ld: LDDerivative) -> LDModel:
    return LDModel(
        R=ld.R.tolist(),
        X=ld.X.tolist(),
        Y=ld.Y.tolist(),
        Z=ld.Z.tolist(),
        stages=[LDStageModel(index=s.index, plus=list(s.plus), zero=list(s.zero)) for s in ld.stages],
    )


def value_model(value: ValueReport) -> ValueModel:
    return ValueModel(
        phi=value.phi,
        gradient=None if value.gradient is None else _list(value.gradient),
        hessian=None if value.hessian is None else value.hessian.tolist(),
        regime=value.regime,
        method=value.method,
        asymmetry=value.asymmetry,
        directional=[
            DirectionalValueModel(h=_list(d.h), value=d.value, lower=d.lower, upper=d.upper)
            for d in value.directional
        ],
    )


def path_model(trace: PathTrace, endpoint_error: float | None = None) -> PathModel:
    steps = [
        PathStepModel(
            t=step.t,
            x=_list(step.point.x),
            y=_list(step.point.y),
            z=_list(step.point.z),
            p=_list(step.point.p),
            regime=step.regime,
            active=list(step.active),
            added=list(step.added),
            removed=list(step.removed),
            corrector_iterations=step.corrector_iterations,
            predictor_error=step.predictor_error,
            kkt_residual=step.kkt_residual,
            log=list(step.log),
        )
        for step in trace.steps
    ]
    changes = [
        {"t_before": before, "t_after": after, "added": list(added), "removed": list(removed)}
        for before, after, added, removed in trace.active_set_changes()
    ]
    return PathModel(
        p_start=_list(trace.schedule.p_start),
        p_end=_list(trace.schedule.p_end),
        breakpoints=list(trace.schedule.breakpoints),
        completed=trace.completed,
        steps=steps,
        active_set_changes=changes,
        failure=plain(trace.failure),
        endpoint_error=endpoint_error,
    )


def conic_model(
    prob: ConicProblem,
    solution: tuple[np.ndarray, np.ndarray, np.ndarray],
    kkt: float,
    hsd: float,
    sens: ConicSensitivity | None = None,
    jac_x_b: np.ndarray | None = None,
) -> ConicModel:
    x, y, s = solution
    return ConicModel(
        m=prob.m,
        n=prob.n,
        cones=[{"kind": block.kind, "dim": block.dim} for block in prob.cone.blocks],
        x=_list(x),
        y=_list(y),
        s=_list(s),
        kkt_residual=kkt,
        hsd_residual=hsd,
        dx=None if sens is None else _list(sens.dx),
        dy=None if sens is None else _list(sens.dy),
        ds=None if sens is None else _list(sens.ds),
        jac_x_b=None if jac_x_b is None else jac_x_b.tolist(),
        least_squares=False if sens is None else sens.least_squares,
    )


def oracle_model(
    quantity: str,
    estimate,
    steps,
    comparison: dict[str, float] | None = None,
    monotone: bool | None = None,
) -> OracleModel:
    comparison = comparison or {}
    return OracleModel(
        quantity=quantity,
        estimate=plain(estimate),
        steps=_list(steps),
        max_abs_error=comparison.get("max_abs_error"),
        max_rel_error=comparison.get("max_rel_error"),
        monotone=monotone,
    )


def barrier_trail(
    states: list[BarrierState],
    sweep: list[SensitivityResult] | None = None,
    corrector_iterations: int | None = None,
    repairs: tuple[str, ...] = (),
) -> SolverTrailModel:
    stages = []
    for index, state in enumerate(states):
        stages.append(
            BarrierStageModel(
                r=state.r,
                iterations=state.iterations,
                grad_norm=state.grad_norm,
                x=_list(state.x),
                jac_x=None if sweep is None else sweep[index].jac_x.tolist(),
                newton=[
                    NewtonStepModel(
                        iteration=step.iteration,
                        merit=step.merit,
                        grad_norm=step.grad_norm,
                        step_norm=step.step_norm,
                        alpha=step.alpha,
                        shift=step.shift,
                    )
                    for step in state.log
                ],
            )
        )
    return SolverTrailModel(
        method="sumt",
        stages=stages,
        corrector_iterations=corrector_iterations,
        corrector_repairs=list(repairs),
    )


def error_model(error: Exception) -> ErrorModel:
    details = plain(error.details) if isinstance(error, SensikitError) else {}
    return ErrorModel(type=type(error).__name__, message=str(error), details=details)
