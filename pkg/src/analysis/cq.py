"""Constraint-qualification and second-order diagnostics at a KKT point."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from src.analysis.critical import critical_cone
from src.analysis.kkt import ActiveSetInfo, PrimalDualPoint, classify_active, partition_active
from src.analysis.polytope import MultiplierPolytope, build_multiplier_polytope
from src.config import Config
from src.errors import EvaluationDomainError, RegularityNotCertifiedError, SensikitError
from src.kernels.lp import LinearProgram, lp_solve
from src.linalg.dense import is_positive_definite, matrix_rank, null_space
from src.model.autodiff import DerivativeBundle, eval_derivatives, lagrangian_from_bundle
from src.model.problem import ParametricNLP

logger = logging.getLogger(__name__)

CQ_NAMES = {
    "licq": "LICQ",
    "mfcq": "MFCQ",
    "mfcq_dual": "MFCQ-dual",
    "smfcq": "SMFCQ",
    "scs": "SCS",
    "sosc_subspace": "SOSC-subspace",
    "ssosc_subspace": "SSOSC-subspace",
    "gssosc_subspace": "GSSOSC-subspace",
    "crcq_sampled": "CRCQ-sampled",
}


@dataclass(frozen=True)
class CRCQVerdict:
    """Sampled constant-rank check; a heuristic, never a certificate."""

    verdict: bool
    samples: int
    ranks: tuple[int, ...]
    radius: float
    heuristic: bool = True


@dataclass(frozen=True)
class CQReport:
    active: ActiveSetInfo
    licq: bool
    mfcq: bool
    mfcq_margin: float
    mfcq_direction: np.ndarray
    mfcq_dual: bool
    smfcq: bool
    scs: bool
    sosc_subspace: bool
    ssosc_subspace: bool
    gssosc_subspace: bool | None
    crcq: CRCQVerdict | None
    polytope: MultiplierPolytope | None
    scs_per_vertex: tuple[bool, ...]
    tolerances: dict[str, float]
    notes: tuple[str, ...] = field(default=())

    @property
    def crcq_sampled(self) -> bool | None:
        return None if self.crcq is None else self.crcq.verdict

    @property
    def n_vertices(self) -> int | None:
        return None if self.polytope is None else self.polytope.n_vertices

    @property
    def polytope_bounded(self) -> bool | None:
        return None if self.polytope is None else self.polytope.bounded

    def holds(self, name: str) -> bool:
        return bool(getattr(self, name))

    def failed(self, *names: str) -> list[str]:
        return [CQ_NAMES[name] for name in names if not self.holds(name)]

    def require(self, *names: str, context: str = "") -> CQReport:
        """Raise RegularityNotCertifiedError naming every condition that does not hold."""
        failed = self.failed(*names)
        if failed:
            raise RegularityNotCertifiedError(failed, context)
        return self


def _mfcq_lp(
    equality_rows: np.ndarray, inequality_rows: np.ndarray, eps: float
) -> tuple[bool, float, np.ndarray]:
    """max t s.t. E d = 0, G d + t <= 0, t <= 1, |d|_inf <= 1."""
    n = equality_rows.shape[1]
    if equality_rows.shape[0] and matrix_rank(equality_rows) < equality_rows.shape[0]:
        return False, 0.0, np.zeros(n)
    if inequality_rows.shape[0] == 0:
        return True, 1.0, np.zeros(n)

    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_eq = np.hstack([equality_rows, np.zeros((equality_rows.shape[0], 1))])
    A_ub = np.hstack([inequality_rows, np.ones((inequality_rows.shape[0], 1))])
    bounds = ((-1.0, 1.0),) * n + ((None, 1.0),)
    result = lp_solve(LinearProgram(c, A_eq, np.zeros(A_eq.shape[0]), A_ub, np.zeros(A_ub.shape[0]), bounds))
    if not result.optimal:
        return False, 0.0, np.zeros(n)
    margin = float(result.x[-1])
    return margin > eps, margin, result.x[:n]


def _mfcq_dual(equality_rows: np.ndarray, inequality_rows: np.ndarray, eps: float) -> bool:
    """0 is the only combination J_g' y + J_hA' z = 0 with z >= 0."""
    if equality_rows.shape[0] and matrix_rank(equality_rows) < equality_rows.shape[0]:
        return False
    m_e, m_a = equality_rows.shape[0], inequality_rows.shape[0]
    if m_a == 0:
        return True
    A = np.hstack([equality_rows.T, inequality_rows.T])
    c = np.concatenate([np.zeros(m_e), -np.ones(m_a)])
    bounds = ((None, None),) * m_e + ((0.0, 1.0),) * m_a
    result = lp_solve(LinearProgram(c, A, np.zeros(A.shape[0]), bounds=bounds))
    return result.optimal and -result.objective <= eps


def _positive_on(H: np.ndarray, rows: np.ndarray, n: int, pd_shift: float) -> bool:
    Z = null_space(rows, n=n)
    if Z.shape[1] == 0:
        return True
    return is_positive_definite(Z.T @ H @ Z, pd_shift)


def crcq_sampled(
    nlp: ParametricNLP,
    point: PrimalDualPoint,
    active: tuple[int, ...],
    radius: float = Config.CRCQ_RADIUS,
    samples: int = Config.CRCQ_SAMPLES,
    seed: int = Config.CRCQ_SEED,
    rank_tol: float = Config.RANK_TOL,
) -> CRCQVerdict:
    """Rank of the active-gradient family at x and at ``samples`` points of the ball around x."""
    rng = np.random.default_rng(seed)

    def family_rank(x: np.ndarray) -> int:
        bundle = eval_derivatives(nlp, x, point.p)
        rows = np.vstack([bundle.jac_x_g, bundle.jac_x_h[list(active)]])
        return matrix_rank(rows, rank_tol) if rows.shape[0] else 0

    ranks = [family_rank(point.x)]
    for _ in range(samples):
        direction = rng.standard_normal(nlp.n)
        norm = np.linalg.norm(direction)
        if norm == 0.0:
            continue
        step = radius * rng.uniform() ** (1.0 / max(nlp.n, 1)) * direction / norm
        try:
            ranks.append(family_rank(point.x + step))
        except EvaluationDomainError as e:
            logger.debug(f"CRCQ sample skipped: {e}")
    verdict = len(set(ranks)) == 1
    return CRCQVerdict(verdict, len(ranks) - 1, tuple(ranks), radius)


def check_cq(
    nlp: ParametricNLP,
    point: PrimalDualPoint,
    eps: float = Config.ACTIVE_TOL,
    rank_tol: float = Config.RANK_TOL,
    pd_shift: float = Config.PD_SHIFT,
    kkt_tol: float = Config.KKT_TOL,
    crcq: bool = True,
    with_vertices: bool = True,
    sample: int | None = None,
    bundle: DerivativeBundle | None = None,
) -> CQReport:
    """Run every diagnostic; never raises for a failed condition."""
    if bundle is None:
        bundle = eval_derivatives(nlp, point.x, point.p)
    info = classify_active(nlp, point, eps, kkt_tol, bundle)
    n = nlp.n
    active, strongly, weakly = list(info.active), list(info.strongly_active), list(info.weakly_active)
    jac_g, jac_h = bundle.jac_x_g, bundle.jac_x_h
    notes: list[str] = []

    rows = np.vstack([jac_g, jac_h[active]])
    licq = rows.shape[0] <= n and (rows.shape[0] == 0 or matrix_rank(rows, rank_tol) == rows.shape[0])

    mfcq, margin, direction = _mfcq_lp(jac_g, jac_h[active], eps)
    mfcq_dual = _mfcq_dual(jac_g, jac_h[active], eps)
    smfcq, _, _ = _mfcq_lp(np.vstack([jac_g, jac_h[strongly]]), jac_h[weakly], eps)
    scs = len(weakly) == 0

    hess = lagrangian_from_bundle(bundle, point.y, point.z).hess_xx
    cone = critical_cone(bundle, info)
    sosc = _positive_on(hess, cone.span_rows(), n, pd_shift)
    ssosc = _positive_on(hess, cone.equality_rows, n, pd_shift)

    polytope = None
    try:
        polytope = build_multiplier_polytope(
            nlp, point.x, point.p, info.active, with_vertices=with_vertices, bundle=bundle, sample=sample
        )
    except SensikitError as e:
        logger.warning(f"Multiplier polytope unavailable: {e}")
        notes.append(f"multiplier polytope unavailable: {e}")

    gssosc = None
    scs_per_vertex: list[bool] = []
    if polytope is not None and polytope.vertices is not None and len(polytope.vertices) > 0:
        gssosc = True
        for y_v, z_v in polytope.vertex_multipliers():
            _, strong_v, weak_v, _ = partition_active(bundle.h, jac_h, z_v, eps)
            strong_v = tuple(i for i in strong_v if i in info.active)
            scs_per_vertex.append(len([i for i in info.active if i not in strong_v]) == 0)
            hess_v = lagrangian_from_bundle(bundle, y_v, z_v).hess_xx
            rows_v = np.vstack([jac_g, jac_h[list(strong_v)]])
            if not _positive_on(hess_v, rows_v, n, pd_shift):
                gssosc = False

    crcq_verdict = crcq_sampled(nlp, point, info.active, rank_tol=rank_tol) if crcq else None

    # cross-checks between independent tests
    if polytope is not None and polytope.vertices is not None:
        if smfcq and len(polytope.vertices) != 1:
            notes.append(f"SMFCQ holds but the multiplier polytope has {len(polytope.vertices)} vertices")
    if polytope is not None and mfcq and not polytope.bounded:
        notes.append("MFCQ holds but the multiplier polytope is unbounded")
    if mfcq != mfcq_dual:
        notes.append(f"primal MFCQ ({mfcq}) and dual MFCQ ({mfcq_dual}) disagree")
    for note in notes:
        logger.warning(f"CQ cross-check: {note}")

    report = CQReport(
        active=info,
        licq=bool(licq),
        mfcq=bool(mfcq),
        mfcq_margin=margin,
        mfcq_direction=direction,
        mfcq_dual=bool(mfcq_dual),
        smfcq=bool(smfcq),
        scs=scs,
        sosc_subspace=bool(sosc),
        ssosc_subspace=bool(ssosc),
        gssosc_subspace=gssosc,
        crcq=crcq_verdict,
        polytope=polytope,
        scs_per_vertex=tuple(scs_per_vertex),
        tolerances={"active": eps, "rank": rank_tol, "pd_shift": pd_shift, "kkt": kkt_tol},
        notes=tuple(notes),
    )
    logger.info(
        f"CQ report: LICQ={report.licq} MFCQ={report.mfcq} SCS={report.scs} "
        f"SOSC-subspace={report.sosc_subspace} vertices={report.n_vertices}"
    )
    return report
