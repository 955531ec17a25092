"""The set of KKT multipliers at a fixed primal point."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from src.config import Config
from src.errors import EmptyPolytopeError, VertexGuardError
from src.kernels.lp import LinearProgram, lp_solve
from src.kernels.vertices import PolytopeVertices, enumerate_vertices
from src.linalg.dense import matrix_rank
from src.model.autodiff import DerivativeBundle, eval_derivatives
from src.model.problem import ParametricNLP

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MultiplierPolytope:
    """{(y, z_A) : J_x g' y + J_x h_A' z_A = -grad_x f, z_A >= 0}; inactive z pinned to 0.

    Coordinates are v = (y, z_A) with z_A ordered as ``active``.
    """

    matrix: np.ndarray
    rhs: np.ndarray
    m_e: int
    m_i: int
    active: tuple[int, ...]
    vertices: PolytopeVertices | None
    bounded: bool

    @property
    def sign_constrained(self) -> tuple[int, ...]:
        return tuple(range(self.m_e, self.m_e + len(self.active)))

    @property
    def dimension(self) -> int:
        return self.m_e + len(self.active)

    @property
    def n_vertices(self) -> int | None:
        return None if self.vertices is None else len(self.vertices)

    def split(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(y, z) with z expanded to all m_i inequalities."""
        v = np.asarray(v, dtype=float)
        z = np.zeros(self.m_i)
        z[list(self.active)] = v[self.m_e :]
        return v[: self.m_e].copy(), z

    def vertex_multipliers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        if self.vertices is None:
            raise VertexGuardError(columns=len(self.active), guard=Config.VERTEX_GUARD)
        return [self.split(v) for v in self.vertices]

    def contains(self, y, z, tol: float = 1e-7) -> bool:
        v = np.concatenate([np.asarray(y, dtype=float), np.asarray(z, dtype=float)[list(self.active)]])
        inactive = np.delete(np.asarray(z, dtype=float), list(self.active))
        scale = 1.0 + float(np.max(np.abs(self.rhs), initial=0.0))
        return bool(
            np.max(np.abs(self.matrix @ v - self.rhs), initial=0.0) <= tol * scale
            and np.all(v[self.m_e :] >= -tol)
            and np.all(np.abs(inactive) <= tol)
        )


def build_multiplier_polytope(
    nlp: ParametricNLP,
    x,
    p,
    active,
    with_vertices: bool = True,
    bundle: DerivativeBundle | None = None,
    guard: int = Config.VERTEX_GUARD,
    tol: float = Config.VERTEX_TOL,
    sample: int | None = None,
    seed: int = 0,
) -> MultiplierPolytope:
    """Stationarity equalities plus sign constraints at x, with enumerated vertices."""
    if bundle is None:
        bundle = eval_derivatives(nlp, x, p)
    active = tuple(int(i) for i in active)
    A = np.hstack([bundle.jac_x_g.T, bundle.jac_x_h[list(active)].T]) if nlp.n else np.zeros((0, 0))
    A = A.reshape(nlp.n, nlp.m_e + len(active))
    b = -bundle.grad_x_f

    if A.shape[1]:
        v_ls = np.linalg.lstsq(A, b, rcond=None)[0]
        projected = A @ v_ls
    else:
        projected = np.zeros(nlp.n)
    gap = float(np.max(np.abs(projected - b), initial=0.0))
    if gap > 1e-6 * (1.0 + float(np.max(np.abs(b), initial=0.0))):
        raise EmptyPolytopeError(
            f"stationarity has no solution at x (least-squares gap {gap:.3e}); not a KKT point",
            gap=gap,
        )
    b = projected

    k = A.shape[1]
    bounds = ((None, None),) * nlp.m_e + ((0.0, None),) * len(active)
    feasibility = lp_solve(LinearProgram(np.zeros(k), A, b, bounds=bounds)) if k else None
    if feasibility is not None and not feasibility.optimal:
        raise EmptyPolytopeError("no sign-feasible multipliers satisfy stationarity at x")

    vertices = None
    bounded = True
    if k and with_vertices:
        try:
            vertices = enumerate_vertices(
                A, b, range(nlp.m_e, k), guard=guard, tol=tol, sample=sample, seed=seed
            )
            bounded = vertices.bounded
        except VertexGuardError as e:
            logger.warning(f"Multiplier vertices not enumerated: {e}")
            bounded = _recession_free(A, nlp.m_e, k)
    elif k:
        bounded = _recession_free(A, nlp.m_e, k)
    else:
        vertices = PolytopeVertices(np.zeros((1, 0)), 1, 1, True, True)

    polytope = MultiplierPolytope(A, b, nlp.m_e, nlp.m_i, active, vertices, bounded)
    logger.debug(f"multiplier polytope: dim={k}, vertices={polytope.n_vertices}, bounded={bounded}")
    return polytope


def _recession_free(A: np.ndarray, m_e: int, k: int) -> bool:
    c = np.zeros(k)
    c[m_e:] = -1.0
    bounds = ((None, None),) * m_e + ((0.0, 1.0),) * (k - m_e)
    result = lp_solve(LinearProgram(c, A, np.zeros(A.shape[0]), bounds=bounds))
    if not result.optimal:
        return False
    if -result.objective > 1e-9:
        return False
    # equality multipliers alone can still move along null(J_g')
    return matrix_rank(A[:, :m_e]) == m_e if m_e else True
