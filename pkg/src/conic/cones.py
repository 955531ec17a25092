"""Cone specifications and Euclidean projections with their Jacobians."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.config import Config
from src.errors import DimensionMismatchError

ZERO = "zero"
FREE = "free"
NONNEG = "nonneg"
SOC = "soc"

KINDS = (ZERO, FREE, NONNEG, SOC)
_DUAL = {ZERO: FREE, FREE: ZERO, NONNEG: NONNEG, SOC: SOC}


@dataclass(frozen=True)
class ConeBlock:
    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DimensionMismatchError(f"unknown cone kind '{self.kind}'")
        if self.dim < 1 or (self.kind == SOC and self.dim < 2):
            raise DimensionMismatchError(f"{self.kind} block needs a larger dimension than {self.dim}")


@dataclass(frozen=True)
class ConeSpec:
    """Product of blocks in the given order."""

    blocks: tuple[ConeBlock, ...]

    @classmethod
    def of(cls, *blocks: tuple[str, int]) -> ConeSpec:
        return cls(tuple(ConeBlock(kind, dim) for kind, dim in blocks))

    @property
    def dim(self) -> int:
        return sum(block.dim for block in self.blocks)

    def slices(self) -> list[tuple[ConeBlock, slice]]:
        out, start = [], 0
        for block in self.blocks:
            out.append((block, slice(start, start + block.dim)))
            start += block.dim
        return out

    def dual(self) -> ConeSpec:
        return ConeSpec(tuple(ConeBlock(_DUAL[b.kind], b.dim) for b in self.blocks))

    def hsd(self, m: int) -> ConeSpec:
        """K x R^m x R_+, the cone of the self-dual embedding variable u = (x, y, tau)."""
        extra = ((ConeBlock(FREE, m),) if m else ()) + (ConeBlock(NONNEG, 1),)
        return ConeSpec(self.blocks + extra)


@dataclass(frozen=True)
class ProjectionResult:
    u: np.ndarray
    jacobian: np.ndarray
    differentiable: bool
    kinks: tuple[int, ...]


def _project_soc(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t, w = z[0], z[1:]
    norm = float(np.linalg.norm(w))
    k = z.size
    if norm <= t:
        return z.copy(), np.eye(k)
    if norm <= -t:
        return np.zeros(k), np.zeros((k, k))

    unit = w / norm
    u = 0.5 * (t + norm) * np.concatenate([[1.0], unit])
    J = np.empty((k, k))
    J[0, 0] = 1.0
    J[0, 1:] = unit
    J[1:, 0] = unit
    J[1:, 1:] = ((t + norm) / norm) * np.eye(k - 1) - (t / norm) * np.outer(unit, unit)
    return u, 0.5 * J


def project_cone(spec: ConeSpec, z, eps: float = Config.ACTIVE_TOL) -> ProjectionResult:
    """Blockwise projection; ``kinks`` lists blocks where the projection is not differentiable."""
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.size != spec.dim:
        raise DimensionMismatchError(f"vector has length {z.size}, cone dimension is {spec.dim}")

    u = np.zeros_like(z)
    J = np.zeros((z.size, z.size))
    kinks = []
    for index, (block, part) in enumerate(spec.slices()):
        zb = z[part]
        if block.kind == FREE:
            u[part], J[part, part] = zb, np.eye(block.dim)
        elif block.kind == NONNEG:
            u[part] = np.maximum(zb, 0.0)
            J[part, part] = np.diag((zb > 0.0).astype(float))
            if np.any(np.abs(zb) <= eps):
                kinks.append(index)
        elif block.kind == SOC:
            u[part], J[part, part] = _project_soc(zb)
            if abs(np.linalg.norm(zb[1:]) - abs(zb[0])) <= eps:
                kinks.append(index)
    return ProjectionResult(u, J, not kinks, tuple(kinks))


def distance_to_cone(spec: ConeSpec, z) -> float:
    z = np.asarray(z, dtype=float).reshape(-1)
    return float(np.linalg.norm(z - project_cone(spec, z).u))
