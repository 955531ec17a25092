"""JSON conic problem files."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field

from src.conic.cones import ConeSpec
from src.conic.residual import ConicProblem

logger = logging.getLogger(__name__)


class ConeModel(BaseModel):
    kind: Literal["zero", "free", "nonneg", "soc"]
    dim: int = Field(ge=1)


class SolutionModel(BaseModel):
    x: list[float]
    y: list[float]
    s: list[float]


class PerturbationModel(BaseModel):
    dA: list[list[float]] | None = None
    db: list[float] | None = None
    dc: list[float] | None = None


class ConicFileModel(BaseModel):
    A: list[list[float]]
    b: list[float]
    c: list[float]
    cones: list[ConeModel]
    solution: SolutionModel | None = None
    perturbation: PerturbationModel | None = None


def to_problem(model: ConicFileModel) -> ConicProblem:
    cone = ConeSpec.of(*((cone.kind, cone.dim) for cone in model.cones))
    A = np.asarray(model.A, dtype=float)
    if A.size == 0:
        A = np.zeros((len(model.b), len(model.c)))
    return ConicProblem(A, model.b, model.c, cone)


def load_conic(path: str | Path) -> tuple[ConicProblem, ConicFileModel]:
    """Read and validate a conic JSON file; pydantic reports schema errors."""
    path = Path(path)
    model = ConicFileModel.model_validate_json(path.read_text())
    problem = to_problem(model)
    logger.info(f"Loaded conic problem {path.stem}: m={problem.m}, n={problem.n}")
    return problem, model
