"""Pydantic models of the JSON report emitted by the command line."""

from typing import Any

from pydantic import BaseModel, ConfigDict, Field

Vector = list[float]
Matrix = list[list[float]]


class PointModel(BaseModel):
    x: Vector
    y: Vector
    z: Vector
    p: Vector
    kkt_residual: dict[str, float] | None = None


class CRCQModel(BaseModel):
    verdict: bool
    samples: int
    ranks: list[int]
    radius: float
    heuristic: bool = True


class CQReportModel(BaseModel):
    active: list[int]
    strongly_active: list[int]
    weakly_active: list[int]
    inactive: list[int]
    licq: bool
    mfcq: bool
    mfcq_dual: bool
    mfcq_margin: float
    smfcq: bool
    scs: bool
    sosc_subspace: bool
    ssosc_subspace: bool
    gssosc_subspace: bool | None = None
    crcq: CRCQModel | None = None
    polytope_bounded: bool | None = None
    n_vertices: int | None = None
    vertices: list[Vector] | None = None
    scs_per_vertex: list[bool] = Field(default_factory=list)
    tolerances: dict[str, float] = Field(default_factory=dict)
    notes: list[str] = Field(default_factory=list)


class SensitivityModel(BaseModel):
    regime: str
    jac_x: Matrix
    jac_y: Matrix
    jac_z: Matrix
    details: dict[str, Any] = Field(default_factory=dict)


class DirectionalModel(BaseModel):
    regime: str
    h: Vector
    dx: Vector
    dy: Vector | None = None
    dz: Vector | None = None
    vertex_y: Vector | None = None
    vertex_z: Vector | None = None
    log: list[str] = Field(default_factory=list)


class LDStageModel(BaseModel):
    index: int
    plus: list[int]
    zero: list[int]


class LDModel(BaseModel):
    R: Matrix
    X: Matrix
    Y: Matrix
    Z: Matrix
    stages: list[LDStageModel]


class DirectionalValueModel(BaseModel):
    h: Vector
    value: float
    lower: float
    upper: float


class ValueModel(BaseModel):
    phi: float
    gradient: Vector | None = None
    hessian: Matrix | None = None
    regime: str
    method: str
    asymmetry: float = 0.0
    directional: list[DirectionalValueModel] = Field(default_factory=list)


class PathStepModel(BaseModel):
    t: float
    x: Vector
    y: Vector
    z: Vector
    p: Vector
    regime: str
    active: list[int]
    added: list[int]
    removed: list[int]
    corrector_iterations: int
    predictor_error: float
    kkt_residual: float
    log: list[str] = Field(default_factory=list)


class PathModel(BaseModel):
    p_start: Vector
    p_end: Vector
    breakpoints: Vector
    completed: bool
    steps: list[PathStepModel]
    active_set_changes: list[dict[str, Any]] = Field(default_factory=list)
    failure: dict[str, Any] | None = None
    endpoint_error: float | None = None


class ConicModel(BaseModel):
    m: int
    n: int
    cones: list[dict[str, Any]]
    x: Vector
    y: Vector
    s: Vector
    kkt_residual: float
    hsd_residual: float
    dx: Vector | None = None
    dy: Vector | None = None
    ds: Vector | None = None
    jac_x_b: Matrix | None = None
    least_squares: bool = False


class OracleModel(BaseModel):
    quantity: str
    estimate: Any
    steps: Vector
    max_abs_error: float | None = None
    max_rel_error: float | None = None
    monotone: bool | None = None


class NewtonStepModel(BaseModel):
    iteration: int
    merit: float
    grad_norm: float
    step_norm: float
    alpha: float
    shift: float


class BarrierStageModel(BaseModel):
    r: float
    iterations: int
    grad_norm: float
    x: Vector
    jac_x: Matrix | None = None
    newton: list[NewtonStepModel] = Field(default_factory=list)


class SolverTrailModel(BaseModel):
    method: str
    stages: list[BarrierStageModel] = Field(default_factory=list)
    corrector_iterations: int | None = None
    corrector_repairs: list[str] = Field(default_factory=list)
    mu: float | None = None


class ErrorModel(BaseModel):
    type: str
    message: str
    details: dict[str, Any] = Field(default_factory=dict)


class Report(BaseModel):
    """Top-level report; every section except the header is optional."""

    model_config = ConfigDict(extra="forbid")

    tool: str = "sensikit"
    version: str
    problem: str
    command: str
    exit_code: int = 0
    point: PointModel | None = None
    cq: CQReportModel | None = None
    sensitivity: SensitivityModel | None = None
    directional: list[DirectionalModel] = Field(default_factory=list)
    ld: LDModel | None = None
    value: ValueModel | None = None
    path: PathModel | None = None
    conic: ConicModel | None = None
    oracle: list[OracleModel] = Field(default_factory=list)
    solver: SolverTrailModel | None = None
    error: ErrorModel | None = None
    wall_time: float = 0.0
