"""Configuration management for sensikit."""

import os
from pathlib import Path
from typing import Any

from dotenv import load_dotenv

load_dotenv()


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(item) for item in raw.split(",") if item.strip())


class Config:
    """Tolerances and solver settings, overridable through SENSIKIT_* variables."""

    # Active-set and rank tolerances
    ACTIVE_TOL: float = float(os.getenv("SENSIKIT_ACTIVE_TOL", "1e-6"))
    RANK_TOL: float = float(os.getenv("SENSIKIT_RANK_TOL", "1e-8"))
    KKT_TOL: float = float(os.getenv("SENSIKIT_KKT_TOL", "1e-6"))
    PD_SHIFT: float = float(os.getenv("SENSIKIT_PD_SHIFT", "1e-8"))

    # Multiplier polytope
    VERTEX_GUARD: int = int(os.getenv("SENSIKIT_VERTEX_GUARD", "20"))
    VERTEX_TOL: float = float(os.getenv("SENSIKIT_VERTEX_TOL", "1e-7"))

    # Sampled constant-rank check
    CRCQ_RADIUS: float = float(os.getenv("SENSIKIT_CRCQ_RADIUS", "1e-4"))
    CRCQ_SAMPLES: int = int(os.getenv("SENSIKIT_CRCQ_SAMPLES", "20"))
    CRCQ_SEED: int = int(os.getenv("SENSIKIT_CRCQ_SEED", "0"))

    # Barrier solver
    R_SCHEDULE: str = os.getenv(
        "SENSIKIT_R_SCHEDULE", "1e-1,1e-2,1e-3,1e-4,1e-5,1e-6,1e-7"
    )
    NEWTON_TOL: float = float(os.getenv("SENSIKIT_NEWTON_TOL", "1e-9"))
    NEWTON_MAX_ITER: int = int(os.getenv("SENSIKIT_NEWTON_MAX_ITER", "100"))
    ARMIJO_C: float = float(os.getenv("SENSIKIT_ARMIJO_C", "1e-4"))
    FRACTION_TO_BOUNDARY: float = float(
        os.getenv("SENSIKIT_FRACTION_TO_BOUNDARY", "0.995")
    )

    # Path following
    CORRECTOR_TOL: float = float(os.getenv("SENSIKIT_CORRECTOR_TOL", "1e-8"))
    CORRECTOR_MAX_ITER: int = int(os.getenv("SENSIKIT_CORRECTOR_MAX_ITER", "25"))
    ADAPTIVE_ITER: int = int(os.getenv("SENSIKIT_ADAPTIVE_ITER", "10"))

    # Finite-difference oracle
    FD_STEP: float = float(os.getenv("SENSIKIT_FD_STEP", "1e-4"))
    FD_ONE_SIDED_STEPS: str = os.getenv("SENSIKIT_FD_ONE_SIDED_STEPS", "1e-3,1e-4,1e-5")
    RESOLVE_TOL: float = float(os.getenv("SENSIKIT_RESOLVE_TOL", "1e-10"))

    # Logging
    LOG_LEVEL: str = os.getenv("SENSIKIT_LOG_LEVEL", "WARNING").upper()

    # Bundled problem files
    FIXTURES_DIR: Path = Path(
        os.getenv("SENSIKIT_FIXTURES_DIR", str(Path(__file__).parent.parent / "fixtures"))
    )

    @classmethod
    def get_tool_info(cls) -> dict[str, Any]:
        """Get static tool metadata for reports."""
        from src import __version__

        return {
            "name": "sensikit",
            "description": "Post-optimal sensitivity analysis of parametric programs",
            "version": __version__,
            "commands": [
                "solve",
                "analyze",
                "diff",
                "directional",
                "value",
                "path",
                "conic-diff",
                "oracle",
            ],
        }

    @classmethod
    def r_schedule(cls) -> tuple[float, ...]:
        """Default barrier parameter schedule, decreasing."""
        return _floats(cls.R_SCHEDULE)

    @classmethod
    def fd_one_sided_steps(cls) -> tuple[float, ...]:
        return _floats(cls.FD_ONE_SIDED_STEPS)

    @classmethod
    def fixture_path(cls, name: str) -> Path:
        """Resolve a bare fixture name ("p1", "c1.json") against the bundled fixtures."""
        candidate = cls.FIXTURES_DIR / name
        if candidate.exists():
            return candidate

        for suffix in (".nlp", ".json"):
            with_suffix = cls.FIXTURES_DIR / f"{name}{suffix}"
            if with_suffix.exists():
                return with_suffix

        raise FileNotFoundError(f"No problem file or bundled fixture named '{name}'")

    def __init__(self):
        """Initialize configuration."""
        pass
