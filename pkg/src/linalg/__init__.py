"""Dense linear algebra kernels"""

from .dense import (
    LSQRResult,
    LUFactors,
    QRFactors,
    independent_rows,
    is_positive_definite,
    lsqr_solve,
    lu_factor,
    lu_solve,
    matrix_rank,
    null_space,
    qr_rank,
)

__all__ = [
    "LSQRResult",
    "LUFactors",
    "QRFactors",
    "independent_rows",
    "is_positive_definite",
    "lsqr_solve",
    "lu_factor",
    "lu_solve",
    "matrix_rank",
    "null_space",
    "qr_rank",
]
