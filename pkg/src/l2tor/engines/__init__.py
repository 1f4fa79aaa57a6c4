"""Fuglede-Kadison determinant engines."""

from .abelian import QuadratureConfig, fk_det_abelian, quadrature_trace
from .quotient import fk_det_finite_quotient, push_forward, spectrum_finite_quotient
from .results import (
    CERTIFIED,
    EXACT_QUADRATURE,
    HEURISTIC,
    EngineError,
    FKResult,
    GapNotCertified,
    ResourceLimit,
)
from .series import GapCertificate, certify_gap, fk_det_gap_series, split_diagonal_blocks

__all__ = [
    "CERTIFIED", "EXACT_QUADRATURE", "HEURISTIC", "EngineError", "FKResult", "GapCertificate",
    "GapNotCertified", "QuadratureConfig", "ResourceLimit", "certify_gap", "fk_det_abelian",
    "fk_det_finite_quotient", "fk_det_gap_series", "push_forward", "quadrature_trace",
    "spectrum_finite_quotient", "split_diagonal_blocks",
]
