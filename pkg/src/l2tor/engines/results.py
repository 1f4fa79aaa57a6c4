"""Result and error types shared by the determinant engines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional


class EngineError(RuntimeError):
    pass


class GapNotCertified(EngineError):
    pass


class ResourceLimit(EngineError):
    pass


CERTIFIED = "certified"
HEURISTIC = "heuristic"
EXACT_QUADRATURE = "exactQuadrature"


@dataclass
class FKResult:
    """log of a Fuglede-Kadison determinant together with how much to trust it."""

    log_det: float
    certification: str
    engine: str
    error_bound: Optional[float] = None
    estimated_error: Optional[float] = None
    order: Optional[int] = None
    gap_enclosure: Optional[tuple] = None
    status: str = "ok"
    flags: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.certification not in (CERTIFIED, HEURISTIC, EXACT_QUADRATURE):
            raise ValueError(f"unknown certification {self.certification!r}")
        if self.certification == CERTIFIED and (self.error_bound is None or not math.isfinite(self.error_bound)):
            raise ValueError("certified results need a finite error bound")
        if self.gap_enclosure is not None:
            a, b = self.gap_enclosure
            if not 0 < a <= b:
                raise ValueError(f"invalid gap enclosure {self.gap_enclosure}")

    @property
    def trusted(self) -> bool:
        return self.certification in (CERTIFIED, EXACT_QUADRATURE) and self.status == "ok"

    @property
    def zero_determinant(self) -> bool:
        return self.status == "zero determinant"

    def uncertainty(self) -> float:
        """Best available error figure (bound, else estimate, else inf)."""
        if self.error_bound is not None:
            return self.error_bound
        if self.estimated_error is not None:
            return self.estimated_error
        return math.inf

    def to_json(self) -> dict:
        out = {"engine": self.engine, "logDet": _num(self.log_det), "certification": self.certification,
               "status": self.status}
        if self.error_bound is not None:
            out["errorBound"] = self.error_bound
        if self.estimated_error is not None:
            out["estimatedError"] = self.estimated_error
        if self.order is not None:
            out["order"] = self.order
        if self.gap_enclosure is not None:
            out["gapEnclosure"] = list(self.gap_enclosure)
        if self.flags:
            out["flags"] = list(self.flags)
        if self.diagnostics:
            out["diagnostics"] = {k: _num(v) if isinstance(v, float) else v for k, v in self.diagnostics.items()}
        return out


def _num(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "-inf" if x < 0 else ("inf" if x > 0 else "nan")
    return x
