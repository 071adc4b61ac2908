# src/errors.py
"""
Error hierarchy. Every message reads "code:detail" so callers and the CLI
failure report can match on the code without parsing prose.
"""
from __future__ import annotations
from typing import Any, Dict


class LabError(ValueError):
    code = "lab_error"

    def __init__(self, detail: str = "", **context: Any):
        self.detail = detail
        self.context: Dict[str, Any] = dict(context)
        super().__init__(f"{self.code}:{detail}" if detail else self.code)

    def to_dict(self) -> Dict[str, Any]:
        out = {"code": self.code, "detail": self.detail}
        out.update({k: v for k, v in self.context.items() if isinstance(v, (int, float, str, bool))})
        return out


class InvalidParameterError(LabError):
    code = "invalid_parameter"


class SingularPointError(LabError):
    code = "singular_point"


class GridMismatchError(LabError):
    code = "grid_mismatch"


class MissingDerivativesError(LabError):
    code = "missing_derivatives"


class DegenerateFitError(LabError):
    code = "degenerate_fit"


class TruncationError(LabError):
    code = "truncation_too_small"


class CoefficientFloorError(LabError):
    code = "coefficient_floor"


class HypothesisError(LabError):
    code = "hypothesis_violation"


class OutOfRangeError(LabError):
    code = "out_of_range"

    def __init__(self, detail: str = "", log_estimate: float = float("nan"), **context: Any):
        super().__init__(detail, log_estimate=log_estimate, **context)
        self.log_estimate = float(log_estimate)


def require(cond: bool, detail: str, exc: type = InvalidParameterError, **context: Any) -> None:
    if not cond:
        raise exc(detail, **context)
