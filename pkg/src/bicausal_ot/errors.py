"""Exception hierarchy. Every domain error carries a machine-readable code
and a JSON-serializable detail dict so the CLI can emit structured errors."""

from __future__ import annotations


class BicausalOTError(Exception):
    code = "ERROR"

    def __init__(self, message: str, **detail):
        super().__init__(message)
        self.message = message
        self.detail = detail

    def to_json(self):
        return {"code": self.code, "message": self.message, "detail": _jsonify(self.detail)}


def _jsonify(obj):
    from fractions import Fraction

    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    return obj


class MassSumNotOne(BicausalOTError):
    code = "MASS_SUM_NOT_ONE"


class NegativeMass(BicausalOTError):
    code = "NEGATIVE_MASS"


class UnknownLabel(BicausalOTError):
    code = "UNKNOWN_LABEL"


class StepOutOfRange(BicausalOTError):
    code = "STEP_OUT_OF_RANGE"


class UndefinedOnSupport(BicausalOTError):
    code = "UNDEFINED_ON_SUPPORT"


class DimensionMismatch(BicausalOTError):
    code = "DIMENSION_MISMATCH"


class InvalidCoupling(BicausalOTError):
    code = "INVALID_COUPLING"


class UnbalancedMasses(BicausalOTError):
    code = "UNBALANCED_MASSES"


class NonSeparableCost(BicausalOTError):
    code = "NON_SEPARABLE_COST"


class TooLarge(BicausalOTError):
    code = "TOO_LARGE"


class OverflowGuard(BicausalOTError):
    code = "OVERFLOW_GUARD"


class BudgetExceeded(BicausalOTError):
    code = "BUDGET_EXCEEDED"


class PlanInvalid(BicausalOTError):
    code = "PLAN_INVALID"


class PlanNotRefining(BicausalOTError):
    code = "PLAN_NOT_REFINING"


class NotBicausal(BicausalOTError):
    code = "NOT_BICAUSAL"


class CellAgreementRequired(BicausalOTError):
    code = "CELL_AGREEMENT_REQUIRED"


class PrecisionBand(BicausalOTError):
    """A comparison fell inside the declared precision band of an inexact
    metric value. Raised instead of silently tie-breaking."""

    code = "PRECISION_BAND"


class InexactValue(BicausalOTError):
    """An exactly-rational value was required but only an interval is available."""

    code = "INEXACT_VALUE"


class SchemaError(BicausalOTError):
    code = "SCHEMA_ERROR"


class UsageError(BicausalOTError):
    code = "USAGE_ERROR"
