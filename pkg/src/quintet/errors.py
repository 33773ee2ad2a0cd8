"""Exception hierarchy.

Every domain error carries a stable ``code`` so the CLI can emit
machine-readable failures.
"""


class QuintetError(Exception):
    code = "QuintetError"

    def to_json(self) -> dict:
        return {"error": self.code, "message": str(self)}


class RangeViolation(QuintetError, ValueError):
    code = "RangeViolation"


class ConfigError(QuintetError, ValueError):
    code = "ConfigError"


class OrderingViolation(ConfigError):
    code = "OrderingViolation"


class ParseError(QuintetError, ValueError):
    code = "ParseError"

    def __init__(self, offset: int, reason: str, text: str = ""):
        self.offset = offset
        self.reason = reason
        self.text = text
        super().__init__(f"at byte {offset}: {reason}")

    def to_json(self) -> dict:
        return {"error": self.code, "message": str(self), "offset": self.offset, "reason": self.reason}


class EmptyMultiset(QuintetError, ValueError):
    code = "EmptyMultiset"


class EmptyEvidence(QuintetError, ValueError):
    code = "EmptyEvidence"


class GraphError(QuintetError):
    code = "GraphError"


class CycleDetected(GraphError):
    code = "CycleDetected"


class MissingRef(GraphError, KeyError):
    code = "MissingRef"

    def __str__(self):  # KeyError quotes its argument otherwise
        return Exception.__str__(self)


class DuplicateId(GraphError):
    code = "DuplicateId"


class LifecycleError(QuintetError):
    code = "LifecycleError"


class IllegalTransition(LifecycleError):
    code = "IllegalTransition"

    def __init__(self, phase, event):
        self.phase = phase
        self.event = event
        super().__init__(f"no transition from {getattr(phase, 'value', phase)!s} on {getattr(event, 'value', event)!s}")


class LayerSkip(LifecycleError):
    code = "LayerSkip"


class SelfVerification(LifecycleError):
    code = "SelfVerification"


class SelfRatification(LifecycleError):
    code = "SelfRatification"


class ContradictsValidated(LifecycleError):
    code = "ContradictsValidated"

    def __init__(self, claim_id: str, conflicting: str):
        self.claim_id = claim_id
        self.conflicting = conflicting
        super().__init__(f"{claim_id} contradicts validated claim {conflicting}")


class InsufficientEvidence(LifecycleError):
    code = "InsufficientEvidence"


class NotCorroborated(LifecycleError):
    code = "NotCorroborated"


class ClaimDiscarded(LifecycleError):
    code = "ClaimDiscarded"


class AuditError(QuintetError):
    code = "AuditError"


class EmptyHistory(AuditError):
    code = "EmptyHistory"


class UnscopedDecision(AuditError):
    code = "UnscopedDecision"
