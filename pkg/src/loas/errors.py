class LoasError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(LoasError):
    def __init__(self, position, message: str):
        self.position = position
        self.message = message
        line, col = position
        super().__init__(f"{line}:{col}: {message}")


class SafetyError(LoasError):
    def __init__(self, rule_index: int, variable, rule=None):
        self.rule_index = rule_index
        self.variable = variable
        self.rule = rule
        where = f" in '{rule}'" if rule is not None else ""
        super().__init__(f"rule {rule_index}: unsafe variable {variable}{where}")


class GroundingError(LoasError):
    pass


class NonFiniteGrounding(GroundingError):
    def __init__(self, atom, bound: int):
        self.atom = atom
        self.bound = bound
        super().__init__(f"term nesting of {atom} exceeds bound {bound}")


class NotGround(LoasError):
    pass


class SearchSpaceExplosion(LoasError):
    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"search space exceeds {cap} rules")


class TaskError(LoasError):
    """A learning task violates a structural invariant."""


class ReservedPredicateClash(TaskError):
    def __init__(self, predicates):
        self.predicates = sorted(predicates)
        super().__init__(f"reserved meta predicates used by the task: {', '.join(self.predicates)}")


class MalformedMetaModel(LoasError):
    pass


class ExternalSolverError(LoasError):
    def __init__(self, exit_code: int, transcript: str):
        self.exit_code = exit_code
        self.transcript = transcript
        super().__init__(f"external solver failed with exit code {exit_code}")


class IterationLimitExceeded(LoasError):
    def __init__(self, limit: int):
        self.limit = limit
        super().__init__(f"ILASP2 loop exceeded {limit} iterations")


class SpaceTooLarge(LoasError):
    def __init__(self, size: int, limit: int):
        self.size = size
        self.limit = limit
        super().__init__(f"search space of {size} rules exceeds brute-force limit {limit}")


class ExhaustedSampling(LoasError):
    pass


class ResourceLimit(LoasError):
    """A configured time budget ran out."""
