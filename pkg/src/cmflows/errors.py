"""Exception hierarchy shared by all modules."""


class CMError(Exception):
    """Base class for every error raised by cmflows."""


class ShapeError(CMError, ValueError):
    pass


class NonFinite(ShapeError):
    pass


class InvalidGroupElement(CMError, ValueError):
    pass


class DomainError(CMError, ValueError):
    """Input outside the domain of an operation (off-variety, non-Hermitian, ...)."""

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class ChartCollision(DomainError):
    """Two chart positions closer than the separation floor."""


class ChartDegeneracy(DomainError):
    """Eigenvalue collision while recovering chart coordinates."""


class NotOnRealCM(DomainError):
    pass


class NonConvergence(CMError, RuntimeError):
    def __init__(self, message, best=None, iterations=None, defect=None):
        super().__init__(message)
        self.best = best
        self.iterations = iterations
        self.defect = defect


class BlowUp(CMError, FloatingPointError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class BudgetExhausted(CMError, RuntimeError):
    """Closure search ran out of depth or dimension budget.

    Not a statement about the mathematics, only about the search budget.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class TargetMiss(CMError, RuntimeError):
    def __init__(self, message, program=None, report=None):
        super().__init__(message)
        self.program = program
        self.report = report


class StageRejected(CMError, ValueError):
    def __init__(self, message, stage=None, value=None):
        super().__init__(message)
        self.stage = stage
        self.value = value


class ParseError(CMError, ValueError):
    def __init__(self, message, text="", position=0):
        self.text = text
        self.position = position
        caret = f"\n  {text}\n  {' ' * position}^" if text else ""
        super().__init__(f"{message} at position {position}{caret}")
