"""Exception types shared across the engine, compiler, and IO layers."""


class AutogramError(Exception):
    """Base class for every error this package raises on purpose."""


# ---------------------------------------------------------------- graph model


class GraphError(AutogramError):
    pass


class DuplicateName(GraphError):
    pass


class UnknownAction(GraphError):
    pass


class MalformedCallableName(GraphError):
    pass


class UnknownNode(GraphError):
    pass


class UnknownCallable(GraphError):
    pass


class EmptyFamily(GraphError):
    pass


class TooManyChoices(GraphError):
    # Also raised by the classifier layer: multiple choice answers are
    # restricted to single letters A-Z.
    pass


# ---------------------------------------------------------- expression language


class ExprError(AutogramError):
    """Base for expression language errors. `position` is a character offset
    into the source text when one is known."""

    def __init__(self, message: str, position: int | None = None):
        super().__init__(message)
        self.position = position


class LexError(ExprError):
    pass


class ParseError(ExprError):
    pass


class EvalError(ExprError):
    pass


class UnknownName(EvalError):
    pass


class TypeMismatch(EvalError):
    pass


class DivisionByZero(EvalError):
    pass


class IndexOutOfRange(EvalError):
    pass


class UnknownMethod(EvalError):
    pass


class NotCallable(EvalError):
    pass


class ArityMismatch(EvalError):
    pass


class NotACall(ExprError):
    pass


class UnknownDollarVariable(EvalError):
    pass


# --------------------------------------------------------------------- memory


class MemoryStateError(AutogramError):
    pass


class PopRoot(MemoryStateError):
    pass


class CorruptDocument(MemoryStateError):
    pass


# -------------------------------------------------------------------- runtime


class EngineError(AutogramError):
    pass


class StepLimitExceeded(EngineError):
    pass


class EmptyTransitions(EngineError):
    pass


class ReturnAtRoot(EngineError):
    pass


class ChatInsideApplyFn(EngineError):
    pass


class SelfRefDisabled(EngineError):
    pass


class MissingUserPrompts(EngineError):
    pass


class TransitionConfigError(EngineError):
    """A node needs the classifier but lacks a usable question/choice setup."""


# --------------------------------------------------------------------- llm io


class LlmError(AutogramError):
    pass


class TemplateMissingPlaceholder(LlmError):
    pass


class ScriptExhausted(LlmError):
    pass


class BackendUnavailable(LlmError):
    pass


class HttpError(LlmError):
    def __init__(self, status: int, message: str = ""):
        super().__init__(message or f"backend returned HTTP {status}")
        self.status = status


class RequestTimeout(LlmError):
    pass


class MalformedResponse(LlmError):
    pass


# ------------------------------------------------------------------- compiler


class CompileError(AutogramError):
    pass


class IndentError(CompileError):
    pass


class MultiAssign(CompileError):
    pass


class NonLiteralKwarg(CompileError):
    pass


class UnknownKwarg(CompileError):
    pass


class CompileWarning(UserWarning):
    pass


# ---------------------------------------------------------------- authoring io


class AuthoringError(AutogramError):
    pass


class UnknownHeader(AuthoringError):
    pass


class RowParseError(AuthoringError):
    def __init__(self, message: str, row: int = 0):
        super().__init__(f"row {row}: {message}")
        self.row = row


class ConfigParseError(AuthoringError):
    pass


class UnknownHostFunction(AuthoringError):
    pass
