"""Exception hierarchy shared by every svtl module."""


class SvtlError(Exception):
    """Base class for all errors raised by svtl."""


class Diagnostic:
    __slots__ = ("message", "line", "col", "rule")

    def __init__(self, message, line=0, col=0, rule="syntax"):
        self.message = message
        self.line = line
        self.col = col
        self.rule = rule

    def __str__(self):
        return f"{self.line}:{self.col}: [{self.rule}] {self.message}"

    def __repr__(self):
        return f"Diagnostic({self})"


class SpecError(SvtlError):
    """A model source failed to parse or to pass static checks."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


class TraceSyntaxError(SvtlError):
    def __init__(self, message, line):
        self.line = line
        super().__init__(f"line {line}: {message}")


class UndefinedTransition(SvtlError):
    """An event was applied at a state where its guard does not hold.

    ``position`` is the 1-based index of the offending event in the trace
    being folded, so ``prefix_length == position - 1`` events were consumed.
    """

    def __init__(self, event, position=None, detail=""):
        self.event = event
        self.position = position
        msg = f"event {event} is undefined"
        if position is not None:
            msg += f" at position {position}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)

    @property
    def prefix_length(self):
        return None if self.position is None else self.position - 1


class EvalError(SvtlError):
    """Runtime failure while evaluating an expression (bad index, 1/0, ...)."""


class NoEmission(SvtlError):
    """A projection was not frozen but no emit rule produced a component event."""


class RendezvousViolation(SvtlError):
    """Send/receive emissions in one step do not pair up."""


class UnknownExport(SvtlError):
    pass


class GraphTruncated(SvtlError):
    def __init__(self, frontier_depth):
        self.frontier_depth = frontier_depth
        super().__init__(f"exploration truncated at depth {frontier_depth}")


class NoWitness(SvtlError):
    pass
