"""Exception hierarchy shared by every ewapa subsystem.

Every operational failure raises a subclass of :class:`EwapaError`; the CLI
maps these to exit code 1 and anything else to a crash. Names mirror the
failure they describe, not the module that raises them.
"""

from __future__ import annotations


class EwapaError(Exception):
    """Base class for all operational errors."""


# --- profile validation ---------------------------------------------------


class ProfileError(EwapaError):
    """A runtime profile violates its invariants."""


class DuplicateClass(ProfileError):
    """Two hooks of the same kind registered for one event class."""


class EmptySymbol(ProfileError):
    """A hook, init, or load symbol is empty."""


class MissingPlaceholder(ProfileError):
    """The launch command template lacks the required ``{module}`` slot."""


# --- symbol tables --------------------------------------------------------


class SymbolError(EwapaError):
    pass


class NotAnObjectFile(SymbolError):
    """The file is not an ELF object."""


class StrippedBinary(SymbolError):
    """The object file carries no usable symbol table."""


class NotFound(SymbolError):
    """No symbol matches the pattern."""


class Ambiguous(SymbolError):
    """More than one symbol matches the pattern."""

    def __init__(self, pattern: str, candidates: list[str]):
        self.pattern = pattern
        self.candidates = candidates
        listing = ", ".join(candidates)
        super().__init__(f"pattern {pattern!r} matches {len(candidates)} symbols: {listing}")


# --- profile files / logs / configs ---------------------------------------


class ParseError(EwapaError):
    """A structured input file failed to parse; carries location context."""

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None, field: str | None = None):
        self.path = path
        self.line = line
        self.field = field
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{': '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class UnknownKind(ParseError):
    """An event record names a kind outside entry/exit."""


class UnknownClass(ParseError):
    """An event record names an unrecognized event class."""


# --- event pipeline -------------------------------------------------------


class PipelineError(EwapaError):
    pass


class MissingInit(PipelineError):
    """No entry event for the initialization symbol was observed."""


class MissingLoad(PipelineError):
    """No entry event for the module-load symbol was observed."""


class NegativeInterval(PipelineError):
    """Module load observed before runtime initialization."""


# --- live collector -------------------------------------------------------


class CollectorError(EwapaError):
    pass


class PermissionDenied(CollectorError):
    """Tracing requires root (or CAP_BPF + CAP_PERFMON)."""


class CollectorUnavailable(CollectorError):
    """The BCC toolchain or kernel tracing support is absent."""


class SymbolResolution(CollectorError):
    """A user-space hook failed to resolve; wraps NotFound/Ambiguous."""


class KernelSymbolMissing(CollectorError):
    """A syscall hook names a symbol the running kernel does not export."""


class ProbeLimitExceeded(CollectorError):
    """The kernel rejected further probe attachments."""


class SpawnFailure(CollectorError):
    """The target command could not be started."""


class UseAfterDetach(SpawnFailure):
    """run_and_collect called on a detached handle."""


class Timeout(CollectorError):
    """The target exceeded its deadline and was killed."""

    def __init__(self, message: str, partial=None):
        self.partial = partial
        super().__init__(message)


# --- workload harness -----------------------------------------------------


class HarnessError(EwapaError):
    pass


class DiskFull(HarnessError):
    pass


class PathNotWritable(HarnessError):
    pass


class ToolchainMissing(HarnessError):
    """No compiler command template configured for the requested target."""


class CompileFailed(HarnessError):
    """External compiler exited non-zero; carries its diagnostics."""

    def __init__(self, command: str, diagnostics: str):
        self.command = command
        self.diagnostics = diagnostics
        super().__init__(f"compile failed: {command}\n{diagnostics}")


class EmptyConfig(HarnessError):
    """The matrix config lists no runtimes or no workloads."""


class ReplayLogMissing(HarnessError):
    """Fewer recorded logs than requested repetitions."""


# --- analysis -------------------------------------------------------------


class AnalysisError(EwapaError):
    pass


class ZeroTotal(AnalysisError):
    pass


class TooFewPoints(AnalysisError):
    pass


class NonIncreasingSizes(AnalysisError):
    pass


class ZeroWasiCount(AnalysisError):
    pass


class ZeroCount(AnalysisError):
    pass


class ZeroChunk(AnalysisError):
    pass


class InsufficientRuntimes(AnalysisError):
    pass


class NonPositiveStartup(AnalysisError):
    pass


class EmptyRuntimeSet(AnalysisError):
    pass
