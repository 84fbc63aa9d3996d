"""Exception hierarchy shared by all pipeline components."""

from __future__ import annotations


class SynthError(Exception):
    """Base class for every domain error raised by this package."""


class MissingVariable(SynthError):
    """A valuation lacks a variable required during evaluation."""

    def __init__(self, name: str):
        super().__init__(f"valuation has no binding for variable {name!r}")
        self.name = name


class SortMismatch(SynthError):
    """A term or atom mixes sorts, or an operation got the wrong sort."""


class CellBudgetExceeded(SynthError):
    """DNF expansion exceeded the configured cell budget."""


class UnsupportedFragment(SynthError):
    """Formula falls outside the supported linear fragment."""


class FormulaNotValid(SynthError):
    """A forall-exists formula is not valid; no Skolem function exists."""


class SpecSyntaxError(SynthError):
    """Parse failure, with 1-based line and column of the offending token."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class UndeclaredVariable(SynthError):
    """A specification references a variable with no env/sys declaration."""


class DuplicateDeclaration(SynthError):
    """A variable is declared more than once."""


class ChoiceBudgetExceeded(SynthError):
    """The literal count makes the 2^n choice space exceed the budget."""


class FragmentError(SynthError):
    """The property is not in the fragment the in-tree game solver handles."""


class SchemaError(SynthError):
    """An artifact file does not match its expected schema."""


class SchemaMismatch(SynthError):
    """Pipeline components were built from incompatible artifacts."""


class ExtraViolation(SynthError):
    """An imported machine emits a cube outside the letter's reaction."""

    def __init__(self, state: str, letter: str):
        super().__init__(f"output at state {state!r} on letter {letter!r} "
                         "is not a choice of that letter's reaction")
        self.state = state
        self.letter = letter


class NoRegion(SynthError):
    """No partition region matched an input (table exhaustiveness bug)."""


class MultiRegion(SynthError):
    """More than one region matched an input (table disjointness bug)."""


class ChoiceNotInReaction(SynthError):
    """A provider formula was requested for a choice outside the reaction."""


class AdaptiveInvalid(SynthError):
    """An adaptive constraint makes the provider formula invalid."""

    def __init__(self, letter: str, choice_bits: str, detail: str = ""):
        msg = f"adaptive provider formula for pair ({letter}, {choice_bits}) is not valid"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.letter = letter
        self.choice_bits = choice_bits


class InfeasibleChoice(SynthError):
    """The dynamic provider was asked for a choice unsatisfiable at the input."""


class RealNotEmittable(SynthError):
    """C emission is defined for integer-sorted functions only."""
