"""Input partitioner: map a concrete environment valuation to the letter
whose reaction region contains it.

The compiled fast path evaluates the quantifier-free regions produced at
abstraction time; the brute-force path re-checks validity of the fully
quantified f_r per entry and exists as a cross-check of the compiled one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .abstraction import ValidReactionTable, all_choices, reaction_formula
from .errors import MultiRegion, NoRegion
from .logic import FFalse, FTrue, Formula, Rat, eval_formula, substitute
from .solver import check_validity
from .specs import LtlTSpec


@dataclass(frozen=True)
class CompiledPartitioner:
    """Ordered (letter, region) predicates; regions are pairwise disjoint
    and jointly exhaustive, inherited from the reaction table."""

    entries: tuple[tuple[str, Formula], ...]


def compile_partitioner(table: ValidReactionTable) -> CompiledPartitioner:
    return CompiledPartitioner(tuple((e.letter, e.region)
                                     for e in table.entries))


def _region_holds(region: Formula, v_x: Mapping[str, Rat]) -> bool:
    if isinstance(region, FTrue):
        return True
    if isinstance(region, FFalse):
        return False
    return eval_formula(region, v_x)


def partition(p: CompiledPartitioner, v_x: Mapping[str, Rat]) -> str:
    """The unique letter whose region holds at v_x."""
    found: str | None = None
    for letter, region in p.entries:
        if _region_holds(region, v_x):
            if found is not None:
                raise MultiRegion(f"input matches both {found!r} and {letter!r}")
            found = letter
    if found is None:
        raise NoRegion("input matches no region of the reaction table")
    return found


def partition_brute_force(table: ValidReactionTable, spec: LtlTSpec,
                          v_x: Mapping[str, Rat]) -> str:
    """The quantified-validity loop over table entries (cross-check path)."""
    universe = all_choices(len(table.literals))
    for entry in table.entries:
        f_r = reaction_formula(spec, entry.choices, universe)
        if check_validity(substitute(f_r, dict(v_x))):
            return entry.letter
    raise NoRegion("no table entry's f_r is valid at the input")
