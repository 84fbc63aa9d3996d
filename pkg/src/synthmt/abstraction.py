"""Boolean abstraction: choices, characteristic formulas, valid reactions,
and the Booleanized specification phi_direct && G(phi_legal -> phi_extra).

The valid reactions partition the environment's moves by the set of
choices the system can realize.  Enumeration is model-guided over the
sign space of the atoms occurring in the per-choice regions: each
satisfiable sign cell yields a representative input, its feasible-choice
set is read off the regions, and cells with equal feasible sets merge
into one table entry named e_0, e_1, ... in discovery order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import ChoiceBudgetExceeded, SchemaError
from .logic import (Atom, FAtom, FAnd, FFalse, FNot, FOr, FQuant, FTrue,
                    Formula, Sort, f_and, f_not, negate_atom, or_cells,
                    to_dnf)
from .parsing import parse_formula, render_atom, render_formula
from .solver import eliminate_quantifiers, find_model
from .specs import (LtlNode, LtlTSpec, parse_spec, prop_names,
                    render_ltl, render_spec)

Choice = tuple[bool, ...]

CHOICE_BUDGET = 12  # max literal count; beyond this 2^n regions are refused


def all_choices(n: int) -> list[Choice]:
    """All 2^n choices, ordered so index i matches the c_i convention
    (all-true first, descending as a bit pattern with s_0 most significant)."""
    out = []
    for m in range(2 ** n - 1, -1, -1):
        out.append(tuple(bool((m >> (n - 1 - i)) & 1) for i in range(n)))
    return out


def choice_bits(c: Choice) -> str:
    return "".join("1" if b else "0" for b in c)


def bits_choice(text: str) -> Choice:
    return tuple(ch == "1" for ch in text)


@dataclass(frozen=True)
class TableEntry:
    letter: str
    choices: tuple[Choice, ...]  # the reaction, in c_i order
    region: Formula              # quantifier-free, over env vars only


@dataclass(frozen=True)
class ValidReactionTable:
    env_vars: tuple[tuple[str, Sort], ...]
    sys_vars: tuple[tuple[str, Sort], ...]
    literals: tuple[Atom, ...]
    entries: tuple[TableEntry, ...]

    @property
    def letters(self) -> tuple[str, ...]:
        return tuple(e.letter for e in self.entries)

    def entry(self, letter: str) -> TableEntry:
        for e in self.entries:
            if e.letter == letter:
                return e
        raise SchemaError(f"no reaction table entry for letter {letter!r}")


@dataclass(frozen=True)
class BooleanSpec:
    """phi_direct && G(phi_legal -> phi_extra), plus the table it came from."""

    spec: LtlTSpec
    table: ValidReactionTable

    @property
    def phi_direct(self) -> LtlNode:
        return self.spec.property

    @property
    def letters(self) -> tuple[str, ...]:
        return self.table.letters

    def reaction(self, letter: str) -> tuple[Choice, ...]:
        return self.table.entry(letter).choices


# ---------------------------------------------------------------------------
# Characteristic formulas and regions


def literal_formula(spec: LtlTSpec, index: int, value: bool) -> Formula:
    atom = spec.literals[index]
    return FAtom(atom) if value else negate_atom(atom)


def characteristic_choice(choice: Choice, spec: LtlTSpec) -> Formula:
    """f_c: the conjunction of literals as committed by the choice."""
    return f_and([literal_formula(spec, i, bit) for i, bit in enumerate(choice)])


def choice_region(choice: Choice, spec: LtlTSpec) -> Formula:
    """Environment inputs from which the system can realize exactly this
    literal pattern: QE(exists ybar. f_c)."""
    f = characteristic_choice(choice, spec)
    for name, sort in reversed(spec.sys_vars):
        f = FQuant(False, name, sort, f)
    return eliminate_quantifiers(f).formula


def reaction_formula(spec: LtlTSpec, choices: Iterable[Choice],
                     universe: Iterable[Choice]) -> Formula:
    """f_r with its quantifiers: feasibility of every choice in r and
    infeasibility of every choice outside it."""
    inside = set(choices)
    parts: list[Formula] = []
    for c in universe:
        if c in inside:
            g = characteristic_choice(c, spec)
            for name, sort in reversed(spec.sys_vars):
                g = FQuant(False, name, sort, g)
        else:
            g = f_not(characteristic_choice(c, spec))
            for name, sort in reversed(spec.sys_vars):
                g = FQuant(True, name, sort, g)
        parts.append(g)
    return f_and(parts)


def _collect_atoms(f: Formula, pool: list[Atom]) -> None:
    if isinstance(f, FAtom):
        if f.atom not in pool:
            pool.append(f.atom)
    elif isinstance(f, FNot):
        _collect_atoms(f.arg, pool)
    elif isinstance(f, (FAnd, FOr)):
        for a in f.args:
            _collect_atoms(a, pool)


def enumerate_valid_reactions(spec: LtlTSpec) -> ValidReactionTable:
    """Model-guided discovery of the valid reactions.

    Enumerates the satisfiable sign cells of the region atoms in a fixed
    order, reads off each representative's feasible-choice set, and
    merges cells with equal sets; every recorded reaction is witnessed by
    a concrete environment input, so exists xbar. f_r holds by
    construction.
    """
    n = len(spec.literals)
    if n > CHOICE_BUDGET:
        raise ChoiceBudgetExceeded(
            f"{n} literals give 2^{n} choice regions (budget 2^{CHOICE_BUDGET})")
    choices = all_choices(n)
    regions = [choice_region(c, spec) for c in choices]

    pool: list[Atom] = []
    for r in regions:
        _collect_atoms(r, pool)
    if len(pool) > 16:
        raise ChoiceBudgetExceeded(
            f"region sign space has {len(pool)} atoms (budget 16)")

    env = list(spec.env_vars)
    discovered: dict[frozenset[int], list[tuple[Atom, ...]]] = {}
    order: list[frozenset[int]] = []
    for mask in range(2 ** len(pool)):
        sign_cell: list[Formula] = []
        for i, atom in enumerate(pool):
            sign_cell.append(FAtom(atom) if (mask >> i) & 1 else negate_atom(atom))
        conj = f_and(sign_cell)
        if isinstance(conj, FFalse):
            continue
        model = find_model(conj, env)
        if model is None:
            continue
        feasible = frozenset(i for i, r in enumerate(regions)
                             if _eval_region(r, model))
        for cell in to_dnf(conj):
            discovered.setdefault(feasible, []).append(cell)
        if feasible not in order:
            order.append(feasible)

    entries = []
    for k, feasible in enumerate(order):
        region = or_cells(discovered[feasible])
        entry_choices = tuple(choices[i] for i in sorted(feasible))
        entries.append(TableEntry(f"e_{k}", entry_choices, region))
    return ValidReactionTable(tuple(spec.env_vars), tuple(spec.sys_vars),
                              tuple(spec.literals), tuple(entries))


def _eval_region(region: Formula, model: Mapping) -> bool:
    from .logic import eval_formula
    if isinstance(region, FTrue):
        return True
    if isinstance(region, FFalse):
        return False
    return eval_formula(region, model)


def booleanize(spec: LtlTSpec,
               table: ValidReactionTable | None = None) -> BooleanSpec:
    """The equi-realizable Boolean specification over fresh s/e propositions."""
    if table is None:
        table = enumerate_valid_reactions(spec)
    return BooleanSpec(spec, table)


# ---------------------------------------------------------------------------
# Rendering of the Boolean-spec pieces (LTL grammar over proposition names)


def render_phi_direct(b: BooleanSpec) -> str:
    return render_ltl(b.phi_direct, lambda i: b.spec.prop_name(i))


def render_phi_legal(letters: Iterable[str]) -> str:
    letters = list(letters)
    parts = [" || ".join(letters)]
    for i, a in enumerate(letters):
        for c in letters[i + 1:]:
            parts.append(f"!({a} && {c})")
    return "(" + ") && (".join(parts) + ")" if len(parts) > 1 else parts[0]


def render_cube(choice: Choice, props: list[str]) -> str:
    lits = [p if bit else f"!{p}" for p, bit in zip(props, choice)]
    return " && ".join(lits) if lits else "true"


def render_phi_extra_entry(entry: TableEntry, props: list[str]) -> str:
    return " || ".join(f"({render_cube(c, props)})" for c in entry.choices)


# ---------------------------------------------------------------------------
# Artifact serialization


def table_to_json(table: ValidReactionTable) -> dict:
    return {
        "env_vars": [[n, s.value] for n, s in table.env_vars],
        "sys_vars": [[n, s.value] for n, s in table.sys_vars],
        "literals": [render_atom(a) for a in table.literals],
        "entries": [{
            "letter": e.letter,
            "region": render_formula(e.region),
            "choices": [choice_bits(c) for c in e.choices],
        } for e in table.entries],
    }


def table_from_json(data: dict) -> ValidReactionTable:
    try:
        env = tuple((n, Sort(s)) for n, s in data["env_vars"])
        sys_ = tuple((n, Sort(s)) for n, s in data["sys_vars"])
        sorts = dict(env) | dict(sys_)
        literals = []
        for text in data["literals"]:
            f = parse_formula(text, sorts)
            if not isinstance(f, FAtom):
                raise SchemaError(f"literal {text!r} is not a single atom")
            literals.append(f.atom)
        env_sorts = dict(env)
        entries = []
        for e in data["entries"]:
            region = parse_formula(e["region"], env_sorts)
            entries.append(TableEntry(e["letter"],
                                      tuple(bits_choice(b) for b in e["choices"]),
                                      region))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed reaction table artifact: {exc}") from exc
    return ValidReactionTable(env, sys_, tuple(literals), tuple(entries))


def table_to_text(table: ValidReactionTable) -> str:
    return json.dumps(table_to_json(table), indent=2, sort_keys=True)


def table_from_text(text: str) -> ValidReactionTable:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"reaction table is not valid JSON: {exc}") from exc
    return table_from_json(data)


def bspec_to_json(b: BooleanSpec) -> dict:
    props = prop_names(b.spec)
    return {
        "spec": render_spec(b.spec),
        "props": props,
        "letters": list(b.letters),
        "phi_direct": render_phi_direct(b),
        "phi_legal": render_phi_legal(b.letters),
        "phi_extra": {e.letter: {
            "cubes": [choice_bits(c) for c in e.choices],
            "formula": render_phi_extra_entry(e, props),
        } for e in b.table.entries},
        "table": table_to_json(b.table),
    }


def bspec_from_json(data: dict) -> BooleanSpec:
    try:
        spec = parse_spec(data["spec"])
        table = table_from_json(data["table"])
    except KeyError as exc:
        raise SchemaError(f"malformed boolean spec artifact: {exc}") from exc
    return BooleanSpec(spec, table)


def bspec_to_text(b: BooleanSpec) -> str:
    return json.dumps(bspec_to_json(b), indent=2, sort_keys=True)


def bspec_from_text(text: str) -> BooleanSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"boolean spec is not valid JSON: {exc}") from exc
    return bspec_from_json(data)
