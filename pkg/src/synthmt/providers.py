"""Providers: produce theory outputs realizing the controller's chosen cube.

Three kinds.  Static providers evaluate Skolem functions synthesized from
the per-pair provider formula `forall xbar. exists ybar. region -> f_c`
(lazily on first use, or eagerly).  Dynamic providers run a fresh model
search per step, with an optional seeded randomized mode that perturbs
the witness inside the cube to emulate solver nondeterminism.  Adaptive
providers constrain the static synthesis with extra formulas over
auxiliary z variables (fed externally or wired to previous inputs or
outputs), failing the build when a constraint makes the formula invalid.
"""

from __future__ import annotations

import json
import math
import random
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .abstraction import (Choice, ValidReactionTable, bits_choice,
                          choice_bits)
from .errors import (AdaptiveInvalid, ChoiceNotInReaction, FormulaNotValid,
                     InfeasibleChoice, RealNotEmittable, SchemaError,
                     SpecSyntaxError)
from .logic import (DIV, EQ, LE, LT, FAtom, FAnd, FFalse, FNot, FOr,
                    FQuant, FTrue, Formula, LinearTerm, Rat, Sort,
                    eval_formula, f_and, f_implies, f_or, free_vars,
                    mk_atom, mk_forall, negate_atom, substitute,
                    substitute_terms)
from .parsing import (TokenStream, parse_formula, render_formula, tokenize)
from .solver import (SkolemFunction, SkolemLeaf,
                     eliminate_quantifiers, find_model, skolem_from_json,
                     skolem_to_json, synthesize_skolem)


@dataclass(frozen=True)
class ZBinding:
    kind: str  # external | prev_input | prev_output
    source: str | None = None

    def __post_init__(self):
        if self.kind not in ("external", "prev_input", "prev_output"):
            raise SchemaError(f"unknown z binding kind {self.kind!r}")
        if self.kind != "external" and not self.source:
            raise SchemaError(f"{self.kind} binding needs a source variable")


@dataclass(frozen=True)
class AdaptiveDescription:
    """Per-pair adaptive constraints plus the z variables they mention.

    Pairs without an entry fall back to the basic provider formula
    (psi_plus = true).
    """

    z_vars: tuple[tuple[str, Sort], ...]
    bindings: tuple[tuple[str, ZBinding], ...]
    constraints: tuple[tuple[str, Choice, Formula], ...]

    def binding(self, z: str) -> ZBinding:
        for name, b in self.bindings:
            if name == z:
                return b
        raise SchemaError(f"no binding for z variable {z!r}")

    def constraint_for(self, letter: str, choice: Choice) -> Formula | None:
        for l, c, f in self.constraints:
            if l == letter and c == choice:
                return f
        return None

    @property
    def external_vars(self) -> tuple[str, ...]:
        return tuple(n for n, b in self.bindings if b.kind == "external")


def cube_formula(table: ValidReactionTable, choice: Choice) -> Formula:
    """f_c over the table's literals."""
    parts = []
    for atom, bit in zip(table.literals, choice):
        parts.append(FAtom(atom) if bit else negate_atom(atom))
    return f_and(parts)


def build_basic_formula(table: ValidReactionTable, letter: str,
                        choice: Choice) -> Formula:
    """forall xbar. exists ybar. region -> f_c  (region already QF)."""
    entry = table.entry(letter)
    if choice not in entry.choices:
        raise ChoiceNotInReaction(
            f"choice {choice_bits(choice)} is not in the reaction of {letter}")
    body = f_implies(entry.region, cube_formula(table, choice))
    f = body
    for name, sort in reversed(table.sys_vars):
        f = FQuant(False, name, sort, f)
    for name, sort in reversed(table.env_vars):
        f = FQuant(True, name, sort, f)
    return f


def build_adaptive_formula(table: ValidReactionTable, letter: str,
                           choice: Choice, psi_plus: Formula,
                           z_vars: Sequence[tuple[str, Sort]]) -> Formula:
    """forall xbar, zbar. exists ybar. (region -> f_c) && psi_plus, with any
    inner quantifiers of psi_plus removed by QE first."""
    entry = table.entry(letter)
    if choice not in entry.choices:
        raise ChoiceNotInReaction(
            f"choice {choice_bits(choice)} is not in the reaction of {letter}")
    plus = eliminate_quantifiers(psi_plus).formula
    body = f_and([f_implies(entry.region, cube_formula(table, choice)), plus])
    f = body
    for name, sort in reversed(table.sys_vars):
        f = FQuant(False, name, sort, f)
    for name, sort in reversed(list(z_vars)):
        f = FQuant(True, name, sort, f)
    for name, sort in reversed(table.env_vars):
        f = FQuant(True, name, sort, f)
    return f


class StaticProvider:
    """Skolem-function provider; lazy by default, memoizing per pair."""

    def __init__(self, table: ValidReactionTable,
                 gamma: AdaptiveDescription | None = None,
                 functions: dict[tuple[str, Choice], SkolemFunction] | None = None,
                 lazy: bool = True):
        self.table = table
        self.gamma = gamma
        self._functions = dict(functions or {})
        self._lazy = lazy
        self._lock = threading.Lock()

    @property
    def kind(self) -> str:
        return "adaptive" if self.gamma is not None else "static"

    @property
    def z_vars(self) -> tuple[tuple[str, Sort], ...]:
        return self.gamma.z_vars if self.gamma is not None else ()

    def pairs(self) -> list[tuple[str, Choice]]:
        return sorted(self._functions)

    def function_for(self, letter: str, choice: Choice) -> SkolemFunction:
        key = (letter, choice)
        fn = self._functions.get(key)
        if fn is not None:
            return fn
        if not self._lazy:
            raise SchemaError(f"provider has no function for pair "
                              f"({letter}, {choice_bits(choice)})")
        with self._lock:
            fn = self._functions.get(key)
            if fn is None:
                fn = self._synthesize(letter, choice)
                self._functions[key] = fn
            return fn

    def _synthesize(self, letter: str, choice: Choice) -> SkolemFunction:
        psi_plus = self.gamma.constraint_for(letter, choice) \
            if self.gamma is not None else None
        if psi_plus is None:
            formula = build_basic_formula(self.table, letter, choice)
            return synthesize_skolem(formula)
        formula = build_adaptive_formula(self.table, letter, choice,
                                         psi_plus, self.gamma.z_vars)
        try:
            return synthesize_skolem(formula)
        except FormulaNotValid as exc:
            raise AdaptiveInvalid(letter, choice_bits(choice), str(exc)) from exc

    def provide(self, v_x: Mapping[str, Rat], v_z: Mapping[str, Rat],
                letter: str, choice: Choice) -> dict[str, Fraction]:
        fn = self.function_for(letter, choice)
        val = dict(v_x)
        val.update(v_z)
        return fn.evaluate(val)


def synthesize_static_provider(
        table: ValidReactionTable,
        controller_cubes: Sequence[tuple[str, Choice]] | None = None,
        gamma: AdaptiveDescription | None = None,
        lazy: bool = False) -> StaticProvider:
    """Build a static (or adaptive) provider.

    controller_cubes restricts synthesis to the pairs a Boolean machine
    can emit; None means every (letter, choice) pair of the table.  With
    lazy=True the functions are synthesized and memoized on first miss.
    """
    provider = StaticProvider(table, gamma=gamma, lazy=True)
    if not lazy:
        pairs = list(controller_cubes) if controller_cubes is not None else \
            [(e.letter, c) for e in table.entries for c in e.choices]
        for letter, choice in pairs:
            provider.function_for(letter, choice)
        provider._lazy = False
    return provider


def provide_static(provider: StaticProvider, v_x: Mapping[str, Rat],
                   v_z: Mapping[str, Rat], letter: str,
                   choice: Choice) -> dict[str, Fraction]:
    return provider.provide(v_x, v_z, letter, choice)


def machine_pairs(machine) -> list[tuple[str, Choice]]:
    """The (letter, choice) pairs a Mealy machine can emit."""
    seen: list[tuple[str, Choice]] = []
    for _s, letter, _t, out in machine.transitions:
        if (letter, out) not in seen:
            seen.append((letter, out))
    return seen


# ---------------------------------------------------------------------------
# Dynamic provider


class DynamicProvider:
    """Per-step model generation; deterministic least-witness models by
    default, seeded witness perturbation in randomized mode."""

    def __init__(self, table: ValidReactionTable, randomized: bool = False,
                 seed: int = 0):
        self.table = table
        self.randomized = randomized
        self._rng = random.Random(seed)
        self._cubes: dict[Choice, Formula] = {}

    def reseed(self, seed: int) -> None:
        self._rng = random.Random(seed)

    def _cube(self, choice: Choice) -> Formula:
        f = self._cubes.get(choice)
        if f is None:
            f = cube_formula(self.table, choice)
            self._cubes[choice] = f
        return f

    def provide(self, v_x: Mapping[str, Rat],
                choice: Choice) -> dict[str, Fraction]:
        ground = substitute(self._cube(choice), dict(v_x))
        model = find_model(ground, list(self.table.sys_vars))
        if model is None:
            raise InfeasibleChoice(
                f"choice {choice_bits(choice)} unsatisfiable at {dict(v_x)}")
        if not self.randomized:
            return model
        # emulate solver nondeterminism: usually the base witness, sometimes
        # a feasible perturbation inside the cube
        if self._rng.random() >= 0.15:
            return model
        candidates = [model]
        for _ in range(8):
            cand = dict(model)
            for n, s in self.table.sys_vars:
                k = self._rng.randrange(0, 4)
                cand[n] = model[n] + (k if s is Sort.INT else Fraction(k, 2))
            if cand not in candidates and eval_formula(ground, cand):
                candidates.append(cand)
        pick = self._rng.randrange(len(candidates))
        return candidates[pick]


def provide_dynamic(table: ValidReactionTable, v_x: Mapping[str, Rat],
                    choice: Choice) -> dict[str, Fraction]:
    """Deterministic single-shot dynamic provision (least-witness model)."""
    return DynamicProvider(table).provide(v_x, choice)


# ---------------------------------------------------------------------------
# Adaptive constraint builders


def _abs_le(a: LinearTerm, b: LinearTerm, sort: Sort,
            eps: Fraction = Fraction(0)) -> Formula:
    """|a| <= |b| + eps as a linear case split."""
    shift = LinearTerm.constant(eps)
    return f_and([
        f_or([mk_atom(a - b - shift, LE, sort),
              mk_atom(a + b - shift, LE, sort)]),
        f_or([mk_atom(-a - b - shift, LE, sort),
              mk_atom(-a + b - shift, LE, sort)]),
    ])


def _fresh_w(taken: set[str]) -> str:
    w = "w"
    i = 2
    while w in taken:
        w = f"w_{i}"
        i += 1
    return w


def build_closest_constraint(psi: Formula, y: str, z: str, sort: Sort,
                             eps: Rat | None = None) -> Formula:
    """psi_plus forcing y to the feasible value (approximately) closest to z.

    Int: forall w. (psi[y<-w] -> |y-z| <= |w-z|); real sort requires a
    positive eps and uses the relaxed bound |y-z| <= |w-z| + eps.  The
    inner forall is removed by QE before use.
    """
    if sort is Sort.REAL:
        if eps is None or Fraction(eps) <= 0:
            raise FormulaNotValid(
                "a positive rational eps is required for the real-sorted "
                "closest-element constraint")
        eps = Fraction(eps)
    else:
        if eps is not None:
            raise FormulaNotValid("eps applies to the real sort only")
        eps = Fraction(0)
    w = _fresh_w(free_vars(psi) | {y, z})
    psi_w = substitute_terms(psi, {y: LinearTerm.var(w)})
    yv, zv, wv = LinearTerm.var(y), LinearTerm.var(z), LinearTerm.var(w)
    body = f_implies(psi_w, _abs_le(yv - zv, wv - zv, sort, eps))
    return eliminate_quantifiers(mk_forall(w, sort, body)).formula


def build_extremal_constraint(psi: Formula, y: str, sort: Sort,
                              maximize: bool) -> Formula:
    """psi_plus selecting the least (or greatest) feasible y, QE-compiled."""
    w = _fresh_w(free_vars(psi) | {y})
    psi_w = substitute_terms(psi, {y: LinearTerm.var(w)})
    yv, wv = LinearTerm.var(y), LinearTerm.var(w)
    cmp_atom = mk_atom(wv - yv, LE, sort) if maximize \
        else mk_atom(yv - wv, LE, sort)
    body = f_implies(psi_w, cmp_atom)
    return eliminate_quantifiers(mk_forall(w, sort, body)).formula


# ---------------------------------------------------------------------------
# Gamma description files


def parse_gamma(text: str, table: ValidReactionTable) -> AdaptiveDescription:
    """Parse an adaptive description:

        zvar <name> : <sort> = external
        zvar <name> : <sort> = prev_input <var> | prev_output <var>
        pair <letter> <bits> : <constraint formula over x, y, z>

    Constraint formulas may quantify; their free variables must be among
    the spec variables and declared z variables.
    """
    z_vars: list[tuple[str, Sort]] = []
    bindings: list[tuple[str, ZBinding]] = []
    constraints: list[tuple[str, Choice, Formula]] = []
    base_sorts = dict(table.env_vars) | dict(table.sys_vars)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        ts = TokenStream(tokenize(line))
        head = ts.eat_ident()
        if head.text == "zvar":
            name = ts.eat_ident().text
            if name in base_sorts or any(n == name for n, _ in z_vars):
                raise SchemaError(f"z variable {name!r} collides with an "
                                  f"existing variable (line {lineno})")
            ts.eat_sym(":")
            from .parsing import parse_sort
            sort = parse_sort(ts)
            ts.eat_sym("=")
            kind = ts.eat_ident().text
            source = None
            if kind in ("prev_input", "prev_output"):
                source = ts.eat_ident().text
                pool = dict(table.env_vars) if kind == "prev_input" \
                    else dict(table.sys_vars)
                if source not in pool:
                    raise SchemaError(f"{kind} source {source!r} is not a "
                                      f"spec variable (line {lineno})")
            z_vars.append((name, sort))
            bindings.append((name, ZBinding(kind, source)))
        elif head.text == "pair":
            letter = ts.eat_ident().text
            bits_tok = ts.advance()
            if bits_tok.kind != "num":
                raise SpecSyntaxError("expected a choice bitstring",
                                      bits_tok.line, bits_tok.col)
            choice = bits_choice(bits_tok.text)
            ts.eat_sym(":")
            sorts = base_sorts | {n: s for n, s in z_vars}
            rest = line.split(":", 1)[1]
            formula = parse_formula(rest, sorts)
            entry = table.entry(letter)
            if len(choice) != len(table.literals):
                raise SchemaError(f"choice width mismatch (line {lineno})")
            if choice not in entry.choices:
                raise ChoiceNotInReaction(
                    f"choice {bits_tok.text} is not in the reaction of "
                    f"{letter} (line {lineno})")
            constraints.append((letter, choice, formula))
        else:
            raise SchemaError(f"unknown gamma directive {head.text!r} "
                              f"(line {lineno})")
    return AdaptiveDescription(tuple(z_vars), tuple(bindings),
                               tuple(constraints))


def render_gamma(gamma: AdaptiveDescription) -> str:
    lines = []
    for name, sort in gamma.z_vars:
        b = gamma.binding(name)
        rhs = b.kind if b.kind == "external" else f"{b.kind} {b.source}"
        lines.append(f"zvar {name} : {sort.value} = {rhs}")
    for letter, choice, f in gamma.constraints:
        lines.append(f"pair {letter} {choice_bits(choice)} : "
                     f"{render_formula(f)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Provider artifacts


def provider_to_json(p: StaticProvider) -> dict:
    return {
        "kind": p.kind,
        "z_vars": [[n, s.value] for n, s in p.z_vars],
        "pairs": [{
            "letter": letter,
            "choice": choice_bits(choice),
            "function": skolem_to_json(p._functions[(letter, choice)]),
        } for letter, choice in p.pairs()],
    }


def provider_from_json(data: dict, table: ValidReactionTable,
                       gamma: AdaptiveDescription | None = None) -> StaticProvider:
    try:
        functions = {}
        for item in data["pairs"]:
            key = (item["letter"], bits_choice(item["choice"]))
            functions[key] = skolem_from_json(item["function"])
        if gamma is None and data.get("z_vars"):
            if data["kind"] != "adaptive":
                raise SchemaError("z variables on a non-adaptive provider")
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed provider artifact: {exc}") from exc
    return StaticProvider(table, gamma=gamma, functions=functions, lazy=False)


def provider_to_text(p: StaticProvider) -> str:
    return json.dumps(provider_to_json(p), indent=2, sort_keys=True)


def provider_from_text(text: str, table: ValidReactionTable,
                       gamma: AdaptiveDescription | None = None) -> StaticProvider:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"provider artifact is not valid JSON: {exc}") from exc
    return provider_from_json(data, table, gamma)


# ---------------------------------------------------------------------------
# C emission


def _c_term_int(term: LinearTerm) -> str:
    """Integer-coefficient rendering over a common denominator.

    Division is exact wherever the owning guard holds, so C truncation
    never loses anything.
    """
    q = math.lcm(*[c.denominator for _, c in term.coeffs],
                 term.const.denominator)
    parts = []
    for name, c in term.coeffs:
        k = int(c * q)
        if k == 1:
            parts.append(name)
        elif k == -1:
            parts.append(f"-{name}")
        else:
            parts.append(f"{k}*{name}")
    k0 = int(term.const * q)
    if k0 != 0 or not parts:
        parts.append(str(k0))
    expr = " + ".join(parts).replace("+ -", "- ")
    if q == 1:
        return expr
    return f"({expr}) / {q}"


def _c_formula(f: Formula) -> str:
    if isinstance(f, FTrue):
        return "1"
    if isinstance(f, FFalse):
        return "0"
    if isinstance(f, FAtom):
        a = f.atom
        if a.rel == DIV:
            return f"(({_c_term_int(a.term)}) % {a.modulus} + {a.modulus}) " \
                   f"% {a.modulus} == 0"
        op = {LE: "<=", LT: "<", EQ: "=="}[a.rel]
        return f"({_c_term_int(a.term)}) {op} 0"
    if isinstance(f, FNot):
        return f"!({_c_formula(f.arg)})"
    if isinstance(f, FAnd):
        return " && ".join(f"({_c_formula(a)})" for a in f.args)
    if isinstance(f, FOr):
        return " || ".join(f"({_c_formula(a)})" for a in f.args)
    raise RealNotEmittable(f"cannot emit {f!r}")


def emit_source(fn: SkolemFunction, name: str) -> str:
    """Portable C99: one int64_t function per output variable, the guard
    tree mirrored as nested if/else."""
    for _n, s in list(fn.inputs) + list(fn.outputs):
        if s is not Sort.INT:
            raise RealNotEmittable("real-sorted functions have rational "
                                   "leaves; only int functions are emitted")
    args = ", ".join(f"int64_t {n}" for n, _ in fn.inputs)
    lines = ["#include <stdint.h>", ""]
    for out_name, _ in fn.outputs:
        lines.append(f"int64_t {name}_{out_name}({args}) {{")

        def emit(node, indent: str) -> None:
            if isinstance(node, SkolemLeaf):
                term = dict(node.outputs)[out_name]
                lines.append(f"{indent}return {_c_term_int(term)};")
                return
            lines.append(f"{indent}if ({_c_formula(node.guard)}) {{")
            emit(node.then_branch, indent + "    ")
            lines.append(f"{indent}}}")
            emit(node.else_branch, indent)

        emit(fn.tree, "    ")
        lines.append("}")
        lines.append("")
    return "\n".join(lines)
