"""Linear-arithmetic terms, atoms, formulas and exact evaluation.

Everything in the symbolic core is exact: coefficients, constants and
valuations are `fractions.Fraction` (integral for int-sorted variables).
Atoms are kept in a normal form where the only relations are `<=`, `<`
(real sort only), `=` and divisibility; `>=`, `>` and `!=` are rewritten
on construction, and integer strict inequalities are tightened
(t < 0 becomes t + 1 <= 0).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

from .errors import (CellBudgetExceeded, MissingVariable, SortMismatch,
                     UnsupportedFragment)

Rat = Union[int, Fraction]


class Sort(enum.Enum):
    INT = "int"
    REAL = "real"


def as_fraction(x: Rat) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


# ---------------------------------------------------------------------------
# Linear terms


@dataclass(frozen=True)
class LinearTerm:
    """Sum of coefficient*variable monomials plus a constant.

    Coefficients are stored sorted by variable name with no zero entries,
    so structural equality is semantic equality.
    """

    coeffs: tuple[tuple[str, Fraction], ...]
    const: Fraction

    @staticmethod
    def make(coeffs: Mapping[str, Rat] | Iterable[tuple[str, Rat]],
             const: Rat = 0) -> "LinearTerm":
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        acc: dict[str, Fraction] = {}
        for name, c in items:
            acc[name] = acc.get(name, Fraction(0)) + as_fraction(c)
        pairs = tuple((n, c) for n, c in sorted(acc.items()) if c != 0)
        return LinearTerm(pairs, as_fraction(const))

    @staticmethod
    def var(name: str) -> "LinearTerm":
        return LinearTerm(((name, Fraction(1)),), Fraction(0))

    @staticmethod
    def constant(c: Rat) -> "LinearTerm":
        return LinearTerm((), as_fraction(c))

    @property
    def vars(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.coeffs)

    @property
    def is_constant(self) -> bool:
        return not self.coeffs

    def coeff(self, name: str) -> Fraction:
        for n, c in self.coeffs:
            if n == name:
                return c
        return Fraction(0)

    def drop(self, name: str) -> "LinearTerm":
        return LinearTerm(tuple(p for p in self.coeffs if p[0] != name), self.const)

    def __add__(self, other: "LinearTerm") -> "LinearTerm":
        return LinearTerm.make(list(self.coeffs) + list(other.coeffs),
                               self.const + other.const)

    def __sub__(self, other: "LinearTerm") -> "LinearTerm":
        return self + (-other)

    def __neg__(self) -> "LinearTerm":
        return self.scale(-1)

    def scale(self, k: Rat) -> "LinearTerm":
        k = as_fraction(k)
        if k == 0:
            return LinearTerm((), Fraction(0))
        return LinearTerm(tuple((n, c * k) for n, c in self.coeffs), self.const * k)

    def shift(self, c: Rat) -> "LinearTerm":
        return LinearTerm(self.coeffs, self.const + as_fraction(c))

    def evaluate(self, val: Mapping[str, Rat]) -> Fraction:
        total = self.const
        for n, c in self.coeffs:
            if n not in val:
                raise MissingVariable(n)
            total += c * as_fraction(val[n])
        return total

    def subst_value(self, name: str, value: Rat) -> "LinearTerm":
        c = self.coeff(name)
        if c == 0:
            return self
        return self.drop(name).shift(c * as_fraction(value))

    def subst_term(self, name: str, term: "LinearTerm") -> "LinearTerm":
        c = self.coeff(name)
        if c == 0:
            return self
        return self.drop(name) + term.scale(c)

    def subst_terms(self, bindings: Mapping[str, "LinearTerm"]) -> "LinearTerm":
        out = self
        for name, term in bindings.items():
            out = out.subst_term(name, term)
        return out


# ---------------------------------------------------------------------------
# Atoms

LE = "<="
LT = "<"
EQ = "="
DIV = "div"


@dataclass(frozen=True)
class Atom:
    """Normal-form atom: `term REL 0`, or `modulus | term` when rel is div.

    Invariants: int atoms never use `<`; div atoms are int-sorted with
    modulus >= 2; coefficients are integers with gcd 1 (int sort) or a
    canonical integral scaling (real sort); atoms are never ground.
    """

    term: LinearTerm
    rel: str
    modulus: int | None
    sort: Sort

    def evaluate(self, val: Mapping[str, Rat]) -> bool:
        v = self.term.evaluate(val)
        if self.rel == LE:
            return v <= 0
        if self.rel == LT:
            return v < 0
        if self.rel == EQ:
            return v == 0
        return v.denominator == 1 and v.numerator % self.modulus == 0

    def __str__(self) -> str:
        from .parsing import render_atom
        return render_atom(self)


# ---------------------------------------------------------------------------
# Formulas


class Formula:
    """Immutable boolean combination of atoms, possibly quantified."""

    __slots__ = ()


@dataclass(frozen=True)
class FTrue(Formula):
    pass


@dataclass(frozen=True)
class FFalse(Formula):
    pass


@dataclass(frozen=True)
class FAtom(Formula):
    atom: Atom


@dataclass(frozen=True)
class FNot(Formula):
    arg: Formula


@dataclass(frozen=True)
class FAnd(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class FOr(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class FQuant(Formula):
    forall: bool
    var: str
    sort: Sort
    body: Formula


TRUE = FTrue()
FALSE = FFalse()


def f_and(args: Iterable[Formula]) -> Formula:
    flat: list[Formula] = []
    for a in args:
        if isinstance(a, FTrue):
            continue
        if isinstance(a, FFalse):
            return FALSE
        if isinstance(a, FAnd):
            flat.extend(x for x in a.args if x not in flat)
        elif a not in flat:
            flat.append(a)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return FAnd(tuple(flat))


def f_or(args: Iterable[Formula]) -> Formula:
    flat: list[Formula] = []
    for a in args:
        if isinstance(a, FFalse):
            continue
        if isinstance(a, FTrue):
            return TRUE
        if isinstance(a, FOr):
            flat.extend(x for x in a.args if x not in flat)
        elif a not in flat:
            flat.append(a)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return FOr(tuple(flat))


def f_not(arg: Formula) -> Formula:
    if isinstance(arg, FTrue):
        return FALSE
    if isinstance(arg, FFalse):
        return TRUE
    if isinstance(arg, FNot):
        return arg.arg
    return FNot(arg)


def f_implies(a: Formula, b: Formula) -> Formula:
    return f_or([f_not(a), b])


def bound_vars(f: Formula) -> set[str]:
    if isinstance(f, FQuant):
        return {f.var} | bound_vars(f.body)
    if isinstance(f, FNot):
        return bound_vars(f.arg)
    if isinstance(f, (FAnd, FOr)):
        out: set[str] = set()
        for a in f.args:
            out |= bound_vars(a)
        return out
    return set()


def free_vars(f: Formula) -> set[str]:
    if isinstance(f, FAtom):
        return set(f.atom.term.vars)
    if isinstance(f, FNot):
        return free_vars(f.arg)
    if isinstance(f, (FAnd, FOr)):
        out: set[str] = set()
        for a in f.args:
            out |= free_vars(a)
        return out
    if isinstance(f, FQuant):
        return free_vars(f.body) - {f.var}
    return set()


def var_sorts(f: Formula) -> dict[str, Sort]:
    """Sort of each variable occurring in f (including bound occurrences)."""
    out: dict[str, Sort] = {}

    def walk(g: Formula) -> None:
        if isinstance(g, FAtom):
            for v in g.atom.term.vars:
                if out.get(v, g.atom.sort) is not g.atom.sort:
                    raise SortMismatch(f"variable {v!r} used at both sorts")
                out[v] = g.atom.sort
        elif isinstance(g, FNot):
            walk(g.arg)
        elif isinstance(g, (FAnd, FOr)):
            for a in g.args:
                walk(a)
        elif isinstance(g, FQuant):
            walk(g.body)

    walk(f)
    return out


def _fresh_name(base: str, taken: set[str]) -> str:
    i = 2
    while f"{base}_{i}" in taken:
        i += 1
    return f"{base}_{i}"


def rename_free(f: Formula, old: str, new: str) -> Formula:
    """Rename free occurrences of `old` to `new` (capture-checked by caller)."""
    return substitute_terms(f, {old: LinearTerm.var(new)})


def mk_quant(forall: bool, var: str, sort: Sort, body: Formula) -> Formula:
    """Quantifier constructor keeping bound names unique within a formula."""
    taken = bound_vars(body)
    if var in taken:
        fresh = _fresh_name(var, taken | free_vars(body))
        body = rename_free(body, var, fresh)
        var = fresh
    if var not in free_vars(body):
        return body
    return FQuant(forall, var, sort, body)


def mk_exists(var: str, sort: Sort, body: Formula) -> Formula:
    return mk_quant(False, var, sort, body)


def mk_forall(var: str, sort: Sort, body: Formula) -> Formula:
    return mk_quant(True, var, sort, body)


# ---------------------------------------------------------------------------
# Atom construction / normalization


def _int_scale(term: LinearTerm) -> LinearTerm:
    """Clear denominators with a positive factor (keeps the relation)."""
    denoms = [c.denominator for _, c in term.coeffs] + [term.const.denominator]
    m = math.lcm(*denoms)
    return term.scale(m)


def _canon_real(term: LinearTerm) -> LinearTerm:
    """Positive scaling making coefficients integral with gcd 1."""
    term = _int_scale(term)
    nums = [abs(c.numerator) for _, c in term.coeffs] + [abs(term.const.numerator)]
    g = math.gcd(*nums)
    return term.scale(Fraction(1, g)) if g > 1 else term


def mk_div(modulus: int, term: LinearTerm) -> Formula:
    """Normal-form divisibility atom `modulus | term` (int sort only)."""
    if modulus <= 0:
        raise SortMismatch("divisibility modulus must be positive")
    # k | t with rational coefficients in t: scale both sides by the lcm
    # of the denominators (k | t  <=>  m*k | m*t).
    denoms = [c.denominator for _, c in term.coeffs] + [term.const.denominator]
    m = math.lcm(*denoms)
    term = term.scale(m)
    k = modulus * m
    coeffs = {n: Fraction(c.numerator % k) for n, c in term.coeffs}
    const = Fraction(term.const.numerator % k)
    slim = LinearTerm.make(coeffs, const)
    if slim.is_constant:
        return TRUE if slim.const % k == 0 else FALSE
    g = math.gcd(k, *[c.numerator for _, c in slim.coeffs])
    if g > 1:
        if slim.const.numerator % g != 0:
            return FALSE
        slim = slim.scale(Fraction(1, g))
        k //= g
    if k == 1:
        return TRUE
    return FAtom(Atom(slim, DIV, k, Sort.INT))


def mk_atom(term: LinearTerm, rel: str, sort: Sort) -> Formula:
    """Build the normal-form formula for `term rel 0`.

    Accepts the raw relations `<= < = != >= >`; the result may be a
    disjunction (for `!=`), a single atom, or a constant when ground.
    """
    if rel == ">=":
        return mk_atom(-term, LE, sort)
    if rel == ">":
        return mk_atom(-term, LT, sort)
    if rel == "!=":
        return f_or([mk_atom(term, LT, sort), mk_atom(-term, LT, sort)])
    if rel not in (LE, LT, EQ):
        raise SortMismatch(f"unknown relation {rel!r}")

    if term.is_constant:
        v = term.const
        ok = v <= 0 if rel == LE else v < 0 if rel == LT else v == 0
        return TRUE if ok else FALSE

    if sort is Sort.INT:
        term = _int_scale(term)
        if rel == LT:  # integer tightening: t < 0  <=>  t + 1 <= 0
            term = term.shift(1)
            rel = LE
        g = math.gcd(*[c.numerator for _, c in term.coeffs])
        if rel == EQ:
            if term.const.numerator % g != 0:
                return FALSE
            term = term.scale(Fraction(1, g))
        elif g > 1:
            # sum(a_i/g x_i) <= floor(-c/g)  rewritten back to `<= 0` form
            body = LinearTerm(tuple((n, c / g) for n, c in term.coeffs), Fraction(0))
            term = body.shift(-(-term.const // g))
    else:
        term = _canon_real(term)

    if rel == EQ:
        # canonical sign: first coefficient positive
        if term.coeffs[0][1] < 0:
            term = -term
    return FAtom(Atom(term, rel, None, sort))


def normalize_atom(term: LinearTerm, relation: str, sort: Sort,
                   modulus: int | None = None) -> Formula:
    """Public normalization entry point for raw atoms.

    Raises SortMismatch when divisibility is applied at real sort.
    """
    if relation == DIV or modulus is not None:
        if sort is not Sort.INT:
            raise SortMismatch("divisibility atoms require int sort")
        return mk_div(modulus, term)
    return mk_atom(term, relation, sort)


def negate_atom(a: Atom) -> Formula:
    """Normal-form complement of an atom (a disjunction for = and div)."""
    if a.rel == LE:
        return mk_atom(-a.term, LT, a.sort)
    if a.rel == LT:
        return mk_atom(-a.term, LE, a.sort)
    if a.rel == EQ:
        return f_or([mk_atom(a.term, LT, a.sort), mk_atom(-a.term, LT, a.sort)])
    k = a.modulus
    return f_or([mk_div(k, a.term.shift(j)) for j in range(1, k)])


def complement_atom(a: Atom) -> Atom | None:
    """The complement when it is again a single atom, else None."""
    neg = negate_atom(a)
    return neg.atom if isinstance(neg, FAtom) else None


# ---------------------------------------------------------------------------
# Evaluation and substitution


def eval_formula(f: Formula, val: Mapping[str, Rat]) -> bool:
    """Exact truth value of a quantifier-free formula under a valuation."""
    if isinstance(f, FTrue):
        return True
    if isinstance(f, FFalse):
        return False
    if isinstance(f, FAtom):
        return f.atom.evaluate(val)
    if isinstance(f, FNot):
        return not eval_formula(f.arg, val)
    if isinstance(f, FAnd):
        return all(eval_formula(a, val) for a in f.args)
    if isinstance(f, FOr):
        return any(eval_formula(a, val) for a in f.args)
    raise UnsupportedFragment("cannot evaluate a quantified formula")


def substitute(f: Formula, bindings: Mapping[str, Rat]) -> Formula:
    """Replace free variables by constants, folding ground subformulas."""
    if not bindings:
        return f
    if isinstance(f, (FTrue, FFalse)):
        return f
    if isinstance(f, FAtom):
        term = f.atom.term
        for name, value in bindings.items():
            term = term.subst_value(name, value)
        if term is f.atom.term:
            return f
        if f.atom.rel == DIV:
            return mk_div(f.atom.modulus, term)
        return mk_atom(term, f.atom.rel, f.atom.sort)
    if isinstance(f, FNot):
        return f_not(substitute(f.arg, bindings))
    if isinstance(f, FAnd):
        return f_and([substitute(a, bindings) for a in f.args])
    if isinstance(f, FOr):
        return f_or([substitute(a, bindings) for a in f.args])
    inner = {k: v for k, v in bindings.items() if k != f.var}
    return FQuant(f.forall, f.var, f.sort, substitute(f.body, inner)) \
        if inner else f


def substitute_terms(f: Formula, bindings: Mapping[str, LinearTerm]) -> Formula:
    """Replace free variables by linear terms (atoms re-normalized)."""
    if not bindings:
        return f
    if isinstance(f, (FTrue, FFalse)):
        return f
    if isinstance(f, FAtom):
        term = f.atom.term.subst_terms(bindings)
        if term == f.atom.term:
            return f
        if f.atom.rel == DIV:
            return mk_div(f.atom.modulus, term)
        return mk_atom(term, f.atom.rel, f.atom.sort)
    if isinstance(f, FNot):
        return f_not(substitute_terms(f.arg, bindings))
    if isinstance(f, FAnd):
        return f_and([substitute_terms(a, bindings) for a in f.args])
    if isinstance(f, FOr):
        return f_or([substitute_terms(a, bindings) for a in f.args])
    inner = {k: v for k, v in bindings.items() if k != f.var}
    return FQuant(f.forall, f.var, f.sort, substitute_terms(f.body, inner)) \
        if inner else f


# ---------------------------------------------------------------------------
# Negation normal form and DNF


def nnf(f: Formula) -> Formula:
    """Push negations to the atoms (quantifiers dualized if present)."""
    if isinstance(f, (FTrue, FFalse, FAtom)):
        return f
    if isinstance(f, FAnd):
        return f_and([nnf(a) for a in f.args])
    if isinstance(f, FOr):
        return f_or([nnf(a) for a in f.args])
    if isinstance(f, FQuant):
        return FQuant(f.forall, f.var, f.sort, nnf(f.body))
    g = f.arg
    if isinstance(g, FTrue):
        return FALSE
    if isinstance(g, FFalse):
        return TRUE
    if isinstance(g, FAtom):
        return negate_atom(g.atom)
    if isinstance(g, FNot):
        return nnf(g.arg)
    if isinstance(g, FAnd):
        return f_or([nnf(f_not(a)) for a in g.args])
    if isinstance(g, FOr):
        return f_and([nnf(f_not(a)) for a in g.args])
    return FQuant(not g.forall, g.var, g.sort, nnf(f_not(g.body)))


Cell = tuple[Atom, ...]


def simplify_cell(atoms: Iterable[Atom]) -> Cell | None:
    """Dedupe and prune a conjunction of atoms; None when contradictory.

    Pruning is limited to constant folding, duplicate removal, keeping the
    tightest bound per coefficient signature, and exact-complement detection.
    """
    bounds: dict[tuple, Atom] = {}  # tightest <= / < per signature
    others: list[Atom] = []
    order: list[Atom] = []

    def tighter(a: Atom, b: Atom) -> Atom:
        # same coefficient signature: larger constant means tighter bound
        if a.term.const != b.term.const:
            return a if a.term.const > b.term.const else b
        return a if a.rel == LT else b

    for a in atoms:
        if a.rel in (LE, LT):
            sig = a.term.coeffs
            cur = bounds.get(sig)
            if cur is None:
                bounds[sig] = a
                order.append(a)
            else:
                bounds[sig] = tighter(cur, a)
        elif a not in others:
            others.append(a)
            order.append(a)

    kept: list[Atom] = []
    for a in order:
        if a.rel in (LE, LT):
            b = bounds[a.term.coeffs]
            if b not in kept:
                kept.append(b)
        else:
            kept.append(a)

    eqs: dict[tuple, Fraction] = {}
    for a in kept:
        if a.rel == EQ:
            sig = a.term.coeffs
            if sig in eqs and eqs[sig] != a.term.const:
                return None
            eqs[sig] = a.term.const
    atom_set = set(kept)
    for a in kept:
        c = complement_atom(a)
        if c is not None and c in atom_set:
            return None
    return tuple(kept)


def to_dnf(f: Formula, budget: int = 4096) -> list[Cell]:
    """Deterministic DNF of a quantifier-free formula.

    The disjunction of the returned conjunctive cells is equivalent to f;
    cells appear in syntactic left-to-right expansion order.
    """
    g = nnf(f)

    def expand(h: Formula) -> list[Cell]:
        if isinstance(h, FTrue):
            return [()]
        if isinstance(h, FFalse):
            return []
        if isinstance(h, FAtom):
            return [(h.atom,)]
        if isinstance(h, FOr):
            out: list[Cell] = []
            for a in h.args:
                out.extend(expand(a))
                if len(out) > budget:
                    raise CellBudgetExceeded(f"more than {budget} DNF cells")
            return out
        if isinstance(h, FAnd):
            acc: list[Cell] = [()]
            for a in h.args:
                nxt: list[Cell] = []
                for left in acc:
                    for right in expand(a):
                        nxt.append(left + right)
                        if len(nxt) > budget:
                            raise CellBudgetExceeded(
                                f"more than {budget} DNF cells")
                acc = nxt
            return acc
        raise UnsupportedFragment("DNF requires a quantifier-free formula")

    cells: list[Cell] = []
    for cell in expand(g):
        slim = simplify_cell(cell)
        if slim is not None:
            cells.append(slim)
    return cells


def or_cells(cells: Iterable[Cell]) -> Formula:
    """Disjunction of conjunctive cells with subsumption pruning."""
    mats = [(cell, frozenset(cell)) for cell in cells]
    kept: list[Cell] = []
    for i, (cell, aset) in enumerate(mats):
        subsumed = False
        for j, (_, bset) in enumerate(mats):
            if i == j:
                continue
            if bset < aset or (bset == aset and j < i):
                subsumed = True
                break
        if not subsumed:
            kept.append(cell)
    return f_or([f_and([FAtom(a) for a in cell]) for cell in kept])
