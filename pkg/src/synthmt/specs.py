"""Specification frontend: parse LTL properties over linear-arithmetic
atoms, split variables into environment/system, and extract the literal
table that the Boolean abstraction works over.

Atoms are normalized on sight and deduplicated; an atom whose complement
is already in the table becomes a negated reference to the existing
literal, so `x >= 2` and `!(x < 2)` share one literal over ints.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import DuplicateDeclaration, SpecSyntaxError
from .logic import (Atom, FAtom, FFalse, FOr, FTrue, Formula, Sort,
                    complement_atom)
from .parsing import (FormulaParser, TokenStream, parse_sort,
                      render_atom, tokenize)


class LtlNode:
    """Immutable LTL syntax tree; leaves index the spec's literal table."""

    __slots__ = ()


@dataclass(frozen=True)
class LTrue(LtlNode):
    pass


@dataclass(frozen=True)
class LFalse(LtlNode):
    pass


@dataclass(frozen=True)
class LLit(LtlNode):
    index: int


@dataclass(frozen=True)
class LNot(LtlNode):
    arg: LtlNode


@dataclass(frozen=True)
class LAnd(LtlNode):
    args: tuple[LtlNode, ...]


@dataclass(frozen=True)
class LOr(LtlNode):
    args: tuple[LtlNode, ...]


@dataclass(frozen=True)
class LNext(LtlNode):
    arg: LtlNode


@dataclass(frozen=True)
class LUntil(LtlNode):
    left: LtlNode
    right: LtlNode


@dataclass(frozen=True)
class LRelease(LtlNode):
    left: LtlNode
    right: LtlNode


@dataclass(frozen=True)
class LEventually(LtlNode):
    arg: LtlNode


@dataclass(frozen=True)
class LGlobally(LtlNode):
    arg: LtlNode


def l_not(a: LtlNode) -> LtlNode:
    if isinstance(a, LTrue):
        return LFalse()
    if isinstance(a, LFalse):
        return LTrue()
    if isinstance(a, LNot):
        return a.arg
    return LNot(a)


def l_and(args: list[LtlNode]) -> LtlNode:
    flat: list[LtlNode] = []
    for a in args:
        if isinstance(a, LTrue):
            continue
        if isinstance(a, LFalse):
            return LFalse()
        if isinstance(a, LAnd):
            flat.extend(a.args)
        else:
            flat.append(a)
    if not flat:
        return LTrue()
    return flat[0] if len(flat) == 1 else LAnd(tuple(flat))


def l_or(args: list[LtlNode]) -> LtlNode:
    flat: list[LtlNode] = []
    for a in args:
        if isinstance(a, LFalse):
            continue
        if isinstance(a, LTrue):
            return LTrue()
        if isinstance(a, LOr):
            flat.extend(a.args)
        else:
            flat.append(a)
    if not flat:
        return LFalse()
    return flat[0] if len(flat) == 1 else LOr(tuple(flat))


# ---------------------------------------------------------------------------
# Specifications


class Fragment(enum.Enum):
    GX_SAFETY = "gx-safety"
    GENERAL = "general"


@dataclass(frozen=True)
class LtlTSpec:
    """Parsed specification with env/sys variable split and literal table.

    literals[i] is the normalized atom the fresh proposition s_i abstracts;
    indices are stable across runs (first-occurrence order).
    """

    env_vars: tuple[tuple[str, Sort], ...]
    sys_vars: tuple[tuple[str, Sort], ...]
    property: LtlNode
    literals: tuple[Atom, ...]

    @property
    def sorts(self) -> dict[str, Sort]:
        return dict(self.env_vars) | dict(self.sys_vars)

    def prop_name(self, index: int) -> str:
        return f"s_{index}"


class _LiteralTable:
    def __init__(self) -> None:
        self.atoms: list[Atom] = []

    def add(self, atom: Atom) -> tuple[int, bool]:
        """Index of the atom, and whether it appears with positive polarity."""
        if atom in self.atoms:
            return self.atoms.index(atom), True
        comp = complement_atom(atom)
        if comp is not None and comp in self.atoms:
            return self.atoms.index(comp), False
        self.atoms.append(atom)
        return len(self.atoms) - 1, True

    def node_for(self, f: Formula) -> LtlNode:
        """Lower a normalized quantifier-free formula to literal references."""
        if isinstance(f, FTrue):
            return LTrue()
        if isinstance(f, FFalse):
            return LFalse()
        if isinstance(f, FAtom):
            idx, pos = self.add(f.atom)
            return LLit(idx) if pos else l_not(LLit(idx))
        if isinstance(f, FOr):  # from != expansion
            return l_or([self.node_for(a) for a in f.args])
        raise SpecSyntaxError(f"unexpected atom normalization {f!r}", 0, 0)


class _LtlParser:
    """Property parser; leaves are theory atoms (normalized on sight)."""

    def __init__(self, ts: TokenStream, sorts: dict[str, Sort],
                 table: _LiteralTable):
        self.ts = ts
        self.sorts = sorts
        self.table = table
        self._fp = FormulaParser(ts, sorts)

    def parse(self) -> LtlNode:
        return self._impl()

    def _impl(self) -> LtlNode:
        left = self._or()
        if self.ts.at_sym("->"):
            self.ts.advance()
            return l_or([l_not(left), self._impl()])
        return left

    def _or(self) -> LtlNode:
        args = [self._and()]
        while self.ts.at_sym("||"):
            self.ts.advance()
            args.append(self._and())
        return l_or(args)

    def _and(self) -> LtlNode:
        args = [self._until()]
        while self.ts.at_sym("&&"):
            self.ts.advance()
            args.append(self._until())
        return l_and(args)

    def _until(self) -> LtlNode:
        left = self._unary()
        if self.ts.at_ident("U", "R"):
            op = self.ts.advance().text
            right = self._until()
            return LUntil(left, right) if op == "U" else LRelease(left, right)
        return left

    def _unary(self) -> LtlNode:
        ts = self.ts
        if ts.at_sym("!"):
            ts.advance()
            return l_not(self._unary())
        if ts.at_ident("G"):
            ts.advance()
            return LGlobally(self._unary())
        if ts.at_ident("F"):
            ts.advance()
            return LEventually(self._unary())
        if ts.at_ident("X"):
            ts.advance()
            return LNext(self._unary())
        if ts.at_ident("true"):
            ts.advance()
            return LTrue()
        if ts.at_ident("false"):
            ts.advance()
            return LFalse()
        if ts.at_sym("("):
            ts.advance()
            inner = self._impl()
            ts.eat_sym(")")
            if ts.at_sym("<", "<=", "=", "!=", ">=", ">"):
                raise ts.error("parenthesized arithmetic is not supported; "
                               "atoms are flat linear expressions")
            return inner
        return self.table.node_for(self._fp._atom())


def parse_spec(text: str) -> LtlTSpec:
    """Parse declarations plus property into a spec with its literal table."""
    ts = TokenStream(tokenize(text))
    env: list[tuple[str, Sort]] = []
    sys_: list[tuple[str, Sort]] = []
    seen: set[str] = set()
    while ts.at_ident("env", "sys"):
        kind = ts.advance().text
        name = ts.eat_ident()
        if name.text in seen:
            raise DuplicateDeclaration(f"variable {name.text!r} declared twice "
                                       f"(line {name.line})")
        if name.text in ("G", "F", "X", "U", "R") or name.text in seen:
            raise SpecSyntaxError(f"{name.text!r} is reserved", name.line, name.col)
        seen.add(name.text)
        ts.eat_sym(":")
        sort = parse_sort(ts)
        ts.eat_sym(";")
        (env if kind == "env" else sys_).append((name.text, sort))
    t = ts.peek()
    if not ts.at_ident("property"):
        raise SpecSyntaxError("expected 'property'", t.line, t.col)
    ts.advance()
    ts.eat_sym(":")
    sorts = dict(env) | dict(sys_)
    table = _LiteralTable()
    prop = _LtlParser(ts, sorts, table).parse()
    t = ts.peek()
    if t.kind != "eof":
        raise SpecSyntaxError(f"unexpected trailing input {t.text!r}", t.line, t.col)
    return LtlTSpec(tuple(env), tuple(sys_), prop, tuple(table.atoms))


def extract_literals(spec: LtlTSpec) -> tuple[Atom, ...]:
    """The deduplicated literal table, in first-occurrence order."""
    return spec.literals


def classify_fragment(prop: LtlNode) -> Fragment:
    """GX_SAFETY iff the property is a conjunction of G(b) and boolean
    constraints, where each b combines literals and Next applied directly
    to literals, with Next occurring only positively (X-depth 1, no
    Until/Release/Eventually)."""

    def boolean_part(n: LtlNode, positive: bool) -> bool:
        if isinstance(n, (LTrue, LFalse, LLit)):
            return True
        if isinstance(n, LNot):
            return boolean_part(n.arg, not positive)
        if isinstance(n, (LAnd, LOr)):
            return all(boolean_part(a, positive) for a in n.args)
        if isinstance(n, LNext):
            return positive and isinstance(n.arg, LLit)
        return False

    conjuncts = prop.args if isinstance(prop, LAnd) else (prop,)
    for c in conjuncts:
        if isinstance(c, LGlobally):
            if not boolean_part(c.arg, True):
                return Fragment.GENERAL
        elif not boolean_part(c, True) or _mentions_next(c):
            return Fragment.GENERAL
    return Fragment.GX_SAFETY


def _mentions_next(n: LtlNode) -> bool:
    if isinstance(n, LNext):
        return True
    if isinstance(n, LNot):
        return _mentions_next(n.arg)
    if isinstance(n, (LAnd, LOr)):
        return any(_mentions_next(a) for a in n.args)
    return False


# ---------------------------------------------------------------------------
# Rendering


def render_ltl(n: LtlNode, leaf: "callable") -> str:
    """Render with explicit parentheses; `leaf` maps a literal index to text."""
    if isinstance(n, LTrue):
        return "true"
    if isinstance(n, LFalse):
        return "false"
    if isinstance(n, LLit):
        return leaf(n.index)
    if isinstance(n, LNot):
        return f"!({render_ltl(n.arg, leaf)})"
    if isinstance(n, LAnd):
        return " && ".join(f"({render_ltl(a, leaf)})" for a in n.args)
    if isinstance(n, LOr):
        return " || ".join(f"({render_ltl(a, leaf)})" for a in n.args)
    if isinstance(n, LNext):
        return f"X ({render_ltl(n.arg, leaf)})"
    if isinstance(n, LGlobally):
        return f"G ({render_ltl(n.arg, leaf)})"
    if isinstance(n, LEventually):
        return f"F ({render_ltl(n.arg, leaf)})"
    if isinstance(n, LUntil):
        return f"({render_ltl(n.left, leaf)}) U ({render_ltl(n.right, leaf)})"
    if isinstance(n, LRelease):
        return f"({render_ltl(n.left, leaf)}) R ({render_ltl(n.right, leaf)})"
    raise TypeError(f"not an LTL node: {n!r}")


def render_property(spec: LtlTSpec) -> str:
    return render_ltl(spec.property, lambda i: render_atom(spec.literals[i]))


def render_spec(spec: LtlTSpec) -> str:
    """Spec file text; parse_spec(render_spec(s)) is structurally equal to s."""
    lines = [f"env {n}: {s.value};" for n, s in spec.env_vars]
    lines += [f"sys {n}: {s.value};" for n, s in spec.sys_vars]
    lines.append(f"property: {render_property(spec)}")
    return "\n".join(lines) + "\n"


def prop_names(spec: LtlTSpec) -> list[str]:
    return [spec.prop_name(i) for i in range(len(spec.literals))]
