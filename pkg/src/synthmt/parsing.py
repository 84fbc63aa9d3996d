"""Tokenizer, infix formula grammar, and deterministic rendering.

Grammar (shared by every artifact file):
    variables   [a-zA-Z_][a-zA-Z0-9_]*   (G F X U R and keywords reserved)
    relations   <  <=  =  !=  >=  >
    connectives &&  ||  !  ->  forall  exists
    literals    integers and rationals p/q
    divisibility is written divides(k, expr)  (int sort only)

Arithmetic sides of an atom are flat linear expressions; parentheses
group formulas, not arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .errors import SpecSyntaxError, UndeclaredVariable
from .logic import (DIV, EQ, LE, LT, Atom, Formula, LinearTerm, Sort, f_and,
                    f_implies, f_not, f_or, mk_atom, mk_div, mk_quant, FALSE,
                    TRUE)

KEYWORDS = {"true", "false", "forall", "exists", "divides", "int", "real",
            "env", "sys", "property", "G", "F", "X", "U", "R"}

_SYMBOLS = ["<=", ">=", "!=", "&&", "||", "->", "<", ">", "=", "!", "(", ")",
            "+", "-", "*", "/", ":", ";", ",", "."]


@dataclass(frozen=True)
class Token:
    kind: str  # ident | num | sym | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if ch in " \t\r":
            i, col = i + 1, col + 1
            continue
        if ch == "#":  # comment to end of line
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(Token("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("num", text[i:j], line, col))
            col += j - i
            i = j
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                toks.append(Token("sym", sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise SpecSyntaxError(f"unexpected character {ch!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks


class TokenStream:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.pos = 0

    def peek(self) -> Token:
        return self.toks[self.pos]

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def at_sym(self, *texts: str) -> bool:
        t = self.peek()
        return t.kind == "sym" and t.text in texts

    def at_ident(self, *texts: str) -> bool:
        t = self.peek()
        return t.kind == "ident" and t.text in texts

    def eat_sym(self, text: str) -> Token:
        t = self.peek()
        if t.kind != "sym" or t.text != text:
            raise SpecSyntaxError(f"expected {text!r}, found {t.text or 'end of input'!r}",
                                  t.line, t.col)
        return self.advance()

    def eat_ident(self) -> Token:
        t = self.peek()
        if t.kind != "ident":
            raise SpecSyntaxError(f"expected identifier, found {t.text or 'end of input'!r}",
                                  t.line, t.col)
        return self.advance()

    def error(self, msg: str) -> SpecSyntaxError:
        t = self.peek()
        return SpecSyntaxError(msg, t.line, t.col)


def parse_sort(ts: TokenStream) -> Sort:
    t = ts.eat_ident()
    if t.text == "int":
        return Sort.INT
    if t.text == "real":
        return Sort.REAL
    raise SpecSyntaxError(f"expected 'int' or 'real', found {t.text!r}", t.line, t.col)


# ---------------------------------------------------------------------------
# Linear expressions


def _parse_number(ts: TokenStream) -> Fraction:
    t = ts.peek()
    if t.kind != "num":
        raise ts.error("expected a number")
    ts.advance()
    value = Fraction(int(t.text))
    if ts.at_sym("/"):
        ts.advance()
        d = ts.peek()
        if d.kind != "num":
            raise ts.error("expected denominator after '/'")
        ts.advance()
        value /= int(d.text)
    return value


def _parse_monomial(ts: TokenStream, sorts: Mapping[str, Sort]) -> LinearTerm:
    t = ts.peek()
    if t.kind == "num":
        c = _parse_number(ts)
        if ts.at_sym("*"):
            ts.advance()
            name = ts.eat_ident()
            _check_var(name, sorts)
            return LinearTerm.make({name.text: c})
        return LinearTerm.constant(c)
    if t.kind == "ident":
        name = ts.eat_ident()
        _check_var(name, sorts)
        if ts.at_sym("*"):
            ts.advance()
            c = _parse_number(ts)
            return LinearTerm.make({name.text: c})
        return LinearTerm.var(name.text)
    raise ts.error("expected a variable or number")


def _check_var(tok: Token, sorts: Mapping[str, Sort]) -> None:
    if tok.text in KEYWORDS:
        raise SpecSyntaxError(f"{tok.text!r} is reserved", tok.line, tok.col)
    if tok.text not in sorts:
        raise UndeclaredVariable(f"undeclared variable {tok.text!r} "
                                 f"(line {tok.line}, column {tok.col})")


def parse_linear_expr(ts: TokenStream, sorts: Mapping[str, Sort]) -> LinearTerm:
    negate = False
    if ts.at_sym("-"):
        ts.advance()
        negate = True
    term = _parse_monomial(ts, sorts)
    if negate:
        term = -term
    while ts.at_sym("+", "-"):
        op = ts.advance().text
        nxt = _parse_monomial(ts, sorts)
        term = term + nxt if op == "+" else term - nxt
    return term


def _expr_sort(term: LinearTerm, sorts: Mapping[str, Sort],
               ts: TokenStream) -> Sort:
    used = {sorts[v] for v in term.vars}
    if len(used) > 1:
        raise ts.error("atom mixes int and real variables")
    return used.pop() if used else Sort.INT


# ---------------------------------------------------------------------------
# Formula parsing


class FormulaParser:
    """Recursive-descent parser for quantifier-augmented boolean formulas."""

    def __init__(self, ts: TokenStream, sorts: Mapping[str, Sort]):
        self.ts = ts
        self.sorts = dict(sorts)

    def parse(self) -> Formula:
        return self._implies()

    def _implies(self) -> Formula:
        left = self._or()
        if self.ts.at_sym("->"):
            self.ts.advance()
            return f_implies(left, self._implies())
        return left

    def _or(self) -> Formula:
        args = [self._and()]
        while self.ts.at_sym("||"):
            self.ts.advance()
            args.append(self._and())
        return f_or(args) if len(args) > 1 else args[0]

    def _and(self) -> Formula:
        args = [self._unary()]
        while self.ts.at_sym("&&"):
            self.ts.advance()
            args.append(self._unary())
        return f_and(args) if len(args) > 1 else args[0]

    def _unary(self) -> Formula:
        ts = self.ts
        if ts.at_sym("!"):
            ts.advance()
            return f_not(self._unary())
        if ts.at_ident("forall", "exists"):
            forall = ts.advance().text == "forall"
            name = ts.eat_ident()
            if name.text in KEYWORDS:
                raise SpecSyntaxError(f"{name.text!r} is reserved", name.line, name.col)
            ts.eat_sym(":")
            sort = parse_sort(ts)
            ts.eat_sym(".")
            outer = self.sorts.get(name.text)
            self.sorts[name.text] = sort
            body = self._unary()
            if outer is None:
                del self.sorts[name.text]
            else:
                self.sorts[name.text] = outer
            return mk_quant(forall, name.text, sort, body)
        if ts.at_ident("true"):
            ts.advance()
            return TRUE
        if ts.at_ident("false"):
            ts.advance()
            return FALSE
        if ts.at_ident("divides"):
            ts.advance()
            ts.eat_sym("(")
            k = _parse_number(ts)
            ts.eat_sym(",")
            term = parse_linear_expr(ts, self.sorts)
            ts.eat_sym(")")
            if k.denominator != 1 or k <= 0:
                raise ts.error("divisibility modulus must be a positive integer")
            return mk_div(int(k), term)
        if ts.at_sym("("):
            ts.advance()
            inner = self._implies()
            ts.eat_sym(")")
            if ts.at_sym("<", "<=", "=", "!=", ">=", ">"):
                raise ts.error("parenthesized arithmetic is not supported; "
                               "atoms are flat linear expressions")
            return inner
        return self._atom()

    def _atom(self) -> Formula:
        ts = self.ts
        lhs = parse_linear_expr(ts, self.sorts)
        if not ts.at_sym("<", "<=", "=", "!=", ">=", ">"):
            raise ts.error("expected a relation")
        rel = ts.advance().text
        rhs = parse_linear_expr(ts, self.sorts)
        diff = lhs - rhs
        sort = _expr_sort(diff, self.sorts, ts)
        return mk_atom(diff, rel, sort)


def parse_formula(text: str, sorts: Mapping[str, Sort]) -> Formula:
    ts = TokenStream(tokenize(text))
    f = FormulaParser(ts, sorts).parse()
    t = ts.peek()
    if t.kind != "eof":
        raise SpecSyntaxError(f"unexpected trailing input {t.text!r}", t.line, t.col)
    return f


# ---------------------------------------------------------------------------
# Rendering (parse(render(f)) reconstructs an equal formula)


def render_frac(c: Fraction) -> str:
    return str(c)


def render_term(t: LinearTerm) -> str:
    parts: list[str] = []
    for name, c in t.coeffs:
        mono = name if abs(c) == 1 else f"{render_frac(abs(c))}*{name}"
        if not parts:
            parts.append(mono if c > 0 else f"-{mono}")
        else:
            parts.append(f"+ {mono}" if c > 0 else f"- {mono}")
    if t.const != 0 or not parts:
        c = t.const
        if not parts:
            parts.append(render_frac(c))
        else:
            parts.append(f"+ {render_frac(c)}" if c > 0 else
                         f"- {render_frac(-c)}")
    return " ".join(parts)


def render_atom(a: Atom) -> str:
    if a.rel == DIV:
        return f"divides({a.modulus}, {render_term(a.term)})"
    pos: list[tuple[str, Fraction]] = []
    neg: list[tuple[str, Fraction]] = []
    for name, c in a.term.coeffs:
        (pos if c > 0 else neg).append((name, abs(c)))
    lhs = LinearTerm(tuple(pos), a.term.const if a.term.const > 0 else Fraction(0))
    rhs = LinearTerm(tuple(neg), -a.term.const if a.term.const < 0 else Fraction(0))
    rel = {LE: "<=", LT: "<", EQ: "="}[a.rel]
    return f"{render_term(lhs)} {rel} {render_term(rhs)}"


def render_formula(f: Formula) -> str:
    from . import logic as L

    def wrap(g: Formula, parent: int) -> str:
        text, prec = walk(g)
        return f"({text})" if prec < parent else text

    def walk(g: Formula) -> tuple[str, int]:
        # precedence: atoms 4, ! 3, && 2, || 1, quantifier 0
        if isinstance(g, L.FTrue):
            return "true", 4
        if isinstance(g, L.FFalse):
            return "false", 4
        if isinstance(g, L.FAtom):
            return render_atom(g.atom), 4
        if isinstance(g, L.FNot):
            return f"!{wrap(g.arg, 4)}", 3
        if isinstance(g, L.FAnd):
            return " && ".join(wrap(a, 3) for a in g.args), 2
        if isinstance(g, L.FOr):
            return " || ".join(wrap(a, 2) for a in g.args), 1
        if isinstance(g, L.FQuant):
            q = "forall" if g.forall else "exists"
            return f"{q} {g.var}:{g.sort.value}. {wrap(g.body, 4)}", 0
        raise TypeError(f"not a formula: {g!r}")

    return walk(f)[0]


# ---------------------------------------------------------------------------
# Rational values in JSON artifacts


def frac_to_json(v: Fraction) -> int | str:
    v = Fraction(v)
    return int(v) if v.denominator == 1 else str(v)


def frac_from_json(v: int | str | float) -> Fraction:
    if isinstance(v, bool) or isinstance(v, float):
        raise SpecSyntaxError(f"expected an exact int or 'p/q' string, got {v!r}", 0, 0)
    if isinstance(v, int):
        return Fraction(v)
    return Fraction(v)
