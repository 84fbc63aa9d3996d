"""Quantifier elimination, validity, model search, and Skolem synthesis
for linear integer and linear real arithmetic.

Integer elimination is Cooper's method specialised to conjunctive cells
(divisibility atoms handled through the lcm period); real elimination is
virtual substitution where the virtual terms -inf / bound / bound+eps are
resolved to concrete rational witnesses (midpoints for two-sided cells,
bound+-1 for one-sided).  Both record a witness term per case, which is
what Skolem extraction and model search reuse.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

from .errors import (FormulaNotValid, MissingVariable, SortMismatch,
                     UnsupportedFragment)
from .logic import (DIV, EQ, LE, LT, Atom, Cell, FAtom, FFalse, FNot, FOr,
                    FQuant, FTrue, Formula, LinearTerm, Rat, Sort, TRUE,
                    eval_formula, f_and, f_implies, f_not, f_or, free_vars,
                    mk_atom, mk_div, nnf, or_cells, simplify_cell,
                    substitute_terms, to_dnf, FAnd)
from .parsing import parse_linear_expr, render_formula, render_term, \
    parse_formula, tokenize, TokenStream

# ---------------------------------------------------------------------------
# Per-cell elimination with witnesses

WitnessCase = tuple[Cell, LinearTerm]  # (residue over remaining vars, witness)


def _subst_cases(atoms: Sequence[Atom], var: str,
                 witness_num: LinearTerm, denom: int = 1) -> Cell | None:
    """Substitute var := witness_num/denom into every atom; None if unsat."""
    out: list[Atom] = []
    bind = {var: witness_num.scale(Fraction(1, denom))}
    for a in atoms:
        f = substitute_terms(FAtom(a), bind)
        if isinstance(f, FFalse):
            return None
        if isinstance(f, FTrue):
            continue
        if isinstance(f, FAtom):
            out.append(f.atom)
        else:  # disjunction can only come from normalization of a folded atom
            raise UnsupportedFragment("unexpected substitution result")
    return simplify_cell(out)


def _eliminate_cell_int(atoms: Cell, var: str) -> list[WitnessCase]:
    with_var = [a for a in atoms if var in a.term.vars]
    without = tuple(a for a in atoms if var not in a.term.vars)
    if not with_var:
        return [(without, LinearTerm.constant(0))]

    # an equality pins the variable directly
    for a in with_var:
        if a.rel == EQ:
            c = a.term.coeff(var)
            rest = a.term.drop(var)
            witness = rest.scale(Fraction(-1, c))
            others = [b for b in atoms if b is not a]
            guard = _subst_cases(others, var, rest.scale(-1), int(c))
            if guard is None:
                return []
            extra: list[Atom] = []
            if abs(c) != 1:
                d = mk_div(int(abs(c)), rest)
                if isinstance(d, FFalse):
                    return []
                if isinstance(d, FAtom):
                    extra.append(d.atom)
            slim = simplify_cell(guard + tuple(extra))
            return [] if slim is None else [(slim, witness)]

    # scale every occurrence to coefficient +-m  (conceptually v' = m*var)
    m = 1
    for a in with_var:
        m = math.lcm(m, abs(a.term.coeff(var).numerator))
    lowers: list[LinearTerm] = []   # strict bounds b with  b < v'
    uppers: list[LinearTerm] = []   # bounds u with  v' <= u
    divs: list[tuple[int, int, LinearTerm]] = []  # (modulus, sign, rest)
    for a in with_var:
        c = a.term.coeff(var)
        s = Fraction(m, abs(c.numerator))
        rest = a.term.drop(var).scale(s)
        if a.rel == LE:
            if c > 0:
                uppers.append(-rest)
            else:
                lowers.append(rest.shift(-1))
        elif a.rel == DIV:
            divs.append((int(a.modulus * s), 1 if c > 0 else -1, rest))
        else:  # pragma: no cover - int atoms are never strict
            raise UnsupportedFragment("strict integer atom escaped tightening")
    if m > 1:
        divs.append((m, 1, LinearTerm.constant(0)))
    period = 1
    for k, _, _ in divs:
        period = math.lcm(period, k)

    def close(w: LinearTerm) -> Cell | None:
        """Residue of the whole cell at v' = w (with var -> w/m)."""
        cell: list[Atom] = list(without)
        for u in uppers:
            f = mk_atom(w - u, LE, Sort.INT)
            if isinstance(f, FFalse):
                return None
            if isinstance(f, FAtom):
                cell.append(f.atom)
        for b in lowers:
            f = mk_atom(b.shift(1) - w, LE, Sort.INT)
            if isinstance(f, FFalse):
                return None
            if isinstance(f, FAtom):
                cell.append(f.atom)
        for k, sign, rest in divs:
            f = mk_div(k, w.scale(sign) + rest)
            if isinstance(f, FFalse):
                return None
            if isinstance(f, FAtom):
                cell.append(f.atom)
        return simplify_cell(cell)

    cases: list[WitnessCase] = []
    if lowers:
        # Cooper, lower-bound flavor: a least solution sits at b+j, 1<=j<=period
        for b in lowers:
            for j in range(1, period + 1):
                w = b.shift(j)
                guard = close(w)
                if guard is not None:
                    cases.append((guard, w.scale(Fraction(1, m))))
    elif uppers:
        # no lower bounds: the greatest solution sits within one period
        # below some upper bound
        for u in uppers:
            for j in range(0, period):
                w = u.shift(-j)
                guard = close(w)
                if guard is not None:
                    cases.append((guard, w.scale(Fraction(1, m))))
    else:
        # divisibility constraints only: some residue in one period works
        for j in range(0, period):
            w = LinearTerm.constant(j)
            guard = close(w)
            if guard is not None:
                cases.append((guard, w.scale(Fraction(1, m))))
    return cases


def _eliminate_cell_real(atoms: Cell, var: str) -> list[WitnessCase]:
    with_var = [a for a in atoms if var in a.term.vars]
    without = tuple(a for a in atoms if var not in a.term.vars)
    if not with_var:
        return [(without, LinearTerm.constant(0))]

    for a in with_var:
        if a.rel == DIV:
            raise SortMismatch("divisibility atom over a real variable")

    for a in with_var:
        if a.rel == EQ:
            c = a.term.coeff(var)
            rest = a.term.drop(var)
            witness = rest.scale(Fraction(-1, c))
            others = [b for b in atoms if b is not a]
            guard = _subst_cases(others, var, witness)
            return [] if guard is None else [(guard, witness)]

    lowers: list[tuple[LinearTerm, bool]] = []  # (bound, strict): bound <(=) var
    uppers: list[tuple[LinearTerm, bool]] = []
    for a in with_var:
        c = a.term.coeff(var)
        bound = a.term.drop(var).scale(Fraction(-1, c))
        if c > 0:
            uppers.append((bound, a.rel == LT))
        else:
            lowers.append((bound, a.rel == LT))

    feas: list[Atom] = list(without)
    for l, sl in lowers:
        for u, su in uppers:
            f = mk_atom(l - u, LT if (sl or su) else LE, Sort.REAL)
            if isinstance(f, FFalse):
                return []
            if isinstance(f, FAtom):
                feas.append(f.atom)

    def with_selection(extra: list[Formula], witness: LinearTerm) -> None:
        cell: list[Atom] = list(feas)
        for f in extra:
            if isinstance(f, FFalse):
                return
            if isinstance(f, FAtom):
                cell.append(f.atom)
        slim = simplify_cell(cell)
        if slim is not None:
            cases.append((slim, witness))

    cases: list[WitnessCase] = []
    if lowers and uppers:
        # case split on which bounds are the max lower / min upper;
        # the midpoint of that pair satisfies every bound
        for l, _sl in lowers:
            for u, _su in uppers:
                sel = [mk_atom(l2 - l, LE, Sort.REAL) for l2, _ in lowers] + \
                      [mk_atom(u - u2, LE, Sort.REAL) for u2, _ in uppers]
                with_selection(sel, (l + u).scale(Fraction(1, 2)))
    elif lowers:
        for l, _sl in lowers:
            sel = [mk_atom(l2 - l, LE, Sort.REAL) for l2, _ in lowers]
            with_selection(sel, l.shift(1))
    elif uppers:
        for u, _su in uppers:
            sel = [mk_atom(u - u2, LE, Sort.REAL) for u2, _ in uppers]
            with_selection(sel, u.shift(-1))
    else:  # pragma: no cover - no bounds means no occurrences
        cases.append((without, LinearTerm.constant(0)))
    return cases


def eliminate_cell(atoms: Cell, var: str, sort: Sort) -> list[WitnessCase]:
    """Witness cases for `exists var. /\\ atoms`, deterministic order."""
    if sort is Sort.INT:
        return _eliminate_cell_int(atoms, var)
    return _eliminate_cell_real(atoms, var)


def _eliminate_cell_qe(atoms: Cell, var: str, sort: Sort) -> list[Cell]:
    """Residue cells of `exists var. /\\ atoms` without witness bookkeeping.

    Tighter than the witness cases: a real cell projects to a single
    Fourier-Motzkin residue, and an integer cell with no lower bounds
    needs only the divisibility residues over one period.
    """
    with_var = [a for a in atoms if var in a.term.vars]
    without = tuple(a for a in atoms if var not in a.term.vars)
    if not with_var:
        return [without]
    if any(a.rel == EQ for a in with_var):
        return [g for g, _ in eliminate_cell(atoms, var, sort)]

    if sort is Sort.REAL:
        lowers: list[tuple[LinearTerm, bool]] = []
        uppers: list[tuple[LinearTerm, bool]] = []
        for a in with_var:
            if a.rel == DIV:
                raise SortMismatch("divisibility atom over a real variable")
            c = a.term.coeff(var)
            bound = a.term.drop(var).scale(Fraction(-1, c))
            (uppers if c > 0 else lowers).append((bound, a.rel == LT))
        cell: list[Atom] = list(without)
        for l, sl in lowers:
            for u, su in uppers:
                f = mk_atom(l - u, LT if (sl or su) else LE, Sort.REAL)
                if isinstance(f, FFalse):
                    return []
                if isinstance(f, FAtom):
                    cell.append(f.atom)
        slim = simplify_cell(cell)
        return [] if slim is None else [slim]

    # int: fall back to witness cases when lower bounds exist (Cooper's
    # b+j disjuncts); otherwise only the divisibility residues remain
    has_lower = any(a.rel == LE and a.term.coeff(var) < 0 for a in with_var)
    if has_lower:
        return [g for g, _ in eliminate_cell(atoms, var, sort)]
    m = 1
    for a in with_var:
        m = math.lcm(m, abs(a.term.coeff(var).numerator))
    divs: list[tuple[int, int, LinearTerm]] = []
    for a in with_var:
        if a.rel == DIV:
            c = a.term.coeff(var)
            s = Fraction(m, abs(c.numerator))
            divs.append((int(a.modulus * s), 1 if c > 0 else -1,
                         a.term.drop(var).scale(s)))
    if m > 1:
        divs.append((m, 1, LinearTerm.constant(0)))
    period = 1
    for k, _, _ in divs:
        period = math.lcm(period, k)
    out: list[Cell] = []
    for j in range(1, period + 1):
        cell = list(without)
        dead = False
        for k, sign, rest in divs:
            f = mk_div(k, rest.shift(sign * j))
            if isinstance(f, FFalse):
                dead = True
                break
            if isinstance(f, FAtom):
                cell.append(f.atom)
        if dead:
            continue
        slim = simplify_cell(cell)
        if slim is not None:
            out.append(slim)
    return out


# ---------------------------------------------------------------------------
# Formula-level QE


@dataclass(frozen=True)
class QeResult:
    formula: Formula
    eliminated: tuple[str, ...]


_QE_BUDGET = 65536  # internal DNF budget; the public to_dnf default is 4096


@lru_cache(maxsize=4096)
def _eliminate_exists_qf(f: Formula, var: str, sort: Sort) -> Formula:
    if var not in free_vars(f):
        return f
    cells = to_dnf(f, budget=_QE_BUDGET)
    out: list[Cell] = []
    for cell in cells:
        out.extend(_eliminate_cell_qe(cell, var, sort))
    return or_cells(out)


def eliminate_quantifiers(f: Formula) -> QeResult:
    """Equivalent quantifier-free formula, quantifiers removed innermost-first."""
    eliminated: list[str] = []

    def walk(g: Formula) -> Formula:
        if isinstance(g, (FTrue, FFalse, FAtom)):
            return g
        if isinstance(g, FNot):
            return f_not(walk(g.arg))
        if isinstance(g, FAnd):
            return f_and([walk(a) for a in g.args])
        if isinstance(g, FOr):
            return f_or([walk(a) for a in g.args])
        body = walk(g.body)
        if g.forall:
            res = f_not(_eliminate_exists_qf(nnf(f_not(body)), g.var, g.sort))
            res = nnf(res)
        else:
            res = _eliminate_exists_qf(nnf(body), g.var, g.sort)
        eliminated.append(g.var)
        return res

    return QeResult(walk(f), tuple(eliminated))


def check_validity(f: Formula) -> bool:
    """Truth of f after implicit universal closure of its free variables."""
    from .logic import var_sorts
    sorts = var_sorts(f)
    closed = f
    for v in sorted(free_vars(f), reverse=True):
        closed = FQuant(True, v, sorts[v], closed)
    res = eliminate_quantifiers(closed).formula
    if isinstance(res, FTrue):
        return True
    if isinstance(res, FFalse):
        return False
    raise FormulaNotValid(  # pragma: no cover - closure leaves no free vars
        f"closed formula did not fold: {render_formula(res)}")


def find_model(f: Formula, variables: Sequence[tuple[str, Sort]]
               ) -> dict[str, Fraction] | None:
    """Deterministic model of a quantifier-free formula, or None when unsat.

    Tries DNF cells left to right; within a cell, eliminates variables
    innermost-first and takes the first witness case that survives, which
    yields the least witness consistent with each cell's lower bounds.
    """
    names = [n for n, _ in variables]
    missing = sorted(free_vars(f) - set(names))
    if missing:
        raise MissingVariable(missing[0])

    def model_cell(cell: Cell, rest: Sequence[tuple[str, Sort]]
                   ) -> dict[str, Fraction] | None:
        if not rest:
            return {} if not cell else None
        name, sort = rest[-1]
        for guard, witness in eliminate_cell(cell, name, sort):
            sub = model_cell(guard, rest[:-1])
            if sub is not None:
                sub[name] = witness.evaluate(sub)
                return sub
        return None

    for cell in to_dnf(f):
        model = model_cell(cell, list(variables))
        if model is not None:
            return model
    return None


# ---------------------------------------------------------------------------
# Skolem functions


@dataclass(frozen=True)
class SkolemLeaf:
    outputs: tuple[tuple[str, LinearTerm], ...]


@dataclass(frozen=True)
class SkolemNode:
    guard: Formula
    then_branch: "SkolemNode | SkolemLeaf"
    else_branch: "SkolemNode | SkolemLeaf"


@dataclass(frozen=True)
class SkolemFunction:
    """Guarded decision tree witnessing a forall*exists* validity.

    Total by construction: guards form an if/else chain ending in a
    default all-zero leaf that is unreachable for inputs satisfying the
    formula's precondition.  Evaluation is a pure function.
    """

    inputs: tuple[tuple[str, Sort], ...]
    outputs: tuple[tuple[str, Sort], ...]
    tree: SkolemNode | SkolemLeaf

    def evaluate(self, val: Mapping[str, Rat]) -> dict[str, Fraction]:
        for name, _ in self.inputs:
            if name not in val:
                raise MissingVariable(name)
        node = self.tree
        while isinstance(node, SkolemNode):
            node = node.then_branch if eval_formula(node.guard, val) \
                else node.else_branch
        out: dict[str, Fraction] = {}
        sorts = dict(self.outputs)
        for name, term in node.outputs:
            v = term.evaluate(val)
            if sorts[name] is Sort.INT and v.denominator != 1:
                raise SortMismatch(  # guarded leaves keep int outputs integral
                    f"non-integral value {v} for int output {name!r}")
            out[name] = v
        return out

    def paths(self) -> list[tuple[Formula, tuple[tuple[str, LinearTerm], ...]]]:
        """(guard, leaf) per chain link; the default leaf gets guard true."""
        out = []
        node = self.tree
        while isinstance(node, SkolemNode):
            out.append((node.guard, node.then_branch.outputs))
            node = node.else_branch
        out.append((TRUE, node.outputs))
        return out


def _prenex_split(f: Formula) -> tuple[list[tuple[str, Sort]],
                                       list[tuple[str, Sort]], Formula]:
    inputs: list[tuple[str, Sort]] = []
    g = f
    while isinstance(g, FQuant) and g.forall:
        inputs.append((g.var, g.sort))
        g = g.body
    outputs: list[tuple[str, Sort]] = []
    while isinstance(g, FQuant) and not g.forall:
        outputs.append((g.var, g.sort))
        g = g.body

    def has_quant(h: Formula) -> bool:
        if isinstance(h, FQuant):
            return True
        if isinstance(h, FNot):
            return has_quant(h.arg)
        if isinstance(h, (FAnd, FOr)):
            return any(has_quant(a) for a in h.args)
        return False

    if has_quant(g):
        # inner quantifiers (e.g. from quantified adaptive constraints) are
        # removed by QE, recovering the forall*exists* shape
        g = eliminate_quantifiers(g).formula
    if not outputs:
        raise UnsupportedFragment("no existential variables to witness")
    return inputs, outputs, g


def _solve_cell(atoms: Cell, outs: Sequence[tuple[str, Sort]]
                ) -> list[tuple[Cell, dict[str, LinearTerm]]]:
    if not outs:
        return [(atoms, {})]
    name, sort = outs[-1]
    results: list[tuple[Cell, dict[str, LinearTerm]]] = []
    for guard, witness in eliminate_cell(atoms, name, sort):
        for residue, binding in _solve_cell(guard, outs[:-1]):
            results.append((residue, {**binding,
                                      name: witness.subst_terms(binding)}))
    return results


def synthesize_skolem(f: Formula, verify: bool = True) -> SkolemFunction:
    """Skolem function for a valid prenex forall*exists* formula.

    Cells are tried in deterministic order; each contributes guards over
    the universal variables and one witness term per output.  Raises
    FormulaNotValid when f is not valid (no Skolem function exists).
    """
    inputs, outputs, body = _prenex_split(f)
    out_names = [n for n, _ in outputs]

    paths: list[tuple[Formula, dict[str, LinearTerm]]] = []
    for cell in to_dnf(body):
        for residue, binding in _solve_cell(cell, outputs):
            stray = set().union(*[set(a.term.vars) for a in residue]) \
                if residue else set()
            if stray & set(out_names):  # pragma: no cover - elimination is total
                raise UnsupportedFragment("outputs escaped elimination")
            guard = f_and([FAtom(a) for a in residue])
            paths.append((guard, binding))

    if not check_validity(f_or([g for g, _ in paths])):
        raise FormulaNotValid(
            "formula is not valid; no Skolem function exists")

    default = SkolemLeaf(tuple((n, LinearTerm.constant(0)) for n in out_names))
    tree: SkolemNode | SkolemLeaf = default
    for guard, binding in reversed(paths):
        leaf = SkolemLeaf(tuple((n, binding[n]) for n in out_names))
        tree = SkolemNode(guard, leaf, tree)
    fn = SkolemFunction(tuple(inputs), tuple(outputs), tree)

    if verify:
        for guard, binding in paths:
            inst = substitute_terms(body, dict(binding))
            if not check_validity(f_implies(guard, inst)):
                raise FormulaNotValid(  # pragma: no cover - construction invariant
                    "synthesized witness fails its own guard")
    return fn


# ---------------------------------------------------------------------------
# Serialization


def _tree_to_json(node: SkolemNode | SkolemLeaf):
    if isinstance(node, SkolemLeaf):
        return {"outputs": {n: render_term(t) for n, t in node.outputs}}
    return {"guard": render_formula(node.guard),
            "then": _tree_to_json(node.then_branch),
            "else": _tree_to_json(node.else_branch)}


def skolem_to_json(fn: SkolemFunction) -> dict:
    return {"inputs": [[n, s.value] for n, s in fn.inputs],
            "outputs": [[n, s.value] for n, s in fn.outputs],
            "tree": _tree_to_json(fn.tree)}


def skolem_from_json(data: dict) -> SkolemFunction:
    inputs = tuple((n, Sort(s)) for n, s in data["inputs"])
    outputs = tuple((n, Sort(s)) for n, s in data["outputs"])
    sorts = {n: s for n, s in inputs} | {n: s for n, s in outputs}
    order = [n for n, _ in outputs]

    def parse_term(text: str) -> LinearTerm:
        ts = TokenStream(tokenize(text))
        term = parse_linear_expr(ts, sorts)
        if ts.peek().kind != "eof":
            raise UnsupportedFragment(f"trailing input in term {text!r}")
        return term

    def walk(node: dict):
        if "outputs" in node:
            return SkolemLeaf(tuple((n, parse_term(node["outputs"][n]))
                                    for n in order))
        return SkolemNode(parse_formula(node["guard"], sorts),
                          walk(node["then"]), walk(node["else"]))

    return SkolemFunction(inputs, outputs, walk(data["tree"]))


def skolem_to_text(fn: SkolemFunction) -> str:
    return json.dumps(skolem_to_json(fn), indent=2, sort_keys=True)


def skolem_from_text(text: str) -> SkolemFunction:
    return skolem_from_json(json.loads(text))
