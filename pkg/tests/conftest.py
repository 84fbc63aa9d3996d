"""Shared fixtures: the running-example pipeline and brute-force oracles."""

from __future__ import annotations

import json
from fractions import Fraction

import pytest

from synthmt.abstraction import BooleanSpec, all_choices, booleanize
from synthmt.games import import_mealy
from synthmt.logic import eval_formula
from synthmt.partition import compile_partitioner, partition
from synthmt.specs import LtlTSpec, parse_spec

RUNNING_SPEC = """\
env x: int;
sys y: int;
property: G ((x < 2 -> X (y > 1)) && (x >= 2 -> y <= x))
"""

GOLDEN_INPUTS = [{"x": 4}, {"x": 4}, {"x": 1}, {"x": 0}, {"x": 2}]


@pytest.fixture(scope="session")
def running_spec() -> LtlTSpec:
    return parse_spec(RUNNING_SPEC)


@pytest.fixture(scope="session")
def running_bspec(running_spec) -> BooleanSpec:
    return booleanize(running_spec)


@pytest.fixture(scope="session")
def letters_by_region(running_bspec):
    """Letters of the running example keyed by a probe input."""
    p = compile_partitioner(running_bspec.table)
    return {
        "x>=2": partition(p, {"x": 4}),
        "x=1": partition(p, {"x": 1}),
        "x<=0": partition(p, {"x": 0}),
    }


@pytest.fixture(scope="session")
def reference_machine(running_bspec, letters_by_region):
    """Memoryless reference strategy: c_4 on the (x>=2) letter and c_1
    on both x<2 letters."""
    text = json.dumps({
        "letters": list(running_bspec.letters),
        "props": ["s_0", "s_1", "s_2"],
        "states": ["q0"],
        "initial": "q0",
        "transitions": [
            {"from": "q0", "letter": letters_by_region["x>=2"],
             "to": "q0", "output": "011"},
            {"from": "q0", "letter": letters_by_region["x=1"],
             "to": "q0", "output": "110"},
            {"from": "q0", "letter": letters_by_region["x<=0"],
             "to": "q0", "output": "110"},
        ],
    })
    return import_mealy(text, running_bspec)


def feasible_choices_bruteforce(spec: LtlTSpec, v_x: dict,
                                y_lo: int = -20, y_hi: int = 20,
                                denom: int = 1) -> frozenset[int]:
    """Oracle: indices of choices realizable at v_x by searching ybar over
    a bounded grid (integers, or denom-ths for real sorts).

    The bounds must dominate the spec's coefficient-implied thresholds;
    for the desk-scale specs here every literal threshold lies within
    [-20, 20] of the inputs used.
    """
    n = len(spec.literals)
    sys_vars = spec.sys_vars
    values = [Fraction(k, denom) for k in range(y_lo * denom, y_hi * denom + 1)]

    def assignments(idx: int, acc: dict):
        if idx == len(sys_vars):
            yield dict(acc)
            return
        name = sys_vars[idx][0]
        for v in values:
            acc[name] = v
            yield from assignments(idx + 1, acc)
        del acc[name]

    feasible = set()
    choices = all_choices(n)
    for v_y in assignments(0, {}):
        val = dict(v_x)
        val.update(v_y)
        bits = tuple(eval_formula(_atom_formula(spec, i), val)
                     for i in range(n))
        feasible.add(choices.index(bits))
    return frozenset(feasible)


def _atom_formula(spec, i):
    from synthmt.logic import FAtom
    return FAtom(spec.literals[i])
