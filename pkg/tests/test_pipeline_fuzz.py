"""Randomized whole-pipeline property: random GX-safety specs either
synthesize into controllers whose traces check clean (static and dynamic
providers) or report unrealizability with a witness that defeats the
greedy legal strategy."""

import random
from fractions import Fraction

from synthmt.abstraction import booleanize
from synthmt.errors import ChoiceBudgetExceeded
from synthmt.games import Unrealizable, build_game, solve_and_extract
from synthmt.providers import (DynamicProvider, machine_pairs,
                               synthesize_static_provider)
from synthmt.runtime import check_trace, init_controller, run_trace
from synthmt.specs import Fragment, classify_fragment, parse_spec


def _rand_atom(rng):
    a = rng.choice([0, 1, 1, 1])
    b = rng.choice([-1, 1, 1, 0])
    if a == 0 and b == 0:
        b = 1
    c = rng.randint(-4, 4)
    lhs = []
    if a:
        lhs.append("x")
    if b:
        lhs.append("- y" if b < 0 else "+ y" if lhs else "y")
    expr = " ".join(lhs)
    rel = rng.choice(["<", "<=", ">=", ">", "="])
    return f"({expr} {rel} {c})"


def _rand_spec(rng, sort):
    atoms = [_rand_atom(rng) for _ in range(rng.randint(2, 4))]
    parts = []
    for _ in range(rng.randint(1, 3)):
        kind = rng.random()
        a, b = rng.choice(atoms), rng.choice(atoms)
        if kind < 0.4:
            parts.append(f"({a} -> X {b})")
        elif kind < 0.7:
            parts.append(f"({a} -> {b})")
        else:
            parts.append(f"({a} || {b})")
    return (f"env x: {sort}; sys y: {sort}; "
            f"property: G ({' && '.join(parts)})")


def test_random_specs_synthesize_or_refute():
    rng = random.Random(2025)
    realizable = unrealizable = 0
    for _trial in range(40):
        sort = rng.choice(["int", "real"])
        text = _rand_spec(rng, sort)
        spec = parse_spec(text)
        if classify_fragment(spec.property) is not Fragment.GX_SAFETY:
            continue
        try:
            bspec = booleanize(spec)
        except ChoiceBudgetExceeded:
            continue
        game = build_game(bspec)
        result = solve_and_extract(game)

        if isinstance(result, Unrealizable):
            unrealizable += 1
            # the witness must drive the greedy legal strategy to a dead end
            state = game.initial_state
            for i, letter in enumerate(result.witness):
                moves = list(game.legal_moves(state, letter))
                if not moves:
                    break
                state = (moves[0][1], False)
            else:
                raise AssertionError(f"witness not dead-ending for {text}")
            assert i == len(result.witness) - 1
            continue

        realizable += 1
        provider = synthesize_static_provider(bspec.table,
                                              machine_pairs(result))
        inputs = []
        for _ in range(40):
            inputs.append({"x": rng.randint(-20, 20) if sort == "int"
                           else Fraction(rng.randint(-40, 40), 2)})
        ctl = init_controller(bspec, result, provider)
        report = check_trace(spec, run_trace(ctl, inputs))
        assert report.ok, (text, report.render_text())

        ctl2 = init_controller(bspec, result, DynamicProvider(bspec.table))
        report2 = check_trace(spec, run_trace(ctl2, inputs[:10]))
        assert report2.ok, (text, report2.render_text())
    assert realizable >= 10
    assert unrealizable >= 2
