"""Safety-game construction, solving, extraction, and machine artifacts."""

import itertools
import json

import pytest

from synthmt.abstraction import booleanize
from synthmt.errors import ExtraViolation, FragmentError, SchemaError
from synthmt.games import (MealyMachine, Unrealizable, build_game,
                           eval_step, export_mealy, import_mealy, replay,
                           solve_and_extract)
from synthmt.specs import parse_spec


def machine_for(text):
    bspec = booleanize(parse_spec(text))
    result = solve_and_extract(build_game(bspec))
    return bspec, result


class TestBuildGame:
    def test_running_example_two_obligation_states(self, running_bspec):
        game = build_game(running_bspec)
        # one Next-guarded proposition: pending {s_1} or nothing
        assert game.xprops == (1,)
        assert len(game.states()) == 2

    def test_no_next_single_state(self):
        bspec = booleanize(parse_spec(
            "env x: int; sys y: int; property: G (y > x)"))
        game = build_game(bspec)
        assert len(game.states()) == 1

    def test_contradictory_spec_no_moves(self):
        bspec = booleanize(parse_spec(
            "env x: int; sys y: int; property: G (y > x && y <= x)"))
        game = build_game(bspec)
        q0 = game.initial_state
        for letter in bspec.letters:
            assert not list(game.legal_moves(q0, letter))

    def test_general_fragment_rejected(self):
        bspec = booleanize(parse_spec(
            "env x: int; sys y: int; property: F (y > x)"))
        with pytest.raises(FragmentError):
            build_game(bspec)


class TestSolve:
    def test_running_example_realizable(self, running_bspec):
        result = solve_and_extract(build_game(running_bspec))
        assert isinstance(result, MealyMachine)

    def test_unrealizable_with_short_witness(self):
        bspec, result = machine_for(
            "env x: int; sys y: int; property: G (y > x && y <= x)")
        assert isinstance(result, Unrealizable)
        assert len(result.witness) == 1
        # replaying the witness: no legal system move at that letter
        game = build_game(bspec)
        assert not list(game.legal_moves(game.initial_state,
                                         result.witness[0]))

    def test_top_level_constraint_binds_step_zero_only(self):
        from synthmt.providers import (machine_pairs,
                                       synthesize_static_provider)
        from synthmt.runtime import check_trace, init_controller, run_trace
        spec = parse_spec("env x: int; sys y: int; "
                          "property: (y > x) && G (y > 0)")
        bspec = booleanize(spec)
        game = build_game(bspec)
        # one extra initial-phase state beyond the obligation valuations
        assert game.initial_state == (frozenset(), True)
        machine = solve_and_extract(game)
        assert isinstance(machine, MealyMachine)
        provider = synthesize_static_provider(bspec.table,
                                              machine_pairs(machine))
        ctl = init_controller(bspec, machine, provider)
        records = run_trace(ctl, [{"x": 5}, {"x": -3}, {"x": 0}])
        assert records[0].v_y["y"] > 5  # initial constraint honored
        assert check_trace(spec, records).ok

    def test_contradictory_initial_constraint_unrealizable(self):
        spec = parse_spec("env x: int; sys y: int; "
                          "property: (y > x && y <= x) && G (y > 0)")
        result = solve_and_extract(build_game(booleanize(spec)))
        assert isinstance(result, Unrealizable)
        assert len(result.witness) == 1

    def test_extraction_deterministic(self, running_bspec):
        a = solve_and_extract(build_game(running_bspec))
        b = solve_and_extract(build_game(running_bspec))
        assert a == b

    def test_replay_never_violates(self, running_bspec):
        """Exhaustive bounded unrolling: every letter sequence up to
        length 6, each step's constraints evaluated with Next resolved by
        the following step's cube (optimistically at the trace end)."""
        machine = solve_and_extract(build_game(running_bspec))
        game = build_game(running_bspec)
        letters = running_bspec.letters
        for n in range(1, 7):
            for seq in itertools.product(letters, repeat=n):
                outs = replay(machine, list(seq))
                for t, (letter, cube) in enumerate(zip(seq, outs)):
                    assert cube in running_bspec.reaction(letter)
                    if t + 1 < n:
                        promise = frozenset(
                            i for i, bit in enumerate(outs[t + 1]) if bit)
                        for b in game.global_constraints:
                            assert eval_step(b, cube, promise)
                    else:
                        for b in game.global_constraints:
                            assert any(eval_step(b, cube, frozenset(s))
                                       for s in _subsets(game.xprops))

    def test_replay_obligations_via_trace_monitor(self, running_bspec):
        """Stronger end-to-end check: bounded unrolling of the property
        over all letter sequences, using literal-consistent valuations."""
        machine = solve_and_extract(build_game(running_bspec))
        letters = running_bspec.letters
        for n in range(1, 7):
            for seq in itertools.product(letters, repeat=n):
                outs = replay(machine, list(seq))
                # phi'': (s0 -> X s1) && (!s0 -> s2) at every step
                for t, cube in enumerate(outs):
                    s0, s1, s2 = cube
                    if not s0:
                        assert s2
                    if s0 and t + 1 < n:
                        assert outs[t + 1][1]


def _subsets(props):
    out = [set()]
    for p in props:
        out += [s | {p} for s in out]
    return out


class TestArtifacts:
    def test_export_import_roundtrip(self, running_bspec):
        machine = solve_and_extract(build_game(running_bspec))
        text = export_mealy(machine)
        again = import_mealy(text, running_bspec)
        assert export_mealy(again) == text

    def test_reference_machine_imports(self, reference_machine, letters_by_region):
        assert reference_machine.output("q0", letters_by_region["x>=2"]) == \
            (False, True, True)

    def test_extra_violation_rejected(self, running_bspec, letters_by_region):
        # answering the (x>=2) letter with c_1 violates phi_extra:
        # c_1 requires x<2, excluded from that reaction
        lx2 = letters_by_region["x>=2"]
        others = [l for l in running_bspec.letters if l != lx2]
        text = json.dumps({
            "letters": list(running_bspec.letters),
            "props": ["s_0", "s_1", "s_2"],
            "states": ["q0"], "initial": "q0",
            "transitions": [
                {"from": "q0", "letter": lx2, "to": "q0", "output": "110"},
            ] + [{"from": "q0", "letter": l, "to": "q0", "output": "110"}
                 for l in others]})
        with pytest.raises(ExtraViolation):
            import_mealy(text, running_bspec)

    def test_partial_machine_rejected(self, running_bspec):
        text = json.dumps({
            "letters": list(running_bspec.letters),
            "props": ["s_0", "s_1", "s_2"],
            "states": ["q0"], "initial": "q0",
            "transitions": []})
        with pytest.raises(SchemaError):
            import_mealy(text, running_bspec)

    def test_wrong_letters_rejected(self, running_bspec):
        text = json.dumps({
            "letters": ["a", "b"], "props": ["s_0", "s_1", "s_2"],
            "states": ["q0"], "initial": "q0", "transitions": []})
        with pytest.raises(SchemaError):
            import_mealy(text, running_bspec)
