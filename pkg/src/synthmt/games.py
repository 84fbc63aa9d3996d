"""Safety-game synthesis of the Boolean Mealy controller, plus artifact
import/export for externally synthesized machines.

The game works on the GX-safety fragment: game states are the pending
obligation sets raised by Next-guarded propositions; a move is legal when
the emitted cube is one of the letter's reaction choices, discharges the
pending obligations, and satisfies every constraint with the promised
next-step obligations substituted for the Next subformulas.  Soundness of
the subset-of-obligations state space needs Next to occur positively,
which classify_fragment enforces.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator

from .errors import ExtraViolation, FragmentError, SchemaError
from .specs import (Fragment, LAnd, LFalse, LGlobally, LLit, LNext, LNot,
                    LOr, LTrue, LtlNode, classify_fragment, prop_names)
from .abstraction import BooleanSpec, Choice, bits_choice, choice_bits

State = tuple[frozenset[int], bool]  # (pending obligations, initial phase)


@dataclass(frozen=True)
class MealyMachine:
    """Boolean controller rho_B over one-hot letter inputs and s-outputs."""

    letters: tuple[str, ...]
    props: tuple[str, ...]
    states: tuple[str, ...]
    initial: str
    transitions: tuple[tuple[str, str, str, Choice], ...]  # (from, letter, to, out)

    def __post_init__(self):
        object.__setattr__(self, "_delta",
                           {(s, l): (t, o) for s, l, t, o in self.transitions})

    def step(self, state: str, letter: str) -> tuple[str, Choice]:
        key = (state, letter)
        if key not in self._delta:
            raise SchemaError(f"machine has no transition from {state!r} "
                              f"on {letter!r}")
        nxt, out = self._delta[key]
        return nxt, out

    def output(self, state: str, letter: str) -> Choice:
        return self.step(state, letter)[1]


@dataclass(frozen=True)
class Unrealizable:
    """A finite environment letter sequence forcing the system to lose."""

    witness: tuple[str, ...]


@dataclass
class SafetyGame:
    bspec: BooleanSpec
    xprops: tuple[int, ...]                 # propositions under Next
    global_constraints: tuple[LtlNode, ...]
    initial_constraints: tuple[LtlNode, ...]

    @property
    def initial_state(self) -> State:
        return (frozenset(), bool(self.initial_constraints))

    def states(self) -> list[State]:
        subsets = []
        k = len(self.xprops)
        for mask in range(2 ** k):
            subsets.append(frozenset(p for i, p in enumerate(self.xprops)
                                     if (mask >> i) & 1))
        out = [(s, False) for s in subsets]
        if self.initial_constraints:
            out.append((frozenset(), True))
        return out

    def promises(self) -> list[frozenset[int]]:
        k = len(self.xprops)
        return [frozenset(p for i, p in enumerate(self.xprops) if (mask >> i) & 1)
                for mask in range(2 ** k)]

    def legal_moves(self, state: State, letter: str
                    ) -> Iterator[tuple[Choice, frozenset[int]]]:
        """Legal (cube, promise) pairs in deterministic order:
        cubes lexicographically, promises smallest-first."""
        pending, initial = state
        for cube in sorted(self.bspec.reaction(letter)):
            if not all(cube[i] for i in pending):
                continue
            for promise in self.promises():
                ok = all(eval_step(b, cube, promise)
                         for b in self.global_constraints)
                if ok and initial:
                    ok = all(eval_step(b, cube, promise)
                             for b in self.initial_constraints)
                if ok:
                    yield cube, promise


def eval_step(b: LtlNode, cube: Choice, promise: frozenset[int]) -> bool:
    """One-step truth of a GX-safety constraint: literals from the cube,
    Next-guarded literals from the promised obligations."""
    if isinstance(b, LTrue):
        return True
    if isinstance(b, LFalse):
        return False
    if isinstance(b, LLit):
        return cube[b.index]
    if isinstance(b, LNot):
        return not eval_step(b.arg, cube, promise)
    if isinstance(b, LAnd):
        return all(eval_step(a, cube, promise) for a in b.args)
    if isinstance(b, LOr):
        return any(eval_step(a, cube, promise) for a in b.args)
    if isinstance(b, LNext):
        return b.arg.index in promise
    raise FragmentError(f"not a GX-safety step constraint: {b!r}")


def build_game(bspec: BooleanSpec) -> SafetyGame:
    """Obligation game for a GX-safety Boolean spec (FragmentError otherwise)."""
    prop = bspec.phi_direct
    if classify_fragment(prop) is not Fragment.GX_SAFETY:
        raise FragmentError("property is outside the GX-safety fragment; "
                            "import an externally synthesized controller")
    conjuncts = prop.args if isinstance(prop, LAnd) else (prop,)
    global_bs: list[LtlNode] = []
    init_bs: list[LtlNode] = []
    for c in conjuncts:
        if isinstance(c, LGlobally):
            global_bs.append(c.arg)
        elif not isinstance(c, LTrue):
            init_bs.append(c)
    xprops: list[int] = []

    def collect(n: LtlNode) -> None:
        if isinstance(n, LNext):
            if n.arg.index not in xprops:
                xprops.append(n.arg.index)
        elif isinstance(n, LNot):
            collect(n.arg)
        elif isinstance(n, (LAnd, LOr)):
            for a in n.args:
                collect(a)

    for b in global_bs + init_bs:
        collect(b)
    return SafetyGame(bspec, tuple(xprops), tuple(global_bs), tuple(init_bs))


def solve_and_extract(game: SafetyGame) -> MealyMachine | Unrealizable:
    """Greatest-fixpoint safety solving plus deterministic extraction.

    Extraction picks, per (state, letter), the lexicographically smallest
    winning output cube (with the smallest winning promise as tie-break).
    On unrealizability, returns a letter sequence whose replay against the
    greedy legal system strategy reaches a position with no legal move.
    """
    letters = game.bspec.letters
    states = game.states()
    winning = set(states)
    removed_round: dict[State, int] = {}
    rnd = 0
    while True:
        dropped = []
        for q in list(winning):
            for letter in letters:
                if not any((p, False) in winning
                           for _c, p in game.legal_moves(q, letter)):
                    dropped.append(q)
                    break
        if not dropped:
            break
        for q in dropped:
            winning.discard(q)
            removed_round[q] = rnd
        rnd += 1

    q0 = game.initial_state
    if q0 not in winning:
        return Unrealizable(_loss_witness(game, q0, removed_round))

    # breadth-first extraction with stable state naming
    name: dict[State, str] = {q0: "q0"}
    order: list[State] = [q0]
    transitions: list[tuple[str, str, str, Choice]] = []
    i = 0
    while i < len(order):
        q = order[i]
        i += 1
        for letter in letters:
            best = None
            for cube, promise in game.legal_moves(q, letter):
                if (promise, False) in winning:
                    best = (cube, promise)
                    break  # legal_moves order is the tie-break order
            if best is None:  # pragma: no cover - contradicts the fixpoint
                raise FragmentError("winning state lost all moves")
            cube, promise = best
            succ = (promise, False)
            if succ not in name:
                name[succ] = f"q{len(order)}"
                order.append(succ)
            transitions.append((name[q], letter, name[succ], cube))
    return MealyMachine(tuple(letters), tuple(prop_names(game.bspec.spec)),
                        tuple(name[q] for q in order), "q0",
                        tuple(transitions))


def _loss_witness(game: SafetyGame, q0: State,
                  removed_round: dict[State, int]) -> tuple[str, ...]:
    """Letters that defeat the greedy legal system strategy from q0."""
    seq: list[str] = []
    q = q0
    for _ in range(len(removed_round) + 1):
        rank = removed_round[q]
        chosen = None
        never = float("inf")  # still-winning successors never qualify
        for letter in game.bspec.letters:
            moves = list(game.legal_moves(q, letter))
            if all(removed_round.get((p, False), never) < rank for _c, p in moves):
                chosen = (letter, moves)
                break
        assert chosen is not None, "fixpoint removal must name a letter"
        letter, moves = chosen
        seq.append(letter)
        if not moves:
            return tuple(seq)
        _cube, promise = moves[0]  # greedy system reply
        q = (promise, False)
    raise AssertionError("witness walk did not terminate")  # pragma: no cover


def replay(machine: MealyMachine, letters: list[str]) -> list[Choice]:
    """Outputs of the machine along a letter sequence (for replay checks)."""
    out = []
    q = machine.initial
    for letter in letters:
        q, cube = machine.step(q, letter)
        out.append(cube)
    return out


# ---------------------------------------------------------------------------
# Artifacts


def export_mealy(m: MealyMachine) -> str:
    data = {
        "letters": list(m.letters),
        "props": list(m.props),
        "states": list(m.states),
        "initial": m.initial,
        "transitions": [{"from": s, "letter": l, "to": t,
                         "output": choice_bits(o)}
                        for s, l, t, o in m.transitions],
    }
    return json.dumps(data, indent=2, sort_keys=True)


def import_mealy(text: str, bspec: BooleanSpec) -> MealyMachine:
    """Parse and validate a machine artifact against the Boolean spec.

    Rejects letter/proposition mismatches (SchemaError) and any output
    cube outside the letter's reaction (ExtraViolation).
    """
    return import_mealy_for_table(text, bspec.table)


def import_mealy_for_table(text, table) -> MealyMachine:
    """Validate a machine artifact against a reaction table alone (the
    propositions are the table's s_0..s_{n-1})."""
    exp_letters = table.letters
    exp_props = [f"s_{i}" for i in range(len(table.literals))]
    reactions = {e.letter: e.choices for e in table.entries}
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"machine artifact is not valid JSON: {exc}") from exc
    try:
        letters = tuple(data["letters"])
        props = tuple(data["props"])
        states = tuple(data["states"])
        initial = data["initial"]
        raw = [(t["from"], t["letter"], t["to"], bits_choice(t["output"]))
               for t in data["transitions"]]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed machine artifact: {exc}") from exc

    if set(letters) != set(exp_letters):
        raise SchemaError("machine letters do not match the reaction table")
    if list(props) != exp_props:
        raise SchemaError("machine propositions do not match the table")
    if initial not in states:
        raise SchemaError(f"initial state {initial!r} is not declared")
    seen = set()
    for s, l, t, o in raw:
        if s not in states or t not in states:
            raise SchemaError(f"transition references unknown state {s!r}/{t!r}")
        if l not in letters:
            raise SchemaError(f"transition references unknown letter {l!r}")
        if len(o) != len(props):
            raise SchemaError("output cube width does not match propositions")
        if (s, l) in seen:
            raise SchemaError(f"duplicate transition from {s!r} on {l!r}")
        seen.add((s, l))
        if o not in reactions[l]:
            raise ExtraViolation(s, l)
    for s in states:
        for l in letters:
            if (s, l) not in seen:
                raise SchemaError(f"machine is not total: no transition "
                                  f"from {s!r} on {l!r}")
    return MealyMachine(tuple(exp_letters), props, states, initial, tuple(raw))
