"""The combined controller: partitioner + Boolean machine + provider,
with step semantics, trace execution, literal-agreement checking, and
per-component timing.

Adaptive z variables are wired per binding: external values arrive with
the step input, prev_input/prev_output bindings forward the previous
step's values (seeded with 0 before the first step).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .abstraction import BooleanSpec, Choice, bits_choice, choice_bits
from .errors import MissingVariable, SchemaError, SchemaMismatch
from .games import MealyMachine, eval_step
from .logic import FAtom, Rat, eval_formula
from .parsing import frac_from_json, frac_to_json
from .partition import CompiledPartitioner, compile_partitioner, partition
from .providers import DynamicProvider, StaticProvider
from .specs import (Fragment, LAnd, LGlobally, LNext, LNot, LOr,
                    LTrue, LtlNode, LtlTSpec, classify_fragment)


@dataclass
class StepRecord:
    index: int
    v_x: dict[str, Fraction]
    letter: str
    choice: Choice
    v_y: dict[str, Fraction]
    v_z: dict[str, Fraction]
    partition_us: float
    machine_us: float
    provide_us: float


class TheoryController:
    """rho_T = C(alpha, rho_B, beta): mutable current state plus metrics.

    A controller instance is single-threaded; run distinct instances for
    concurrent simulations.
    """

    def __init__(self, bspec: BooleanSpec, machine: MealyMachine,
                 provider: StaticProvider | DynamicProvider,
                 z_defaults: Mapping[str, Rat] | None = None):
        _validate_components(bspec, machine, provider)
        self.bspec = bspec
        self.machine = machine
        self.provider = provider
        self.partitioner: CompiledPartitioner = compile_partitioner(bspec.table)
        self.state = machine.initial
        self.index = 0
        gamma = getattr(provider, "gamma", None)
        self.gamma = gamma
        self.z_state: dict[str, Fraction] = {}
        if gamma is not None:
            defaults = {k: Fraction(v) for k, v in (z_defaults or {}).items()}
            for name, _sort in gamma.z_vars:
                self.z_state[name] = defaults.get(name, Fraction(0))
        self.records: list[StepRecord] = []

    def step(self, v_x: Mapping[str, Rat],
             external_z: Mapping[str, Rat] | None = None
             ) -> tuple[dict[str, Fraction], StepRecord]:
        """One reaction: letter = alpha(v_x); choice = o(q, letter);
        v_y = beta(v_x[, v_z], choice); q advances by delta."""
        vx = {n: Fraction(v) for n, v in v_x.items()}
        v_z: dict[str, Fraction] = {}
        if self.gamma is not None:
            for name, _sort in self.gamma.z_vars:
                binding = self.gamma.binding(name)
                if binding.kind == "external":
                    if external_z is None or name not in external_z:
                        raise MissingVariable(name)
                    v_z[name] = Fraction(external_z[name])
                else:
                    v_z[name] = self.z_state[name]

        t0 = time.perf_counter_ns()
        letter = partition(self.partitioner, vx)
        t1 = time.perf_counter_ns()
        nxt, choice = self.machine.step(self.state, letter)
        t2 = time.perf_counter_ns()
        if isinstance(self.provider, DynamicProvider):
            v_y = self.provider.provide(vx, choice)
        else:
            v_y = self.provider.provide(vx, v_z, letter, choice)
        t3 = time.perf_counter_ns()

        self.state = nxt
        if self.gamma is not None:
            for name, _sort in self.gamma.z_vars:
                binding = self.gamma.binding(name)
                if binding.kind == "prev_input":
                    self.z_state[name] = vx[binding.source]
                elif binding.kind == "prev_output":
                    self.z_state[name] = v_y[binding.source]
        rec = StepRecord(self.index, vx, letter, choice, dict(v_y), v_z,
                         (t1 - t0) / 1000.0, (t2 - t1) / 1000.0,
                         (t3 - t2) / 1000.0)
        self.records.append(rec)
        self.index += 1
        return v_y, rec


def _validate_components(bspec: BooleanSpec, machine: MealyMachine,
                         provider) -> None:
    from .specs import prop_names
    if set(machine.letters) != set(bspec.letters):
        raise SchemaMismatch("machine letters do not match the reaction table")
    if list(machine.props) != prop_names(bspec.spec):
        raise SchemaMismatch("machine propositions do not match the spec")
    for s, letter, _t, out in machine.transitions:
        if out not in bspec.reaction(letter):
            raise SchemaMismatch(f"machine output at {s!r}/{letter!r} is not "
                                 "a choice of that letter's reaction")
    table = getattr(provider, "table", None)
    if table is not None and table.literals != bspec.table.literals:
        raise SchemaMismatch("provider was built from a different table")


def init_controller(bspec: BooleanSpec, machine: MealyMachine,
                    provider, z_defaults: Mapping[str, Rat] | None = None
                    ) -> TheoryController:
    return TheoryController(bspec, machine, provider, z_defaults)


def run_trace(ctl: TheoryController,
              inputs: Sequence[Mapping[str, Rat]]) -> list[StepRecord]:
    """Run each input valuation (env vars, plus any external z values)."""
    env_names = {n for n, _ in ctl.bspec.spec.env_vars}
    out: list[StepRecord] = []
    for item in inputs:
        vx = {n: v for n, v in item.items() if n in env_names}
        vz = {n: v for n, v in item.items() if n not in env_names}
        _y, rec = ctl.step(vx, vz or None)
        out.append(rec)
    return out


# ---------------------------------------------------------------------------
# Trace checking


@dataclass(frozen=True)
class TraceViolation:
    index: int
    kind: str  # literal-agreement | safety
    detail: str


@dataclass
class TraceReport:
    steps: int
    violations: list[TraceViolation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"steps": self.steps, "ok": self.ok,
                "violations": [{"index": v.index, "kind": v.kind,
                                "detail": v.detail} for v in self.violations]}

    def render_text(self) -> str:
        lines = [f"checked {self.steps} steps: "
                 f"{'OK' if self.ok else f'{len(self.violations)} violation(s)'}"]
        for v in self.violations:
            lines.append(f"  step {v.index}: [{v.kind}] {v.detail}")
        return "\n".join(lines)


def _x_props(b: LtlNode, acc: set[int]) -> None:
    if isinstance(b, LNext):
        acc.add(b.arg.index)
    elif isinstance(b, LNot):
        _x_props(b.arg, acc)
    elif isinstance(b, (LAnd, LOr)):
        for a in b.args:
            _x_props(a, acc)


def check_trace(spec: LtlTSpec, records: Sequence[StepRecord]) -> TraceReport:
    """Literal agreement per step, plus bounded-trace satisfaction of the
    property for GX-safety specs (current constraints each step, Next
    obligations discharged at the following step; obligations raised by
    the final step are optimistically satisfiable)."""
    report = TraceReport(steps=len(records))
    n = len(spec.literals)

    actual_bits: list[Choice] = []
    for rec in records:
        val = dict(rec.v_x)
        val.update(rec.v_y)
        bits = tuple(eval_formula(FAtom(atom), val) for atom in spec.literals)
        actual_bits.append(bits)
        if rec.choice is not None:
            for i in range(n):
                if bits[i] != rec.choice[i]:
                    report.violations.append(TraceViolation(
                        rec.index, "literal-agreement",
                        f"literal {i} evaluates {bits[i]} but choice bit "
                        f"is {rec.choice[i]}"))

    if classify_fragment(spec.property) is not Fragment.GX_SAFETY:
        return report

    prop = spec.property
    conjuncts = prop.args if isinstance(prop, LAnd) else (prop,)
    global_bs = [c.arg for c in conjuncts if isinstance(c, LGlobally)]
    init_bs = [c for c in conjuncts
               if not isinstance(c, (LGlobally, LTrue))]

    def holds(b: LtlNode, t: int) -> bool:
        cube = actual_bits[t]
        if t + 1 < len(actual_bits):
            promise = frozenset(i for i in range(n) if actual_bits[t + 1][i])
            return eval_step(b, cube, promise)
        xs: set[int] = set()
        _x_props(b, xs)
        xs_list = sorted(xs)
        for mask in range(2 ** len(xs_list)):
            promise = frozenset(p for i, p in enumerate(xs_list)
                                if (mask >> i) & 1)
            if eval_step(b, cube, promise):
                return True
        return False

    for t in range(len(records)):
        for b in global_bs:
            if not holds(b, t):
                report.violations.append(TraceViolation(
                    t, "safety", "a globally-constraint fails at this step"))
        if t == 0:
            for b in init_bs:
                if not holds(b, 0):
                    report.violations.append(TraceViolation(
                        0, "safety", "an initial constraint fails"))
    return report


# ---------------------------------------------------------------------------
# Trace files (one JSON record per line)


def parse_input_trace(text: str) -> list[dict[str, Fraction]]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"trace line {lineno} is not JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise SchemaError(f"trace line {lineno} is not an object")
        out.append({k: frac_from_json(v) for k, v in raw.items()})
    return out


def render_output_trace(records: Sequence[StepRecord]) -> str:
    lines = []
    for rec in records:
        obj: dict = {}
        for k, v in rec.v_x.items():
            obj[k] = frac_to_json(v)
        for k, v in rec.v_z.items():
            obj[k] = frac_to_json(v)
        for k, v in rec.v_y.items():
            obj[k] = frac_to_json(v)
        obj["letter"] = rec.letter
        obj["choice"] = choice_bits(rec.choice)
        lines.append(json.dumps(obj, sort_keys=True))
    return "\n".join(lines) + "\n"


def parse_output_trace(text: str, spec: LtlTSpec) -> list[StepRecord]:
    """Reconstruct records from an output trace file for re-checking."""
    env = {n for n, _ in spec.env_vars}
    sys_ = {n for n, _ in spec.sys_vars}
    records = []
    for idx, line in enumerate(t for t in text.splitlines() if t.strip()):
        raw = json.loads(line)
        v_x = {k: frac_from_json(v) for k, v in raw.items() if k in env}
        v_y = {k: frac_from_json(v) for k, v in raw.items() if k in sys_}
        v_z = {k: frac_from_json(v) for k, v in raw.items()
               if k not in env and k not in sys_ and k not in ("letter", "choice")}
        choice = bits_choice(raw["choice"]) if "choice" in raw else None
        records.append(StepRecord(idx, v_x, raw.get("letter", ""), choice,
                                  v_y, v_z, 0.0, 0.0, 0.0))
    return records
