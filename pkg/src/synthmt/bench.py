"""Benchmark harness: repeated simulations, per-component timing stats,
static-vs-dynamic comparison, divergence accounting, and CSV emission.

Benchmark specs are the running example plus a template family with k
literals over one environment and one system variable (int and real
variants): the base reactive shape plus padding literals that enlarge the
choice space without changing realizability.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .abstraction import BooleanSpec, booleanize
from .errors import SchemaError
from .games import MealyMachine, Unrealizable, build_game, import_mealy, \
    solve_and_extract
from .logic import Sort
from .providers import (AdaptiveDescription, DynamicProvider,
                        machine_pairs, parse_gamma,
                        synthesize_static_provider)
from .runtime import StepRecord, init_controller, run_trace
from .specs import parse_spec

RUNNING_EXAMPLE = """\
env x: int;
sys y: int;
property: G ((x < 2 -> X (y > 1)) && (x >= 2 -> y <= x))
"""


def running_example_spec() -> str:
    return RUNNING_EXAMPLE


def golden_inputs() -> list[dict[str, int]]:
    return [{"x": 4}, {"x": 4}, {"x": 1}, {"x": 0}, {"x": 2}]


def syn_spec(literal_count: int, theory: str | Sort = "int") -> str:
    """Template with `literal_count` literals over env x and sys y.

    The base property is the running shape; literals beyond the first
    three are padding constraints G(y > -j) that are trivially realizable
    with the base strategy but enlarge the abstraction's choice space.
    """
    if literal_count < 3:
        raise SchemaError("the template needs at least 3 literals")
    sort = theory.value if isinstance(theory, Sort) else str(theory)
    if sort not in ("int", "real"):
        raise SchemaError(f"unknown theory {theory!r}")
    pads = [f"(y > -{j})" for j in range(3, literal_count)]
    parts = ["(x < 2 -> X (y > 1))", "(x >= 2 -> y <= x)"] + pads
    return (f"env x: {sort};\n"
            f"sys y: {sort};\n"
            f"property: G ({' && '.join(parts)})\n")


def gen_inputs(spec_text: str, steps: int, seed: int) -> list[dict]:
    """Seeded random environment inputs in [-50, 50] (halves for reals)."""
    spec = parse_spec(spec_text)
    rng = random.Random(seed)
    out = []
    for _ in range(steps):
        item = {}
        for name, sort in spec.env_vars:
            if sort is Sort.INT:
                item[name] = rng.randint(-50, 50)
            else:
                item[name] = Fraction(rng.randint(-100, 100), 2)
        out.append(item)
    return out


# ---------------------------------------------------------------------------
# Pipeline assembly


def build_pipeline(spec_text: str, mealy_text: str | None = None
                   ) -> tuple[BooleanSpec, MealyMachine]:
    spec = parse_spec(spec_text)
    bspec = booleanize(spec)
    if mealy_text is not None:
        machine = import_mealy(mealy_text, bspec)
    else:
        result = solve_and_extract(build_game(bspec))
        if isinstance(result, Unrealizable):
            raise SchemaError(f"specification is unrealizable; witness "
                              f"{list(result.witness)}")
        machine = result
    return bspec, machine


def make_provider(bspec: BooleanSpec, machine: MealyMachine, kind: str,
                  gamma_text: str | None = None, seed: int = 0,
                  randomized: bool = False):
    if kind == "dynamic":
        return DynamicProvider(bspec.table, randomized=randomized, seed=seed)
    gamma: AdaptiveDescription | None = None
    if kind == "adaptive":
        if gamma_text is None:
            raise SchemaError("adaptive provider needs a gamma description")
        gamma = parse_gamma(gamma_text, bspec.table)
    elif kind != "static":
        raise SchemaError(f"unknown provider kind {kind!r}")
    return synthesize_static_provider(bspec.table, machine_pairs(machine),
                                      gamma=gamma, lazy=True)


# ---------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class ComponentStats:
    mean_us: float
    p50_us: float
    p95_us: float
    p99_us: float

    @staticmethod
    def from_samples(samples: Sequence[float]) -> "ComponentStats":
        if not samples:
            return ComponentStats(0.0, 0.0, 0.0, 0.0)
        data = sorted(samples)

        def pct(p: float) -> float:
            i = min(len(data) - 1, int(p * len(data)))
            return data[i]

        return ComponentStats(sum(data) / len(data), pct(0.50), pct(0.95),
                              pct(0.99))

    def to_json(self) -> dict:
        return {"mean_us": self.mean_us, "p50_us": self.p50_us,
                "p95_us": self.p95_us, "p99_us": self.p99_us}


@dataclass(frozen=True)
class BenchReport:
    provider_kind: str
    steps: int
    repeats: int
    seed: int
    reference: str
    partition: ComponentStats
    machine: ComponentStats
    provider: ComponentStats
    divergence_pct: float

    def to_json(self) -> dict:
        return {"provider_kind": self.provider_kind, "steps": self.steps,
                "repeats": self.repeats, "seed": self.seed,
                "reference": self.reference,
                "partition": self.partition.to_json(),
                "machine": self.machine.to_json(),
                "provider": self.provider.to_json(),
                "divergence_pct": self.divergence_pct}


def _run_once(bspec: BooleanSpec, machine: MealyMachine, provider,
              inputs: Sequence[Mapping]) -> list[StepRecord]:
    ctl = init_controller(bspec, machine, provider)
    return run_trace(ctl, inputs)


def _outputs(records: Sequence[StepRecord]) -> list[tuple]:
    return [tuple(sorted((k, v) for k, v in rec.v_y.items()))
            for rec in records]


def bench_compare(spec_text: str, inputs: Sequence[Mapping], repeats: int,
                  seed: int, gamma_text: str | None = None,
                  static_kind: str = "static",
                  mealy_text: str | None = None
                  ) -> tuple[BenchReport, BenchReport, str]:
    """Run the static(/adaptive) and dynamic pipelines on identical inputs.

    The static run is the divergence reference: static repeats must match
    it exactly; the dynamic side runs in seeded randomized mode, so its
    divergence is reproducible for a fixed seed.  The CSV has one row per
    step per repeat per provider: step,component,micros,provider_kind,
    seed,diverged.
    """
    bspec, machine = build_pipeline(spec_text, mealy_text)
    static_provider = make_provider(bspec, machine, static_kind, gamma_text)
    reference = _outputs(_run_once(bspec, machine, static_provider, inputs))
    ref_name = f"{static_kind}-reference"

    csv_lines = ["step,component,micros,provider_kind,seed,diverged"]

    def run_side(kind: str, provider_factory) -> BenchReport:
        part, mach, prov = [], [], []
        diverged = 0
        for r in range(repeats):
            provider = provider_factory(r)
            records = _run_once(bspec, machine, provider, inputs)
            outs = _outputs(records)
            for rec, out, ref in zip(records, outs, reference):
                part.append(rec.partition_us)
                mach.append(rec.machine_us)
                prov.append(rec.provide_us)
                d = 0 if out == ref else 1
                diverged += d
                csv_lines.append(f"{rec.index},provider,{rec.provide_us:.3f},"
                                 f"{kind},{seed},{d}")
        total = repeats * len(inputs)
        return BenchReport(kind, len(inputs), repeats, seed, ref_name,
                           ComponentStats.from_samples(part),
                           ComponentStats.from_samples(mach),
                           ComponentStats.from_samples(prov),
                           100.0 * diverged / total if total else 0.0)

    static_report = run_side(static_kind, lambda r: static_provider)
    dynamic_report = run_side(
        "dynamic",
        lambda r: DynamicProvider(bspec.table, randomized=True,
                                  seed=seed * 1_000_003 + r))
    return static_report, dynamic_report, "\n".join(csv_lines) + "\n"
