"""Cross-cutting robustness: concurrency, malformed inputs, client paths."""

import json
import threading
from pathlib import Path

import pytest

from synthmt.abstraction import booleanize, choice_bits
from synthmt.cli import main
from synthmt.errors import (ChoiceNotInReaction, SchemaError)
from synthmt.games import build_game, solve_and_extract
from synthmt.providers import (StaticProvider, machine_pairs, parse_gamma,
                               synthesize_static_provider)
from synthmt.runtime import check_trace, parse_output_trace
from synthmt.specs import parse_spec

from conftest import RUNNING_SPEC


class TestConcurrentLazyProvider:
    def test_concurrent_first_miss(self, running_bspec, letters_by_region):
        """Many threads racing the same cold pair get one memoized tree."""
        from synthmt.abstraction import bits_choice
        provider = StaticProvider(running_bspec.table)
        lx2 = letters_by_region["x>=2"]
        c4 = bits_choice("011")
        results = []
        errors = []

        def worker():
            try:
                results.append(provider.provide({"x": 9}, {}, lx2, c4))
            except Exception as exc:  # pragma: no cover
                errors.append(exc)

        threads = [threading.Thread(target=worker) for _ in range(16)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        assert all(r == {"y": 2} for r in results)
        assert provider.pairs() == [(lx2, c4)]

    def test_distinct_controller_instances_run_concurrently(
            self, running_bspec, reference_machine):
        from synthmt.runtime import init_controller, run_trace
        provider = synthesize_static_provider(
            running_bspec.table, machine_pairs(reference_machine))
        outs = []

        def worker(seed):
            ctl = init_controller(running_bspec, reference_machine, provider)
            recs = run_trace(ctl, [{"x": 4}, {"x": 1}, {"x": 2}] * 10)
            outs.append([r.v_y["y"] for r in recs])

        threads = [threading.Thread(target=worker, args=(i,))
                   for i in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len({tuple(o) for o in outs}) == 1


class TestGammaErrors:
    def test_unknown_directive(self, running_bspec):
        with pytest.raises(SchemaError):
            parse_gamma("frob e_0 110 : y > 0\n", running_bspec.table)

    def test_choice_outside_reaction(self, running_bspec,
                                     letters_by_region):
        lx2 = letters_by_region["x>=2"]
        with pytest.raises(ChoiceNotInReaction):
            parse_gamma(f"pair {lx2} 110 : y > 0\n", running_bspec.table)

    def test_z_collision(self, running_bspec):
        with pytest.raises(SchemaError):
            parse_gamma("zvar x : int = external\n", running_bspec.table)

    def test_unknown_prev_source(self, running_bspec):
        with pytest.raises(SchemaError):
            parse_gamma("zvar q : int = prev_output nope\n",
                        running_bspec.table)

    def test_comments_and_blanks_ignored(self, running_bspec):
        gamma = parse_gamma("# nothing here\n\n", running_bspec.table)
        assert gamma.z_vars == () and gamma.constraints == ()


class TestZDefaults:
    def test_configured_seed_value(self):
        from synthmt.runtime import init_controller
        spec = parse_spec("env x: int; sys y: int; property: G (y > x)")
        bspec = booleanize(spec)
        machine = solve_and_extract(build_game(bspec))
        letter = bspec.letters[0]
        cube = machine.output(machine.initial, letter)
        gamma = parse_gamma(
            f"zvar zp : int = prev_output y\n"
            f"pair {letter} {choice_bits(cube)} : y > zp\n", bspec.table)
        provider = synthesize_static_provider(
            bspec.table, machine_pairs(machine), gamma=gamma)
        ctl = init_controller(bspec, machine, provider,
                              z_defaults={"zp": 10})
        v_y, rec = ctl.step({"x": -5})
        assert rec.v_z == {"zp": 10}
        assert v_y["y"] > 10


class TestChoicelessTraceCheck:
    def test_property_checked_from_values(self, running_spec):
        # an external trace without choice bits still gets the bounded
        # property check (derived from the actual x/y values)
        good = '{"x": 4, "y": 2}\n{"x": 1, "y": 2}\n{"x": 0, "y": 2}\n'
        records = parse_output_trace(good, running_spec)
        assert check_trace(running_spec, records).ok

        # x=1 raises X(y>1); y=1 next step violates it
        bad = '{"x": 1, "y": 2}\n{"x": 4, "y": 1}\n'
        records = parse_output_trace(bad, running_spec)
        report = check_trace(running_spec, records)
        assert any(v.kind == "safety" for v in report.violations)


class TestCliPaths:
    @pytest.fixture()
    def workdir(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        (tmp_path / "running.spec").write_text(RUNNING_SPEC)
        return tmp_path

    def test_adaptive_run_via_gamma_file(self, workdir):
        spec_text = "env x: int; sys y: int; property: G (y > x)\n"
        Path("mono.spec").write_text(spec_text)
        Path("inputs.jsonl").write_text(
            "\n".join('{"x": %d}' % x for x in [3, -1, 5, 5, 0]) + "\n")
        bspec = booleanize(parse_spec(spec_text))
        machine = solve_and_extract(build_game(bspec))
        letter = bspec.letters[0]
        cube = machine.output(machine.initial, letter)
        Path("mono.gamma").write_text(
            f"zvar zp : int = prev_output y\n"
            f"pair {letter} {choice_bits(cube)} : y > zp\n")
        assert main(["run", "mono.spec", "--inputs", "inputs.jsonl",
                     "--provider", "adaptive", "--gamma", "mono.gamma",
                     "-o", "out.jsonl"]) == 0
        ys = [json.loads(l)["y"] for l in
              Path("out.jsonl").read_text().splitlines()]
        assert all(b > a for a, b in zip(ys, ys[1:]))

    def test_unreachable_server_exit_2(self, workdir):
        assert main(["--server", "http://127.0.0.1:9",
                     "abstract", "running.spec",
                     "-o", "t.json", "-b", "b.json"]) == 2

    def test_bench_adaptive_template(self, workdir):
        # greatest-y shaping on one pair; the others fall back to basic
        from synthmt.partition import compile_partitioner, partition
        spec_text = Path("running.spec").read_text()
        bspec = booleanize(parse_spec(spec_text))
        machine = solve_and_extract(build_game(bspec))
        lx2 = partition(compile_partitioner(bspec.table), {"x": 4})
        cube = machine.output(machine.initial, lx2)
        bits = choice_bits(cube)
        cube_text = " && ".join(
            f"{'' if bit else '!('}{lit}{'' if bit else ')'}"
            for bit, lit in zip(cube, ["x < 2", "w > 1", "w <= x"]))
        Path("g.gamma").write_text(
            f"pair {lx2} {bits} : forall w:int. "
            f"(x >= 2 && {cube_text} -> w <= y)\n")
        code = main(["bench", "running.spec", "--provider", "adaptive",
                     "--gamma", "g.gamma", "--steps", "30",
                     "--repeats", "1", "--seed", "4", "-o", "b.json"])
        assert code == 0
        report = json.loads(Path("b.json").read_text())
        assert report["static"]["provider_kind"] == "adaptive"
