"""Static, dynamic, and adaptive providers; constraint builders; C emission."""

import random
import shutil
import subprocess
import tempfile
from fractions import Fraction
from pathlib import Path

import pytest

from synthmt.abstraction import bits_choice, booleanize, choice_bits
from synthmt.errors import (AdaptiveInvalid, ChoiceNotInReaction,
                            FormulaNotValid, InfeasibleChoice,
                            RealNotEmittable)
from synthmt.logic import FQuant, Sort, eval_formula, f_and
from synthmt.parsing import parse_formula
from synthmt.providers import (DynamicProvider, StaticProvider,
                               build_basic_formula, build_closest_constraint,
                               build_extremal_constraint, cube_formula,
                               emit_source, parse_gamma, provide_dynamic,
                               provider_from_text, provider_to_text,
                               render_gamma, synthesize_static_provider)
from synthmt.solver import check_validity, synthesize_skolem
from synthmt.specs import parse_spec

C4 = bits_choice("011")
C1 = bits_choice("110")


@pytest.fixture(scope="module")
def table(running_bspec_module):
    return running_bspec_module.table


@pytest.fixture(scope="module")
def running_bspec_module():
    from conftest import RUNNING_SPEC
    return booleanize(parse_spec(RUNNING_SPEC))


def letter_of(table, x):
    from synthmt.partition import compile_partitioner, partition
    return partition(compile_partitioner(table), {"x": x})


class TestBasicFormula:
    def test_x_ge_2_pair(self, table):
        f = build_basic_formula(table, letter_of(table, 4), C4)
        assert check_validity(f)

    def test_x_le_0_pair(self, table):
        f = build_basic_formula(table, letter_of(table, 0), C1)
        assert check_validity(f)

    def test_choice_outside_reaction(self, table):
        with pytest.raises(ChoiceNotInReaction):
            build_basic_formula(table, letter_of(table, 4), C1)


class TestStaticProvider:
    def test_reference_values(self, table):
        p = synthesize_static_provider(table)
        lx2 = letter_of(table, 4)
        assert p.provide({"x": 4}, {}, lx2, C4) == {"y": 2}
        assert p.provide({"x": 2}, {}, lx2, C4) == {"y": 2}
        assert p.provide({"x": 1}, {}, letter_of(table, 1), C1) == {"y": 2}
        assert p.provide({"x": 0}, {}, letter_of(table, 0), C1) == {"y": 2}

    def test_contract_on_random_inputs(self, table):
        """Def 3.2: f_c holds under (v_x, beta(v_x, c)) for in-region inputs."""
        p = synthesize_static_provider(table)
        rng = random.Random(17)
        checked = 0
        for _ in range(500):
            x = rng.randint(-50, 50)
            for entry in table.entries:
                from synthmt.logic import FFalse, FTrue
                region = entry.region
                holds = isinstance(region, FTrue) or (
                    not isinstance(region, FFalse)
                    and eval_formula(region, {"x": x}))
                if not holds:
                    continue
                for choice in entry.choices:
                    v_y = p.provide({"x": x}, {}, entry.letter, choice)
                    fc = cube_formula(table, choice)
                    assert eval_formula(fc, {"x": x, **v_y})
                    checked += 1
        assert checked >= 500

    def test_lazy_memoizes(self, table):
        p = StaticProvider(table)
        lx2 = letter_of(table, 4)
        assert p.pairs() == []
        p.provide({"x": 4}, {}, lx2, C4)
        assert (lx2, C4) in p.pairs()
        f1 = p.function_for(lx2, C4)
        p.provide({"x": 5}, {}, lx2, C4)
        assert p.function_for(lx2, C4) is f1

    def test_static_determinism(self, table):
        p = synthesize_static_provider(table)
        lx2 = letter_of(table, 4)
        outs = {tuple(sorted(p.provide({"x": 7}, {}, lx2, C4).items()))
                for _ in range(50)}
        assert len(outs) == 1

    def test_provider_artifact_roundtrip(self, table):
        p = synthesize_static_provider(table)
        text = provider_to_text(p)
        again = provider_from_text(text, table)
        assert provider_to_text(again) == text
        assert again.provide({"x": 4}, {}, letter_of(table, 4), C4) == {"y": 2}


class TestDynamicProvider:
    def test_in_band_models(self, table):
        # possible outcomes at x=4 are y in {2,3,4}
        y = provide_dynamic(table, {"x": 4}, C4)["y"]
        assert y in (2, 3, 4)

    def test_unique_model_at_boundary(self, table):
        assert provide_dynamic(table, {"x": 2}, C4) == {"y": 2}

    def test_infeasible_choice(self, table):
        with pytest.raises(InfeasibleChoice):
            provide_dynamic(table, {"x": 4}, bits_choice("111"))

    def test_randomized_mode_spans_band_and_reproduces(self, table):
        def run(seed):
            dp = DynamicProvider(table, randomized=True, seed=seed)
            return [dp.provide({"x": 4}, C4)["y"] for _ in range(200)]

        a, b = run(9), run(9)
        assert a == b
        assert set(a) <= {2, 3, 4} and len(set(a)) > 1
        assert run(10) != a


class TestAdaptive:
    def test_greatest_y_returns_x(self, table):
        lx2 = letter_of(table, 4)
        gamma = parse_gamma(
            f"pair {lx2} 011 : forall w:int. "
            f"(x >= 2 && w > 1 && w <= x -> w <= y)\n", table)
        p = synthesize_static_provider(table, [(lx2, C4)], gamma=gamma)
        for x in range(2, 101):
            assert p.provide({"x": x}, {}, lx2, C4) == {"y": x}

    def test_adaptive_still_satisfies_cube(self, table):
        # Lemma: adaptive outputs satisfy the unconstrained f_c
        lx2 = letter_of(table, 4)
        gamma = parse_gamma(
            f"pair {lx2} 011 : forall w:int. "
            f"(x >= 2 && w > 1 && w <= x -> w <= y)\n", table)
        p = synthesize_static_provider(table, [(lx2, C4)], gamma=gamma)
        fc = cube_formula(table, C4)
        for x in range(2, 60):
            v_y = p.provide({"x": x}, {}, lx2, C4)
            assert eval_formula(fc, {"x": x, **v_y})

    def test_invalid_constraint_fails_build(self, table):
        lx2 = letter_of(table, 4)
        gamma = parse_gamma(f"pair {lx2} 011 : y < 2\n", table)
        with pytest.raises(AdaptiveInvalid) as exc:
            synthesize_static_provider(table, [(lx2, C4)], gamma=gamma)
        assert exc.value.letter == lx2

    def test_capped_witness_invalid(self):
        # psi+ = (y < 100) on forall x. exists y. (y > x)
        spec = parse_spec("env x: int; sys y: int; property: G (y > x)")
        b = booleanize(spec)
        letter = b.letters[0]
        feasible = b.table.entries[0].choices[0]
        gamma = parse_gamma(
            f"pair {letter} {choice_bits(feasible)} : y < 100\n", b.table)
        with pytest.raises(AdaptiveInvalid):
            synthesize_static_provider(b.table, [(letter, feasible)],
                                       gamma=gamma)

    def test_unconstrained_pairs_fall_back_to_basic(self, table):
        lx2 = letter_of(table, 4)
        gamma = parse_gamma(
            f"pair {lx2} 011 : forall w:int. "
            f"(x >= 2 && w > 1 && w <= x -> w <= y)\n", table)
        p = synthesize_static_provider(table, gamma=gamma)
        l0 = letter_of(table, 0)
        assert p.provide({"x": 0}, {}, l0, C1) == {"y": 2}

    def test_gamma_roundtrip(self, table):
        lx2 = letter_of(table, 4)
        text = (f"zvar p : int = external\n"
                f"zvar yp : int = prev_output y\n"
                f"pair {lx2} 011 : y >= p || y >= yp\n")
        gamma = parse_gamma(text, table)
        assert parse_gamma(render_gamma(gamma), table) == gamma


class TestClosestElement:
    def test_int_closest(self):
        psi = parse_formula("y > x", {"x": Sort.INT, "y": Sort.INT})
        plus = build_closest_constraint(psi, "y", "z", Sort.INT)
        f = FQuant(True, "x", Sort.INT, FQuant(True, "z", Sort.INT,
                   FQuant(False, "y", Sort.INT, f_and([psi, plus]))))
        fn = synthesize_skolem(f)
        assert fn.evaluate({"x": 3, "z": 10})["y"] == 10
        assert fn.evaluate({"x": 12, "z": 10})["y"] == 13
        rng = random.Random(31)
        for _ in range(200):
            x, z = rng.randint(-50, 50), rng.randint(-50, 50)
            y = fn.evaluate({"x": x, "z": z})["y"]
            assert y > x
            best = min((abs(w - z), w) for w in range(x + 1, x + 300))[1]
            assert abs(y - z) == abs(best - z)
            if z > x:
                assert y == z  # feasible candidates are returned exactly

    def test_real_requires_eps(self):
        psi = parse_formula("y > x", {"x": Sort.REAL, "y": Sort.REAL})
        with pytest.raises(FormulaNotValid):
            build_closest_constraint(psi, "y", "z", Sort.REAL)

    def test_real_eps_relaxed(self):
        eps = Fraction(1, 100)
        psi = parse_formula("y > x", {"x": Sort.REAL, "y": Sort.REAL})
        plus = build_closest_constraint(psi, "y", "z", Sort.REAL, eps)
        f = FQuant(True, "x", Sort.REAL, FQuant(True, "z", Sort.REAL,
                   FQuant(False, "y", Sort.REAL, f_and([psi, plus]))))
        fn = synthesize_skolem(f)
        rng = random.Random(7)
        for _ in range(100):
            x = Fraction(rng.randint(-100, 100), 2)
            z = Fraction(rng.randint(-100, 100), 2)
            y = fn.evaluate({"x": x, "z": z})["y"]
            assert y > x
            # |y - z| <= |w - z| + eps for all feasible w: the infimum of
            # |w - z| over w > x is max(0, x - z)... distance to the band
            inf_dist = max(Fraction(0), x - z) if z <= x else Fraction(0)
            assert abs(y - z) <= inf_dist + eps

    def test_min_y_special_case(self):
        # psi+ = forall w. (psi[y<-w] -> w >= y) picks the least witness
        psi = parse_formula("y > x", {"x": Sort.INT, "y": Sort.INT})
        plus = build_extremal_constraint(psi, "y", Sort.INT, maximize=False)
        f = FQuant(True, "x", Sort.INT,
                   FQuant(False, "y", Sort.INT, f_and([psi, plus])))
        fn = synthesize_skolem(f)
        for x in range(-40, 41):
            assert fn.evaluate({"x": x})["y"] == x + 1


class TestEmitC:
    def test_reference_tree_shape(self, table):
        p = synthesize_static_provider(table)
        lx2 = letter_of(table, 4)
        src = emit_source(p.function_for(lx2, C4), "h_e1_c4")
        assert "int64_t h_e1_c4_y(int64_t x)" in src
        assert "return 2;" in src and "return 0;" in src

    def test_constant_tree(self):
        from synthmt.solver import SkolemFunction, SkolemLeaf
        from synthmt.logic import LinearTerm
        fn = SkolemFunction((("x", Sort.INT),), (("y", Sort.INT),),
                            SkolemLeaf((("y", LinearTerm.constant(7)),)))
        src = emit_source(fn, "const7")
        assert src.count("return 7;") == 1

    def test_real_not_emittable(self):
        fn = synthesize_skolem(parse_formula(
            "forall x:real. exists y:real. (y > x && y < x + 1)", {}))
        with pytest.raises(RealNotEmittable):
            emit_source(fn, "r")

    @pytest.mark.skipif(shutil.which("cc") is None and
                        shutil.which("gcc") is None,
                        reason="no C compiler available")
    def test_differential_against_tree(self, table):
        cc = shutil.which("cc") or shutil.which("gcc")
        p = synthesize_static_provider(table)
        lx2 = letter_of(table, 4)
        fn = p.function_for(lx2, C4)
        src = emit_source(fn, "h")
        driver = """
#include <stdio.h>
int main(void) {
    for (long long x = -100; x <= 100; x++)
        printf("%lld\\n", (long long) h_y((int64_t) x));
    return 0;
}
"""
        with tempfile.TemporaryDirectory() as td:
            c_path = Path(td) / "h.c"
            c_path.write_text(src + driver)
            exe = Path(td) / "h"
            subprocess.run([cc, "-O1", "-o", str(exe), str(c_path)],
                           check=True, capture_output=True)
            out = subprocess.run([str(exe)], check=True, capture_output=True,
                                 text=True).stdout.split()
        got = [int(v) for v in out]
        want = [int(fn.evaluate({"x": x})["y"]) for x in range(-100, 101)]
        assert got == want

    @pytest.mark.skipif(shutil.which("cc") is None and
                        shutil.which("gcc") is None,
                        reason="no C compiler available")
    def test_differential_with_division_leaves(self):
        cc = shutil.which("cc") or shutil.which("gcc")
        # 2y = x forces a division leaf guarded by divisibility
        fn = synthesize_skolem(parse_formula(
            "forall x:int. exists y:int. "
            "(2*y = x || (y >= x && y <= x))", {}))
        src = emit_source(fn, "g")
        driver = """
#include <stdio.h>
int main(void) {
    for (long long x = -100; x <= 100; x++)
        printf("%lld\\n", (long long) g_y((int64_t) x));
    return 0;
}
"""
        with tempfile.TemporaryDirectory() as td:
            c_path = Path(td) / "g.c"
            c_path.write_text(src + driver)
            exe = Path(td) / "g"
            subprocess.run([cc, "-O1", "-o", str(exe), str(c_path)],
                           check=True, capture_output=True)
            out = subprocess.run([str(exe)], check=True, capture_output=True,
                                 text=True).stdout.split()
        got = [int(v) for v in out]
        want = [int(fn.evaluate({"x": x})["y"]) for x in range(-100, 101)]
        assert got == want
