"""Compiled partitioner vs the brute-force quantified-validity path."""

import random

import pytest

from synthmt.errors import MultiRegion, NoRegion
from synthmt.logic import FTrue, Sort
from synthmt.parsing import parse_formula
from synthmt.partition import (CompiledPartitioner, compile_partitioner,
                               partition, partition_brute_force)


class TestCompile:
    def test_table_order_preserved(self, running_bspec):
        p = compile_partitioner(running_bspec.table)
        assert [l for l, _ in p.entries] == list(running_bspec.letters)

    def test_single_reaction_region_true(self):
        from synthmt.abstraction import booleanize
        from synthmt.specs import parse_spec
        b = booleanize(parse_spec("env x: int; sys y: int; "
                                  "property: G (y > x)"))
        p = compile_partitioner(b.table)
        assert len(p.entries) == 1
        assert isinstance(p.entries[0][1], FTrue)


class TestPartition:
    def test_golden_trace_letters(self, running_bspec, letters_by_region):
        p = compile_partitioner(running_bspec.table)
        lx2 = letters_by_region["x>=2"]
        assert partition(p, {"x": 4}) == lx2
        assert partition(p, {"x": 2}) == lx2
        # the exact table splits x<2 into two cells ({s_0} needs x<=0)
        assert partition(p, {"x": 1}) == letters_by_region["x=1"]
        assert partition(p, {"x": 0}) == letters_by_region["x<=0"]
        assert letters_by_region["x=1"] != letters_by_region["x<=0"]

    def test_totality_uniqueness(self, running_bspec):
        p = compile_partitioner(running_bspec.table)
        rng = random.Random(23)
        for _ in range(1000):
            letter = partition(p, {"x": rng.randint(-10**6, 10**6)})
            assert letter in running_bspec.letters

    def test_agrees_with_brute_force(self, running_spec, running_bspec):
        p = compile_partitioner(running_bspec.table)
        rng = random.Random(5)
        for _ in range(25):
            x = rng.randint(-30, 30)
            assert partition(p, {"x": x}) == \
                partition_brute_force(running_bspec.table, running_spec,
                                      {"x": x})

    def test_no_region_error(self):
        sorts = {"x": Sort.INT}
        bad = CompiledPartitioner((
            ("e_0", parse_formula("x <= 0", sorts)),
            ("e_1", parse_formula("x >= 2", sorts)),
        ))
        with pytest.raises(NoRegion):
            partition(bad, {"x": 1})

    def test_multi_region_error(self):
        sorts = {"x": Sort.INT}
        bad = CompiledPartitioner((
            ("e_0", parse_formula("x <= 5", sorts)),
            ("e_1", parse_formula("x >= 2", sorts)),
        ))
        with pytest.raises(MultiRegion):
            partition(bad, {"x": 3})
