import itertools

import pytest

from conftest import exec_from
from epiflow.domain import Domain, Label, TERMINATION_MARK
from epiflow.lang import parse
from epiflow.model import (ModelConfig, Status, accessible, build_model,
                           epoch_of, trace_of)
from epiflow.fuzz import FuzzConfig, generate_program
from oracles import run

BOOL = Domain.booleans()
INT4 = Domain.integers(4)


class TestWarmupModel:
    def test_four_executions_of_length_two(self, copy_out_model):
        m = copy_out_model
        assert len(m.executions) == 4
        assert all(len(e) == 2 for e in m.executions)
        assert all(e.status is Status.TERMINATED for e in m.executions)

    def test_traces_echo_y(self, copy_out_model):
        m = copy_out_model
        for ex in m.executions:
            assert m.trace_tuple(ex.trace_ids[2]) == (ex.init_store["y"],)

    def test_enumeration_order_is_lexicographic(self, copy_out_model):
        inits = [copy_out_model.values_of(e.init_store)
                 for e in copy_out_model.executions]
        assert inits == [(True, True), (True, False), (False, True), (False, False)]

    def test_empty_trace_epoch_has_eight_points(self, copy_out_model):
        points = epoch_of(copy_out_model, ())
        assert len(points) == 8
        assert {p.index for p in points} == {0, 1}

    def test_tt_epoch_contains_the_two_matching_runs(self, copy_out_model):
        m = copy_out_model
        points = epoch_of(m, (True,))
        assert {(m.values_of(p.execution.init_store), p.index) for p in points} \
            == {((True, True), 2), ((False, True), 2)}

    def test_unobserved_trace_has_empty_epoch(self, copy_out_model):
        assert epoch_of(copy_out_model, (True, True)) == ()


class TestTraceOf:
    def test_initial_point_has_empty_trace(self, copy_out_model):
        from epiflow.model import Point
        ex = copy_out_model.executions[0]
        assert trace_of(Point(ex, 0)) == ()

    def test_trace_after_output(self, copy_out_model):
        from epiflow.model import Point
        ex = exec_from(copy_out_model, x=True, y=True)
        assert trace_of(Point(ex, 2)) == (True,)

    def test_two_release_final_trace(self, two_release_model):
        from epiflow.model import Point
        ex = exec_from(two_release_model, l=False, h1=True, h2=False)
        assert trace_of(Point(ex, len(ex))) == (True, False)


class TestAccessibility:
    def test_reflexive(self, copy_out_model):
        from epiflow.model import Point
        for ex in copy_out_model.executions:
            for i in range(len(ex) + 1):
                assert accessible(Point(ex, i), Point(ex, i))

    def test_matching_and_differing_traces(self, copy_out_model):
        from epiflow.model import Point
        m = copy_out_model
        tt_tt = exec_from(m, x=True, y=True)
        ff_tt = exec_from(m, x=False, y=True)
        tt_ff = exec_from(m, x=True, y=False)
        assert accessible(Point(tt_tt, 2), Point(ff_tt, 2))
        assert not accessible(Point(tt_tt, 2), Point(tt_ff, 2))

    def test_cross_model_points_rejected(self, copy_out_model, two_release_model):
        from epiflow.model import Point
        a = Point(copy_out_model.executions[0], 0)
        b = Point(two_release_model.executions[0], 0)
        with pytest.raises(ValueError):
            accessible(a, b)


class TestModelShape:
    def test_skip_model(self):
        m = build_model(parse("skip", BOOL), ModelConfig(BOOL))
        assert len(m.executions) == 1
        assert len(m.executions[0]) == 0
        assert set(m.epochs) == {0}

    def test_counting_rule(self):
        program = parse("out x; release r; out y && z", BOOL)
        m = build_model(program, ModelConfig(BOOL))
        assert len(m.executions) == 2 ** 3  # flags do not enumerate

    def test_release_flags_start_false_and_stay_monotone(self, two_release_model):
        dom = two_release_model.domain
        for ex in two_release_model.executions:
            for flag in two_release_model.program.flags:
                values = [s[flag] for s in ex.stores]
                assert values[0] is False
                assert values == sorted(values)  # once true, stays true

    def test_trace_prefix_monotonicity(self, two_release_model):
        m = two_release_model
        for ex in m.executions:
            previous = ()
            for i in range(len(ex) + 1):
                current = m.trace_tuple(ex.trace_ids[i])
                assert current[: len(previous)] == previous
                previous = current

    def test_loop_emissions_match_independent_interpreter(self):
        program = parse("while x < h do { out x; x := x + 1 }", INT4)
        m = build_model(program, ModelConfig(INT4))
        assert len(m.executions) == 16
        for ex in m.executions:
            expected_trace, expected_store = run(program.body, ex.init_store, INT4)
            assert m.trace_tuple(ex.trace_ids[len(ex)]) == expected_trace
            assert ex.final_store == expected_store

    def test_epochs_partition_points(self):
        cfg = FuzzConfig(seed=11, count=1, size=6, ident_count=2)
        import random
        for index in range(25):
            program = generate_program(random.Random(f"p:{index}"), cfg)
            m = build_model(program, ModelConfig(BOOL))
            total = sum(len(points) for points in m.epochs.values())
            assert total == m.point_count
            seen = set()
            for points in m.epochs.values():
                for p in points:
                    key = (p.execution.index, p.index)
                    assert key not in seen
                    seen.add(key)


class TestDivergence:
    def test_lasso_detected(self):
        m = build_model(parse("while tt do { skip }", BOOL), ModelConfig(BOOL))
        (ex,) = m.executions
        assert ex.status is Status.LASSO
        assert m.tainted

    def test_lasso_entry_index(self):
        m = build_model(parse("x := tt; while x do { skip }", BOOL), ModelConfig(BOOL))
        ex = exec_from(m, x=False)
        assert ex.status is Status.LASSO

    def test_bound_exceeded(self):
        program = parse("while x < 3 do { x := x + 1; out x }", INT4)
        m = build_model(program, ModelConfig(INT4, bound=2))
        assert any(e.status is Status.BOUND_EXCEEDED for e in m.executions)
        assert m.tainted

    def test_terminating_model_is_clean(self, copy_out_model):
        assert not copy_out_model.tainted


class TestTerminationOutput:
    def test_marker_appended(self):
        program = parse("out x", BOOL)
        m = build_model(program, ModelConfig(BOOL, termination_output=True))
        for ex in m.executions:
            assert ex.events[-1] == TERMINATION_MARK
            assert len(ex) == 2

    def test_marker_distinguishes_termination_time(self):
        program = parse("if x then { skip } else { x := x; x := x }", BOOL)
        m = build_model(program, ModelConfig(BOOL, termination_output=True))
        lens = {m.values_of(e.init_store): len(e) for e in m.executions}
        assert lens == {(True,): 2, (False,): 4}
