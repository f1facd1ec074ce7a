"""Traversal conformance: hand-traced call sequences from the plan-walk
pseudo-code, toggle semantics, and fallback behavior.

Expected call sequences in these tests were traced by hand: retrieval once,
planning once per exemplar, plans in descending-confidence order, and per
plan a coding call followed by up to t debug rounds, stopping at the first
fully-passing sample report.
"""

import pytest

from codeloop.agents import AgentError
from codeloop.backend import ScriptedBackend
from codeloop.domain import (
    AgentKind,
    AgentToggles,
    CodeOrigin,
    ExecMode,
    Mode,
    Plan,
    Problem,
    RunConfig,
)
from codeloop.traversal import solve, sort_plans
from helpers import (
    FakeExecutor,
    code_response,
    io_test,
    planning_response,
    retrieval_response,
    stdin_problem,
)

SAMPLES = [io_test("s0", "1 2", "3")]


def agents_of(outcome):
    return [call.agent for call in outcome.transcript]


def pipeline_cfg(k, t, **kwargs) -> RunConfig:
    return RunConfig(k=k, t=t, mode=Mode.PIPELINE, **kwargs)


class TestSortPlans:
    def test_descending_by_confidence(self):
        plans = [Plan(("s",), 70, 0), Plan(("s",), 90, 1)]
        assert [p.origin_exemplar_index for p in sort_plans(plans)] == [1, 0]

    def test_tie_broken_by_ascending_index(self):
        plans = [Plan(("s",), 90, 1), Plan(("s",), 90, 0)]
        assert [p.origin_exemplar_index for p in sort_plans(plans)] == [0, 1]

    def test_empty_list(self):
        assert sort_plans([]) == []

    def test_input_unmodified(self):
        plans = [Plan(("s",), 10, 0), Plan(("s",), 20, 1)]
        snapshot = list(plans)
        sort_plans(plans)
        assert plans == snapshot

    def test_random_lists_sorted_and_stable(self):
        import random

        rng = random.Random(7)
        for _ in range(100):
            plans = [
                Plan(("s",), rng.choice([0, 25, 50, 75, 100]), i)
                for i in range(rng.randrange(0, 12))
            ]
            ordered = sort_plans(plans)
            for a, b in zip(ordered, ordered[1:]):
                assert a.confidence > b.confidence or (
                    a.confidence == b.confidence
                    and a.origin_exemplar_index < b.origin_exemplar_index
                )
            if plans:
                assert ordered[0].confidence == max(p.confidence for p in plans)


class TestSpecScenarios:
    def test_k2_t1_debug_fix_passes(self):
        # Hand trace: retrieval, plan x2, code(A fails), debug(A,1 passes).
        backend = ScriptedBackend(
            [
                retrieval_response(2),
                planning_response(90),
                planning_response(70),
                code_response("print('broken')"),
                code_response("print('fixed')"),
            ]
        )
        executor = FakeExecutor(script=[False, True])
        outcome = solve(stdin_problem(samples=SAMPLES), pipeline_cfg(2, 1), backend, executor)
        assert agents_of(outcome) == [
            AgentKind.RETRIEVAL,
            AgentKind.PLANNING,
            AgentKind.PLANNING,
            AgentKind.CODING,
            AgentKind.DEBUGGING,
        ]
        assert outcome.solved_on_samples
        assert outcome.plans_tried == 1
        assert outcome.debug_iterations_used == 1
        assert outcome.final_code.source == "print('fixed')"
        assert outcome.final_code.produced_by is CodeOrigin.DEBUGGING
        assert executor.call_count == 2

    def test_k3_t5_total_failure_uses_22_calls(self):
        # Hand trace: 1 retrieval + 3 planning + 3 coding + 15 debugging = 22.
        responses = [retrieval_response(3)]
        responses += [planning_response(c) for c in (90, 80, 70)]
        for plan in range(3):
            responses.append(code_response(f"code_p{plan}"))
            responses += [code_response(f"fix_p{plan}_d{d}") for d in range(1, 6)]
        backend = ScriptedBackend(responses)
        executor = FakeExecutor(script=[False] * 18)
        outcome = solve(stdin_problem(samples=SAMPLES), pipeline_cfg(3, 5), backend, executor)
        assert len(outcome.transcript) == 22
        assert outcome.usage.api_calls == 22
        assert not outcome.solved_on_samples
        assert outcome.plans_tried == 3
        assert outcome.debug_iterations_used == 15
        # last candidate produced: final debug output of the lowest-confidence plan
        assert outcome.final_code.source == "fix_p2_d5"
        assert executor.call_count == 18  # k * (1 + t)

    def test_direct_mode_single_call_no_executor(self):
        backend = ScriptedBackend([code_response("answer = 1")])
        executor = FakeExecutor(script=[])
        outcome = solve(
            stdin_problem(samples=SAMPLES),
            RunConfig(mode=Mode.DIRECT),
            backend,
            executor,
        )
        assert agents_of(outcome) == [AgentKind.DIRECT]
        assert executor.call_count == 0
        assert not outcome.solved_on_samples
        assert outcome.plans_tried == 0


class TestOrderingAndEarlyExit:
    def test_highest_confidence_plan_attempted_first(self):
        backend = ScriptedBackend(
            [
                retrieval_response(2),
                planning_response(70),  # exemplar 0
                planning_response(90),  # exemplar 1 — should be coded first
                code_response("print('win')"),
            ]
        )
        executor = FakeExecutor(script=[True])
        outcome = solve(stdin_problem(samples=SAMPLES), pipeline_cfg(2, 1), backend, executor)
        assert outcome.trace.ordered_plan_indices == (1, 0)
        assert outcome.trace.events[0].plan_index == 1

    def test_early_exit_skips_debugging_and_later_plans(self):
        backend = ScriptedBackend(
            [
                retrieval_response(2),
                planning_response(90),
                planning_response(80),
                code_response("print('first try')"),
            ]
        )
        executor = FakeExecutor(script=[True])
        outcome = solve(stdin_problem(samples=SAMPLES), pipeline_cfg(2, 2), backend, executor)
        assert agents_of(outcome)[-1] is AgentKind.CODING
        assert len(outcome.transcript) == 4
        assert executor.call_count == 1
        assert outcome.solved_on_samples

    def test_zero_sample_problem_returns_first_coding_output(self):
        backend = ScriptedBackend(
            [retrieval_response(1), planning_response(90), code_response("print(1)")]
        )
        executor = FakeExecutor(script=[])
        outcome = solve(stdin_problem(samples=()), pipeline_cfg(1, 3), backend, executor)
        assert executor.call_count == 0
        assert outcome.solved_on_samples  # vacuous: nothing to fail
        assert outcome.debug_iterations_used == 0
        assert [e.kind for e in outcome.trace.events] == ["coded"]


class TestAgentToggles:
    def test_retrieval_disabled_plans_without_exemplars(self):
        backend = ScriptedBackend(
            [planning_response(90), planning_response(80), code_response("x = 1")]
        )
        executor = FakeExecutor(script=[True])
        cfg = pipeline_cfg(2, 1, agent_toggles=AgentToggles(retrieval=False))
        outcome = solve(stdin_problem(samples=SAMPLES), cfg, backend, executor)
        kinds = agents_of(outcome)
        assert AgentKind.RETRIEVAL not in kinds
        assert kinds.count(AgentKind.PLANNING) == 2

    def test_planning_disabled_codes_k_times_with_debugging(self):
        backend = ScriptedBackend(
            [
                retrieval_response(2),
                code_response("a = 1"),
                code_response("fix a"),
                code_response("b = 2"),
                code_response("fix b"),
            ]
        )
        executor = FakeExecutor(script=[False, False, False, False])
        cfg = pipeline_cfg(2, 1, agent_toggles=AgentToggles(planning=False))
        outcome = solve(stdin_problem(samples=SAMPLES), cfg, backend, executor)
        kinds = agents_of(outcome)
        assert AgentKind.PLANNING not in kinds
        assert kinds.count(AgentKind.CODING) == 2
        assert kinds.count(AgentKind.DEBUGGING) == 2
        assert not outcome.solved_on_samples

    def test_debugging_disabled_means_zero_debug_budget(self):
        backend = ScriptedBackend(
            [
                retrieval_response(2),
                planning_response(90),
                planning_response(80),
                code_response("a = 1"),
                code_response("b = 2"),
            ]
        )
        executor = FakeExecutor(script=[False, False])
        cfg = pipeline_cfg(2, 3, agent_toggles=AgentToggles(debugging=False))
        outcome = solve(stdin_problem(samples=SAMPLES), cfg, backend, executor)
        assert AgentKind.DEBUGGING not in agents_of(outcome)
        assert executor.call_count == 2  # at most k executor invocations
        assert outcome.debug_iterations_used == 0


class TestFallbackOnParseFailure:
    def test_coding_hard_failure_advances_to_next_plan(self):
        backend = ScriptedBackend(
            [
                retrieval_response(2),
                planning_response(90),
                planning_response(80),
                "no code block",  # plan A coding attempt
                "still no code block",  # plan A re-ask -> hard failure
                code_response("print('plan B wins')"),
            ]
        )
        executor = FakeExecutor(script=[True])
        outcome = solve(stdin_problem(samples=SAMPLES), pipeline_cfg(2, 1), backend, executor)
        assert outcome.solved_on_samples
        assert outcome.plans_tried == 2
        assert outcome.final_code.source == "print('plan B wins')"

    def test_all_plans_failing_parse_is_terminal_error(self):
        backend = ScriptedBackend(
            [retrieval_response(1), planning_response(90), "garbage", "garbage again"]
        )
        executor = FakeExecutor(script=[])
        with pytest.raises(AgentError):
            solve(stdin_problem(samples=SAMPLES), pipeline_cfg(1, 1), backend, executor)

    def test_planning_parse_failure_skips_that_exemplar(self):
        backend = ScriptedBackend(
            [
                retrieval_response(2),
                "not a plan",  # exemplar 0 planning
                "still not a plan",  # exemplar 0 re-ask -> skipped
                planning_response(50),  # exemplar 1
                code_response("x = 1"),
            ]
        )
        executor = FakeExecutor(script=[True])
        outcome = solve(stdin_problem(samples=SAMPLES), pipeline_cfg(2, 1), backend, executor)
        assert outcome.trace.ordered_plan_indices == (1,)
        assert outcome.solved_on_samples

    def test_debugging_parse_failure_abandons_plan(self):
        backend = ScriptedBackend(
            [
                retrieval_response(2),
                planning_response(90),
                planning_response(80),
                code_response("broken A"),
                "no fix",  # debug attempt
                "really no fix",  # re-ask -> abandon plan A
                code_response("print('plan B')"),
            ]
        )
        executor = FakeExecutor(script=[False, True])
        outcome = solve(stdin_problem(samples=SAMPLES), pipeline_cfg(2, 2), backend, executor)
        assert outcome.solved_on_samples
        assert outcome.plans_tried == 2
        assert outcome.final_code.source == "print('plan B')"


class TestTraceAndInvariants:
    def test_trace_replay_matches_recomputation(self):
        def run():
            backend = ScriptedBackend(
                [
                    retrieval_response(2),
                    planning_response(60),
                    planning_response(90),
                    code_response("c0"),
                    code_response("fix0"),
                    code_response("c1"),
                ]
            )
            executor = FakeExecutor(script=[False, False, True])
            return solve(
                stdin_problem(samples=SAMPLES), pipeline_cfg(2, 1), backend, executor
            )

        assert run().trace == run().trace

    def test_invalid_problem_rejected(self):
        bad = Problem(
            id="bad", description="d", exec_mode=ExecMode.FUNCTION_CALL, entry_point=None
        )
        with pytest.raises(ValueError):
            solve(bad, pipeline_cfg(1, 0), ScriptedBackend([]), FakeExecutor())

    def test_debugging_only_sees_failing_reports(self):
        # FakeExecutor would throw if debugging ran after a pass; also assert
        # the debug count never exceeds k*t across a failing run.
        k, t = 2, 2
        responses = [retrieval_response(k), planning_response(90), planning_response(80)]
        for plan in range(k):
            responses.append(code_response(f"c{plan}"))
            responses += [code_response(f"f{plan}_{d}") for d in range(1, t + 1)]
        backend = ScriptedBackend(responses)
        executor = FakeExecutor(script=[False] * (k * (1 + t)))
        outcome = solve(stdin_problem(samples=SAMPLES), pipeline_cfg(k, t), backend, executor)
        assert outcome.debug_iterations_used == k * t
        debug_events = [e for e in outcome.trace.events if e.kind == "debugged"]
        assert all(1 <= e.iteration <= t for e in debug_events)
