"""Confidence-ordered plan traversal: generate, sort, code, test, debug, fall back.

One solve() walks the pipeline for one problem: retrieval once (k exemplars),
planning once per exemplar, plans sorted by confidence descending, then for
each plan in order a coding call, a sample-I/O test, and on failure up to t
debugging rounds each followed by a re-test. The first candidate that passes
every sample test wins; if everything is exhausted the most recent candidate
is returned unsolved. Backend call count is bounded by 1 + k(2+t), plus at
most one parse-retry per agent call.
"""

from __future__ import annotations

import logging
from typing import Mapping, Protocol, Sequence

from .agents import (
    AgentContext,
    AgentError,
    ParseError,
    PromptTemplate,
    run_coding,
    run_debugging,
    run_direct,
    run_planning,
    run_retrieval,
)
from .backend import CompletionBackend
from .domain import (
    CandidateCode,
    Exemplar,
    Mode,
    Plan,
    Problem,
    RunConfig,
    SolveOutcome,
    TestReport,
    TraversalEvent,
    TraversalTrace,
    UsageTotals,
    validate_problem,
)
from .executor import ComparePolicy, ExecLimits

logger = logging.getLogger(__name__)


class CandidateRunner(Protocol):
    """What traversal needs from an executor (satisfied by executor.Executor)."""

    def run_candidate(
        self,
        code: CandidateCode,
        tests: Sequence,
        mode,
        limits: ExecLimits | None = None,
        policy: ComparePolicy | None = None,
        entry_point: str | None = None,
    ) -> TestReport: ...


def sort_plans(plans: Sequence[Plan]) -> list[Plan]:
    """Descending by confidence; ties broken by ascending origin index.

    Pure: the input sequence is never modified.
    """
    return sorted(plans, key=lambda p: (-p.confidence, p.origin_exemplar_index))


def solve(
    problem: Problem,
    cfg: RunConfig,
    backend: CompletionBackend,
    executor: CandidateRunner,
    templates: Mapping[str, PromptTemplate] | None = None,
) -> SolveOutcome:
    """Solve one problem under ``cfg``; see the module docstring for the walk.

    DIRECT mode is a single completion: no tests, no debugging, k/t/toggles
    ignored, and ``solved_on_samples=False`` because tests are never consulted.
    In PIPELINE mode a problem with zero sample tests short-circuits after the
    first coding call (``solved_on_samples=True``, vacuously — there was
    nothing to fail).

    Raises AgentError only when every plan path hard-failed before producing
    any candidate; a hard parse failure on one plan otherwise just advances
    to the next plan.
    """
    violations = validate_problem(problem)
    if violations:
        raise ValueError(f"invalid problem {problem.id!r}: {violations}")

    ctx = AgentContext(backend=backend, temperature=cfg.temperature)
    if templates is not None:
        ctx.templates = templates

    if cfg.mode is Mode.DIRECT:
        code = run_direct(ctx, problem)
        return SolveOutcome(
            final_code=code,
            solved_on_samples=False,
            plans_tried=0,
            debug_iterations_used=0,
            transcript=tuple(ctx.transcript),
            usage=UsageTotals.from_transcript(ctx.transcript),
            trace=TraversalTrace(),
        )

    toggles = cfg.agent_toggles
    exemplars: list[Exemplar | None]
    if toggles.retrieval:
        exemplars = list(run_retrieval(ctx, problem, cfg.k))
    else:
        exemplars = [None] * cfg.k

    ordered: list[Plan | None]
    if toggles.planning:
        plans: list[Plan] = []
        for index, exemplar in enumerate(exemplars):
            try:
                plans.append(run_planning(ctx, problem, exemplar, index))
            except ParseError as exc:
                logger.warning(
                    "problem %s: planning for exemplar %d failed to parse: %s",
                    problem.id,
                    index,
                    exc,
                )
        if not plans:
            raise AgentError(f"problem {problem.id!r}: every planning call failed to parse")
        ordered = list(sort_plans(plans))
    else:
        # Planning disabled: coding runs k times directly, slot order as-is.
        ordered = [None] * cfg.k

    debug_budget = cfg.t if toggles.debugging else 0
    limits = ExecLimits(per_test_timeout_ms=cfg.per_test_timeout_ms)

    plan_indices = tuple(
        plan.origin_exemplar_index if plan is not None else slot
        for slot, plan in enumerate(ordered)
    )
    events: list[TraversalEvent] = []
    last_code: CandidateCode | None = None
    plans_tried = 0
    debug_used = 0
    parse_failures: list[str] = []

    def outcome(code: CandidateCode, solved: bool) -> SolveOutcome:
        return SolveOutcome(
            final_code=code,
            solved_on_samples=solved,
            plans_tried=plans_tried,
            debug_iterations_used=debug_used,
            transcript=tuple(ctx.transcript),
            usage=UsageTotals.from_transcript(ctx.transcript),
            trace=TraversalTrace(ordered_plan_indices=plan_indices, events=tuple(events)),
        )

    def test(code: CandidateCode) -> TestReport:
        return executor.run_candidate(
            code,
            problem.sample_io,
            problem.exec_mode,
            limits=limits,
            entry_point=problem.entry_point,
        )

    for slot, plan in enumerate(ordered):
        plan_index = plan.origin_exemplar_index if plan is not None else slot
        plans_tried += 1
        try:
            code = run_coding(ctx, problem, plan)
        except ParseError as exc:
            parse_failures.append(f"plan {plan_index}: coding: {exc}")
            logger.warning(
                "problem %s: coding for plan %d hard-failed, advancing: %s",
                problem.id,
                plan_index,
                exc,
            )
            continue
        last_code = code
        events.append(TraversalEvent(plan_index, "coded"))

        if not problem.sample_io:
            # No sample I/O at all: nothing to test or debug against; the
            # first coding output is final and vacuously passes.
            return outcome(code, solved=True)

        report = test(code)
        events.append(TraversalEvent(plan_index, "tested", all_passed=report.all_passed))
        if report.all_passed:
            return outcome(code, solved=True)

        for iteration in range(1, debug_budget + 1):
            try:
                code = run_debugging(
                    ctx, problem, plan, code, report, iteration, budget=debug_budget
                )
            except ParseError as exc:
                parse_failures.append(f"plan {plan_index}: debugging {iteration}: {exc}")
                logger.warning(
                    "problem %s: debugging %d for plan %d hard-failed, abandoning plan: %s",
                    problem.id,
                    iteration,
                    plan_index,
                    exc,
                )
                break
            debug_used += 1
            last_code = code
            events.append(TraversalEvent(plan_index, "debugged", iteration=iteration))
            report = test(code)
            events.append(
                TraversalEvent(plan_index, "tested", all_passed=report.all_passed)
            )
            if report.all_passed:
                return outcome(code, solved=True)

    if last_code is None:
        raise AgentError(
            f"problem {problem.id!r}: every plan path failed before producing code: "
            + "; ".join(parse_failures)
        )
    return outcome(last_code, solved=False)
