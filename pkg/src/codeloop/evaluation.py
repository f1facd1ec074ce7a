"""Pass@k computation, hidden-test judging, and resumable run records.

Run records are append-only JSONL, one ProblemResult per line; a crash
between lines loses at most the record being written. Resuming stops hard on
the first corrupt line rather than silently skipping it.
"""

from __future__ import annotations

import json
import logging
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .domain import (
    AgentCall,
    AgentKind,
    CandidateCode,
    CodeOrigin,
    Problem,
    SolveOutcome,
    TraversalEvent,
    TraversalTrace,
    UsageTotals,
)
from .executor import ComparePolicy, ExecLimits

logger = logging.getLogger(__name__)


class EvalError(Exception):
    pass


class InsufficientAttempts(EvalError):
    pass


class CorruptRecord(EvalError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Attempt:
    """One solve attempt for one problem; ``outcome`` is None if the attempt
    died in an agent/backend error (recorded in ``error``)."""

    attempt_index: int
    solved_hidden: bool
    outcome: SolveOutcome | None = None
    error: str | None = None


@dataclass(frozen=True)
class ProblemResult:
    problem_id: str
    attempts: tuple[Attempt, ...]
    difficulty_tag: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "attempts", tuple(self.attempts))
        for i, attempt in enumerate(self.attempts, start=1):
            if attempt.attempt_index != i:
                raise ValueError(
                    f"attempt indices must be consecutive from 1, got "
                    f"{[a.attempt_index for a in self.attempts]}"
                )


@dataclass(frozen=True)
class Report:
    pass_at: dict[int, float]
    per_difficulty: dict[str, float]
    totals: UsageTotals
    per_problem: tuple[ProblemResult, ...]
    estimator: str = "plain"


def pass_at_k(results: Sequence[ProblemResult], k: int) -> float:
    """Fraction of problems where any of the first k attempts solved hidden.

    Requires every result to carry at least k attempts. Empty input yields 0.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not results:
        return 0.0
    solved = 0
    for result in results:
        if len(result.attempts) < k:
            raise InsufficientAttempts(
                f"problem {result.problem_id!r} has {len(result.attempts)} attempts, need {k}"
            )
        if any(a.solved_hidden for a in result.attempts[:k]):
            solved += 1
    return solved / len(results)


def pass_at_k_unbiased(results: Sequence[ProblemResult], k: int) -> float:
    """Combinatorial unbiased estimator: mean over problems of
    1 - C(n-c, k)/C(n, k), with n = attempts recorded and c = solved count.

    Offered for comparability with literature that samples n > k completions;
    the plain fraction above is the engine's primary metric.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not results:
        return 0.0
    values = []
    for result in results:
        n = len(result.attempts)
        if n < k:
            raise InsufficientAttempts(
                f"problem {result.problem_id!r} has {n} attempts, need {k}"
            )
        c = sum(1 for a in result.attempts if a.solved_hidden)
        if c == 0:
            values.append(0.0)
        elif n - c < k:
            values.append(1.0)
        else:
            values.append(1.0 - math.comb(n - c, k) / math.comb(n, k))
    return sum(values) / len(values)


def judge_hidden(
    outcome: SolveOutcome,
    problem: Problem,
    executor,
    limits: ExecLimits | None = None,
    policy: ComparePolicy | None = None,
) -> bool:
    """True iff the final code passes every hidden test.

    Sample-I/O success is never a substitute: this always re-executes against
    the hidden set. An empty hidden set judges True with a logged warning.
    """
    if not problem.hidden_tests:
        logger.warning(
            "problem %s has no hidden tests; judging vacuously true", problem.id
        )
        return True
    report = executor.run_candidate(
        outcome.final_code,
        problem.hidden_tests,
        problem.exec_mode,
        limits=limits,
        policy=policy,
        entry_point=problem.entry_point,
    )
    return report.all_passed


# ---------------------------------------------------------------------------
# Run-record serialization
# ---------------------------------------------------------------------------


def _code_to_record(code: CandidateCode) -> dict:
    return {
        "source": code.source,
        "language_tag": code.language_tag,
        "produced_by": code.produced_by.value,
        "debug_iteration": code.debug_iteration,
    }


def _record_to_code(record: dict) -> CandidateCode:
    return CandidateCode(
        source=record["source"],
        language_tag=record.get("language_tag", "python"),
        produced_by=CodeOrigin(record.get("produced_by", "coding")),
        debug_iteration=int(record.get("debug_iteration", 0)),
    )


def _outcome_to_record(outcome: SolveOutcome) -> dict:
    return {
        "final_code": _code_to_record(outcome.final_code),
        "solved_on_samples": outcome.solved_on_samples,
        "plans_tried": outcome.plans_tried,
        "debug_iterations_used": outcome.debug_iterations_used,
        "transcript": [
            {
                "agent": c.agent.value,
                "prompt": c.prompt,
                "response": c.response,
                "latency_ms": c.latency_ms,
                "tokens_in": c.tokens_in,
                "tokens_out": c.tokens_out,
            }
            for c in outcome.transcript
        ],
        "usage": {
            "api_calls": outcome.usage.api_calls,
            "tokens_in": outcome.usage.tokens_in,
            "tokens_out": outcome.usage.tokens_out,
            "wall_time_ms": outcome.usage.wall_time_ms,
        },
        "trace": {
            "ordered_plan_indices": list(outcome.trace.ordered_plan_indices),
            "events": [
                {
                    "plan_index": e.plan_index,
                    "kind": e.kind,
                    "all_passed": e.all_passed,
                    "iteration": e.iteration,
                }
                for e in outcome.trace.events
            ],
        },
    }


def _record_to_outcome(record: dict) -> SolveOutcome:
    usage = record.get("usage", {})
    trace = record.get("trace", {})
    return SolveOutcome(
        final_code=_record_to_code(record["final_code"]),
        solved_on_samples=bool(record["solved_on_samples"]),
        plans_tried=int(record["plans_tried"]),
        debug_iterations_used=int(record["debug_iterations_used"]),
        transcript=tuple(
            AgentCall(
                agent=AgentKind(c["agent"]),
                prompt=c["prompt"],
                response=c["response"],
                latency_ms=int(c.get("latency_ms", 0)),
                tokens_in=int(c.get("tokens_in", 0)),
                tokens_out=int(c.get("tokens_out", 0)),
            )
            for c in record.get("transcript", [])
        ),
        usage=UsageTotals(
            api_calls=int(usage.get("api_calls", 0)),
            tokens_in=int(usage.get("tokens_in", 0)),
            tokens_out=int(usage.get("tokens_out", 0)),
            wall_time_ms=int(usage.get("wall_time_ms", 0)),
        ),
        trace=TraversalTrace(
            ordered_plan_indices=tuple(trace.get("ordered_plan_indices", [])),
            events=tuple(
                TraversalEvent(
                    plan_index=int(e["plan_index"]),
                    kind=e["kind"],
                    all_passed=e.get("all_passed"),
                    iteration=e.get("iteration"),
                )
                for e in trace.get("events", [])
            ),
        ),
    )


def result_to_record(result: ProblemResult) -> dict:
    return {
        "problem_id": result.problem_id,
        "difficulty_tag": result.difficulty_tag,
        "attempts": [
            {
                "attempt_index": a.attempt_index,
                "solved_hidden": a.solved_hidden,
                "error": a.error,
                "outcome": _outcome_to_record(a.outcome) if a.outcome else None,
            }
            for a in result.attempts
        ],
    }


def record_to_result(record: dict) -> ProblemResult:
    return ProblemResult(
        problem_id=str(record["problem_id"]),
        difficulty_tag=record.get("difficulty_tag"),
        attempts=tuple(
            Attempt(
                attempt_index=int(a["attempt_index"]),
                solved_hidden=bool(a["solved_hidden"]),
                outcome=_record_to_outcome(a["outcome"]) if a.get("outcome") else None,
                error=a.get("error"),
            )
            for a in record.get("attempts", [])
        ),
    )


class RunWriter:
    """Append-only JSONL writer for ProblemResults; one flush per record."""

    def __init__(self, path: str | Path, append: bool = False):
        self._fh = open(path, "a" if append else "w", encoding="utf-8", newline="\n")
        self._lock = threading.Lock()

    def append(self, result: ProblemResult) -> None:
        line = json.dumps(result_to_record(result), ensure_ascii=False)
        with self._lock:
            self._fh.write(line + "\n")
            self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "RunWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def persist_run(
    results: Sequence[ProblemResult], path: str | Path, append: bool = False
) -> None:
    """Write results as append-only JSONL (one record per line, flushed)."""
    with RunWriter(path, append=append) as writer:
        for result in results:
            writer.append(result)


def load_results(path: str | Path) -> list[ProblemResult]:
    """Read a run-record file; missing file is an empty run.

    A problem re-run after resume appears more than once — the last record
    wins. Raises CorruptRecord(line_no) on the first unparseable line.
    """
    path = Path(path)
    if not path.exists():
        return []
    by_id: dict[str, ProblemResult] = {}
    order: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                result = record_to_result(record)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorruptRecord(line_no, f"unreadable record: {exc}") from exc
            if result.problem_id not in by_id:
                order.append(result.problem_id)
            by_id[result.problem_id] = result
    return [by_id[pid] for pid in order]


def resume_run(path: str | Path) -> dict[str, ProblemResult]:
    """Load prior results keyed by problem id, for skip-completed resumption."""
    return {r.problem_id: r for r in load_results(path)}


def build_report(
    results: Sequence[ProblemResult],
    ks: Sequence[int],
    estimator: str = "plain",
) -> Report:
    """Aggregate results into pass@k fractions, a per-difficulty breakdown
    (at k=1, over tagged problems only), and summed usage totals."""
    if estimator not in ("plain", "unbiased"):
        raise ValueError(f"unknown estimator {estimator!r}")
    metric = pass_at_k if estimator == "plain" else pass_at_k_unbiased
    pass_at = {k: metric(results, k) for k in sorted(set(ks))}

    per_difficulty: dict[str, float] = {}
    tagged: dict[str, list[ProblemResult]] = {}
    for result in results:
        if result.difficulty_tag:
            tagged.setdefault(result.difficulty_tag, []).append(result)
    for tag in sorted(tagged):
        per_difficulty[tag] = metric(tagged[tag], 1)

    totals = UsageTotals()
    for result in results:
        for attempt in result.attempts:
            if attempt.outcome is not None:
                totals = totals + attempt.outcome.usage
    return Report(
        pass_at=pass_at,
        per_difficulty=per_difficulty,
        totals=totals,
        per_problem=tuple(results),
        estimator=estimator,
    )
