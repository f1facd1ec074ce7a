"""Shared domain types for the code-generation engine.

Everything here is an immutable value object: construction either succeeds
with all local invariants satisfied (clamping where the contract says clamp,
ValueError where it says reject) or fails loudly. Problem-level invariants
are reported as data by :func:`validate_problem` instead of raised, so that
loaders and tools can collect every violation at once.

No I/O lives in this module; serialization is owned by ``datasets`` (problem
records) and ``evaluation`` (run records).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence


class ExecMode(str, Enum):
    """How a candidate solution is exercised against tests."""

    FUNCTION_CALL = "function_call"
    STDIN_STDOUT = "stdin_stdout"


class TestKind(str, Enum):
    ASSERTION = "assertion"
    IO_PAIR = "io_pair"


class Verdict(str, Enum):
    """Per-test execution outcome."""

    PASS = "pass"
    WRONG_OUTPUT = "wrong_output"
    RUNTIME_ERROR = "runtime_error"
    TIMEOUT = "timeout"
    HARNESS_ERROR = "harness_error"


class CodeOrigin(str, Enum):
    CODING = "coding"
    DEBUGGING = "debugging"


class AgentKind(str, Enum):
    RETRIEVAL = "retrieval"
    PLANNING = "planning"
    CODING = "coding"
    DEBUGGING = "debugging"
    DIRECT = "direct"


class Mode(str, Enum):
    """Engine operating mode: the full agent pipeline, or one direct call."""

    PIPELINE = "pipeline"
    DIRECT = "direct"


def normalize_ws(text: str) -> str:
    """Collapse all whitespace runs to single spaces and strip the ends."""
    return " ".join(text.split())


@dataclass(frozen=True)
class TestCase:
    """One test: either an assertion snippet or a stdin/stdout pair.

    Assertion tests carry executable ``text`` (function-call mode); IO pairs
    carry ``input`` fed to stdin and the ``expected_output`` compared against
    stdout. ``expected_output`` may be empty only when ``input`` is not.
    """

    kind: TestKind
    label: str
    text: str = ""
    input: str = ""
    expected_output: str = ""

    def __post_init__(self) -> None:
        if self.kind is TestKind.ASSERTION:
            if not self.text.strip():
                raise ValueError(f"assertion test {self.label!r} has empty text")
        else:
            if not self.expected_output and not self.input:
                raise ValueError(
                    f"io test {self.label!r} has empty input and empty expected output"
                )

    def content_key(self) -> tuple:
        """Whitespace-normalized identity used for sample/hidden disjointness."""
        if self.kind is TestKind.ASSERTION:
            return (self.kind.value, normalize_ws(self.text))
        return (self.kind.value, normalize_ws(self.input), normalize_ws(self.expected_output))


@dataclass(frozen=True)
class Problem:
    """A normalized benchmark task.

    ``sample_io`` is everything the agents may see while solving;
    ``hidden_tests`` judge final correctness and are never shown to agents.
    Problem-level invariants are checked by :func:`validate_problem` rather
    than at construction so invalid records can be diagnosed in bulk.
    """

    id: str
    description: str
    sample_io: tuple[TestCase, ...] = ()
    hidden_tests: tuple[TestCase, ...] = ()
    entry_point: str | None = None
    exec_mode: ExecMode = ExecMode.FUNCTION_CALL
    source_dataset: str = ""
    difficulty_tag: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "sample_io", tuple(self.sample_io))
        object.__setattr__(self, "hidden_tests", tuple(self.hidden_tests))


def validate_problem(problem: Problem) -> list[str]:
    """Return every invariant violation for ``problem`` (empty list = valid).

    Violations are stable ``code: detail`` strings, never exceptions.
    """
    violations: list[str] = []
    if not problem.id.strip():
        violations.append("empty-id: problem id must be nonempty")
    if problem.exec_mode is ExecMode.FUNCTION_CALL and not problem.entry_point:
        violations.append("missing-entry-point: function_call mode requires entry_point")
    if problem.exec_mode is ExecMode.STDIN_STDOUT and problem.entry_point:
        violations.append("unexpected-entry-point: stdin_stdout mode forbids entry_point")

    wanted = (
        TestKind.ASSERTION
        if problem.exec_mode is ExecMode.FUNCTION_CALL
        else TestKind.IO_PAIR
    )
    for test in (*problem.sample_io, *problem.hidden_tests):
        if test.kind is not wanted:
            violations.append(
                f"test-kind-mismatch: {test.label!r} is {test.kind.value} but mode is "
                f"{problem.exec_mode.value}"
            )

    hidden_keys = {t.content_key() for t in problem.hidden_tests}
    for test in problem.sample_io:
        if test.content_key() in hidden_keys:
            violations.append(f"overlap: sample test {test.label!r} also appears in hidden tests")
    return violations


@dataclass(frozen=True)
class Exemplar:
    """A self-retrieved related problem with its solution and metadata."""

    description: str
    code: str
    plan: tuple[str, ...]
    algorithm: str = ""
    tutorial: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "plan", tuple(self.plan))
        if not self.code.strip():
            raise ValueError("exemplar code must be nonempty")
        if not self.plan:
            raise ValueError("exemplar plan must be nonempty")


def clamp_confidence(value: float) -> float:
    return min(100.0, max(0.0, float(value)))


@dataclass(frozen=True)
class Plan:
    """A step-by-step solution sketch with its model-reported confidence.

    Confidence is an opaque sort key in [0, 100]; values outside the range
    are clamped at construction.
    """

    steps: tuple[str, ...]
    confidence: float
    origin_exemplar_index: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps:
            raise ValueError("plan must have at least one step")
        if self.origin_exemplar_index < 0:
            raise ValueError("origin_exemplar_index must be >= 0")
        object.__setattr__(self, "confidence", clamp_confidence(self.confidence))

    def as_text(self) -> str:
        return "\n".join(f"{i}. {step}" for i, step in enumerate(self.steps, start=1))


@dataclass(frozen=True)
class CandidateCode:
    """A generated program plus where it came from in the pipeline."""

    source: str
    language_tag: str = "python"
    produced_by: CodeOrigin = CodeOrigin.CODING
    debug_iteration: int = 0

    def __post_init__(self) -> None:
        if not self.source.strip():
            raise ValueError("candidate source must be nonempty")
        if self.produced_by is CodeOrigin.DEBUGGING and self.debug_iteration < 1:
            raise ValueError("debugging output must carry iteration >= 1")
        if self.produced_by is CodeOrigin.CODING and self.debug_iteration != 0:
            raise ValueError("coding output must carry iteration 0")


@dataclass(frozen=True)
class TestVerdict:
    label: str
    verdict: Verdict
    detail: str = ""


@dataclass(frozen=True)
class TestReport:
    """Executor output for one candidate over one test list."""

    verdicts: tuple[TestVerdict, ...]
    all_passed: bool
    wall_time_ms: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "verdicts", tuple(self.verdicts))
        expected = all(v.verdict is Verdict.PASS for v in self.verdicts)
        if self.all_passed != expected:
            raise ValueError("all_passed must equal 'every verdict is Pass'")
        if self.wall_time_ms < 0:
            raise ValueError("wall_time_ms must be >= 0")

    @classmethod
    def from_verdicts(
        cls, verdicts: Iterable[TestVerdict], wall_time_ms: int
    ) -> "TestReport":
        vs = tuple(verdicts)
        return cls(
            verdicts=vs,
            all_passed=all(v.verdict is Verdict.PASS for v in vs),
            wall_time_ms=wall_time_ms,
        )

    def failures(self) -> tuple[TestVerdict, ...]:
        return tuple(v for v in self.verdicts if v.verdict is not Verdict.PASS)


@dataclass(frozen=True)
class AgentToggles:
    """Per-agent enable switches for ablation runs."""

    retrieval: bool = True
    planning: bool = True
    debugging: bool = True


@dataclass(frozen=True)
class RunConfig:
    """One run's knobs.

    ``k`` is the exemplar/plan count, ``t`` the per-plan debug budget.
    In DIRECT mode ``k``, ``t`` and the toggles are ignored by definition.
    """

    k: int = 3
    t: int = 3
    temperature: float = 0.0
    per_test_timeout_ms: int = 10_000
    agent_toggles: AgentToggles = AgentToggles()
    mode: Mode = Mode.PIPELINE

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.t < 0:
            raise ValueError("t must be >= 0")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.per_test_timeout_ms <= 0:
            raise ValueError("per_test_timeout_ms must be > 0")


@dataclass(frozen=True)
class AgentCall:
    """One backend completion made on behalf of an agent."""

    agent: AgentKind
    prompt: str
    response: str
    latency_ms: int = 0
    tokens_in: int = 0
    tokens_out: int = 0


@dataclass(frozen=True)
class UsageTotals:
    """Aggregated cost of a run: call count, token traffic, wall time."""

    api_calls: int = 0
    tokens_in: int = 0
    tokens_out: int = 0
    wall_time_ms: int = 0

    def __post_init__(self) -> None:
        for name in ("api_calls", "tokens_in", "tokens_out", "wall_time_ms"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @classmethod
    def from_transcript(cls, transcript: Sequence[AgentCall]) -> "UsageTotals":
        return cls(
            api_calls=len(transcript),
            tokens_in=sum(c.tokens_in for c in transcript),
            tokens_out=sum(c.tokens_out for c in transcript),
            wall_time_ms=sum(c.latency_ms for c in transcript),
        )

    def __add__(self, other: "UsageTotals") -> "UsageTotals":
        return UsageTotals(
            api_calls=self.api_calls + other.api_calls,
            tokens_in=self.tokens_in + other.tokens_in,
            tokens_out=self.tokens_out + other.tokens_out,
            wall_time_ms=self.wall_time_ms + other.wall_time_ms,
        )


@dataclass(frozen=True)
class TraversalEvent:
    """One step of the plan walk: coded, tested, or debugged."""

    plan_index: int
    kind: str  # "coded" | "tested" | "debugged"
    all_passed: bool | None = None
    iteration: int | None = None


@dataclass(frozen=True)
class TraversalTrace:
    ordered_plan_indices: tuple[int, ...] = ()
    events: tuple[TraversalEvent, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "ordered_plan_indices", tuple(self.ordered_plan_indices))
        object.__setattr__(self, "events", tuple(self.events))


@dataclass(frozen=True)
class SolveOutcome:
    """Final result of solving one problem once."""

    final_code: CandidateCode
    solved_on_samples: bool
    plans_tried: int
    debug_iterations_used: int
    transcript: tuple[AgentCall, ...] = ()
    usage: UsageTotals = UsageTotals()
    trace: TraversalTrace = field(default_factory=TraversalTrace)

    def __post_init__(self) -> None:
        object.__setattr__(self, "transcript", tuple(self.transcript))
