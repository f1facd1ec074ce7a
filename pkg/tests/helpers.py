"""Shared builders for the test suite: scripted agent responses, fixture
problems, and a scriptable fake executor for traversal tests."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from codeloop.domain import (
    CandidateCode,
    ExecMode,
    Problem,
    TestCase,
    TestKind,
    TestReport,
    TestVerdict,
    Verdict,
)

# ---------------------------------------------------------------------------
# Scripted response builders (shapes the default templates ask for)
# ---------------------------------------------------------------------------


def exemplar_block(description: str = "count items in a list", steps: int = 2) -> str:
    code_lines = "\n".join(f"# {i}. step number {i}" for i in range(1, steps + 1))
    return (
        "<example>\n"
        f"<description>\n{description}\n</description>\n"
        "<code>\n```python\n"
        f"{code_lines}\n"
        "def solve():\n    return 0\n"
        "```\n</code>\n"
        "</example>"
    )


def retrieval_response(k: int, algorithm: str = "counting", steps: int = 2) -> str:
    blocks = "\n".join(exemplar_block(f"related problem {i}", steps=steps) for i in range(k))
    return (
        f"{blocks}\n"
        f"<algorithm>\n{algorithm}\n</algorithm>\n"
        "<tutorial>\nCount carefully and mind the edges.\n</tutorial>"
    )


def planning_response(confidence: float, steps: Sequence[str] = ("read input", "print answer")) -> str:
    plan = "\n".join(f"{i}. {s}" for i, s in enumerate(steps, start=1))
    return f"<plan>\n{plan}\n</plan>\n<confidence>\n{confidence}\n</confidence>"


def code_response(source: str) -> str:
    return f"Here is the program:\n```python\n{source}\n```"


# ---------------------------------------------------------------------------
# Problems
# ---------------------------------------------------------------------------


def io_test(label: str, input_text: str, expected: str) -> TestCase:
    return TestCase(
        kind=TestKind.IO_PAIR, label=label, input=input_text, expected_output=expected
    )


def assertion_test(label: str, text: str) -> TestCase:
    return TestCase(kind=TestKind.ASSERTION, label=label, text=text)


def stdin_problem(
    problem_id: str = "p1",
    samples: Sequence[TestCase] = (),
    hidden: Sequence[TestCase] = (),
    description: str = "Read two integers from stdin and print their sum.",
) -> Problem:
    return Problem(
        id=problem_id,
        description=description,
        sample_io=tuple(samples),
        hidden_tests=tuple(hidden),
        exec_mode=ExecMode.STDIN_STDOUT,
        source_dataset="fixture",
    )


def function_problem(
    problem_id: str = "f1",
    entry_point: str = "add",
    samples: Sequence[TestCase] = (),
    hidden: Sequence[TestCase] = (),
    description: str = "Write add(a, b) returning the sum of its arguments.",
) -> Problem:
    return Problem(
        id=problem_id,
        description=description,
        sample_io=tuple(samples),
        hidden_tests=tuple(hidden),
        entry_point=entry_point,
        exec_mode=ExecMode.FUNCTION_CALL,
        source_dataset="fixture",
    )


# ---------------------------------------------------------------------------
# Fake executor for traversal tests: replays a script of pass/fail booleans
# ---------------------------------------------------------------------------


@dataclass
class FakeExecutor:
    """run_candidate returns Pass/WrongOutput reports per a boolean script.

    Script order is invocation order; running past the end fails the test
    that used it (explicit is better than a silent default).
    """

    script: Sequence[bool] = ()
    calls: list[CandidateCode] = field(default_factory=list)

    def run_candidate(
        self, code, tests, mode, limits=None, policy=None, entry_point=None
    ) -> TestReport:
        index = len(self.calls)
        self.calls.append(code)
        assert index < len(self.script), "fake executor script exhausted"
        passed = self.script[index]
        verdicts = tuple(
            TestVerdict(
                t.label,
                Verdict.PASS if passed else Verdict.WRONG_OUTPUT,
                "" if passed else f"expected:\n{t.expected_output}\nactual:\n(wrong)",
            )
            for t in tests
        )
        return TestReport.from_verdicts(verdicts, wall_time_ms=1)

    @property
    def call_count(self) -> int:
        return len(self.calls)
