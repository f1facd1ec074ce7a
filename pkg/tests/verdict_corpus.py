"""Hand-written (code, test, expected-verdict) triples covering every verdict
in both execution modes.

WrongOutput can only arise from stdout comparison, so it appears in
stdin/stdout entries; an assertion failure in function-call mode is a runtime
AssertionError by the domain contract, and HarnessError is specific to the
function-call harness process. Between the two modes all five verdicts are
covered several times over.
"""

from __future__ import annotations

import sys
import textwrap
from dataclasses import dataclass

from codeloop.domain import ExecMode, TestCase, TestKind, Verdict
from codeloop.executor import ComparePolicy

FLOAT_POLICY = ComparePolicy(float_tolerance=1e-6)
COLLAPSE_POLICY = ComparePolicy(collapse_blank_lines=True)

# Harness scripts for the HarnessError entries: one exits silently, one
# prints non-JSON garbage, one reports a harness_error record and exits 2.
BROKEN_HARNESSES = {
    "exit_silent": "import sys\nsys.stdin.read()\nsys.exit(3)\n",
    "garbage": "import sys\nsys.stdin.read()\nprint('not json at all')\n",
    "error_record": (
        "import json, sys\nsys.stdin.read()\n"
        "print(json.dumps({'verdict': 'harness_error', 'detail': 'self-reported'}))\n"
        "sys.exit(2)\n"
    ),
}


@dataclass(frozen=True)
class CorpusCase:
    label: str
    mode: ExecMode
    code: str
    test: TestCase
    expected: Verdict
    policy: ComparePolicy | None = None
    timeout_ms: int = 10_000
    harness: str = "default"  # "default" or a BROKEN_HARNESSES key


def _io(label: str, input_text: str, expected: str) -> TestCase:
    return TestCase(
        kind=TestKind.IO_PAIR, label=label, input=input_text, expected_output=expected
    )


def _assert(label: str, text: str) -> TestCase:
    return TestCase(kind=TestKind.ASSERTION, label=label, text=text)


def build_corpus() -> list[CorpusCase]:
    stdin = ExecMode.STDIN_STDOUT
    func = ExecMode.FUNCTION_CALL
    cases = [
        # --- stdin/stdout ---------------------------------------------------
        CorpusCase("echo_pass", stdin, "print(input())", _io("t", "hello", "hello"), Verdict.PASS),
        CorpusCase(
            "trailing_ws_pass", stdin, "print('5  ')", _io("t", "unused", "5"), Verdict.PASS
        ),
        CorpusCase(
            "wrong_answer", stdin, "print('no')", _io("t", "unused", "yes"), Verdict.WRONG_OUTPUT
        ),
        CorpusCase("div_by_zero", stdin, "print(1 / 0)", _io("t", "unused", "x"), Verdict.RUNTIME_ERROR),
        CorpusCase(
            "infinite_loop",
            stdin,
            "while True:\n    pass",
            _io("t", "unused", "x"),
            Verdict.TIMEOUT,
            timeout_ms=2000,
        ),
        CorpusCase(
            "float_within_tolerance",
            stdin,
            "print('0.3333334')",
            _io("t", "unused", "0.3333333"),
            Verdict.PASS,
            policy=FLOAT_POLICY,
        ),
        CorpusCase(
            "float_outside_tolerance",
            stdin,
            "print('0.35')",
            _io("t", "unused", "0.3333333"),
            Verdict.WRONG_OUTPUT,
            policy=FLOAT_POLICY,
        ),
        CorpusCase("empty_expected", stdin, "input()", _io("t", "data", ""), Verdict.PASS),
        CorpusCase(
            "blank_lines_collapsed",
            stdin,
            "print('a')\nprint()\nprint()\nprint('b')",
            _io("t", "unused", "a\n\nb"),
            Verdict.PASS,
            policy=COLLAPSE_POLICY,
        ),
        CorpusCase(
            "syntax_error", stdin, "def (broken", _io("t", "unused", "x"), Verdict.RUNTIME_ERROR
        ),
        CorpusCase(
            "two_line_sum",
            stdin,
            "a = int(input())\nb = int(input())\nprint(a + b)",
            _io("t", "2\n3\n", "5"),
            Verdict.PASS,
        ),
        CorpusCase(
            "stderr_noise_ok",
            stdin,
            "import sys\nsys.stderr.write('warn')\nprint('ok')",
            _io("t", "unused", "ok"),
            Verdict.PASS,
        ),
        # --- function-call ---------------------------------------------------
        CorpusCase(
            "add_pass",
            func,
            "def add(a, b):\n    return a + b",
            _assert("t", "assert add(1, 2) == 3"),
            Verdict.PASS,
        ),
        CorpusCase(
            "add_assertion_fails",
            func,
            "def add(a, b):\n    return a - b",
            _assert("t", "assert add(1, 2) == 3"),
            Verdict.RUNTIME_ERROR,
        ),
        CorpusCase(
            "raises_value_error",
            func,
            "def f():\n    raise ValueError('boom')",
            _assert("t", "f()"),
            Verdict.RUNTIME_ERROR,
        ),
        CorpusCase(
            "function_infinite_loop",
            func,
            "def f():\n    while True:\n        pass",
            _assert("t", "f()"),
            Verdict.TIMEOUT,
            timeout_ms=2000,
        ),
        CorpusCase(
            "harness_exits_silently",
            func,
            "def f():\n    return 1",
            _assert("t", "assert f() == 1"),
            Verdict.HARNESS_ERROR,
            harness="exit_silent",
        ),
        CorpusCase(
            "harness_prints_garbage",
            func,
            "def f():\n    return 1",
            _assert("t", "assert f() == 1"),
            Verdict.HARNESS_ERROR,
            harness="garbage",
        ),
        CorpusCase(
            "candidate_prints_and_passes",
            func,
            "def g():\n    print('side effect')\n    return 1",
            _assert("t", "assert g() == 1"),
            Verdict.PASS,
        ),
        CorpusCase(
            "missing_entry_point",
            func,
            "x = 1",
            _assert("t", "assert add(1, 2) == 3"),
            Verdict.RUNTIME_ERROR,
        ),
        CorpusCase(
            "multiple_assertions_pass",
            func,
            "def mul(a, b):\n    return a * b",
            _assert("t", "assert mul(2, 3) == 6\nassert mul(0, 5) == 0"),
            Verdict.PASS,
        ),
        CorpusCase(
            "module_level_crash",
            func,
            "raise RuntimeError('at import')",
            _assert("t", "assert True"),
            Verdict.RUNTIME_ERROR,
        ),
        CorpusCase(
            "harness_self_reports_error",
            func,
            "def f():\n    return 1",
            _assert("t", "assert f() == 1"),
            Verdict.HARNESS_ERROR,
            harness="error_record",
        ),
        CorpusCase(
            "assertion_with_message",
            func,
            "def add(a, b):\n    return a + b",
            _assert("t", "assert add(1, 1) == 3, 'one plus one'"),
            Verdict.RUNTIME_ERROR,
        ),
    ]
    assert len(cases) >= 20
    return cases


def write_broken_harnesses(tmp_path) -> dict[str, list[str]]:
    """Materialize the broken-harness scripts; returns name -> argv."""
    commands = {}
    for name, source in BROKEN_HARNESSES.items():
        path = tmp_path / f"harness_{name}.py"
        path.write_text(textwrap.dedent(source), encoding="utf-8")
        commands[name] = [sys.executable, str(path)]
    return commands
