"""Benchmark loading and the normalized problem format.

The engine's native interchange format is one JSON object per line (UTF-8,
LF), schema::

    {"id", "description", "exec_mode", "entry_point"?, "sample_io": [...],
     "hidden_tests": [...], "source_dataset", "difficulty_tag"?}

with test objects ``{"kind": "assertion", "label", "text"}`` or
``{"kind": "io_pair", "label", "input", "expected_output"}``. Per-benchmark
adapters convert foreign layouts into this once; the engine core never sees
benchmark-specific fields. Also home of the seeded one-test sample-I/O
extraction used for benchmarks that ship no sample I/O.
"""

from __future__ import annotations

import dataclasses
import json
import random
import re
from pathlib import Path
from typing import Iterable, Sequence

from .domain import ExecMode, Problem, TestCase, TestKind, validate_problem


class DatasetError(Exception):
    pass


class ParseError(DatasetError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DuplicateId(DatasetError):
    pass


class SchemaError(DatasetError):
    def __init__(self, field: str, message: str):
        super().__init__(f"field {field!r}: {message}")
        self.field = field


class InsufficientTests(DatasetError):
    pass


FORMATS = ("normalized", "humaneval", "mbpp", "contest")


# ---------------------------------------------------------------------------
# Normalized format
# ---------------------------------------------------------------------------


def test_to_record(test: TestCase) -> dict:
    if test.kind is TestKind.ASSERTION:
        return {"kind": "assertion", "label": test.label, "text": test.text}
    return {
        "kind": "io_pair",
        "label": test.label,
        "input": test.input,
        "expected_output": test.expected_output,
    }


def record_to_test(record: dict) -> TestCase:
    kind = record.get("kind")
    if kind == "assertion":
        return TestCase(
            kind=TestKind.ASSERTION,
            label=str(record.get("label", "")),
            text=str(record.get("text", "")),
        )
    if kind == "io_pair":
        return TestCase(
            kind=TestKind.IO_PAIR,
            label=str(record.get("label", "")),
            input=str(record.get("input", "")),
            expected_output=str(record.get("expected_output", "")),
        )
    raise SchemaError("kind", f"unknown test kind {kind!r}")


def problem_to_record(problem: Problem) -> dict:
    record: dict = {
        "id": problem.id,
        "description": problem.description,
        "exec_mode": problem.exec_mode.value,
        "sample_io": [test_to_record(t) for t in problem.sample_io],
        "hidden_tests": [test_to_record(t) for t in problem.hidden_tests],
        "source_dataset": problem.source_dataset,
    }
    if problem.entry_point is not None:
        record["entry_point"] = problem.entry_point
    if problem.difficulty_tag is not None:
        record["difficulty_tag"] = problem.difficulty_tag
    return record


def record_to_problem(record: dict) -> Problem:
    for name in ("id", "description", "exec_mode"):
        if name not in record:
            raise SchemaError(name, "missing")
    try:
        mode = ExecMode(record["exec_mode"])
    except ValueError:
        raise SchemaError("exec_mode", f"unknown mode {record['exec_mode']!r}") from None
    return Problem(
        id=str(record["id"]),
        description=str(record["description"]),
        sample_io=tuple(record_to_test(t) for t in record.get("sample_io", [])),
        hidden_tests=tuple(record_to_test(t) for t in record.get("hidden_tests", [])),
        entry_point=record.get("entry_point"),
        exec_mode=mode,
        source_dataset=str(record.get("source_dataset", "")),
        difficulty_tag=record.get("difficulty_tag"),
    )


# ---------------------------------------------------------------------------
# Benchmark adapters
# ---------------------------------------------------------------------------

_ASSERT_CALL_RE = re.compile(r"assert\s+\(?\s*([A-Za-z_]\w*)\s*\(")


def _humaneval_record(record: dict) -> Problem:
    for name in ("task_id", "prompt", "entry_point", "test"):
        if name not in record:
            raise SchemaError(name, "missing from humaneval record")
    entry = str(record["entry_point"])
    check = str(record["test"]).rstrip() + f"\n\ncheck({entry})\n"
    samples = tuple(
        TestCase(kind=TestKind.ASSERTION, label=f"sample_{i}", text=str(text))
        for i, text in enumerate(record.get("sample_tests", []))
    )
    return Problem(
        id=str(record["task_id"]),
        description=str(record["prompt"]),
        sample_io=samples,
        hidden_tests=(TestCase(kind=TestKind.ASSERTION, label="check", text=check),),
        entry_point=entry,
        exec_mode=ExecMode.FUNCTION_CALL,
        source_dataset="humaneval",
    )


def _mbpp_record(record: dict) -> Problem:
    for name in ("task_id", "text", "test_list"):
        if name not in record:
            raise SchemaError(name, "missing from mbpp record")
    tests = list(record["test_list"]) + list(record.get("challenge_test_list", []))
    if not tests:
        raise SchemaError("test_list", "must be nonempty")
    entry = record.get("entry_point")
    if not entry:
        match = _ASSERT_CALL_RE.search(str(tests[0]))
        if not match:
            raise SchemaError("entry_point", "absent and not derivable from first assertion")
        entry = match.group(1)
    setup = str(record.get("test_setup_code", "")).strip()
    prefix = setup + "\n" if setup else ""
    hidden = tuple(
        TestCase(kind=TestKind.ASSERTION, label=f"test_{i}", text=prefix + str(t))
        for i, t in enumerate(tests)
    )
    return Problem(
        id=str(record["task_id"]),
        description=str(record["text"]),
        sample_io=(),
        hidden_tests=hidden,
        entry_point=str(entry),
        exec_mode=ExecMode.FUNCTION_CALL,
        source_dataset="mbpp",
    )


def _contest_record(record: dict) -> Problem:
    problem_id = record.get("id") or record.get("name")
    if not problem_id:
        raise SchemaError("id", "missing from contest record")
    if "description" not in record:
        raise SchemaError("description", "missing from contest record")

    def io_cases(items: Iterable[dict], prefix: str) -> tuple[TestCase, ...]:
        out = []
        for i, item in enumerate(items):
            out.append(
                TestCase(
                    kind=TestKind.IO_PAIR,
                    label=f"{prefix}_{i}",
                    input=str(item.get("input", "")),
                    expected_output=str(
                        item.get("expected_output", item.get("output", ""))
                    ),
                )
            )
        return tuple(out)

    samples = record.get("sample_tests", record.get("public_tests", []))
    hidden = record.get("hidden_tests", record.get("private_tests", []))
    difficulty = record.get("difficulty_tag") or record.get("difficulty")
    return Problem(
        id=str(problem_id),
        description=str(record["description"]),
        sample_io=io_cases(samples, "sample"),
        hidden_tests=io_cases(hidden, "hidden"),
        entry_point=None,
        exec_mode=ExecMode.STDIN_STDOUT,
        source_dataset=str(record.get("source_dataset", "contest")),
        difficulty_tag=str(difficulty) if difficulty is not None else None,
    )


_ADAPTERS = {
    "normalized": record_to_problem,
    "humaneval": _humaneval_record,
    "mbpp": _mbpp_record,
    "contest": _contest_record,
}


def load_dataset(path: str | Path, format: str = "normalized") -> list[Problem]:
    """Load a JSONL benchmark file into validated Problems, order preserved.

    Raises ParseError(line_no) for unparseable lines, DuplicateId for a
    repeated problem id, and SchemaError when a record is missing fields or
    the resulting Problem violates its invariants.
    """
    if format not in _ADAPTERS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    adapter = _ADAPTERS[format]
    problems: list[Problem] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, f"invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise ParseError(line_no, "record is not a JSON object")
            try:
                problem = adapter(record)
            except ValueError as exc:
                raise ParseError(line_no, str(exc)) from exc
            if problem.id in seen:
                raise DuplicateId(f"line {line_no}: duplicate problem id {problem.id!r}")
            seen.add(problem.id)
            violations = validate_problem(problem)
            if violations:
                raise SchemaError("problem", f"line {line_no}: {violations}")
            problems.append(problem)
    return problems


def save_problems(problems: Sequence[Problem], path: str | Path) -> None:
    """Write problems in the normalized format: UTF-8, LF, one object per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for problem in problems:
            fh.write(json.dumps(problem_to_record(problem), ensure_ascii=False))
            fh.write("\n")


# ---------------------------------------------------------------------------
# Sample-I/O extraction for benchmarks without samples
# ---------------------------------------------------------------------------


def extract_mbpp_sample_io(problem: Problem, seed: int) -> Problem:
    """Move one seeded-uniformly-drawn test from the hidden pool to sample_io.

    The draw is restricted to tests whose whitespace-normalized content is
    unique within the pool, so the moved test is guaranteed mutually
    exclusive from the remaining hidden set while the total test count is
    preserved exactly. The seed is mixed with the problem id, so one run seed
    gives independent, reproducible choices across problems.
    """
    if problem.sample_io:
        raise ValueError(f"problem {problem.id!r} already has sample I/O")
    pool = problem.hidden_tests
    if len(pool) < 2:
        raise InsufficientTests(
            f"problem {problem.id!r} has {len(pool)} tests; need at least 2"
        )
    counts: dict[tuple, int] = {}
    for test in pool:
        key = test.content_key()
        counts[key] = counts.get(key, 0) + 1
    eligible = [t for t in pool if counts[t.content_key()] == 1]
    if not eligible:
        raise InsufficientTests(
            f"problem {problem.id!r} has no test with unique content to extract"
        )
    rng = random.Random(f"{seed}:{problem.id}")
    chosen = eligible[rng.randrange(len(eligible))]
    remaining = tuple(t for t in pool if t is not chosen)
    return dataclasses.replace(problem, sample_io=(chosen,), hidden_tests=remaining)
