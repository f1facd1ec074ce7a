"""Runs candidate code against tests in isolated child processes.

Two modes, matching the two test kinds:

* stdin/stdout — the candidate runs as a plain program, the test's input is
  fed on stdin, and captured stdout is compared under a ComparePolicy.
* function-call — harness construction is delegated to an external shim
  process speaking a one-shot JSON contract: the engine writes
  ``{code, test, entry_point}`` to the shim's stdin and reads one
  ``{verdict, detail}`` record from its stdout.

Every test gets a fresh child process; the parent owns the timeout and kills
the whole process group on deadline, so a hanging or crashing candidate can
never take the engine down with it.
"""

from __future__ import annotations

import json
import os
import signal
import subprocess
import sys
import tempfile
import threading
import time
from dataclasses import dataclass
from typing import Sequence

from .domain import (
    CandidateCode,
    ExecMode,
    TestCase,
    TestKind,
    TestReport,
    TestVerdict,
    Verdict,
)


class ExecutorError(Exception):
    pass


class SandboxUnavailable(ExecutorError):
    """The interpreter or harness needed to run candidates is missing."""


class InternalError(ExecutorError):
    pass


@dataclass(frozen=True)
class ExecLimits:
    per_test_timeout_ms: int = 10_000
    max_output_bytes: int = 64_000
    max_memory_mb: int | None = None

    def __post_init__(self) -> None:
        if self.per_test_timeout_ms <= 0:
            raise ValueError("per_test_timeout_ms must be > 0")
        if self.max_output_bytes <= 0:
            raise ValueError("max_output_bytes must be > 0")
        if self.max_memory_mb is not None and self.max_memory_mb <= 0:
            raise ValueError("max_memory_mb must be > 0 when set")


@dataclass(frozen=True)
class ComparePolicy:
    """Output-equality policy for stdin/stdout judging.

    Default matches common judge behavior: trailing whitespace is trimmed per
    line and at the end, nothing else is forgiven.
    """

    trim_trailing_whitespace: bool = True
    collapse_blank_lines: bool = False
    float_tolerance: float | None = None

    def __post_init__(self) -> None:
        if self.float_tolerance is not None and self.float_tolerance < 0:
            raise ValueError("float_tolerance must be >= 0 when set")


def _normalize(text: str, policy: ComparePolicy) -> str:
    lines = text.split("\n")
    if policy.trim_trailing_whitespace:
        lines = [line.rstrip() for line in lines]
        while lines and lines[-1] == "":
            lines.pop()
    if policy.collapse_blank_lines:
        collapsed: list[str] = []
        for line in lines:
            if line == "" and collapsed and collapsed[-1] == "":
                continue
            collapsed.append(line)
        lines = collapsed
    return "\n".join(lines)


def compare_output(expected: str, actual: str, policy: ComparePolicy) -> bool:
    """Pure equality check: normalize per policy, then compare.

    With a float tolerance set, both sides are tokenized on whitespace and
    token pairs that parse as numbers on both sides compare within tolerance.
    """
    left = _normalize(expected, policy)
    right = _normalize(actual, policy)
    if left == right:
        return True
    if policy.float_tolerance is None:
        return False
    ltok, rtok = left.split(), right.split()
    if len(ltok) != len(rtok):
        return False
    for a, b in zip(ltok, rtok):
        try:
            fa, fb = float(a), float(b)
        except ValueError:
            if a != b:
                return False
            continue
        if not (fa == fa and fb == fb):  # NaN never matches
            return False
        if abs(fa - fb) > policy.float_tolerance:
            return False
    return True


def _clip(text: str, limit: int) -> str:
    if len(text) <= limit:
        return text
    marker = "...[truncated]"
    return text[: max(0, limit - len(marker))] + marker


_SHIM_VERDICTS = {
    "pass": Verdict.PASS,
    # An assertion failure is a runtime AssertionError from the engine's
    # point of view; WrongOutput is reserved for stdout comparison.
    "assertion_failed": Verdict.RUNTIME_ERROR,
    "runtime_error": Verdict.RUNTIME_ERROR,
    "harness_error": Verdict.HARNESS_ERROR,
}


class Executor:
    """Judges candidates against tests with per-test child processes.

    ``shim_command`` is the argv for the function-call harness process; it
    defaults to ``python -m execshim`` and must be installed separately (the
    engine only speaks its stdin/stdout contract). A bounded semaphore caps
    how many child processes run at once across concurrent callers.
    """

    def __init__(
        self,
        shim_command: Sequence[str] | None = None,
        limits: ExecLimits | None = None,
        policy: ComparePolicy | None = None,
        max_workers: int = 4,
        python_executable: str | None = None,
    ):
        if max_workers < 1:
            raise ValueError("max_workers must be >= 1")
        self._python = python_executable or sys.executable
        self._shim_command = (
            list(shim_command) if shim_command else [self._python, "-m", "execshim"]
        )
        self._limits = limits or ExecLimits()
        self._policy = policy or ComparePolicy()
        self._slots = threading.BoundedSemaphore(max_workers)

    @property
    def default_limits(self) -> ExecLimits:
        return self._limits

    @property
    def default_policy(self) -> ComparePolicy:
        return self._policy

    def run_candidate(
        self,
        code: CandidateCode,
        tests: Sequence[TestCase],
        mode: ExecMode,
        limits: ExecLimits | None = None,
        policy: ComparePolicy | None = None,
        entry_point: str | None = None,
    ) -> TestReport:
        """Run every test in its own fresh child process; never raises for
        candidate misbehavior — that becomes a verdict."""
        if not tests:
            raise ValueError("tests must be nonempty")
        wanted = TestKind.ASSERTION if mode is ExecMode.FUNCTION_CALL else TestKind.IO_PAIR
        for test in tests:
            if test.kind is not wanted:
                raise ValueError(
                    f"test {test.label!r} is {test.kind.value}, incompatible with {mode.value}"
                )
        limits = limits or self._limits
        policy = policy or self._policy

        started = time.monotonic()
        verdicts: list[TestVerdict] = []
        if mode is ExecMode.STDIN_STDOUT:
            source_path = self._write_source(code.source)
            try:
                for test in tests:
                    verdicts.append(self._run_stdin_test(source_path, test, limits, policy))
            finally:
                try:
                    os.unlink(source_path)
                except OSError:
                    pass
        else:
            for test in tests:
                verdicts.append(
                    self._run_function_test(code.source, test, entry_point, limits)
                )
        wall_ms = int((time.monotonic() - started) * 1000)
        return TestReport.from_verdicts(verdicts, wall_time_ms=wall_ms)

    # -- child-process plumbing ------------------------------------------------

    def _write_source(self, source: str) -> str:
        fd, path = tempfile.mkstemp(suffix=".py", prefix="candidate_")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(source)
        return path

    def _spawn(self, argv: Sequence[str], limits: ExecLimits) -> subprocess.Popen:
        preexec = None
        if limits.max_memory_mb is not None and os.name == "posix":
            cap = limits.max_memory_mb * 1024 * 1024

            def preexec() -> None:  # runs in the child between fork and exec
                import resource

                resource.setrlimit(resource.RLIMIT_AS, (cap, cap))

        try:
            return subprocess.Popen(
                list(argv),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                start_new_session=True,
                preexec_fn=preexec,
            )
        except FileNotFoundError as exc:
            raise SandboxUnavailable(f"cannot spawn {argv[0]!r}: {exc}") from exc

    def _communicate(
        self, proc: subprocess.Popen, input_text: str, limits: ExecLimits
    ) -> tuple[str, str, bool]:
        """Returns (stdout, stderr, timed_out); kills the process group on deadline."""
        try:
            out, err = proc.communicate(input_text, timeout=limits.per_test_timeout_ms / 1000.0)
            return out, err, False
        except subprocess.TimeoutExpired:
            self._kill_tree(proc)
            try:
                out, err = proc.communicate(timeout=5)
            except (subprocess.TimeoutExpired, OSError, ValueError):
                out, err = "", ""
            return out or "", err or "", True

    @staticmethod
    def _kill_tree(proc: subprocess.Popen) -> None:
        try:
            os.killpg(os.getpgid(proc.pid), signal.SIGKILL)
        except (ProcessLookupError, PermissionError, OSError):
            try:
                proc.kill()
            except OSError:
                pass

    def _run_stdin_test(
        self, source_path: str, test: TestCase, limits: ExecLimits, policy: ComparePolicy
    ) -> TestVerdict:
        started = time.monotonic()
        with self._slots:
            proc = self._spawn([self._python, source_path], limits)
            out, err, timed_out = self._communicate(proc, test.input, limits)
        elapsed_ms = int((time.monotonic() - started) * 1000)
        cap = limits.max_output_bytes
        if timed_out:
            return TestVerdict(
                test.label,
                Verdict.TIMEOUT,
                f"no verdict after {limits.per_test_timeout_ms} ms (killed at {elapsed_ms} ms)",
            )
        if proc.returncode != 0:
            detail = f"exit code {proc.returncode}\n{err.strip()}"
            return TestVerdict(test.label, Verdict.RUNTIME_ERROR, _clip(detail, cap))
        if compare_output(test.expected_output, out, policy):
            return TestVerdict(test.label, Verdict.PASS)
        detail = (
            f"expected:\n{_normalize(test.expected_output, policy)}\n"
            f"actual:\n{_normalize(out, policy)}"
        )
        return TestVerdict(test.label, Verdict.WRONG_OUTPUT, _clip(detail, cap))

    def _run_function_test(
        self,
        source: str,
        test: TestCase,
        entry_point: str | None,
        limits: ExecLimits,
    ) -> TestVerdict:
        request = json.dumps(
            {"code": source, "test": test.text, "entry_point": entry_point}
        )
        with self._slots:
            proc = self._spawn(self._shim_command, limits)
            out, err, timed_out = self._communicate(proc, request, limits)
        cap = limits.max_output_bytes
        if timed_out:
            return TestVerdict(
                test.label,
                Verdict.TIMEOUT,
                f"no verdict after {limits.per_test_timeout_ms} ms",
            )
        record = self._parse_shim_record(out)
        if record is None:
            detail = (
                f"harness exited {proc.returncode} without a verdict record\n"
                f"stdout: {out.strip()[:500]}\nstderr: {err.strip()[:500]}"
            )
            return TestVerdict(test.label, Verdict.HARNESS_ERROR, _clip(detail, cap))
        verdict = _SHIM_VERDICTS.get(str(record.get("verdict", "")))
        if verdict is None:
            return TestVerdict(
                test.label,
                Verdict.HARNESS_ERROR,
                _clip(f"unknown harness verdict {record.get('verdict')!r}", cap),
            )
        return TestVerdict(test.label, verdict, _clip(str(record.get("detail", "")), cap))

    @staticmethod
    def _parse_shim_record(stdout: str) -> dict | None:
        text = stdout.strip()
        if not text:
            return None
        for chunk in (text, text.splitlines()[-1]):
            try:
                record = json.loads(chunk)
            except json.JSONDecodeError:
                continue
            if isinstance(record, dict):
                return record
        return None
