"""One-shot test harness for generated Python code.

Reads a single JSON request ``{"code": str, "test": str, "entry_point": str?}``
on stdin, executes the candidate code and then the test text in one fresh
namespace, and prints exactly one JSON verdict record
``{"verdict": ..., "detail": ...}`` on stdout. Verdicts:

* ``pass``             — the test ran without raising
* ``assertion_failed`` — the test raised AssertionError; detail names the
                         failing assertion line
* ``runtime_error``    — any other exception; detail is ``Type: message``
* ``harness_error``    — the harness itself failed (malformed input, ...)

Exit status is 0 whenever a pass/assertion_failed/runtime_error verdict was
delivered, 2 on harness failure. Candidate prints go into the verdict detail,
never onto the harness's stdout. The parent process owns timeouts and
sandboxing; this process runs one request and exits.
"""

from __future__ import annotations

import io
import json
import sys
import traceback
from contextlib import redirect_stdout

DETAIL_LIMIT = 64 * 1024

PASS = "pass"
ASSERTION_FAILED = "assertion_failed"
RUNTIME_ERROR = "runtime_error"
HARNESS_ERROR = "harness_error"

# The candidate runs under a non-__main__ name so `if __name__ == "__main__"`
# guards in generated programs stay inert in function-call mode.
_NAMESPACE_NAME = "__candidate__"


def _clip(text: str) -> str:
    if len(text) <= DETAIL_LIMIT:
        return text
    marker = "...[truncated]"
    return text[: DETAIL_LIMIT - len(marker)] + marker


def _assertion_line(test_text: str, exc: AssertionError) -> str:
    """Best-effort source line of the failing assertion inside the test text."""
    lines = test_text.splitlines()
    for frame in reversed(traceback.extract_tb(exc.__traceback__)):
        if frame.filename == "<test>" and frame.lineno and frame.lineno <= len(lines):
            return lines[frame.lineno - 1].strip()
    return ""


def _with_captured(detail: str, captured: str) -> str:
    if captured:
        detail = f"{detail}\ncandidate stdout:\n{captured}" if detail else captured
    return _clip(detail)


def execute(request: dict) -> dict:
    """Run one candidate + test pair; always returns a verdict record."""
    code = request.get("code")
    test = request.get("test")
    if not isinstance(code, str) or not isinstance(test, str):
        return {
            "verdict": HARNESS_ERROR,
            "detail": "request must carry string 'code' and 'test' fields",
        }
    entry_point = request.get("entry_point")

    namespace: dict = {"__name__": _NAMESPACE_NAME}
    captured = io.StringIO()
    try:
        with redirect_stdout(captured):
            exec(compile(code, "<candidate>", "exec"), namespace)
            if isinstance(entry_point, str) and entry_point in namespace:
                # convenience alias: HumanEval-style tests call check(candidate)
                namespace.setdefault("candidate", namespace[entry_point])
            exec(compile(test, "<test>", "exec"), namespace)
    except AssertionError as exc:
        line = _assertion_line(test, exc)
        message = str(exc)
        detail = "AssertionError: " + (line or message or "assertion failed")
        if line and message:
            detail += f" ({message})"
        return {
            "verdict": ASSERTION_FAILED,
            "detail": _with_captured(detail, captured.getvalue()),
        }
    except BaseException as exc:  # noqa: BLE001 — candidate may raise anything
        detail = f"{type(exc).__name__}: {exc}"
        return {
            "verdict": RUNTIME_ERROR,
            "detail": _with_captured(detail, captured.getvalue()),
        }
    return {"verdict": PASS, "detail": _with_captured("", captured.getvalue())}


def main(stdin=None, stdout=None) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout

    def emit(record: dict) -> None:
        stdout.write(json.dumps(record) + "\n")
        stdout.flush()

    try:
        request = json.loads(stdin.read())
        if not isinstance(request, dict):
            raise ValueError("request must be a JSON object")
    except (ValueError, OSError) as exc:
        emit({"verdict": HARNESS_ERROR, "detail": _clip(f"malformed request: {exc}")})
        return 2

    try:
        record = execute(request)
    except Exception as exc:  # harness bug, not candidate behavior
        emit({"verdict": HARNESS_ERROR, "detail": _clip(f"harness fault: {exc}")})
        return 2

    emit(record)
    return 0 if record["verdict"] != HARNESS_ERROR else 2


def entrypoint() -> None:
    sys.exit(main())
