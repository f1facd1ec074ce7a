"""Session fixtures: a stub function-call harness so the primary suite never
needs the separate shim package."""

from __future__ import annotations

import sys
import textwrap

import pytest

# The stub speaks the same one-shot JSON contract as the real harness:
# one {code, test, entry_point} request on stdin, one {verdict, detail}
# record on stdout. Candidate prints are swallowed into the detail.
STUB_HARNESS = textwrap.dedent(
    '''
    import io, json, sys, traceback
    from contextlib import redirect_stdout

    def main():
        try:
            request = json.loads(sys.stdin.read())
            code, test = request["code"], request["test"]
        except Exception as exc:
            print(json.dumps({"verdict": "harness_error", "detail": str(exc)}))
            return 2
        namespace = {"__name__": "__stub__"}
        buffer = io.StringIO()
        try:
            with redirect_stdout(buffer):
                exec(compile(code, "<candidate>", "exec"), namespace)
                entry = request.get("entry_point")
                if entry and entry in namespace:
                    namespace.setdefault("candidate", namespace[entry])
                exec(compile(test, "<test>", "exec"), namespace)
        except AssertionError as exc:
            line = ""
            for frame in traceback.extract_tb(sys.exc_info()[2]):
                if frame.filename == "<test>" and frame.lineno:
                    lines = test.splitlines()
                    if frame.lineno <= len(lines):
                        line = lines[frame.lineno - 1].strip()
            detail = "AssertionError: " + (line or str(exc) or "assertion failed")
            print(json.dumps({"verdict": "assertion_failed", "detail": detail}))
            return 0
        except BaseException as exc:
            detail = type(exc).__name__ + ": " + str(exc)
            print(json.dumps({"verdict": "runtime_error", "detail": detail}))
            return 0
        printed = buffer.getvalue()
        print(json.dumps({"verdict": "pass", "detail": printed[:1000]}))
        return 0

    if __name__ == "__main__":
        sys.exit(main())
    '''
)


@pytest.fixture(scope="session")
def stub_shim_command(tmp_path_factory) -> list[str]:
    path = tmp_path_factory.mktemp("stub") / "stub_harness.py"
    path.write_text(STUB_HARNESS, encoding="utf-8")
    return [sys.executable, str(path)]
