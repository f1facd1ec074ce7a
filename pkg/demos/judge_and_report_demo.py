"""Judge candidate programs against tests, then aggregate Pass@k.

Shows the two halves of the evaluation story in isolation: the sandboxed
executor producing per-test verdicts, and the report builder turning attempt
records into pass@k fractions and usage totals.

Run with:  python demos/judge_and_report_demo.py
"""

from codeloop import (
    Attempt,
    CandidateCode,
    ComparePolicy,
    ExecMode,
    Executor,
    ProblemResult,
    TestCase,
    TestKind,
    build_report,
    compare_output,
)

# --- the judge -------------------------------------------------------------

executor = Executor()

tests = [
    TestCase(kind=TestKind.IO_PAIR, label="t0", input="3 4", expected_output="7"),
    TestCase(kind=TestKind.IO_PAIR, label="t1", input="0 0", expected_output="0"),
    TestCase(kind=TestKind.IO_PAIR, label="t2", input="-2 5", expected_output="3"),
]

candidates = {
    "correct": "a, b = input().split()\nprint(int(a) + int(b))",
    "string_concat_bug": "a, b = input().split()\nprint(a + b)",
    "crashes": "raise RuntimeError('no idea')",
}

for name, source in candidates.items():
    report = executor.run_candidate(
        CandidateCode(source=source), tests, ExecMode.STDIN_STDOUT
    )
    verdicts = ", ".join(f"{v.label}={v.verdict.value}" for v in report.verdicts)
    print(f"{name:<18} all_passed={report.all_passed!s:<5} [{verdicts}]")

# output comparison is policy-driven; floats can be judged with a tolerance
print()
print("tolerant compare:", compare_output("0.333333", "0.333334", ComparePolicy(float_tolerance=1e-5)))

# --- the report ------------------------------------------------------------

results = [
    ProblemResult(
        problem_id=f"demo/{i}",
        attempts=(
            Attempt(attempt_index=1, solved_hidden=i % 3 != 0),
            Attempt(attempt_index=2, solved_hidden=i % 3 != 2),
        ),
        difficulty_tag="introductory" if i < 5 else "interview",
    )
    for i in range(10)
]

report = build_report(results, ks=[1, 2])
print()
for k in sorted(report.pass_at):
    print(f"pass@{k} = {report.pass_at[k]:.3f}")
for tag, fraction in sorted(report.per_difficulty.items()):
    print(f"{tag}: pass@1 = {fraction:.3f}")
