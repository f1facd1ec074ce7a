"""Walk the full agent pipeline on one problem with a scripted backend.

Everything here is offline and deterministic: the "model" replays canned
responses, the executor really runs the generated code in child processes.
The transcript printed at the end is exactly what a live run would record.

Run with:  python demos/scripted_pipeline_demo.py
"""

from codeloop import (
    ExecMode,
    Executor,
    Mode,
    Problem,
    RunConfig,
    ScriptedBackend,
    TestCase,
    TestKind,
    solve,
)

problem = Problem(
    id="demo/sum",
    description=(
        "Read one line with two integers a and b from standard input and "
        "print a + b."
    ),
    sample_io=(
        TestCase(kind=TestKind.IO_PAIR, label="s0", input="1 2", expected_output="3"),
        TestCase(kind=TestKind.IO_PAIR, label="s1", input="10 5", expected_output="15"),
    ),
    hidden_tests=(
        TestCase(kind=TestKind.IO_PAIR, label="h0", input="100 250", expected_output="350"),
    ),
    exec_mode=ExecMode.STDIN_STDOUT,
    source_dataset="demo",
)

# One retrieval response (k=1 exemplar whose numbered comments become the
# plan), one plan with a confidence score, one buggy program, one fix.
responses = [
    """<example>
<description>
Read two integers and print their product.
</description>
<code>
```python
# 1. read the input line and split it
# 2. convert both fields to integers
# 3. print the product
a, b = input().split()
print(int(a) * int(b))
```
</code>
</example>
<algorithm>
direct simulation
</algorithm>
<tutorial>
When a problem states its input format exactly, translate it literally:
read, convert, compute, print. The only traps are off-by-one parsing and
forgetting to convert strings to numbers.
</tutorial>""",
    """<plan>
1. read the single input line and split it into two fields
2. convert the fields to integers
3. print their sum
</plan>
<confidence>
85
</confidence>""",
    # the coding agent's first try has a classic bug: it concatenates strings
    "```python\na, b = input().split()\nprint(a + b)\n```",
    # the debugging agent, shown the failing report, fixes the conversion
    "```python\na, b = input().split()\nprint(int(a) + int(b))\n```",
]

backend = ScriptedBackend(responses)
executor = Executor()
config = RunConfig(k=1, t=1, mode=Mode.PIPELINE)

outcome = solve(problem, config, backend, executor)

print(f"solved on samples: {outcome.solved_on_samples}")
print(f"plans tried:       {outcome.plans_tried}")
print(f"debug iterations:  {outcome.debug_iterations_used}")
print(f"backend calls:     {outcome.usage.api_calls}")
print()
print("agent transcript:")
for call in outcome.transcript:
    print(f"  {call.agent.value:<10} -> {len(call.response)} chars")
print()
print("traversal events:")
for event in outcome.trace.events:
    extra = ""
    if event.all_passed is not None:
        extra = f" all_passed={event.all_passed}"
    if event.iteration is not None:
        extra = f" iteration={event.iteration}"
    print(f"  plan {event.plan_index}: {event.kind}{extra}")
print()
print("final program:")
print(outcome.final_code.source)
