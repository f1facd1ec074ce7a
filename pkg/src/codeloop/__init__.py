"""codeloop: multi-agent LLM code generation with confidence-ordered plan
traversal, a sandboxed execution judge, and a Pass@k benchmark harness."""

from .backend import (
    BackendConfig,
    CompletionRequest,
    CompletionResult,
    OpenAIChatBackend,
    ScriptedBackend,
    make_scripted,
)
from .datasets import extract_mbpp_sample_io, load_dataset, save_problems
from .domain import (
    AgentCall,
    AgentKind,
    AgentToggles,
    CandidateCode,
    CodeOrigin,
    ExecMode,
    Exemplar,
    Mode,
    Plan,
    Problem,
    RunConfig,
    SolveOutcome,
    TestCase,
    TestKind,
    TestReport,
    TestVerdict,
    TraversalTrace,
    UsageTotals,
    Verdict,
    validate_problem,
)
from .evaluation import (
    Attempt,
    ProblemResult,
    Report,
    RunWriter,
    build_report,
    judge_hidden,
    load_results,
    pass_at_k,
    pass_at_k_unbiased,
    persist_run,
    resume_run,
)
from .executor import ComparePolicy, ExecLimits, Executor, compare_output
from .traversal import solve, sort_plans

__version__ = "0.1.0"

__all__ = [
    "AgentCall",
    "AgentKind",
    "AgentToggles",
    "Attempt",
    "BackendConfig",
    "CandidateCode",
    "CodeOrigin",
    "ComparePolicy",
    "CompletionRequest",
    "CompletionResult",
    "ExecLimits",
    "ExecMode",
    "Executor",
    "Exemplar",
    "Mode",
    "OpenAIChatBackend",
    "Plan",
    "Problem",
    "ProblemResult",
    "Report",
    "RunConfig",
    "RunWriter",
    "ScriptedBackend",
    "SolveOutcome",
    "TestCase",
    "TestKind",
    "TestReport",
    "TestVerdict",
    "TraversalTrace",
    "UsageTotals",
    "Verdict",
    "build_report",
    "compare_output",
    "extract_mbpp_sample_io",
    "judge_hidden",
    "load_dataset",
    "load_results",
    "make_scripted",
    "pass_at_k",
    "pass_at_k_unbiased",
    "persist_run",
    "resume_run",
    "save_problems",
    "solve",
    "sort_plans",
    "validate_problem",
]
