"""Operator entry point: run a benchmark, then report on its record file.

Exit codes: 0 = completed, 1 = fatal configuration or input error,
3 = backend exhaustion (credentials rejected, rate limits exhausted, or a
scripted backend running out of responses).

Config precedence for run settings: command-line flags > --config JSON file
> built-in defaults (the preset picks k and t).
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import evaluation
from .agents import AgentError, load_templates
from .backend import (
    AuthError,
    BackendConfig,
    BackendError,
    OpenAIChatBackend,
    RateLimited,
    ScriptedBackend,
    ScriptExhausted,
)
from .datasets import (
    DatasetError,
    InsufficientTests,
    extract_mbpp_sample_io,
    load_dataset,
)
from .domain import AgentToggles, Mode, Problem, RunConfig
from .evaluation import (
    Attempt,
    CorruptRecord,
    ProblemResult,
    Report,
    RunWriter,
    build_report,
    judge_hidden,
    load_results,
    resume_run,
)
from .executor import ComparePolicy, ExecLimits, Executor, ExecutorError
from .traversal import solve

PRESETS = {"humaneval": (5, 5), "default": (3, 3)}

_EXIT_OK = 0
_EXIT_CONFIG = 1
_EXIT_BACKEND = 3


@dataclass
class RunSettings:
    """Fully resolved settings for one `codeloop run` invocation."""

    dataset: str
    format: str = "normalized"
    mode: str = "pipeline"
    preset: str = "default"
    k: int | None = None
    t: int | None = None
    temperature: float = 0.0
    timeout_ms: int = 10_000
    workers: int = 1
    out: str = "run_records.jsonl"
    resume: bool = False
    disabled_agents: tuple[str, ...] = ()
    templates: str | None = None
    seed: int = 0
    pass_at: tuple[int, ...] = (1,)
    estimator: str = "plain"
    backend: str = "openai"
    script: str | None = None
    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-4o-mini"
    max_retries: int = 3
    api_key_env: str = "OPENAI_API_KEY"
    shim: str | None = None
    sample_extraction: bool = True
    float_tolerance: float | None = None
    requests_per_minute: int | None = None

    def resolved_k(self) -> int:
        return self.k if self.k is not None else PRESETS.get(self.preset, PRESETS["default"])[0]

    def resolved_t(self) -> int:
        return self.t if self.t is not None else PRESETS.get(self.preset, PRESETS["default"])[1]

    def run_config(self) -> RunConfig:
        return RunConfig(
            k=self.resolved_k(),
            t=self.resolved_t(),
            temperature=self.temperature,
            per_test_timeout_ms=self.timeout_ms,
            agent_toggles=AgentToggles(
                retrieval="retrieval" not in self.disabled_agents,
                planning="planning" not in self.disabled_agents,
                debugging="debugging" not in self.disabled_agents,
            ),
            mode=Mode(self.mode),
        )


def _parse_pass_at(text: str) -> tuple[int, ...]:
    try:
        values = tuple(sorted({int(part) for part in text.split(",") if part.strip()}))
    except ValueError:
        raise ValueError(f"--pass-at expects comma-separated integers, got {text!r}")
    if not values or any(v < 1 for v in values):
        raise ValueError(f"--pass-at values must be >= 1, got {text!r}")
    return values


def resolve_settings(args: argparse.Namespace) -> RunSettings:
    """Merge flags over config-file values over defaults."""
    config: dict = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            raise ValueError("--config file must hold a JSON object")

    def pick(flag_value, config_key: str, default):
        if flag_value is not None:
            return flag_value
        if config_key in config:
            return config[config_key]
        return default

    pass_at_text = pick(args.pass_at, "pass_at", "1")
    settings = RunSettings(
        dataset=pick(args.dataset, "dataset", None),
        format=pick(args.format, "format", "normalized"),
        mode=pick(args.mode, "mode", "pipeline"),
        preset=pick(args.preset, "preset", "default"),
        k=pick(args.k, "k", None),
        t=pick(args.t, "t", None),
        temperature=float(pick(args.temperature, "temperature", 0.0)),
        timeout_ms=int(pick(args.timeout_ms, "timeout_ms", 10_000)),
        workers=int(pick(args.workers, "workers", 1)),
        out=pick(args.out, "out", "run_records.jsonl"),
        resume=bool(args.resume or config.get("resume", False)),
        disabled_agents=tuple(args.disable_agent or config.get("disable_agent", [])),
        templates=pick(args.templates, "templates", None),
        seed=int(pick(args.seed, "seed", 0)),
        pass_at=_parse_pass_at(str(pass_at_text)),
        estimator=pick(args.estimator, "estimator", "plain"),
        backend=pick(args.backend, "backend", "openai"),
        script=pick(args.script, "script", None),
        base_url=pick(args.base_url, "base_url", "https://api.openai.com/v1"),
        model=pick(args.model, "model", "gpt-4o-mini"),
        max_retries=int(pick(args.max_retries, "max_retries", 3)),
        api_key_env=pick(args.api_key_env, "api_key_env", "OPENAI_API_KEY"),
        shim=pick(args.shim, "shim", None),
        sample_extraction=not (
            args.no_sample_extraction or config.get("no_sample_extraction", False)
        ),
        float_tolerance=pick(args.float_tolerance, "float_tolerance", None),
        requests_per_minute=pick(args.requests_per_minute, "requests_per_minute", None),
    )
    if settings.dataset is None:
        raise ValueError("--dataset is required")
    if settings.mode not in ("pipeline", "direct"):
        raise ValueError(f"--mode must be pipeline or direct, got {settings.mode!r}")
    bad = [a for a in settings.disabled_agents if a not in ("retrieval", "planning", "debugging")]
    if bad:
        raise ValueError(f"--disable-agent accepts retrieval/planning/debugging, got {bad}")
    return settings


def _build_backend(settings: RunSettings):
    if settings.backend == "scripted":
        if not settings.script:
            raise ValueError("--backend scripted requires --script FILE")
        with open(settings.script, encoding="utf-8") as fh:
            data = json.load(fh)
        responses = data["responses"] if isinstance(data, dict) else data
        if not isinstance(responses, list):
            raise ValueError("--script file must hold a JSON array of response strings")
        return ScriptedBackend([str(r) for r in responses])
    if settings.backend != "openai":
        raise ValueError(f"unknown backend {settings.backend!r}")
    return OpenAIChatBackend(
        BackendConfig(
            base_url=settings.base_url,
            model_name=settings.model,
            max_retries=settings.max_retries,
            api_key_env=settings.api_key_env,
            requests_per_minute=settings.requests_per_minute,
        )
    )


def _prepare_problems(settings: RunSettings) -> list[Problem]:
    problems = load_dataset(settings.dataset, settings.format)
    if settings.format == "mbpp" and settings.sample_extraction:
        prepared = []
        for problem in problems:
            try:
                prepared.append(extract_mbpp_sample_io(problem, settings.seed))
            except InsufficientTests as exc:
                print(f"warning: {exc}; leaving problem without sample I/O", file=sys.stderr)
                prepared.append(problem)
        return prepared
    return problems


def _solve_problem(
    problem: Problem,
    cfg: RunConfig,
    backend,
    executor: Executor,
    templates,
    attempts_needed: int,
) -> ProblemResult:
    attempts: list[Attempt] = []
    for index in range(1, attempts_needed + 1):
        try:
            outcome = solve(problem, cfg, backend, executor, templates=templates)
        except (ScriptExhausted, RateLimited, AuthError):
            raise
        except (AgentError, BackendError, ExecutorError, ValueError) as exc:
            print(
                f"problem {problem.id}: attempt {index} failed during solve: {exc}",
                file=sys.stderr,
            )
            attempts.append(
                Attempt(attempt_index=index, solved_hidden=False, outcome=None, error=str(exc))
            )
            continue
        try:
            solved = judge_hidden(outcome, problem, executor)
        except ExecutorError as exc:
            print(
                f"problem {problem.id}: attempt {index} failed during judging: {exc}",
                file=sys.stderr,
            )
            attempts.append(
                Attempt(
                    attempt_index=index,
                    solved_hidden=False,
                    outcome=outcome,
                    error=f"judging: {exc}",
                )
            )
            continue
        attempts.append(Attempt(attempt_index=index, solved_hidden=solved, outcome=outcome))
    return ProblemResult(
        problem_id=problem.id,
        attempts=tuple(attempts),
        difficulty_tag=problem.difficulty_tag,
    )


def cmd_run(args: argparse.Namespace) -> int:
    try:
        settings = resolve_settings(args)
        problems = _prepare_problems(settings)
        backend = _build_backend(settings)
        templates = load_templates(settings.templates) if settings.templates else None
    except (OSError, ValueError, DatasetError, AuthError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG

    workers = settings.workers
    if settings.backend == "scripted" and workers != 1:
        print("warning: scripted backend forces --workers 1 for determinism", file=sys.stderr)
        workers = 1

    executor = Executor(
        shim_command=shlex.split(settings.shim) if settings.shim else None,
        limits=ExecLimits(per_test_timeout_ms=settings.timeout_ms),
        policy=ComparePolicy(float_tolerance=settings.float_tolerance),
        max_workers=max(workers, 1),
    )
    cfg = settings.run_config()
    attempts_needed = max(settings.pass_at)

    try:
        done = resume_run(settings.out) if settings.resume else {}
    except CorruptRecord as exc:
        print(f"error: cannot resume from {settings.out}: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    todo = [
        p
        for p in problems
        if len(done.get(p.id, ProblemResult(p.id, ())).attempts) < attempts_needed
    ]
    skipped = len(problems) - len(todo)
    if skipped:
        print(f"resume: skipping {skipped} already-complete problem(s)")

    try:
        writer_cm = RunWriter(settings.out, append=settings.resume)
    except OSError as exc:
        print(f"error: cannot open {settings.out}: {exc}", file=sys.stderr)
        return _EXIT_CONFIG

    try:
        with writer_cm as writer:

            def work(problem: Problem) -> ProblemResult:
                result = _solve_problem(
                    problem, cfg, backend, executor, templates, attempts_needed
                )
                writer.append(result)
                solved_any = any(a.solved_hidden for a in result.attempts)
                print(f"{problem.id}: solved_hidden={solved_any}")
                return result

            if workers > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    list(pool.map(work, todo))
            else:
                for problem in todo:
                    work(problem)
    except (ScriptExhausted, RateLimited, AuthError) as exc:
        print(f"error: backend exhausted: {exc}", file=sys.stderr)
        return _EXIT_BACKEND

    print(f"run complete: {len(todo)} problem(s) executed, records in {settings.out}")
    return _EXIT_OK


def format_report(report: Report, problem_count: int) -> str:
    """Plain-text summary table; deterministic for identical inputs."""
    lines = []
    lines.append(f"problems: {problem_count}")
    lines.append(f"estimator: {report.estimator}")
    for k in sorted(report.pass_at):
        lines.append(f"pass@{k}: {report.pass_at[k]:.4f}")
    if report.per_difficulty:
        lines.append("per-difficulty (pass@1):")
        for tag in sorted(report.per_difficulty):
            lines.append(f"  {tag}: {report.per_difficulty[tag]:.4f}")
    totals = report.totals
    lines.append(
        "usage: "
        f"api_calls={totals.api_calls} tokens_in={totals.tokens_in} "
        f"tokens_out={totals.tokens_out} wall_time_ms={totals.wall_time_ms}"
    )
    if problem_count:
        lines.append(
            "per-problem averages: "
            f"api_calls={totals.api_calls / problem_count:.2f} "
            f"tokens={(totals.tokens_in + totals.tokens_out) / problem_count / 1000.0:.2f}k"
        )
    return "\n".join(lines)


def cmd_report(args: argparse.Namespace) -> int:
    try:
        ks = _parse_pass_at(args.pass_at or "1")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    try:
        results = load_results(args.records)
    except CorruptRecord as exc:
        print(f"error: corrupt run record at {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG

    usable_ks = [k for k in ks if all(len(r.attempts) >= k for r in results)] or [1]
    try:
        report = build_report(results, usable_ks, estimator=args.estimator or "plain")
    except evaluation.EvalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    dropped = sorted(set(ks) - set(usable_ks))
    if dropped:
        print(
            f"warning: skipping pass@{dropped}: not every problem has that many attempts",
            file=sys.stderr,
        )
    print(format_report(report, len(results)))
    if args.json_out:
        payload = {
            "problems": len(results),
            "estimator": report.estimator,
            "pass_at": {str(k): v for k, v in report.pass_at.items()},
            "per_difficulty": report.per_difficulty,
            "usage": {
                "api_calls": report.totals.api_calls,
                "tokens_in": report.totals.tokens_in,
                "tokens_out": report.totals.tokens_out,
                "wall_time_ms": report.totals.wall_time_ms,
            },
        }
        Path(args.json_out).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return _EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="codeloop",
        description="Multi-agent code generation engine and Pass@k benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve every problem in a dataset and record results")
    run.add_argument("--dataset", help="path to a JSONL dataset file")
    run.add_argument("--format", choices=["normalized", "humaneval", "mbpp", "contest"])
    run.add_argument("--mode", choices=["pipeline", "direct"])
    run.add_argument("--preset", choices=sorted(PRESETS))
    run.add_argument("--k", type=int, help="exemplar/plan count (overrides preset)")
    run.add_argument("--t", type=int, help="debug attempts per plan (overrides preset)")
    run.add_argument("--temperature", type=float)
    run.add_argument("--timeout-ms", dest="timeout_ms", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--out", help="run-record output path")
    run.add_argument("--resume", action="store_true", help="skip already-recorded problems")
    run.add_argument(
        "--disable-agent",
        action="append",
        choices=["retrieval", "planning", "debugging"],
        help="ablation switch; repeatable",
    )
    run.add_argument("--templates", help="directory of prompt template overrides")
    run.add_argument("--seed", type=int, help="seed for sample-I/O extraction")
    run.add_argument("--pass-at", dest="pass_at", help='comma list, e.g. "1,5"')
    run.add_argument("--estimator", choices=["plain", "unbiased"])
    run.add_argument("--backend", choices=["openai", "scripted"])
    run.add_argument("--script", help="JSON file of scripted responses")
    run.add_argument("--base-url", dest="base_url")
    run.add_argument("--model")
    run.add_argument("--max-retries", dest="max_retries", type=int)
    run.add_argument("--api-key-env", dest="api_key_env")
    run.add_argument("--shim", help="function-call harness command, e.g. 'python -m execshim'")
    run.add_argument(
        "--no-sample-extraction",
        action="store_true",
        help="keep mbpp problems without sample I/O instead of extracting one test",
    )
    run.add_argument("--float-tolerance", dest="float_tolerance", type=float)
    run.add_argument(
        "--requests-per-minute",
        dest="requests_per_minute",
        type=int,
        help="shared token-bucket rate limit for the live backend",
    )
    run.add_argument("--config", help="JSON config file (flags win over it)")
    run.set_defaults(func=cmd_run)

    report = sub.add_parser("report", help="aggregate a run-record file; no network, no execution")
    report.add_argument("--records", required=True, help="run-record JSONL path")
    report.add_argument("--pass-at", dest="pass_at", help='comma list, e.g. "1,5"')
    report.add_argument("--estimator", choices=["plain", "unbiased"])
    report.add_argument("--json-out", dest="json_out", help="also write the report as JSON")
    report.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; fold into the config exit code.
        return _EXIT_CONFIG if exc.code else _EXIT_OK
    return args.func(args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
