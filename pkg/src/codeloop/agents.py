"""The four pipeline agents: prompt construction, backend call, strict parsing.

Each agent is one function: render a template, make exactly one backend call
(plus at most one automatic re-ask when the response does not parse), and
parse the structured response into domain types. Prompts are data: plain-text
template files with ``{slot}`` markers, shipped as package defaults and
overridable with a directory of same-named files.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .backend import CompletionBackend, CompletionRequest
from .domain import (
    AgentCall,
    AgentKind,
    CandidateCode,
    CodeOrigin,
    Exemplar,
    Plan,
    Problem,
    TestReport,
)


class AgentError(Exception):
    """Base class for agent-layer failures."""


class TemplateError(AgentError):
    pass


class MissingSlot(TemplateError):
    pass


class UnknownSlot(TemplateError):
    pass


class ParseError(AgentError):
    """A model response did not match the expected structure."""


class MissingTag(ParseError):
    pass


class CardinalityViolation(ParseError):
    pass


class NumberParseError(ParseError):
    pass


# ---------------------------------------------------------------------------
# Templates
# ---------------------------------------------------------------------------

TEMPLATE_NAMES = ("retrieval", "planning", "coding", "debugging", "direct")

REQUIRED_SLOTS: dict[str, tuple[str, ...]] = {
    "retrieval": ("problem", "k"),
    "planning": ("example_description", "example_plan", "algorithm", "tutorial", "problem"),
    "coding": ("problem", "plan", "language"),
    "debugging": ("problem", "plan", "code", "failures", "language"),
    "direct": ("problem", "language"),
}

_SLOT_RE = re.compile(r"\{([a-z_][a-z0-9_]*)\}")


@dataclass(frozen=True)
class PromptTemplate:
    """A named prompt text with ``{slot}`` markers.

    Every required slot must appear exactly once; other brace sequences in
    the text are left alone by rendering.
    """

    name: str
    text_with_slots: str
    required_slots: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "required_slots", tuple(self.required_slots))
        for slot in self.required_slots:
            count = self.text_with_slots.count("{" + slot + "}")
            if count != 1:
                raise ValueError(
                    f"template {self.name!r}: slot {{{slot}}} appears {count} times, want 1"
                )


def render_prompt(template: PromptTemplate, bindings: Mapping[str, str]) -> str:
    """Substitute ``bindings`` into ``template``; pure and deterministic.

    Raises ``MissingSlot`` when a required slot has no binding and
    ``UnknownSlot`` for bindings that name no required slot. Brace sequences
    inside binding values are never re-substituted.
    """
    required = set(template.required_slots)
    missing = required - bindings.keys()
    if missing:
        raise MissingSlot(f"template {template.name!r}: no binding for {sorted(missing)}")
    unknown = bindings.keys() - required
    if unknown:
        raise UnknownSlot(f"template {template.name!r}: unknown bindings {sorted(unknown)}")

    def substitute(match: re.Match) -> str:
        name = match.group(1)
        return bindings[name] if name in required else match.group(0)

    return _SLOT_RE.sub(substitute, template.text_with_slots)


def load_templates(directory: str | Path | None = None) -> dict[str, PromptTemplate]:
    """Load the five agent templates from ``directory`` or package defaults."""
    out: dict[str, PromptTemplate] = {}
    for name in TEMPLATE_NAMES:
        if directory is not None:
            path = Path(directory) / f"{name}.txt"
            if not path.is_file():
                raise TemplateError(f"template file not found: {path}")
            text = path.read_text(encoding="utf-8")
        else:
            text = (
                resources.files("codeloop.templates").joinpath(f"{name}.txt").read_text("utf-8")
            )
        out[name] = PromptTemplate(
            name=name, text_with_slots=text, required_slots=REQUIRED_SLOTS[name]
        )
    return out


_default_templates: dict[str, PromptTemplate] | None = None


def default_templates() -> dict[str, PromptTemplate]:
    global _default_templates
    if _default_templates is None:
        _default_templates = load_templates(None)
    return _default_templates


# ---------------------------------------------------------------------------
# Tagged-response parsing
# ---------------------------------------------------------------------------


class ValueKind(Enum):
    TEXT = "text"
    NUMBER = "number"
    CODE_BLOCK = "code_block"


@dataclass(frozen=True)
class TagSpec:
    """One expected tag: ``count`` is an exact cardinality, None = at least one."""

    name: str
    count: int | None = 1
    kind: ValueKind = ValueKind.TEXT


@dataclass(frozen=True)
class TaggedResponseSchema:
    tags: tuple[TagSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tags", tuple(self.tags))
        names = [t.name for t in self.tags]
        if len(names) != len(set(names)):
            raise ValueError(f"duplicate tag names in schema: {names}")


_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)\n?```", re.DOTALL)


def strip_code_fences(text: str) -> str:
    """Drop one surrounding markdown fence if the text is a single fenced block."""
    stripped = text.strip()
    match = _FENCE_RE.fullmatch(stripped)
    return match.group(1) if match else stripped


def extract_fenced_blocks(text: str) -> list[str]:
    return [m.group(1) for m in _FENCE_RE.finditer(text)]


def parse_tagged(text: str, schema: TaggedResponseSchema) -> dict[str, list]:
    """Extract ``<tag>...</tag>`` regions per schema; strict on cardinality.

    Number tags parse to float (range clamping is the caller's business);
    code-block tags are stripped of surrounding fence markers.
    """
    result: dict[str, list] = {}
    for spec in schema.tags:
        pattern = re.compile(
            rf"<{re.escape(spec.name)}>(.*?)</{re.escape(spec.name)}>", re.DOTALL
        )
        raw = [m.group(1) for m in pattern.finditer(text)]
        if not raw:
            raise MissingTag(f"response lacks required tag <{spec.name}>")
        if spec.count is not None and len(raw) != spec.count:
            raise CardinalityViolation(
                f"tag <{spec.name}> appears {len(raw)} times, expected {spec.count}"
            )
        values: list = []
        for item in raw:
            if spec.kind is ValueKind.NUMBER:
                try:
                    values.append(float(item.strip()))
                except ValueError as exc:
                    raise NumberParseError(
                        f"tag <{spec.name}> holds non-numeric value {item.strip()!r}"
                    ) from exc
            elif spec.kind is ValueKind.CODE_BLOCK:
                values.append(strip_code_fences(item))
            else:
                values.append(item.strip())
        result[spec.name] = values
    return result


_STEP_RE = re.compile(r"^\s*(?:#+|//+|--)?\s*\d+\s*[.):]\s*(.+?)\s*$")


def numbered_steps(text: str) -> list[str]:
    """Pull numbered step lines (``1. ...`` / ``# 2) ...``) out of text, in order."""
    steps = []
    for line in text.splitlines():
        match = _STEP_RE.match(line)
        if match:
            steps.append(match.group(1))
    return steps


def _plan_steps(plan_text: str) -> list[str]:
    steps = numbered_steps(plan_text)
    if steps:
        return steps
    return [line.strip() for line in plan_text.splitlines() if line.strip()]


# ---------------------------------------------------------------------------
# Agent runtime
# ---------------------------------------------------------------------------


@dataclass
class AgentContext:
    """Everything an agent needs: backend, templates, and the shared transcript."""

    backend: CompletionBackend
    templates: Mapping[str, PromptTemplate] = field(default_factory=default_templates)
    temperature: float = 0.0
    language: str = "python"
    transcript: list[AgentCall] = field(default_factory=list)


_REMINDERS = {
    AgentKind.RETRIEVAL: (
        "Reminder: answer only with the tagged format — one <example> block per "
        "recalled problem, each containing <description> and <code> (code with "
        "numbered step comments), followed by one <algorithm> and one <tutorial> block."
    ),
    AgentKind.PLANNING: (
        "Reminder: answer only with one <plan> block of numbered steps followed by "
        "one <confidence> block containing a single integer between 0 and 100."
    ),
    AgentKind.CODING: (
        "Reminder: output the complete final program inside one fenced code block "
        "(``` ... ```), with no prose after it."
    ),
    AgentKind.DEBUGGING: (
        "Reminder: output the complete fixed program inside one fenced code block "
        "(``` ... ```), with no prose after it."
    ),
    AgentKind.DIRECT: (
        "Reminder: output the complete final program inside one fenced code block "
        "(``` ... ```), with no prose after it."
    ),
}


def _call(ctx: AgentContext, agent: AgentKind, prompt: str) -> str:
    result = ctx.backend.complete(
        CompletionRequest(user_text=prompt, temperature=ctx.temperature)
    )
    ctx.transcript.append(
        AgentCall(
            agent=agent,
            prompt=prompt,
            response=result.text,
            latency_ms=result.latency_ms,
            tokens_in=result.tokens_in,
            tokens_out=result.tokens_out,
        )
    )
    return result.text


def _call_and_parse(
    ctx: AgentContext, agent: AgentKind, prompt: str, parse: Callable[[str], object]
):
    """One backend call; on a parse failure, one re-ask with a format reminder."""
    text = _call(ctx, agent, prompt)
    try:
        return parse(text)
    except ParseError:
        retry_prompt = prompt + "\n\n" + _REMINDERS[agent]
        retry_text = _call(ctx, agent, retry_prompt)
        return parse(retry_text)


# ---------------------------------------------------------------------------
# The four agents
# ---------------------------------------------------------------------------


def run_retrieval(ctx: AgentContext, problem: Problem, k: int) -> list[Exemplar]:
    """Self-retrieve ``k`` related solved problems in one backend call.

    Each exemplar's plan is post-processed from its step-by-step solution
    code: the numbered comment lines become the plan steps, in source order.
    All exemplars share the response's algorithm name and tutorial.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    prompt = render_prompt(
        ctx.templates["retrieval"], {"problem": problem.description, "k": str(k)}
    )

    def parse(text: str) -> list[Exemplar]:
        outer = parse_tagged(
            text,
            TaggedResponseSchema(
                (
                    TagSpec("example", count=k),
                    TagSpec("algorithm", count=1),
                    TagSpec("tutorial", count=1),
                )
            ),
        )
        algorithm = outer["algorithm"][0]
        tutorial = outer["tutorial"][0]
        exemplars = []
        for block in outer["example"]:
            inner = parse_tagged(
                block,
                TaggedResponseSchema(
                    (
                        TagSpec("description", count=1),
                        TagSpec("code", count=1, kind=ValueKind.CODE_BLOCK),
                    )
                ),
            )
            code = inner["code"][0]
            plan = numbered_steps(code)
            if not plan:
                raise ParseError("exemplar code has no numbered step comments")
            exemplars.append(
                Exemplar(
                    description=inner["description"][0],
                    code=code,
                    plan=tuple(plan),
                    algorithm=algorithm,
                    tutorial=tutorial,
                )
            )
        return exemplars

    return _call_and_parse(ctx, AgentKind.RETRIEVAL, prompt, parse)


_NO_EXEMPLAR = "(no solved example available; plan from first principles)"


def run_planning(
    ctx: AgentContext,
    problem: Problem,
    exemplar: Exemplar | None,
    exemplar_index: int,
) -> Plan:
    """One backend call turning one exemplar into a confidence-scored plan.

    The original problem is rendered after the exemplar material
    (most-relevant-last). ``exemplar=None`` covers the retrieval-disabled
    ablation: the exemplar slots are filled with explicit placeholders.
    """
    if exemplar is not None:
        bindings = {
            "example_description": exemplar.description,
            "example_plan": "\n".join(
                f"{i}. {s}" for i, s in enumerate(exemplar.plan, start=1)
            ),
            "algorithm": exemplar.algorithm or "(not named)",
            "tutorial": exemplar.tutorial or "(none)",
            "problem": problem.description,
        }
    else:
        bindings = {
            "example_description": _NO_EXEMPLAR,
            "example_plan": _NO_EXEMPLAR,
            "algorithm": "(not named)",
            "tutorial": "(none)",
            "problem": problem.description,
        }
    prompt = render_prompt(ctx.templates["planning"], bindings)

    def parse(text: str) -> Plan:
        parsed = parse_tagged(
            text,
            TaggedResponseSchema(
                (
                    TagSpec("plan", count=1),
                    TagSpec("confidence", count=1, kind=ValueKind.NUMBER),
                )
            ),
        )
        steps = _plan_steps(parsed["plan"][0])
        if not steps:
            raise ParseError("plan section is empty")
        return Plan(
            steps=tuple(steps),
            confidence=parsed["confidence"][0],
            origin_exemplar_index=exemplar_index,
        )

    return _call_and_parse(ctx, AgentKind.PLANNING, prompt, parse)


_NO_PLAN = "(no plan provided; solve the problem directly)"


def _last_code_block(text: str) -> str:
    blocks = extract_fenced_blocks(text)
    if not blocks:
        raise ParseError("response contains no fenced code block")
    # Models often emit a scratch block before the final answer: last one wins.
    return blocks[-1]


def run_coding(ctx: AgentContext, problem: Problem, plan: Plan | None) -> CandidateCode:
    """One backend call translating the plan (or the bare problem) into code."""
    prompt = render_prompt(
        ctx.templates["coding"],
        {
            "problem": problem.description,
            "plan": plan.as_text() if plan is not None else _NO_PLAN,
            "language": ctx.language,
        },
    )

    def parse(text: str) -> CandidateCode:
        return CandidateCode(
            source=_last_code_block(text),
            language_tag=ctx.language,
            produced_by=CodeOrigin.CODING,
        )

    return _call_and_parse(ctx, AgentKind.CODING, prompt, parse)


def format_failures(report: TestReport) -> str:
    """Render every non-passing verdict with its verbatim detail."""
    lines = []
    for v in report.failures():
        lines.append(f"[{v.label}] {v.verdict.value}: {v.detail}")
    return "\n".join(lines)


def run_debugging(
    ctx: AgentContext,
    problem: Problem,
    plan: Plan | None,
    code: CandidateCode,
    report: TestReport,
    iteration: int,
    budget: int | None = None,
) -> CandidateCode:
    """One backend call fixing ``code`` against the sample-test failure report.

    Only ever sees sample-I/O results — never generated tests. ``budget``
    (the per-plan debug limit) is validated when the caller supplies it.
    """
    if report.all_passed:
        raise ValueError("debugging requires a failing test report")
    if iteration < 1:
        raise ValueError("iteration must be >= 1")
    if budget is not None and iteration > budget:
        raise ValueError(f"iteration {iteration} exceeds debug budget {budget}")
    prompt = render_prompt(
        ctx.templates["debugging"],
        {
            "problem": problem.description,
            "plan": plan.as_text() if plan is not None else _NO_PLAN,
            "code": code.source,
            "failures": format_failures(report),
            "language": ctx.language,
        },
    )

    def parse(text: str) -> CandidateCode:
        return CandidateCode(
            source=_last_code_block(text),
            language_tag=ctx.language,
            produced_by=CodeOrigin.DEBUGGING,
            debug_iteration=iteration,
        )

    return _call_and_parse(ctx, AgentKind.DEBUGGING, prompt, parse)


def run_direct(ctx: AgentContext, problem: Problem) -> CandidateCode:
    """Single zero-shot completion; the trivial pipeline configuration."""
    prompt = render_prompt(
        ctx.templates["direct"],
        {"problem": problem.description, "language": ctx.language},
    )

    def parse(text: str) -> CandidateCode:
        return CandidateCode(
            source=_last_code_block(text),
            language_tag=ctx.language,
            produced_by=CodeOrigin.CODING,
        )

    return _call_and_parse(ctx, AgentKind.DIRECT, prompt, parse)
