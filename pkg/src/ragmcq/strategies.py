"""The seven answering pipelines and their shared machinery.

Strategies: zero_shot, local_rag (strict, may answer NA), local_fallback,
web_fallback, agentic (router + thresholds), iterative (query refinement
with confidence ladder), aggregate (k-ensemble voting).

Prompts live in text files under ``ragmcq/prompts`` so experiments can vary
them without code changes; the router prompt text is fixed wording the
whole routing behavior depends on.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from string import Template

from ragmcq.dataset import OPTION_KEYS, McqRecord
from ragmcq.providers import (
    ChatRequest,
    ProviderBundle,
    ProviderError,
    ProviderUnavailable,
)
from ragmcq.vectorindex import Passage, RetrievedContext, VectorIndex, retrieve

__all__ = [
    "NULL_ANSWER",
    "STRATEGIES",
    "AgenticConfig",
    "AggregateConfig",
    "IterativeConfig",
    "TraceEntry",
    "Prediction",
    "UnparsableAnswer",
    "parse_model_answer",
    "route",
    "aggregate_votes",
    "detect_language",
    "PromptLibrary",
    "StrategyEngine",
    "answer",
]

# The strict local-RAG null answer: the fixed Bangla phrase for
# "The answer was not found".
NULL_ANSWER = "উত্তর পাওয়া যায়নি"

ZERO_SHOT = "zero_shot"
LOCAL_RAG = "local_rag"
LOCAL_FALLBACK = "local_fallback"
WEB_FALLBACK = "web_fallback"
AGENTIC = "agentic"
ITERATIVE = "iterative"
AGGREGATE = "aggregate"
STRATEGIES = (ZERO_SHOT, LOCAL_RAG, LOCAL_FALLBACK, WEB_FALLBACK, AGENTIC, ITERATIVE, AGGREGATE)


@dataclass(frozen=True)
class AgenticConfig:
    tau1: int = 300
    tau2: int = 200
    k_local: int = 5
    router_model: str = ""
    # The formal routing policy sends (router=Yes, short local context) to
    # zero-shot; flip this to try web retrieval in that cell instead.
    web_when_local_short: bool = False

    def __post_init__(self) -> None:
        if self.tau1 <= 0 or self.tau2 <= 0:
            raise ValueError("tau1 and tau2 must be positive")
        if self.k_local < 1:
            raise ValueError("k_local must be >= 1")


@dataclass(frozen=True)
class AggregateConfig:
    k_values: tuple[int, ...] = (3, 5, 6)
    temperature: float = 0.7
    tiebreak_k: int = 6

    def __post_init__(self) -> None:
        ks = tuple(int(k) for k in self.k_values)
        object.__setattr__(self, "k_values", ks)
        if not ks or any(b <= a for a, b in zip(ks, ks[1:])) or ks[0] < 1:
            raise ValueError(f"k_values must be strictly increasing positives, got {ks}")
        if self.tiebreak_k not in ks:
            raise ValueError(f"tiebreak_k {self.tiebreak_k} must be one of {ks}")


@dataclass(frozen=True)
class IterativeConfig:
    max_refinements: int = 2
    judge_mode: str = "oracle"  # "oracle" | "self_check"

    def __post_init__(self) -> None:
        if self.max_refinements < 0:
            raise ValueError("max_refinements must be >= 0")
        if self.judge_mode not in {"oracle", "self_check"}:
            raise ValueError(f"unknown judge_mode {self.judge_mode!r}")


@dataclass(frozen=True)
class TraceEntry:
    origin: str  # "local" | "web" | "router" | "chat"
    ref: str  # k=<n>, a URL, or a step label
    chars: int
    note: str = ""


@dataclass
class Prediction:
    question_id: str
    strategy: str
    option: str | None  # A-D; "NA" only for strict local_rag; None = failed
    rationale: str
    route: str  # "local" | "web" | "zero_shot" | "null_answer"
    confidence: str | None = None  # iterative only: high | medium | low
    decision_kind: str | None = None  # aggregate only: unanimous | majority | tie
    retrieval_trace: list[TraceEntry] = field(default_factory=list)
    attempts: int = 0

    @property
    def failed(self) -> bool:
        return self.option is None


class UnparsableAnswer(Exception):
    pass


_O_SALVAGE = re.compile(r'"O"\s*:\s*"\s*([ABCD])\s*"')
_R_SALVAGE = re.compile(r'"R"\s*:\s*"((?:[^"\\]|\\.)*)"')


def parse_model_answer(text: str) -> tuple[str, str]:
    """Extract (option, rationale) from a model reply.

    Strict JSON first; then a salvage pass that grabs the first "O" field
    with an A-D value and the adjacent "R" string. Raises
    :class:`UnparsableAnswer` when no option can be extracted.
    """
    try:
        obj = json.loads(text.strip())
    except ValueError:
        obj = None
    if isinstance(obj, dict):
        opt = str(obj.get("O", "")).strip().upper()
        if opt in OPTION_KEYS:
            rationale = obj.get("R", "")
            return opt, "" if rationale is None else str(rationale)
    m = _O_SALVAGE.search(text)
    if m is not None:
        rm = _R_SALVAGE.search(text, m.end()) or _R_SALVAGE.search(text)
        rationale = ""
        if rm is not None:
            try:
                rationale = json.loads('"' + rm.group(1) + '"')
            except ValueError:
                rationale = rm.group(1)
        return m.group(1), rationale
    raise UnparsableAnswer(f"no option in model reply: {text[:120]!r}")


def route(
    router_says_yes: bool,
    local_chars: int,
    web_chars: int,
    tau1: int = 300,
    tau2: int = 200,
) -> str:
    """The routing policy: local iff the router approves and the local
    context beats tau1; web iff the router declines and the web summary
    beats tau2; zero-shot otherwise (both inequalities strict)."""
    if router_says_yes and local_chars > tau1:
        return "local"
    if not router_says_yes and web_chars > tau2:
        return "web"
    return "zero_shot"


def aggregate_votes(
    votes: list[tuple[int, str, str]],
    cfg: AggregateConfig,
) -> tuple[str, str, str]:
    """Combine per-k votes: unanimous, else strict majority, else the
    tiebreak-k vote. Returns (option, decision_kind, rationale of the first
    vote in k-order matching the winner)."""
    if [k for k, _, _ in votes] != list(cfg.k_values):
        raise ValueError(
            f"expected one vote per k in {cfg.k_values}, got {[k for k, _, _ in votes]}"
        )
    options = [opt for _, opt, _ in votes]
    if len(set(options)) == 1:
        winner, kind = options[0], "unanimous"
    else:
        counts: dict[str, int] = {}
        for opt in options:
            counts[opt] = counts.get(opt, 0) + 1
        top = max(counts.values())
        leaders = [opt for opt, c in counts.items() if c == top]
        if len(leaders) == 1 and top * 2 > len(options):
            winner, kind = leaders[0], "majority"
        else:
            by_k = {k: opt for k, opt, _ in votes}
            winner, kind = by_k[cfg.tiebreak_k], "tie"
    rationale = next(r for _, opt, r in votes if opt == winner)
    return winner, kind, rationale


_BANGLA = re.compile(r"[ঀ-৿]")


def detect_language(text: str) -> str:
    return "Bangla" if _BANGLA.search(text) else "English"


class PromptLibrary:
    """Loads ``$``-templated prompt text files; an override directory can
    shadow individual packaged templates."""

    def __init__(self, directory: str | Path | None = None) -> None:
        self._base = Path(__file__).parent / "prompts"
        self._override = Path(directory) if directory is not None else None
        self._cache: dict[str, Template] = {}

    def template(self, name: str) -> Template:
        if name not in self._cache:
            filename = f"{name}.txt"
            path = self._base / filename
            if self._override is not None and (self._override / filename).exists():
                path = self._override / filename
            self._cache[name] = Template(path.read_text(encoding="utf-8"))
        return self._cache[name]

    def render(self, name: str, **subs: str) -> str:
        return self.template(name).substitute(**subs)


class StrategyEngine:
    """Executes answering strategies against a provider bundle.

    Stateless across questions apart from read-only members, so one engine
    serves any number of worker threads.
    """

    def __init__(
        self,
        providers: ProviderBundle,
        prompts: PromptLibrary | None = None,
        model_id: str = "",
        k: int = 5,
        temperature: float = 0.0,
        timeout_seconds: int = 300,
        tau1: int = 300,
        tau2: int = 200,
        max_links: int = 8,
        top_pages: int = 3,
    ) -> None:
        self.providers = providers
        self.prompts = prompts or PromptLibrary()
        self.model_id = model_id
        self.k = k
        self.temperature = temperature
        self.timeout_seconds = timeout_seconds
        self.tau1 = tau1
        self.tau2 = tau2
        self.max_links = max_links
        self.top_pages = top_pages

    # -- shared machinery ---------------------------------------------------

    def build_prompt(
        self,
        record: McqRecord,
        context: RetrievedContext | None = None,
        strategy: str = ZERO_SHOT,
        temperature: float | None = None,
        model_id: str | None = None,
    ) -> ChatRequest:
        """Prompt with question, labeled options, optional context block and
        the JSON answer instruction. A context with zero characters counts
        as absent."""
        lang = detect_language(record.question)
        options_block = "\n".join(f"{key}. {record.options[key]}" for key in OPTION_KEYS)
        if context is not None and context.total_chars > 0:
            text = self.prompts.render(
                strategy,
                question=record.question,
                options=options_block,
                context=context.joined_text(),
                rationale_language=lang,
            )
        else:
            text = self.prompts.render(
                ZERO_SHOT,
                question=record.question,
                options=options_block,
                rationale_language=lang,
            )
        return ChatRequest(
            messages=(("user", text),),
            model_id=model_id or self.model_id,
            temperature=self.temperature if temperature is None else temperature,
            timeout_seconds=self.timeout_seconds,
        )

    def _chat_answer(self, req: ChatRequest) -> tuple[str | None, str, int]:
        """One answer call with a single retry on an unparsable reply.

        Returns (option, rationale, chat attempts); option is None when both
        replies were unparsable. Transport exhaustion propagates.
        """
        reply = self.providers.chat.complete(req)
        attempts = reply.attempts
        try:
            opt, rationale = parse_model_answer(reply.text)
            return opt, rationale, attempts
        except UnparsableAnswer:
            pass
        reply = self.providers.chat.complete(req)
        attempts += reply.attempts
        try:
            opt, rationale = parse_model_answer(reply.text)
            return opt, rationale, attempts
        except UnparsableAnswer:
            return None, "", attempts

    def _retrieve(
        self, index: VectorIndex | None, query: str, k: int
    ) -> tuple[RetrievedContext, str]:
        """Top-k local context; an empty index or a retrieval failure yields
        an empty context plus a note (error-as-insufficiency)."""
        if index is None or len(index) == 0:
            return RetrievedContext.empty(k), "index empty; nothing retrieved"
        try:
            return retrieve(index, query, k, self.providers.embed), ""
        except ProviderError as exc:
            return RetrievedContext.empty(k), f"retrieval failed: {exc}"

    def _zero_shot_branch(
        self, record: McqRecord, strategy: str, trace: list[TraceEntry]
    ) -> Prediction:
        req = self.build_prompt(record, None, strategy=strategy)
        opt, rationale, attempts = self._chat_answer(req)
        if opt is None:
            trace = trace + [TraceEntry("chat", "answer", 0, "unparsable after retry; question failed")]
            return Prediction(record.id, strategy, None, "", "zero_shot", retrieval_trace=trace, attempts=attempts)
        return Prediction(record.id, strategy, opt, rationale, "zero_shot", retrieval_trace=trace, attempts=attempts)

    def summarize_web(self, pages: list[str], question: str) -> str:
        """Summarize scraped page texts into bullet-point context via one
        chat call; empty input or a failed call yields ""."""
        pages = [p for p in pages if p.strip()]
        if not pages:
            return ""
        prompt = self.prompts.render("summarizer", question=question, pages="\n\n".join(pages))
        req = ChatRequest(
            messages=(("user", prompt),),
            model_id=self.model_id,
            temperature=0.0,
            timeout_seconds=self.timeout_seconds,
        )
        try:
            return self.providers.chat.complete(req).text.strip()
        except ProviderError:
            return ""

    def _web_context(self, record: McqRecord) -> tuple[str, list[TraceEntry]]:
        """Search (max_links), scrape the top pages, summarize. Returns the
        summary text ("" when anything upstream came up empty or died)."""
        trace: list[TraceEntry] = []
        query = record.question + " " + " ".join(record.options[key] for key in OPTION_KEYS)
        try:
            hits = self.providers.search.search(query, max_links=self.max_links)
        except ProviderError as exc:
            trace.append(TraceEntry("web", "search", 0, f"search failed: {exc}"))
            return "", trace
        if not hits:
            trace.append(TraceEntry("web", "search", 0, "zero hits"))
            return "", trace
        pages: list[str] = []
        for hit in hits[: self.top_pages]:
            try:
                text = self.providers.fetch.fetch_text(hit.url)
                note = "" if text else "no extractable text"
            except ProviderError as exc:
                text, note = "", f"fetch failed: {exc}"
            pages.append(text)
            trace.append(TraceEntry("web", hit.url, len(text), note))
        summary = self.summarize_web(pages, record.question)
        trace.append(TraceEntry("web", "summary", len(summary), "" if summary else "empty summary"))
        return summary, trace

    def refine_query(self, question: str, context_text: str) -> str:
        """Ask for key terms from question + context and append them to the
        question; falls back to the original question on any failure."""
        prompt = self.prompts.render("extractor", question=question, context=context_text)
        req = ChatRequest(
            messages=(("user", prompt),),
            model_id=self.model_id,
            temperature=0.0,
            timeout_seconds=self.timeout_seconds,
        )
        try:
            reply = self.providers.chat.complete(req).text
        except ProviderError:
            return question
        terms = [t.strip() for t in re.split(r"[,;\n।|]+", reply) if t.strip()]
        if not terms:
            return question
        return question + " " + " ".join(terms)

    def _ask_router(self, record: McqRecord, context: RetrievedContext, cfg: AgenticConfig) -> tuple[bool, str]:
        """Yes/No sufficiency verdict; the first 'yes'/'no' in the reply
        decides, anything else conservatively counts as No."""
        prompt = self.prompts.render(
            "router", question=record.question, context=context.joined_text()
        )
        req = ChatRequest(
            messages=(("user", prompt),),
            model_id=cfg.router_model or self.model_id,
            temperature=0.0,
            timeout_seconds=self.timeout_seconds,
        )
        try:
            reply = self.providers.chat.complete(req).text
        except ProviderError as exc:
            return False, f"router call failed: {exc}"
        m = re.search(r"yes|no", reply, re.IGNORECASE)
        if m is None:
            return False, f"router reply had neither yes nor no: {reply[:60]!r}"
        verdict = m.group(0).lower() == "yes"
        return verdict, f"router said {'Yes' if verdict else 'No'}"

    # -- strategies ---------------------------------------------------------

    def answer_zero_shot(self, record: McqRecord) -> Prediction:
        """One context-free chat call."""
        return self._zero_shot_branch(record, ZERO_SHOT, [])

    def answer_local_rag(self, record: McqRecord, index: VectorIndex | None, k: int | None = None) -> Prediction:
        """Strict local RAG: answer from retrieved context when it is long
        enough, otherwise return NA with the fixed null-answer phrase (no
        chat call)."""
        k = k or self.k
        context, err = self._retrieve(index, record.question, k)
        trace = [TraceEntry("local", f"k={k}", context.total_chars, err)]
        if context.total_chars > self.tau1:
            req = self.build_prompt(record, context, strategy=LOCAL_RAG)
            opt, rationale, attempts = self._chat_answer(req)
            if opt is None:
                trace.append(TraceEntry("chat", "answer", 0, "unparsable after retry; question failed"))
                return Prediction(record.id, LOCAL_RAG, None, "", "local", retrieval_trace=trace, attempts=attempts)
            return Prediction(record.id, LOCAL_RAG, opt, rationale, "local", retrieval_trace=trace, attempts=attempts)
        return Prediction(
            record.id, LOCAL_RAG, "NA", NULL_ANSWER, "null_answer", retrieval_trace=trace, attempts=0
        )

    def answer_local_fallback(self, record: McqRecord, index: VectorIndex | None, k: int | None = None) -> Prediction:
        """Local RAG when context suffices; zero-shot otherwise. Never NA."""
        k = k or self.k
        context, err = self._retrieve(index, record.question, k)
        trace = [TraceEntry("local", f"k={k}", context.total_chars, err)]
        if context.total_chars > self.tau1:
            req = self.build_prompt(record, context, strategy=LOCAL_FALLBACK)
            try:
                opt, rationale, attempts = self._chat_answer(req)
            except ProviderUnavailable as exc:
                opt, attempts = None, 0
                trace.append(TraceEntry("chat", "answer", 0, f"context answer failed: {exc}"))
            if opt is not None:
                return Prediction(record.id, LOCAL_FALLBACK, opt, rationale, "local", retrieval_trace=trace, attempts=attempts)
            trace.append(TraceEntry("chat", "answer", 0, "context answer unusable; falling back to zero-shot"))
        return self._zero_shot_branch(record, LOCAL_FALLBACK, trace)

    def answer_web_fallback(self, record: McqRecord) -> Prediction:
        """Web search context when the summary beats tau2; zero-shot
        otherwise."""
        summary, trace = self._web_context(record)
        if len(summary) > self.tau2:
            context = RetrievedContext.make(
                [Passage("web:summary", summary, 1.0)], k_requested=1, origin="web"
            )
            req = self.build_prompt(record, context, strategy=WEB_FALLBACK)
            try:
                opt, rationale, attempts = self._chat_answer(req)
            except ProviderUnavailable as exc:
                opt, attempts = None, 0
                trace.append(TraceEntry("chat", "answer", 0, f"web answer failed: {exc}"))
            if opt is not None:
                return Prediction(record.id, WEB_FALLBACK, opt, rationale, "web", retrieval_trace=trace, attempts=attempts)
            trace.append(TraceEntry("chat", "answer", 0, "web answer unusable; falling back to zero-shot"))
        return self._zero_shot_branch(record, WEB_FALLBACK, trace)

    def answer_agentic(
        self, record: McqRecord, index: VectorIndex | None, cfg: AgenticConfig | None = None
    ) -> Prediction:
        """Router-driven selection among local RAG, web RAG and zero-shot.

        Web retrieval runs lazily, only when the local branch is not taken
        and the policy allows a web attempt.
        """
        cfg = cfg or AgenticConfig()
        context, err = self._retrieve(index, record.question, cfg.k_local)
        trace = [TraceEntry("local", f"k={cfg.k_local}", context.total_chars, err)]
        if context.total_chars == 0:
            says_yes = False
            trace.append(TraceEntry("router", "verdict", 0, "empty local context; router skipped (No)"))
        else:
            says_yes, note = self._ask_router(record, context, cfg)
            trace.append(TraceEntry("router", "verdict", context.total_chars, note))
        if says_yes and context.total_chars > cfg.tau1:
            req = self.build_prompt(record, context, strategy=AGENTIC)
            try:
                opt, rationale, attempts = self._chat_answer(req)
            except ProviderUnavailable as exc:
                opt, attempts = None, 0
                trace.append(TraceEntry("chat", "answer", 0, f"local answer failed: {exc}"))
            if opt is not None:
                return Prediction(record.id, AGENTIC, opt, rationale, "local", retrieval_trace=trace, attempts=attempts)
            trace.append(TraceEntry("chat", "answer", 0, "local answer unusable; falling back"))
        elif says_yes and not cfg.web_when_local_short:
            # Formal policy: Yes but short local context routes to zero-shot.
            return self._zero_shot_branch(record, AGENTIC, trace)
        else:
            summary, wtrace = self._web_context(record)
            trace.extend(wtrace)
            if len(summary) > cfg.tau2:
                context = RetrievedContext.make(
                    [Passage("web:summary", summary, 1.0)], k_requested=1, origin="web"
                )
                req = self.build_prompt(record, context, strategy=AGENTIC)
                try:
                    opt, rationale, attempts = self._chat_answer(req)
                except ProviderUnavailable as exc:
                    opt, attempts = None, 0
                    trace.append(TraceEntry("chat", "answer", 0, f"web answer failed: {exc}"))
                if opt is not None:
                    return Prediction(record.id, AGENTIC, opt, rationale, "web", retrieval_trace=trace, attempts=attempts)
                trace.append(TraceEntry("chat", "answer", 0, "web answer unusable; falling back"))
        return self._zero_shot_branch(record, AGENTIC, trace)

    def answer_iterative(
        self,
        record: McqRecord,
        index: VectorIndex | None,
        cfg: IterativeConfig | None = None,
    ) -> Prediction:
        """Answer, judge, refine the query with extracted key terms, retry;
        at most max_refinements refinement rounds. Confidence: high = correct one-shot,
        medium = corrected during refinement, low = never judged correct."""
        cfg = cfg or IterativeConfig()
        query = record.question
        option: str | None = None
        rationale = ""
        trace: list[TraceEntry] = []
        attempts = 0
        confidence = "low"
        for i in range(cfg.max_refinements + 1):
            context, err = self._retrieve(index, query, self.k)
            trace.append(TraceEntry("local", f"k={self.k} round={i}", context.total_chars, err))
            req = self.build_prompt(record, context if context.total_chars else None, strategy=ITERATIVE)
            option, rationale, _ = self._chat_answer(req)
            attempts = i + 1
            if option is None:
                trace.append(TraceEntry("chat", f"round={i}", 0, "unparsable answer; judged incorrect"))
            if self._judge(record, option, context, cfg):
                confidence = "high" if i == 0 else "medium"
                break
            if i < cfg.max_refinements:
                query = self.refine_query(record.question, context.joined_text())
        return Prediction(
            record.id,
            ITERATIVE,
            option,
            rationale if option is not None else "",
            "local",
            confidence=confidence,
            retrieval_trace=trace,
            attempts=attempts,
        )

    def _judge(
        self,
        record: McqRecord,
        option: str | None,
        context: RetrievedContext,
        cfg: IterativeConfig,
    ) -> bool:
        if option is None:
            return False
        if cfg.judge_mode == "oracle":
            return option == record.answer_key
        options_block = "\n".join(f"{key}. {record.options[key]}" for key in OPTION_KEYS)
        prompt = self.prompts.render(
            "judge",
            question=record.question,
            options=options_block,
            answer=option,
            context=context.joined_text(),
        )
        req = ChatRequest(
            messages=(("user", prompt),),
            model_id=self.model_id,
            temperature=0.0,
            timeout_seconds=self.timeout_seconds,
        )
        try:
            reply = self.providers.chat.complete(req).text
        except ProviderError:
            return False  # conservative: keep refining
        m = re.search(r"yes|no", reply, re.IGNORECASE)
        return m is not None and m.group(0).lower() == "yes"

    def answer_aggregate(
        self,
        record: McqRecord,
        index: VectorIndex | None,
        cfg: AggregateConfig | None = None,
        rng: random.Random | None = None,
    ) -> Prediction:
        """One retrieval + vote per k, then majority/unanimous/tie-break
        aggregation. An unparsable vote is replaced by a seeded random
        option so the vote count m stays fixed."""
        cfg = cfg or AggregateConfig()
        rng = rng or random.Random(0)
        votes: list[tuple[int, str, str]] = []
        trace: list[TraceEntry] = []
        for k in cfg.k_values:
            context, err = self._retrieve(index, record.question, k)
            req = self.build_prompt(
                record,
                context if context.total_chars else None,
                strategy=AGGREGATE,
                temperature=cfg.temperature,
            )
            opt, rationale, _ = self._chat_answer(req)
            note = err
            if opt is None:
                opt = rng.choice(OPTION_KEYS)
                rationale = ""
                note = (note + "; " if note else "") + f"vote unparsable; seeded random option {opt}"
            votes.append((k, opt, rationale))
            trace.append(TraceEntry("local", f"k={k} vote={opt}", context.total_chars, note))
        winner, kind, rationale = aggregate_votes(votes, cfg)
        return Prediction(
            record.id,
            AGGREGATE,
            winner,
            rationale,
            "local",
            decision_kind=kind,
            retrieval_trace=trace,
            attempts=len(votes),
        )


def answer(
    engine: StrategyEngine,
    strategy: str,
    record: McqRecord,
    index: VectorIndex | None = None,
    *,
    k: int | None = None,
    agentic: AgenticConfig | None = None,
    iterative: IterativeConfig | None = None,
    aggregate: AggregateConfig | None = None,
    rng: random.Random | None = None,
) -> Prediction:
    """Dispatch one question to the named strategy."""
    if strategy == ZERO_SHOT:
        return engine.answer_zero_shot(record)
    if strategy == LOCAL_RAG:
        return engine.answer_local_rag(record, index, k)
    if strategy == LOCAL_FALLBACK:
        return engine.answer_local_fallback(record, index, k)
    if strategy == WEB_FALLBACK:
        return engine.answer_web_fallback(record)
    if strategy == AGENTIC:
        return engine.answer_agentic(record, index, agentic)
    if strategy == ITERATIVE:
        return engine.answer_iterative(record, index, iterative)
    if strategy == AGGREGATE:
        return engine.answer_aggregate(record, index, aggregate, rng)
    raise ValueError(f"unknown strategy {strategy!r}")
