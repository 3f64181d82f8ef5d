"""Experiment orchestration: config, bounded-parallel answering, result
persistence, reports and report comparison.

Determinism contract: with mock providers and a fixed seed, a run produces
byte-identical results CSV and report regardless of worker count, because
per-question RNGs are derived from (seed, question id), rows are emitted in
input order, and the virtual clock keeps latencies reproducible. A resumed
run (same config hash) skips questions already present in the results file.
"""

from __future__ import annotations

import csv
import hashlib
import json
import random
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from ragmcq.corpus import ChunkingConfig, chunk_corpus, read_corpus
from ragmcq.dataset import McqRecord, prepare_dataset, write_rejection_report
from ragmcq.metrics import MetricBundle, PrfScore, compute_bundle
from ragmcq.providers import ProviderBundle, ProviderUnavailable
from ragmcq.strategies import (
    AgenticConfig,
    AggregateConfig,
    IterativeConfig,
    Prediction,
    PromptLibrary,
    StrategyEngine,
    STRATEGIES,
    answer,
)
from ragmcq.vectorindex import VectorIndex, build_index

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ResultRow",
    "RunResult",
    "run_experiment",
    "write_results_csv",
    "load_results_csv",
    "build_report",
    "render_report_text",
    "compare_reports",
    "score_rows",
]

RETRIEVAL_STRATEGIES = {"local_rag", "local_fallback", "agentic", "iterative", "aggregate"}
WEB_STRATEGIES = {"web_fallback", "agentic"}

RESULT_COLUMNS = [
    "question_id",
    "gold_option",
    "predicted_option",
    "correct",
    "route",
    "confidence",
    "decision_kind",
    "attempts",
    "latency",
    "gold_rationale",
    "generated_rationale",
    "bert_f1",
    "meteor",
    "rouge1_p",
    "rouge1_r",
    "rouge1_f",
    "rouge2_p",
    "rouge2_r",
    "rouge2_f",
    "rouge_l_p",
    "rouge_l_r",
    "rouge_l_f",
    "bleu1",
    "bleu2",
]

_MEAN_FIELDS = ["bert_f1", "meteor", "rouge1_f", "rouge2_f", "rouge_l_f", "bleu1", "bleu2"]


class ConfigError(Exception):
    """Invalid experiment configuration; the CLI maps this to exit code 1."""


@dataclass
class ExperimentConfig:
    dataset_path: Path
    dataset_format: str
    strategy: str
    model_id: str
    seed: int
    output_dir: Path
    corpus_manifest: Path | None = None
    chunking: ChunkingConfig = field(default_factory=ChunkingConfig)
    k: int = 5
    temperature: float = 0.0
    tau1: int = 300
    tau2: int = 200
    max_links: int = 8
    top_pages: int = 3
    concurrency: int = 1
    cache_dir: Path | None = None
    prompts_dir: Path | None = None
    agentic: AgenticConfig = field(default_factory=AgenticConfig)
    iterative: IterativeConfig = field(default_factory=IterativeConfig)
    aggregate: AggregateConfig = field(default_factory=AggregateConfig)
    providers: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    @classmethod
    def from_dict(cls, data: dict, base_dir: str | Path = ".") -> "ExperimentConfig":
        base_dir = Path(base_dir)

        def _path(value: str | None) -> Path | None:
            if value is None:
                return None
            p = Path(value)
            return p if p.is_absolute() else base_dir / p

        dataset = data.get("dataset") or {}
        if "path" not in dataset:
            raise ConfigError("config needs dataset.path")
        if "seed" not in data:
            raise ConfigError("config needs an explicit integer seed")
        if "strategy" not in data:
            raise ConfigError("config needs a strategy")
        strategy = str(data["strategy"])
        if strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
        if "output_dir" not in data:
            raise ConfigError("config needs output_dir")
        corpus = data.get("corpus") or {}
        try:
            chunking = ChunkingConfig(
                chunk_size=int(corpus.get("chunk_size", 1000)),
                overlap=int(corpus.get("overlap", 200)),
            )
            agentic = AgenticConfig(**(data.get("agentic") or {}))
            iterative = IterativeConfig(**(data.get("iterative") or {}))
            aggregate_raw = dict(data.get("aggregate") or {})
            if "k_values" in aggregate_raw:
                aggregate_raw["k_values"] = tuple(aggregate_raw["k_values"])
            aggregate = AggregateConfig(**aggregate_raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config block: {exc}") from exc
        cfg = cls(
            dataset_path=_path(dataset["path"]),
            dataset_format=str(dataset.get("format", "csv")),
            strategy=strategy,
            model_id=str(data.get("model_id", "")),
            seed=int(data["seed"]),
            output_dir=_path(data["output_dir"]),
            corpus_manifest=_path(corpus.get("manifest")),
            chunking=chunking,
            k=int(data.get("k", 5)),
            temperature=float(data.get("temperature", 0.0)),
            tau1=int(data.get("tau1", 300)),
            tau2=int(data.get("tau2", 200)),
            max_links=int(data.get("max_links", 8)),
            top_pages=int(data.get("top_pages", 3)),
            concurrency=int(data.get("concurrency", 1)),
            cache_dir=_path(data.get("cache_dir")),
            prompts_dir=_path(data.get("prompts_dir")),
            agentic=agentic,
            iterative=iterative,
            aggregate=aggregate,
            providers=dict(data.get("providers") or {}),
            base_dir=base_dir,
        )
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str | Path, overrides: dict | None = None) -> "ExperimentConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for key, value in (overrides or {}).items():
            if value is None:
                continue
            if key == "dataset_path":
                data.setdefault("dataset", {})["path"] = value
            elif key == "dataset_format":
                data.setdefault("dataset", {})["format"] = value
            else:
                data[key] = value
        return cls.from_dict(data, base_dir=path.parent)

    def validate(self) -> None:
        if self.concurrency < 1:
            raise ConfigError("concurrency must be >= 1")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.strategy in RETRIEVAL_STRATEGIES and self.corpus_manifest is None:
            raise ConfigError(f"strategy {self.strategy} needs corpus.manifest in the config")
        if not isinstance(self.providers.get("chat"), dict):
            raise ConfigError("config needs a providers.chat section")
        if not isinstance(self.providers.get("embed"), dict):
            raise ConfigError("config needs a providers.embed section (retrieval and metrics)")
        if self.strategy in WEB_STRATEGIES:
            if not isinstance(self.providers.get("search"), dict) or not isinstance(
                self.providers.get("fetch"), dict
            ):
                raise ConfigError(f"strategy {self.strategy} needs providers.search and providers.fetch")

    def semantic_echo(self) -> dict:
        """The experiment-defining fields: everything that changes results.

        Output/cache locations, concurrency and log paths are excluded so
        resumes and byte-identity checks are location- and
        parallelism-independent.
        """
        return {
            "dataset": {"path": str(self.dataset_path), "format": self.dataset_format},
            "corpus": None
            if self.corpus_manifest is None
            else {
                "manifest": str(self.corpus_manifest),
                "chunk_size": self.chunking.chunk_size,
                "overlap": self.chunking.overlap,
            },
            "strategy": self.strategy,
            "model_id": self.model_id,
            "seed": self.seed,
            "k": self.k,
            "temperature": self.temperature,
            "tau1": self.tau1,
            "tau2": self.tau2,
            "max_links": self.max_links,
            "top_pages": self.top_pages,
            "prompts_dir": None if self.prompts_dir is None else str(self.prompts_dir),
            "agentic": {
                "tau1": self.agentic.tau1,
                "tau2": self.agentic.tau2,
                "k_local": self.agentic.k_local,
                "router_model": self.agentic.router_model,
                "web_when_local_short": self.agentic.web_when_local_short,
            },
            "iterative": {
                "max_refinements": self.iterative.max_refinements,
                "judge_mode": self.iterative.judge_mode,
            },
            "aggregate": {
                "k_values": list(self.aggregate.k_values),
                "temperature": self.aggregate.temperature,
                "tiebreak_k": self.aggregate.tiebreak_k,
            },
            "providers": self.providers,
        }

    def config_hash(self) -> str:
        canon = json.dumps(self.semantic_echo(), ensure_ascii=False, sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()


@dataclass
class ResultRow:
    question_id: str
    gold_option: str
    predicted_option: str | None
    correct: int
    route: str
    confidence: str | None
    decision_kind: str | None
    attempts: int
    latency: float
    gold_rationale: str | None
    generated_rationale: str
    bert_f1: float | None
    meteor: float | None
    rouge1_p: float | None
    rouge1_r: float | None
    rouge1_f: float | None
    rouge2_p: float | None
    rouge2_r: float | None
    rouge2_f: float | None
    rouge_l_p: float | None
    rouge_l_r: float | None
    rouge_l_f: float | None
    bleu1: float | None
    bleu2: float | None

    @classmethod
    def build(cls, record: McqRecord, pred: Prediction, bundle: MetricBundle, latency: float) -> "ResultRow":
        def prf(score: PrfScore | None) -> tuple[float | None, float | None, float | None]:
            if score is None:
                return None, None, None
            return score.precision, score.recall, score.f

        r1 = prf(bundle.rouge1)
        r2 = prf(bundle.rouge2)
        rl = prf(bundle.rouge_l)
        return cls(
            question_id=record.id,
            gold_option=record.answer_key,
            predicted_option=pred.option,
            correct=bundle.correct,
            route=pred.route,
            confidence=pred.confidence,
            decision_kind=pred.decision_kind,
            attempts=pred.attempts,
            latency=latency,
            gold_rationale=record.rationale,
            generated_rationale=pred.rationale,
            bert_f1=bundle.bert_f1,
            meteor=bundle.meteor,
            rouge1_p=r1[0],
            rouge1_r=r1[1],
            rouge1_f=r1[2],
            rouge2_p=r2[0],
            rouge2_r=r2[1],
            rouge2_f=r2[2],
            rouge_l_p=rl[0],
            rouge_l_r=rl[1],
            rouge_l_f=rl[2],
            bleu1=bundle.bleu1,
            bleu2=bundle.bleu2,
        )

    def to_csv(self) -> list[str]:
        def num(x: float | None) -> str:
            return "" if x is None else repr(float(x))

        return [
            self.question_id,
            self.gold_option,
            self.predicted_option or "",
            str(self.correct),
            self.route,
            self.confidence or "",
            self.decision_kind or "",
            str(self.attempts),
            repr(float(self.latency)),
            self.gold_rationale or "",
            self.generated_rationale,
            num(self.bert_f1),
            num(self.meteor),
            num(self.rouge1_p),
            num(self.rouge1_r),
            num(self.rouge1_f),
            num(self.rouge2_p),
            num(self.rouge2_r),
            num(self.rouge2_f),
            num(self.rouge_l_p),
            num(self.rouge_l_r),
            num(self.rouge_l_f),
            num(self.bleu1),
            num(self.bleu2),
        ]

    @classmethod
    def from_csv(cls, row: dict[str, str]) -> "ResultRow":
        def num(s: str) -> float | None:
            return None if s == "" else float(s)

        return cls(
            question_id=row["question_id"],
            gold_option=row["gold_option"],
            predicted_option=row["predicted_option"] or None,
            correct=int(row["correct"]),
            route=row["route"],
            confidence=row["confidence"] or None,
            decision_kind=row["decision_kind"] or None,
            attempts=int(row["attempts"]),
            latency=float(row["latency"]),
            gold_rationale=row["gold_rationale"] or None,
            generated_rationale=row["generated_rationale"],
            bert_f1=num(row["bert_f1"]),
            meteor=num(row["meteor"]),
            rouge1_p=num(row["rouge1_p"]),
            rouge1_r=num(row["rouge1_r"]),
            rouge1_f=num(row["rouge1_f"]),
            rouge2_p=num(row["rouge2_p"]),
            rouge2_r=num(row["rouge2_r"]),
            rouge2_f=num(row["rouge2_f"]),
            rouge_l_p=num(row["rouge_l_p"]),
            rouge_l_r=num(row["rouge_l_r"]),
            rouge_l_f=num(row["rouge_l_f"]),
            bleu1=num(row["bleu1"]),
            bleu2=num(row["bleu2"]),
        )


def write_results_csv(rows: Sequence[ResultRow], path: str | Path) -> None:
    """UTF-8 CSV with the canonical header; row order is input order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow(row.to_csv())


def load_results_csv(path: str | Path) -> list[ResultRow]:
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        return [ResultRow.from_csv(row) for row in reader]


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def build_report(cfg: ExperimentConfig, rows: Sequence[ResultRow]) -> dict:
    """Aggregate rows into the report: accuracy, rationale-metric means,
    route distribution and failure count.

    Metric means cover the rows that have a gold rationale
    (``rationale_rows`` of them); accuracy always covers all N rows.
    """
    n = len(rows)
    means: dict[str, float | None] = {}
    for name in _MEAN_FIELDS:
        means[name] = _mean([getattr(r, name) for r in rows if getattr(r, name) is not None])
    route_counts: dict[str, int] = {}
    for r in rows:
        route_counts[r.route] = route_counts.get(r.route, 0) + 1
    return {
        "config": cfg.semantic_echo(),
        "config_hash": cfg.config_hash(),
        "n": n,
        "accuracy": sum(r.correct for r in rows) / n if n else 0.0,
        "metrics_mean": means,
        "rationale_rows": sum(1 for r in rows if r.bleu1 is not None),
        "route_counts": dict(sorted(route_counts.items())),
        "failures": sum(1 for r in rows if r.predicted_option is None),
    }


def render_report_text(report: dict) -> str:
    """Fixed-width human-readable rendering, 4 decimal places."""
    lines = [
        "experiment report",
        "-----------------",
        f"strategy        : {report['config']['strategy']}",
        f"model           : {report['config']['model_id']}",
        f"questions (N)   : {report['n']}",
        f"accuracy        : {report['accuracy']:.4f}",
        f"failures        : {report['failures']}",
        f"rationale rows  : {report['rationale_rows']}",
        "metric means:",
    ]
    for name in _MEAN_FIELDS:
        value = report["metrics_mean"].get(name)
        shown = "   n/a" if value is None else f"{value:.4f}"
        lines.append(f"  {name:<10}: {shown}")
    routes = ", ".join(f"{k}={v}" for k, v in report["route_counts"].items()) or "none"
    lines.append(f"routes          : {routes}")
    return "\n".join(lines) + "\n"


def compare_reports(report_a: dict, report_b: dict) -> tuple[str, str]:
    """Side-by-side accuracy and metric deltas as (csv_text, aligned_text).

    Both reports must cover the same number of questions.
    """
    if report_a["n"] != report_b["n"]:
        raise ValueError(f"reports cover different N: {report_a['n']} vs {report_b['n']}")
    rows = [("accuracy", report_a["accuracy"], report_b["accuracy"])]
    for name in _MEAN_FIELDS:
        rows.append((name, report_a["metrics_mean"].get(name), report_b["metrics_mean"].get(name)))
    csv_lines = ["metric,a,b,delta"]
    txt_lines = [f"{'metric':<12}{'a':>10}{'b':>10}{'delta':>10}"]
    for name, a, b in rows:
        if a is None or b is None:
            csv_lines.append(f"{name},,,")
            txt_lines.append(f"{name:<12}{'n/a':>10}{'n/a':>10}{'n/a':>10}")
        else:
            csv_lines.append(f"{name},{a:.4f},{b:.4f},{b - a:+.4f}")
            txt_lines.append(f"{name:<12}{a:>10.4f}{b:>10.4f}{b - a:>+10.4f}")
    return "\n".join(csv_lines) + "\n", "\n".join(txt_lines) + "\n"


def _derive_rng(seed: int, question_id: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}:{question_id}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


@dataclass
class RunResult:
    results_path: Path
    report_path: Path
    report: dict | None
    status: int  # 0 = complete, 2 = partial (provider hard-down)
    answered: int
    error: str = ""


def _answer_one(
    engine: StrategyEngine,
    cfg: ExperimentConfig,
    record: McqRecord,
    index: VectorIndex | None,
    embed_fn: Callable | None,
) -> ResultRow:
    rng = _derive_rng(cfg.seed, record.id)
    clock = engine.providers.clock
    start = clock.now()
    pred = answer(
        engine,
        cfg.strategy,
        record,
        index,
        k=cfg.k,
        agentic=cfg.agentic,
        iterative=cfg.iterative,
        aggregate=cfg.aggregate,
        rng=rng,
    )
    latency = clock.now() - start
    bundle = compute_bundle(
        pred.option, record.answer_key, pred.rationale, record.rationale, embed_fn
    )
    return ResultRow.build(record, pred, bundle, latency)


def run_experiment(cfg: ExperimentConfig, providers: ProviderBundle | None = None) -> RunResult:
    """Answer every dataset question under the configured strategy.

    Writes results.csv incrementally in input order (resume-safe prefix),
    then report.json and report.txt. Returns status 2 with partial results
    preserved when a provider goes hard-down mid-run.
    """
    validation = prepare_dataset(cfg.dataset_path, cfg.dataset_format)
    records = validation.accepted
    if not records:
        raise ConfigError(f"dataset {cfg.dataset_path} has no valid records")
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    if validation.rejected:
        write_rejection_report(validation.rejected, cfg.output_dir / "rejections.csv")

    results_path = cfg.output_dir / "results.csv"
    report_path = cfg.output_dir / "report.json"
    manifest_path = cfg.output_dir / "run_manifest.json"
    chash = cfg.config_hash()
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        if manifest.get("config_hash") != chash:
            raise ConfigError(
                f"output dir {cfg.output_dir} holds a run with a different config; use a fresh directory"
            )
    else:
        manifest_path.write_text(
            json.dumps(
                {
                    "config_hash": chash,
                    "n_questions": len(records),
                    "strategy": cfg.strategy,
                    "model_id": cfg.model_id,
                },
                ensure_ascii=False,
                indent=2,
                sort_keys=True,
            )
            + "\n",
            encoding="utf-8",
        )

    done_rows: list[ResultRow] = []
    if results_path.exists():
        done_rows = load_results_csv(results_path)
        expected = [r.id for r in records[: len(done_rows)]]
        if [row.question_id for row in done_rows] != expected:
            raise ConfigError(
                f"existing results in {results_path} do not match the dataset prefix; use a fresh directory"
            )
    remaining = records[len(done_rows):]

    if providers is None:
        providers = ProviderBundle.from_config(
            cfg.providers, base_dir=cfg.base_dir, log_path=cfg.output_dir / "calls.log.jsonl"
        )
    embed_fn = None
    if providers.embed is not None:
        embed_fn = lambda tokens: providers.embed.embed(list(tokens))  # noqa: E731

    index: VectorIndex | None = None
    if remaining and cfg.strategy in RETRIEVAL_STRATEGIES:
        docs = read_corpus(cfg.corpus_manifest)
        chunks = chunk_corpus(docs, cfg.chunking)
        index = build_index(chunks, providers.embed, cache_dir=cfg.cache_dir)

    engine = StrategyEngine(
        providers,
        PromptLibrary(cfg.prompts_dir),
        model_id=cfg.model_id,
        k=cfg.k,
        temperature=cfg.temperature,
        tau1=cfg.tau1,
        tau2=cfg.tau2,
        max_links=cfg.max_links,
        top_pages=cfg.top_pages,
    )

    rows = list(done_rows)
    status = 0
    error = ""
    if remaining:
        new_file = not results_path.exists()
        with results_path.open("a", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            if new_file:
                writer.writerow(RESULT_COLUMNS)
                fh.flush()
            pool = ThreadPoolExecutor(max_workers=cfg.concurrency)
            try:
                futures = {
                    pool.submit(_answer_one, engine, cfg, rec, index, embed_fn): i
                    for i, rec in enumerate(remaining)
                }
                buffered: dict[int, ResultRow] = {}
                next_i = 0
                first_failure: int | None = None
                pending = set(futures)
                while pending:
                    finished, pending = wait(pending, return_when=FIRST_COMPLETED)
                    for fut in finished:
                        i = futures[fut]
                        try:
                            buffered[i] = fut.result()
                        except ProviderUnavailable as exc:
                            status = 2
                            if first_failure is None or i < first_failure:
                                first_failure = i
                                error = f"provider hard-down at question {remaining[i].id}: {exc}"
                    # flush the contiguous in-order prefix (never past a failure)
                    while next_i in buffered and (first_failure is None or next_i < first_failure):
                        row = buffered.pop(next_i)
                        writer.writerow(row.to_csv())
                        fh.flush()
                        rows.append(row)
                        next_i += 1
                    if status == 2:
                        for fut in pending:
                            fut.cancel()
                        break
            finally:
                pool.shutdown(wait=True, cancel_futures=True)

    report = None
    if status == 0:
        report = build_report(cfg, rows)
        report_path.write_text(
            json.dumps(report, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        (cfg.output_dir / "report.txt").write_text(render_report_text(report), encoding="utf-8")
    return RunResult(
        results_path=results_path,
        report_path=report_path,
        report=report,
        status=status,
        answered=len(rows),
        error=error,
    )


def score_rows(
    rows: Sequence[ResultRow],
    embed_fn: Callable | None,
    rouge_beta: float = 1.0,
) -> list[ResultRow]:
    """Re-score existing predictions: recompute every metric column from the
    stored options and rationales (latency and routing pass through)."""
    out = []
    for row in rows:
        bundle = compute_bundle(
            row.predicted_option,
            row.gold_option,
            row.generated_rationale,
            row.gold_rationale,
            embed_fn,
            rouge_beta=rouge_beta,
        )
        pred = Prediction(
            question_id=row.question_id,
            strategy="",
            option=row.predicted_option,
            rationale=row.generated_rationale,
            route=row.route,
            confidence=row.confidence,
            decision_kind=row.decision_kind,
            attempts=row.attempts,
        )
        record = McqRecord(
            id=row.question_id,
            question="q",
            options={"A": "a", "B": "b", "C": "c", "D": "d"},
            answer_key=row.gold_option,
            rationale=row.gold_rationale,
        )
        out.append(ResultRow.build(record, pred, bundle, row.latency))
    return out
