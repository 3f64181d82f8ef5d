import json
from pathlib import Path

import pytest

from conftest import make_bundle
from ragmcq.providers.base import ServerError
from ragmcq.providers.mock import RuleChatTransport
from ragmcq.runner import (
    ConfigError,
    ExperimentConfig,
    ResultRow,
    build_report,
    compare_reports,
    load_results_csv,
    render_report_text,
    run_experiment,
    score_rows,
    write_results_csv,
)

FIXTURES = Path(__file__).parent / "fixtures" / "e2e"


def e2e_config(tmp_path, name="out", **overrides):
    overrides = {
        "output_dir": str(tmp_path / name),
        "cache_dir": str(tmp_path / name / "cache"),
        **overrides,
    }
    return ExperimentConfig.from_file(FIXTURES / "config.json", overrides)


class TestConfig:
    def test_missing_seed_rejected(self, tmp_path):
        data = json.loads((FIXTURES / "config.json").read_text(encoding="utf-8"))
        del data["seed"]
        with pytest.raises(ConfigError, match="seed"):
            ExperimentConfig.from_dict(data, base_dir=FIXTURES)

    def test_retrieval_strategy_needs_corpus(self, tmp_path):
        data = json.loads((FIXTURES / "config.json").read_text(encoding="utf-8"))
        del data["corpus"]
        with pytest.raises(ConfigError, match="corpus"):
            ExperimentConfig.from_dict(data, base_dir=FIXTURES)

    def test_zero_shot_needs_no_corpus(self, tmp_path):
        data = json.loads((FIXTURES / "config.json").read_text(encoding="utf-8"))
        del data["corpus"]
        data["strategy"] = "zero_shot"
        data["output_dir"] = str(tmp_path / "o")
        cfg = ExperimentConfig.from_dict(data, base_dir=FIXTURES)
        assert cfg.corpus_manifest is None

    def test_unknown_strategy(self):
        data = json.loads((FIXTURES / "config.json").read_text(encoding="utf-8"))
        data["strategy"] = "mystery"
        with pytest.raises(ConfigError, match="mystery"):
            ExperimentConfig.from_dict(data, base_dir=FIXTURES)

    def test_web_strategy_needs_search_and_fetch(self):
        data = json.loads((FIXTURES / "config.json").read_text(encoding="utf-8"))
        data["strategy"] = "web_fallback"
        with pytest.raises(ConfigError, match="search"):
            ExperimentConfig.from_dict(data, base_dir=FIXTURES)

    def test_relative_paths_resolve_against_config_dir(self, tmp_path):
        cfg = e2e_config(tmp_path)
        assert cfg.dataset_path == FIXTURES / "dataset.csv"
        assert cfg.corpus_manifest == FIXTURES / "manifest.json"

    def test_hash_ignores_location_and_concurrency(self, tmp_path):
        a = e2e_config(tmp_path, "one", concurrency=1)
        b = e2e_config(tmp_path, "two", concurrency=16)
        assert a.config_hash() == b.config_hash()
        c = e2e_config(tmp_path, "three", seed=7)
        assert c.config_hash() != a.config_hash()


class TestResultsCsv:
    def make_row(self, rationale='হ্যাঁ, "quoted", and a comma'):
        return ResultRow(
            question_id="q1",
            gold_option="A",
            predicted_option="B",
            correct=0,
            route="local",
            confidence=None,
            decision_kind=None,
            attempts=1,
            latency=0.0,
            gold_rationale="সোনালি ব্যাখ্যা",
            generated_rationale=rationale,
            bert_f1=0.5,
            meteor=0.25,
            rouge1_p=1 / 3,
            rouge1_r=0.5,
            rouge1_f=0.4,
            rouge2_p=0.0,
            rouge2_r=0.0,
            rouge2_f=0.0,
            rouge_l_p=1 / 3,
            rouge_l_r=0.5,
            rouge_l_f=0.4,
            bleu1=0.1,
            bleu2=None,
        )

    def test_roundtrip_with_quotes_and_commas(self, tmp_path):
        row = self.make_row()
        path = tmp_path / "r.csv"
        write_results_csv([row], path)
        loaded = load_results_csv(path)
        assert loaded == [row]

    def test_header_only_for_empty(self, tmp_path):
        path = tmp_path / "r.csv"
        write_results_csv([], path)
        assert path.read_text(encoding="utf-8").count("\n") == 1

    def test_two_rows_three_lines(self, tmp_path):
        path = tmp_path / "r.csv"
        write_results_csv([self.make_row(), self.make_row()], path)
        assert len(path.read_text(encoding="utf-8").splitlines()) == 3


class TestRunExperiment:
    def test_full_run_report(self, tmp_path):
        result = run_experiment(e2e_config(tmp_path))
        assert result.status == 0
        assert result.answered == 20
        assert result.report["accuracy"] == 0.75
        assert result.report["n"] == 20
        assert result.report["failures"] == 0
        assert result.report["route_counts"] == {"local": 20}
        assert result.results_path.exists() and result.report_path.exists()
        txt = (result.results_path.parent / "report.txt").read_text(encoding="utf-8")
        assert "0.7500" in txt

    def test_report_accuracy_matches_recompute(self, tmp_path):
        result = run_experiment(e2e_config(tmp_path))
        rows = load_results_csv(result.results_path)
        recomputed = sum(r.correct for r in rows) / len(rows)
        assert f"{recomputed:.4f}" == f"{result.report['accuracy']:.4f}"
        assert recomputed == result.report["accuracy"]

    def test_rerun_completed_makes_no_provider_calls(self, tmp_path):
        cfg = e2e_config(tmp_path)
        run_experiment(cfg)
        first_csv = cfg.output_dir.joinpath("results.csv").read_bytes()
        first_report = cfg.output_dir.joinpath("report.json").read_bytes()

        class ExplodingTransport:
            def __call__(self, req):
                raise AssertionError("no provider call expected on a completed rerun")

        bundle = make_bundle(chat_transport=ExplodingTransport(), embed_dim=32)
        result = run_experiment(e2e_config(tmp_path), providers=bundle)
        assert result.status == 0
        assert cfg.output_dir.joinpath("results.csv").read_bytes() == first_csv
        assert cfg.output_dir.joinpath("report.json").read_bytes() == first_report

    def test_resume_after_hard_down_matches_uninterrupted(self, tmp_path):
        # run A: provider dies on one question mid-run -> partial results
        script = json.loads((FIXTURES / "chat_script.json").read_text(encoding="utf-8"))
        rules = [(r["contains"], r["reply"]) for r in script["rules"]]

        class DyingAt:
            def __init__(self, needle):
                self.needle = needle
                self.inner = RuleChatTransport(rules, script["default"])

            def __call__(self, req):
                if self.needle in req.last_user_text():
                    raise ServerError("backend hard down")
                return self.inner(req)

        cfg_a = e2e_config(tmp_path, "resumed")
        partial = run_experiment(cfg_a, providers=make_bundle(chat_transport=DyingAt("Q11"), embed_dim=32))
        assert partial.status == 2
        assert 0 < partial.answered < 20
        assert "hard-down" in partial.error

        healthy = make_bundle(chat_transport=RuleChatTransport(rules, script["default"]), embed_dim=32)
        resumed = run_experiment(e2e_config(tmp_path, "resumed"), providers=healthy)
        assert resumed.status == 0 and resumed.answered == 20

        clean = run_experiment(e2e_config(tmp_path, "clean"))
        assert resumed.results_path.read_bytes() == clean.results_path.read_bytes()
        assert resumed.report_path.read_bytes() == clean.report_path.read_bytes()

    def test_output_dir_with_other_config_rejected(self, tmp_path):
        run_experiment(e2e_config(tmp_path, "shared"))
        with pytest.raises(ConfigError, match="different config"):
            run_experiment(e2e_config(tmp_path, "shared", seed=99))

    def test_rejections_written_when_dataset_dirty(self, tmp_path):
        dirty = tmp_path / "dirty.csv"
        rows = (FIXTURES / "dataset.csv").read_text(encoding="utf-8").splitlines()
        rows.append('qdup,"নমুনা প্রশ্ন Q01: কোষের শক্তিঘর কোনটি?",মাইটোকন্ড্রিয়া,গলজি বস্তু,লাইসোজোম,সেন্ট্রিওল,A,,2099')
        dirty.write_text("\n".join(rows) + "\n", encoding="utf-8")
        cfg = e2e_config(tmp_path, "dirty", dataset_path=str(dirty))
        result = run_experiment(cfg)
        assert result.answered == 20  # duplicate dropped
        rejections = (cfg.output_dir / "rejections.csv").read_text(encoding="utf-8")
        assert "duplicate" in rejections


class TestScoreRows:
    def test_rescore_reproduces_metric_columns(self, tmp_path):
        result = run_experiment(e2e_config(tmp_path))
        rows = load_results_csv(result.results_path)
        bundle = make_bundle(embed_dim=32)
        rescored = score_rows(rows, lambda toks: bundle.embed.embed(list(toks)))
        for before, after in zip(rows, rescored):
            assert before == after


class TestCompareReports:
    def _report(self, tmp_path, name, **overrides):
        return run_experiment(e2e_config(tmp_path, name, **overrides)).report

    def test_deltas(self, tmp_path):
        a = self._report(tmp_path, "a")
        b = dict(a, accuracy=a["accuracy"] - 0.08)
        csv_text, txt = compare_reports(a, b)
        assert "accuracy,0.7500,0.6700,-0.0800" in csv_text
        assert "-0.0800" in txt

    def test_identical_reports_zero_deltas(self, tmp_path):
        a = self._report(tmp_path, "a2")
        csv_text, _ = compare_reports(a, a)
        for line in csv_text.splitlines()[1:]:
            if line.split(",")[1]:
                assert line.endswith("+0.0000")

    def test_mismatched_n_is_error(self, tmp_path):
        a = self._report(tmp_path, "a3")
        b = dict(a, n=5)
        with pytest.raises(ValueError):
            compare_reports(a, b)


def test_render_report_text_fixed_decimals(tmp_path):
    report = run_experiment(e2e_config(tmp_path)).report
    txt = render_report_text(report)
    assert "accuracy        : 0.7500" in txt
