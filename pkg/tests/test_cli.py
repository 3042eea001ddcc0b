import json
from pathlib import Path

import pytest

from sampleselect.cli import load_config_file, load_dataset, main
from sampleselect.errors import UsageError


def write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


def jsonl(path: Path, objects) -> Path:
    path.write_text("".join(json.dumps(o) + "\n" for o in objects), encoding="utf-8")
    return path


@pytest.fixture()
def dataset(tmp_path):
    return jsonl(
        tmp_path / "dataset.jsonl",
        [
            {"id": "d1", "article": "First article body", "reference": "the cat sat"},
            {"id": "d2", "article": "Second article body"},
        ],
    )


@pytest.fixture()
def random_config(tmp_path):
    return write(
        tmp_path / "run.cfg",
        "\n".join(
            [
                "# deterministic offline run",
                "method = sample_select",
                "n = 3",
                "seed = 9",
                "max_sentences = 2",
                "max_sentence_tokens = 6",
                "backend = random",
                "backend_seed = 4",
                "vocab_size = 6",
                "parse = none",
            ]
        ),
    )


class TestConfigFile:
    def test_types_and_comments(self, tmp_path):
        config = write(
            tmp_path / "c.cfg",
            "\n".join(
                [
                    "# comment",
                    "",
                    "method = beam",
                    "n = 4",
                    "top_p = 0.8",
                    "backend_loop = true",
                    'prompt_template = "Line one\\n{article}\\nSummary:"',
                ]
            ),
        )
        settings = load_config_file(config)
        assert settings == {
            "method": "beam",
            "n": 4,
            "top_p": 0.8,
            "backend_loop": True,
            "prompt_template": "Line one\n{article}\nSummary:",
        }

    def test_unknown_key(self, tmp_path):
        config = write(tmp_path / "c.cfg", "no_such_key = 1")
        with pytest.raises(UsageError):
            load_config_file(config)

    def test_missing_equals(self, tmp_path):
        config = write(tmp_path / "c.cfg", "just words")
        with pytest.raises(UsageError):
            load_config_file(config)

    def test_unreadable(self, tmp_path):
        with pytest.raises(UsageError):
            load_config_file(tmp_path / "missing.cfg")


class TestDataset:
    def test_duplicate_id(self, tmp_path):
        path = jsonl(
            tmp_path / "d.jsonl",
            [{"id": "x", "article": "a"}, {"id": "x", "article": "b"}],
        )
        with pytest.raises(UsageError, match="duplicate"):
            load_dataset(path)

    def test_empty_article(self, tmp_path):
        path = jsonl(tmp_path / "d.jsonl", [{"id": "x", "article": "  "}])
        with pytest.raises(UsageError):
            load_dataset(path)

    def test_invalid_json(self, tmp_path):
        path = write(tmp_path / "d.jsonl", "{broken\n")
        with pytest.raises(UsageError):
            load_dataset(path)

    def test_no_records(self, tmp_path):
        path = write(tmp_path / "d.jsonl", "\n")
        with pytest.raises(UsageError):
            load_dataset(path)


class TestRun:
    def test_two_documents_exit_zero(self, tmp_path, dataset, random_config):
        output = tmp_path / "out.jsonl"
        code = main(["run", str(dataset), "--config", str(random_config), "-o", str(output)])
        assert code == 0
        lines = [json.loads(line) for line in output.read_text().splitlines()]
        assert [line["id"] for line in lines] == ["d1", "d2"]
        for line in lines:
            assert set(line) >= {"id", "method", "summary", "stop_reason", "rounds", "eval"}
            assert line["method"] == "sample_select"
        assert lines[0]["eval"]["rouge1_f1"] is not None
        assert lines[1]["eval"]["rouge1_f1"] is None
        report = json.loads((tmp_path / "out.jsonl.report.json").read_text())
        assert report["n_docs"] == 2
        assert report["rouge1_f1_count"] == 1
        assert "generated_at" in report["header"]
        assert sum(report["stop_reasons"].values()) == 2

    def test_byte_identical_reruns_on_scripted_backend(self, tmp_path, dataset):
        script = tmp_path / "script.json"
        script.write_text(
            json.dumps(
                {
                    "completions": [
                        {"text": "The cat sat.", "ended": True},
                        {"text": "The cat ran.", "ended": True},
                    ],
                    "loop": True,
                }
            ),
            encoding="utf-8",
        )
        config = write(
            tmp_path / "s.cfg",
            f"""
method = sample_select
n = 2
backend = scripted
backend_script = {script}
parse = none
""",
        )
        out_a, out_b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        assert main(["run", str(dataset), "--config", str(config), "-o", str(out_a)]) == 0
        assert main(["run", str(dataset), "--config", str(config), "-o", str(out_b)]) == 0
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_flags_override_config(self, tmp_path, dataset, random_config):
        output = tmp_path / "out.jsonl"
        code = main(
            ["run", str(dataset), "--config", str(random_config), "-o", str(output),
             "--method", "nucleus", "--max-sentences", "1"]
        )
        assert code == 0
        lines = [json.loads(line) for line in output.read_text().splitlines()]
        assert all(line["method"] == "nucleus" for line in lines)
        assert all(line["rounds"] == [] for line in lines)

    def test_duplicate_id_exits_one_before_generation(self, tmp_path, random_config):
        dataset = jsonl(
            tmp_path / "dup.jsonl",
            [{"id": "x", "article": "a"}, {"id": "x", "article": "b"}],
        )
        output = tmp_path / "out.jsonl"
        code = main(["run", str(dataset), "--config", str(random_config), "-o", str(output)])
        assert code == 1
        assert not output.exists()

    def test_document_failure_exits_two_and_records_error(self, tmp_path, dataset):
        script = tmp_path / "script.json"
        # two completions serve document one; document two starves mid-round
        script.write_text(
            json.dumps(
                {
                    "completions": [
                        {"text": "The cat sat.", "ended": True},
                        {"text": "The cat sat.", "ended": True},
                        {"text": "Dog.", "ended": False},
                    ]
                }
            ),
            encoding="utf-8",
        )
        config = write(
            tmp_path / "s.cfg",
            f"method = sample_select\nn = 2\nbackend = scripted\nbackend_script = {script}\nparse = none\n",
        )
        output = tmp_path / "out.jsonl"
        code = main(["run", str(dataset), "--config", str(config), "-o", str(output)])
        assert code == 2
        lines = [json.loads(line) for line in output.read_text().splitlines()]
        assert "error" in lines[1]
        assert "exhausted" in lines[1]["error"]
        assert "summary" in lines[0]

    def test_missing_backend_is_usage_error(self, tmp_path, dataset):
        code = main(["run", str(dataset), "-o", str(tmp_path / "out.jsonl")])
        assert code == 1

    def test_pcrr_preflight(self, tmp_path, dataset):
        script = tmp_path / "script.json"
        script.write_text(json.dumps({"completions": [{"text": "x"}]}), encoding="utf-8")
        config = write(
            tmp_path / "c.cfg",
            f"method = pcrr\nn = 2\nbackend = scripted\nbackend_script = {script}\n",
        )
        code = main(["run", str(dataset), "--config", str(config), "-o", str(tmp_path / "o.jsonl")])
        assert code == 1

    def test_synthetic_backend_run(self, tmp_path):
        dataset = jsonl(
            tmp_path / "d.jsonl",
            [{"id": f"doc{i}", "article": f"synthetic document {i}"} for i in range(3)],
        )
        config = write(
            tmp_path / "c.cfg",
            "\n".join(
                [
                    "method = sample_select",
                    "n = 5",
                    "top_p = 1.0",
                    "max_sentence_tokens = 8",
                    "max_sentences = 3",
                    "backend = synthetic",
                    "truth = alpha,beta",
                    "fidelity = 0.6",
                    "decoys = 9",
                    "parse = heuristic",
                ]
            ),
        )
        output = tmp_path / "out.jsonl"
        assert main(["run", str(dataset), "--config", str(config), "-o", str(output)]) == 0
        lines = [json.loads(line) for line in output.read_text().splitlines()]
        for line in lines:
            assert line["stop_reason"] == "sample_ended"
            assert len(line["rounds"]) == 2

    def test_workers_parallel_run_completes(self, tmp_path, random_config):
        dataset = jsonl(
            tmp_path / "d.jsonl",
            [{"id": f"doc{i}", "article": f"body {i}"} for i in range(6)],
        )
        output = tmp_path / "out.jsonl"
        code = main(
            ["run", str(dataset), "--config", str(random_config), "-o", str(output), "--workers", "3"]
        )
        assert code == 0
        lines = [json.loads(line) for line in output.read_text().splitlines()]
        assert {line["id"] for line in lines} == {f"doc{i}" for i in range(6)}


class TestReplay:
    def run_once(self, tmp_path, method="sample_select", n=3):
        dataset = jsonl(
            tmp_path / "d.jsonl",
            [{"id": "d1", "article": "First body"}, {"id": "d2", "article": "Second body"}],
        )
        config = write(
            tmp_path / "c.cfg",
            "\n".join(
                [
                    f"method = {method}",
                    f"n = {n}",
                    "seed = 13",
                    "max_sentences = 2",
                    "max_sentence_tokens = 6",
                    "backend = random",
                    "vocab_size = 6",
                    "parse = none",
                ]
            ),
        )
        output = tmp_path / "out.jsonl"
        assert main(["run", str(dataset), "--config", str(config), "-o", str(output)]) in (0, 2)
        return output

    def test_untampered_trace_passes(self, tmp_path):
        output = self.run_once(tmp_path)
        assert main(["replay", str(output)]) == 0

    @pytest.mark.parametrize("method", ["selfcheck_select", "independent"])
    def test_other_methods_replay(self, tmp_path, method):
        output = self.run_once(tmp_path, method=method)
        assert main(["replay", str(output)]) == 0

    def test_single_score_mutation_detected(self, tmp_path):
        output = self.run_once(tmp_path)
        lines = [json.loads(line) for line in output.read_text().splitlines()]
        mutated = False
        for line in lines:
            for round_data in line.get("rounds", []):
                for candidate in round_data["candidates"]:
                    if not candidate["filtered"]:
                        candidate["score"] += 0.25
                        mutated = True
                        break
                if mutated:
                    break
            if mutated:
                break
        assert mutated
        output.write_text("".join(json.dumps(line) + "\n" for line in lines), encoding="utf-8")
        assert main(["replay", str(output)]) == 2

    def test_chosen_mutation_detected(self, tmp_path):
        output = self.run_once(tmp_path)
        lines = [json.loads(line) for line in output.read_text().splitlines()]
        for line in lines:
            if line.get("rounds"):
                round_data = line["rounds"][0]
                round_data["chosen"] = (
                    None if round_data["chosen"] is None else (round_data["chosen"] + 1) % len(round_data["candidates"])
                )
                break
        output.write_text("".join(json.dumps(line) + "\n" for line in lines), encoding="utf-8")
        assert main(["replay", str(output)]) == 2

    def test_empty_file_is_usage_error(self, tmp_path):
        empty = write(tmp_path / "empty.jsonl", "")
        assert main(["replay", str(empty)]) == 1

    def test_malformed_trace_is_usage_error(self, tmp_path):
        bad = write(tmp_path / "bad.jsonl", "{not json\n")
        assert main(["replay", str(bad)]) == 1

    def test_error_lines_are_skipped(self, tmp_path):
        trace = jsonl(
            tmp_path / "t.jsonl",
            [{"id": "d1", "method": "sample_select", "error": "backend down"}],
        )
        assert main(["replay", str(trace)]) == 0
