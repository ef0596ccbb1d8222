"""End-to-end tests of the command-line interface.

Model calls are stubbed through the injectable client factory, so no
test touches a network.
"""

import json
import sys
import textwrap

import pytest

from conftest import git
from diffmigrate.bench import load_questions
from diffmigrate.cli import Config, load_config, main
from diffmigrate.errors import ConfigError
from diffmigrate.evaluate import EVAL_CSV_COLUMNS
from diffmigrate.llm import (
    LlmClient,
    MockProvider,
    RetryPolicy,
    ServerError,
    UsageLedger,
    UsageRecord,
)
from diffmigrate.tokens import count_tokens


def _factory(provider):
    def make(config, model):
        return LlmClient(provider, retry=RetryPolicy(max_retries=0))

    return make


def _no_client_factory(config, model):
    raise AssertionError("a client must not be constructed here")


@pytest.fixture
def lib_repo(make_repo):
    return make_repo(
        [
            {"acme/api.py": "def fetch(url, timeout):\n    return url, timeout\n"},
            {
                "acme/api.py": "def fetch(url, *, timeout=None):"
                "\n    return url, timeout\n"
            },
        ],
        name="acme",
    )


@pytest.fixture
def source_dir(tmp_path):
    src = tmp_path / "proj"
    src.mkdir()
    (src / "app.py").write_text(
        "from acme.api import fetch\nresult = fetch('srv', 5)\n", encoding="utf-8"
    )
    (src / "helper.py").write_text("VALUE = 3\n", encoding="utf-8")
    return src


def _migrate_args(source_dir, dest, lib_repo):
    shas = git(lib_repo, "log", "--reverse", "--format=%H").split()
    return [
        "migrate",
        "--source-dir", str(source_dir),
        "--dest-dir", str(dest),
        "--lib-repo", str(lib_repo),
        "--v-from", shas[0],
        "--v-to", shas[1],
        "--model", "m-test",
        "--strategy", "with_diff",
    ]


def test_config_env_interpolation(tmp_path, monkeypatch):
    monkeypatch.setenv("TEST_BASE_URL", "http://example.invalid/v1")
    cfg_path = tmp_path / "run.toml"
    cfg_path.write_text(
        '[provider]\nbase_url = "${TEST_BASE_URL}"\nmodel = "m"\n',
        encoding="utf-8",
    )
    config = load_config(cfg_path)
    assert config.provider["base_url"] == "http://example.invalid/v1"


def test_config_missing_env_var(tmp_path, monkeypatch):
    monkeypatch.delenv("NOT_SET_ANYWHERE", raising=False)
    cfg_path = tmp_path / "run.toml"
    cfg_path.write_text(
        '[provider]\nbase_url = "${NOT_SET_ANYWHERE}"\n', encoding="utf-8"
    )
    with pytest.raises(ConfigError, match="NOT_SET_ANYWHERE"):
        load_config(cfg_path)


def test_config_checks_referenced_paths(tmp_path):
    cfg_path = tmp_path / "run.toml"
    cfg_path.write_text(
        '[library]\nrepo = "/definitely/not/here"\n', encoding="utf-8"
    )
    with pytest.raises(ConfigError, match="repo"):
        load_config(cfg_path)


def test_config_rejects_bad_toml_and_missing_file(tmp_path):
    cfg_path = tmp_path / "run.toml"
    cfg_path.write_text("not [valid\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(cfg_path)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.toml")


def test_config_cost_table():
    config = Config(costs={"m1": [2.50, 10.00]})
    table = config.cost_table()
    assert table.knows("m1")
    assert Config().cost_table() is None
    with pytest.raises(ConfigError):
        Config(costs={"m1": [2.50]}).cost_table()


def test_migrate_dry_run_builds_no_client(
    tmp_path, source_dir, lib_repo, capsys
):
    dest = tmp_path / "dest"
    rc = main(
        _migrate_args(source_dir, dest, lib_repo) + ["--dry-run"],
        client_factory=_no_client_factory,
    )
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["dry_run"] is True
    assert payload["strategy"] == "with_diff"
    paths = [row["path"] for row in payload["files"]]
    assert paths == ["app.py", "helper.py"]
    for row in payload["files"]:
        content = (source_dir / row["path"]).read_text(encoding="utf-8")
        assert row["prompt_tokens"] > count_tokens(content)
        assert row["fits_window"] is None
    total = sum(row["prompt_tokens"] for row in payload["files"])
    assert payload["total_prompt_tokens"] == total
    assert not dest.exists()


def test_migrate_dry_run_window_check(
    tmp_path, source_dir, lib_repo, capsys
):
    cfg_path = tmp_path / "run.toml"
    cfg_path.write_text("[provider]\nwindow_tokens = 10\n", encoding="utf-8")
    rc = main(
        _migrate_args(source_dir, tmp_path / "dest", lib_repo)
        + ["--dry-run", "--config", str(cfg_path)],
        client_factory=_no_client_factory,
    )
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert all(row["fits_window"] is False for row in payload["files"])


def test_migrate_writes_outputs_and_ledger(
    tmp_path, source_dir, lib_repo, capsys
):
    dest = tmp_path / "dest"
    provider = MockProvider(reply="migrated = True\n")
    rc = main(
        _migrate_args(source_dir, dest, lib_repo),
        client_factory=_factory(provider),
    )
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["runs"] == 1
    assert summary["files_per_run"] == 2
    assert summary["failed_files"] == 0
    for rel in ("app.py", "helper.py"):
        out_file = dest / "run_1" / rel
        assert out_file.read_text(encoding="utf-8") == "migrated = True\n"
    ledger = UsageLedger.load_jsonl(dest / "usage.jsonl")
    assert len(ledger.records) == 2
    assert all(record.model == "m-test" for record in ledger.records)


def test_migrate_reports_partial_failure(
    tmp_path, source_dir, lib_repo, capsys
):
    dest = tmp_path / "dest"
    provider = MockProvider(
        reply="migrated = True\n", failures=[ServerError("boom")]
    )
    rc = main(
        _migrate_args(source_dir, dest, lib_repo),
        client_factory=_factory(provider),
    )
    assert rc == 1
    summary = json.loads(capsys.readouterr().out)
    assert summary["failed_files"] == 1
    assert not (dest / "run_1" / "app.py").exists()
    assert (dest / "run_1" / "helper.py").exists()


def test_migrate_missing_settings_is_usage_error(source_dir):
    rc = main(["migrate", "--source-dir", str(source_dir)])
    assert rc == 2


def _eval_trees(tmp_path):
    original = tmp_path / "orig"
    reference = tmp_path / "ref"
    candidate = tmp_path / "cand"
    for root in (original, reference, candidate):
        root.mkdir()
    (original / "a.py").write_text("alpha\nbeta\ngamma\n", encoding="utf-8")
    (reference / "a.py").write_text("alpha\nBETA\ngamma\n", encoding="utf-8")
    (candidate / "a.py").write_text("alpha\nBETA\ngamma\n", encoding="utf-8")
    return original, reference, candidate


def test_eval_prints_per_run_csv(tmp_path, capsys):
    original, reference, candidate = _eval_trees(tmp_path)
    rc = main(
        [
            "eval",
            "--original", str(original),
            "--reference", str(reference),
            "--candidate", str(candidate),
        ]
    )
    assert rc == 0
    lines = capsys.readouterr().out.split("\r\n")
    assert lines[0] == ",".join(EVAL_CSV_COLUMNS)
    assert lines[1] == "1,1,1,1,1,1.0,1.0,1.0"


def test_eval_writes_report_files(tmp_path, capsys):
    original, reference, candidate = _eval_trees(tmp_path)
    out = tmp_path / "reports"
    rc = main(
        [
            "eval",
            "--original", str(original),
            "--reference", str(reference),
            "--candidate", str(candidate), str(candidate),
            "--out", str(out),
        ]
    )
    assert rc == 0
    for name in ("per_run.csv", "per_run.json", "cumulative.csv", "cumulative.json"):
        assert (out / name).is_file()
    per_run = json.loads((out / "per_run.json").read_text(encoding="utf-8"))
    assert [row["run"] for row in per_run] == [1, 2]


def test_eval_missing_tree_is_usage_error(tmp_path):
    original, reference, _ = _eval_trees(tmp_path)
    rc = main(
        [
            "eval",
            "--original", str(original),
            "--reference", str(reference),
            "--candidate", str(tmp_path / "nowhere"),
        ]
    )
    assert rc == 2


def test_eval_runs_tests_when_asked(tmp_path, capsys):
    original, reference, candidate = _eval_trees(tmp_path)
    script = tmp_path / "fake_runner.py"
    script.write_text(
        textwrap.dedent(
            """
            print("collected 3 items")
            print("===== 3 passed in 0.01s =====")
            """
        ),
        encoding="utf-8",
    )
    rc = main(
        [
            "eval",
            "--original", str(original),
            "--reference", str(reference),
            "--candidate", str(candidate),
            "--run-tests", sys.executable, str(script),
        ]
    )
    assert rc == 0
    last = capsys.readouterr().out.strip().splitlines()[-1]
    report = json.loads(last)
    assert report["passed"] == 3
    assert report["failed"] == 0
    assert report["collected"] == 3


def test_bench_generate_run_score_pipeline(tmp_path, capsys):
    questions_path = tmp_path / "questions.jsonl"
    rc = main(
        [
            "bench", "generate",
            "--count", "5",
            "--seed", "3",
            "--out", str(questions_path),
        ]
    )
    assert rc == 0
    questions = load_questions(questions_path)
    assert len(questions) == 5

    seen = []

    def reply_fn(request):
        seen.append(request)
        return "3"

    provider = MockProvider(reply_fn=reply_fn, token_probs=(("3", 0.5),))
    answers_path = tmp_path / "answers.jsonl"
    rc = main(
        [
            "bench", "run",
            "--questions", str(questions_path),
            "--trial", "diff_pair",
            "--model", "m-test",
            "--out", str(answers_path),
        ],
        client_factory=_factory(provider),
    )
    assert rc == 0
    assert len(seen) == 5
    assert seen[0].max_output_tokens == 16
    assert seen[0].want_token_probs is True
    assert questions[0].file_a in seen[0].user
    assert questions[0].file_c in seen[0].user
    rows = [
        json.loads(line)
        for line in answers_path.read_text(encoding="utf-8").splitlines()
    ]
    assert rows == [{"index": i, "answer": 3.0} for i in range(5)]

    rc = main(
        [
            "bench", "score",
            "--questions", str(questions_path),
            "--answers", str(answers_path),
            "--tested", "m-test",
            "--algorithm", "diff pair",
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    lines = out.split("\r\n")
    assert lines[0] == "tested,algorithm,MAE,accuracy"
    mae = sum(abs(3 - q.true_count) for q in questions) / len(questions)
    accuracy = sum(1 for q in questions if q.true_count == 3) / len(questions)
    assert lines[1] == f"m-test,diff pair,{mae:.3f},{accuracy:.3f}"


def test_bench_run_code_pair_sends_file_b(tmp_path):
    questions_path = tmp_path / "questions.jsonl"
    main(["bench", "generate", "--count", "2", "--seed", "1",
          "--out", str(questions_path)])
    questions = load_questions(questions_path)
    seen = []

    def reply_fn(request):
        seen.append(request)
        return "no idea, maybe 2"

    provider = MockProvider(reply_fn=reply_fn)
    answers_path = tmp_path / "answers.jsonl"
    rc = main(
        [
            "bench", "run",
            "--questions", str(questions_path),
            "--trial", "code_pair",
            "--model", "m-test",
            "--out", str(answers_path),
        ],
        client_factory=_factory(provider),
    )
    assert rc == 0
    assert questions[0].file_b in seen[0].user
    assert questions[0].file_c not in seen[0].user
    rows = [
        json.loads(line)
        for line in answers_path.read_text(encoding="utf-8").splitlines()
    ]
    # no token probabilities: falls back to the first integer in the text
    assert rows[0]["answer"] == 2.0


def test_history_prints_csv(make_repo, capsys):
    repo = make_repo(
        [
            {"a.txt": "one\ntwo\n"},
            {"a.txt": "one\ntwo\nthree\n"},
        ]
    )
    rc = main(["history", "--repo", str(repo)])
    assert rc == 0
    lines = capsys.readouterr().out.split("\r\n")
    assert lines[0] == "commit,timestamp,repo_tokens,diff_tokens"
    assert len(lines) == 4  # header, two rows, trailing empty piece


def test_history_writes_file_and_filters(make_repo, tmp_path):
    repo = make_repo([{"a.py": "x = 1\n", "b.md": "words words words\n"}])
    out = tmp_path / "history.csv"
    rc = main(
        [
            "history",
            "--repo", str(repo),
            "--include", "*.py",
            "--out", str(out),
        ]
    )
    assert rc == 0
    rows = out.read_text(encoding="utf-8").strip().splitlines()
    assert len(rows) == 2
    assert rows[1].endswith(",2,12")  # 6 bytes of tree, 46 bytes of diff


def test_cost_summarizes_ledger(tmp_path, capsys):
    ledger = UsageLedger()
    ledger.add(UsageRecord("m1", "case-a", "with_diff", 100, 50, 0.001))
    ledger.add(UsageRecord("m2", "case-b", "with_code", 10, 5, 0.0))
    path = tmp_path / "usage.jsonl"
    ledger.save_jsonl(path)
    rc = main(["cost", "--ledger", str(path)])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["records"] == 2
    assert summary["prompt_tokens"] == 110
    assert summary["completion_tokens"] == 55
    assert summary["total_cost_usd"] == 0.001

    rc = main(["cost", "--ledger", str(path), "--by", "model"])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    assert set(summary["by_model"]) == {"m1", "m2"}
    assert summary["by_model"]["m1"]["prompt_tokens"] == 100


def test_cost_missing_ledger_is_operation_failure(tmp_path):
    assert main(["cost", "--ledger", str(tmp_path / "none.jsonl")]) == 1


def test_unknown_command_exits_via_argparse():
    with pytest.raises(SystemExit) as excinfo:
        main(["definitely-not-a-command"])
    assert excinfo.value.code == 2
