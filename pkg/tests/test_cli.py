import pytest

from helpers import ValidityBoostBackend
from test_pipeline import synthetic_task1, synthetic_valid_triples
from triplemine.cli import Settings, load_config_file, run
from triplemine.core import format_triple_line
from triplemine.errors import ConfigError
from triplemine.pipeline import sample_negatives
from triplemine.sentences import MODE_TEMPLATE, generate_deterministic
from wire_stub import WireStub


@pytest.fixture
def task1_setup(tmp_path):
    data, backend = synthetic_task1(n_valid=12)
    path = tmp_path / "labeled.tsv"
    path.write_text("".join(format_triple_line(r) + "\n" for r in data))
    stub = WireStub(backend, model_tag="stub-masked").start()
    yield path, stub
    stub.stop()


@pytest.fixture
def candidates_file(tmp_path):
    triples = synthetic_valid_triples(10)
    path = tmp_path / "candidates.tsv"
    path.write_text("".join(format_triple_line(t) + "\n" for t in triples))
    valid_texts = {generate_deterministic(t, MODE_TEMPLATE).text for t in triples[:5]}
    stub = WireStub(ValidityBoostBackend(valid_texts)).start()
    yield path, stub
    stub.stop()


class TestConfigFile:
    def test_round_trip(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# a run manifest\n"
            "mode = template\n"
            "lambda = 2.5\n"
            "seed = 11\n"
            "skip_bad_records = true\n"
            "concurrency = 3\n"
        )
        values = load_config_file(cfg)
        assert values == {
            "mode": "template",
            "lambda": 2.5,
            "seed": 11,
            "skip_bad_records": True,
            "concurrency": 3,
        }

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("turbo = yes\n")
        with pytest.raises(ConfigError):
            load_config_file(cfg)

    def test_bad_value_rejected(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("lambda = high\n")
        with pytest.raises(ConfigError):
            load_config_file(cfg)

    def test_flags_override_file(self):
        base = Settings(mode="concat", seed=1)
        merged = base.merged_with_flags(mode="template", seed=None)
        assert merged.mode == "template"
        assert merged.seed == 1


class TestGenerateCommand:
    def test_offline_template_generation(self, tmp_path, capsys):
        path = tmp_path / "in.tsv"
        path.write_text("AtLocation\tferret\tpet store\n")
        assert run(["--mode", "template+grammar", "generate", str(path)]) == 0
        out = capsys.readouterr().out
        assert "you are likely to find a ferret in a pet store" in out

    def test_output_file(self, tmp_path):
        path = tmp_path / "in.tsv"
        path.write_text("AtLocation\tferret\tpet store\n")
        out_path = tmp_path / "out.tsv"
        assert run(["--mode", "concat", "generate", str(path), "--output", str(out_path)]) == 0
        assert "ferret at location pet store" in out_path.read_text()


class TestClassifyCommand:
    def test_end_to_end_over_http(self, task1_setup, tmp_path, capsys):
        path, stub = task1_setup
        out_path = tmp_path / "report.tsv"
        code = run(
            [
                "--masked-endpoint", stub.url,
                "--mode", "template",
                "--lambda", "1.0",
                "classify", str(path),
                "--output", str(out_path),
            ]
        )
        assert code == 0
        stdout = capsys.readouterr().out
        assert "f1=1.0000" in stdout
        assert out_path.read_text().startswith("relation\thead\ttail\tsentence")

    def test_endpoint_from_environment(self, task1_setup, monkeypatch, capsys):
        path, stub = task1_setup
        monkeypatch.setenv("TM_MASKED_URL", stub.url)
        assert run(["--mode", "template", "--lambda", "1.0", "classify", str(path)]) == 0
        assert "f1=" in capsys.readouterr().out

    def test_cached_reruns_are_byte_identical(self, task1_setup, tmp_path):
        path, stub = task1_setup
        cache_dir = tmp_path / "cache"
        outputs = []
        for name in ("r1.tsv", "r2.tsv"):
            out_path = tmp_path / name
            code = run(
                [
                    "--masked-endpoint", stub.url,
                    "--mode", "template",
                    "--lambda", "1.0",
                    "--cache-dir", str(cache_dir),
                    "classify", str(path),
                    "--output", str(out_path),
                ]
            )
            assert code == 0
            outputs.append(out_path.read_bytes())
        assert outputs[0] == outputs[1]

    def test_flag_overrides_config_file(self, task1_setup, tmp_path, capsys):
        path, stub = task1_setup
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"masked_endpoint = {stub.url}\nmode = template\nlambda = 1.0\n")
        assert run(["--config", str(cfg), "--lambda", "2.0", "classify", str(path)]) == 0
        assert "lambda=2.0000" in capsys.readouterr().out


class TestMineAndScoreCommands:
    def test_mine_exports_ranked_tsv(self, candidates_file, tmp_path, capsys):
        path, stub = candidates_file
        out_path = tmp_path / "mined.tsv"
        code = run(
            [
                "--masked-endpoint", stub.url,
                "--mode", "template",
                "mine", str(path),
                "--top-k", "5",
                "--output", str(out_path),
            ]
        )
        assert code == 0
        assert "lambda=4.0000" in capsys.readouterr().out  # mining default
        lines = out_path.read_text().splitlines()
        assert lines[0].endswith("rank")
        assert len(lines) == 6

    def test_mine_with_stratified_sampling(self, candidates_file, capsys):
        path, stub = candidates_file
        code = run(
            [
                "--masked-endpoint", stub.url,
                "--mode", "template",
                "mine", str(path),
                "--per-relation", "1",
            ]
        )
        assert code == 0
        assert "ranked=5" in capsys.readouterr().out  # 5 relations in the cycle

    def test_score_then_tune_lambda(self, candidates_file, tmp_path, capsys):
        path, stub = candidates_file
        scored = tmp_path / "scored.tsv"
        assert (
            run(
                [
                    "--masked-endpoint", stub.url,
                    "--mode", "template",
                    "score", str(path),
                    "--output", str(scored),
                ]
            )
            == 0
        )
        grid_out = tmp_path / "grid.json"
        code = run(["tune-lambda", str(scored), "--points", "10", "--output", str(grid_out)])
        assert code == 0
        assert "best_lambda=" in capsys.readouterr().out
        assert grid_out.exists()


class TestExitCodes:
    def test_missing_input_is_usage_error(self):
        assert run(["--mode", "template", "generate", "/nonexistent.tsv"]) == 3

    def test_unknown_relation_is_data_error(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("BogusRel\ta\tb\n")
        assert run(["--mode", "template", "generate", str(path)]) == 1

    def test_skip_bad_records_downgrades_to_warning(self, tmp_path, capsys):
        path = tmp_path / "mixed.tsv"
        path.write_text("BogusRel\ta\tb\nAtLocation\tferret\tpet store\n")
        code = run(["--mode", "template", "--skip-bad-records", "generate", str(path)])
        assert code == 0
        captured = capsys.readouterr()
        assert "warning" in captured.err
        assert "ferret" in captured.out

    def test_all_records_bad_is_data_error(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("BogusRel\ta\tb\n")
        assert run(["--mode", "template", "--skip-bad-records", "generate", str(path)]) == 1

    def test_score_without_endpoint_is_config_error(self, tmp_path):
        path = tmp_path / "in.tsv"
        path.write_text("AtLocation\tferret\tpet store\n")
        assert run(["--mode", "template", "score", str(path)]) == 3

    def test_unreachable_backend_is_transport_error(self, tmp_path):
        path = tmp_path / "in.tsv"
        path.write_text("AtLocation\tferret\tpet store\n")
        code = run(
            ["--masked-endpoint", "http://127.0.0.1:1", "--mode", "template", "score", str(path)]
        )
        assert code == 2

    def test_serve_check_unreachable_is_transport_error(self):
        assert run(["--masked-endpoint", "http://127.0.0.1:1", "serve-check"]) == 2

    def test_serve_check_without_endpoints_is_config_error(self):
        assert run(["serve-check"]) == 3

    def test_serve_check_reports_model_tags(self, task1_setup, capsys):
        _, stub = task1_setup
        assert run(["--masked-endpoint", stub.url, "serve-check"]) == 0
        assert "model_tag=stub-masked" in capsys.readouterr().out

    def test_bad_config_file_is_config_error(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("nope = 1\n")
        assert run(["--config", str(cfg), "serve-check"]) == 3
