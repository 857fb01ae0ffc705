import json
import shutil
import subprocess
import sys

import pytest

from pragmachine import cli


def run_cli(argv):
    return cli.main(argv)


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """One tiny seeded pipeline shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    cfg = {"n_games": 8, "rounds_per_game": 6, "seed": 5, "noise_eps": 0.05,
           "speaker_alpha": 1.5, "ratios": [0.5, 0.25, 0.25], "split_seed": 6}
    cfg_path = root / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    corpus_path = root / "corpus.jsonl"
    vocab_path = root / "vocab.tsv"
    assert run_cli(["gen-data", "--config", str(cfg_path), "--out", str(corpus_path),
                    "--vocab-out", str(vocab_path)]) == 0
    params_path = root / "lex.json"
    assert run_cli(["train-lexicon", "--mode", "decontextualized",
                    "--corpus", str(corpus_path), "--vocab", str(vocab_path),
                    "--embeddings", "random:3", "--out", str(params_path),
                    "--seed", "4", "--epochs", "2", "--hidden", "8", "--dim", "8"]) == 0
    return {"root": root, "cfg": cfg_path, "corpus": corpus_path,
            "vocab": vocab_path, "params": params_path}


class TestHelp:
    def test_help_lists_every_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli(["--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        for cmd in ("gen-data", "train-lexicon", "prag", "eval", "gradcheck",
                    "demo", "serve", "rerun"):
            assert cmd in out

    @pytest.mark.parametrize("cmd,flags", [
        ("gen-data", ["--config", "--out", "--vocab-out"]),
        ("train-lexicon", ["--mode", "--corpus", "--vocab", "--embeddings", "--out",
                           "--lr", "--batch-size", "--epochs", "--patience", "--seed",
                           "--optimizer", "--alpha", "--hidden", "--dim", "--history"]),
        ("prag", ["--model", "--objective", "--alpha", "--steps", "--lr", "--corpus",
                  "--vocab", "--params", "--split", "--out", "--trace", "--no-cost", "--jobs"]),
        ("eval", ["--models", "--corpus", "--vocab", "--params", "--sl-params",
                  "--report", "--seeds", "--split", "--jobs"]),
        ("gradcheck", ["--objective", "--vocab-size", "--seed", "--h", "--alpha",
                       "--use-cost", "--instances", "--tol"]),
        ("demo", ["--context", "--target", "--vocab", "--params", "--top"]),
        ("serve", ["--port", "--host", "--vocab", "--params", "--sl-params",
                   "--static", "--threshold"]),
        ("rerun", ["--manifest"]),
    ])
    def test_subcommand_help_lists_flags_with_defaults(self, capsys, cmd, flags):
        with pytest.raises(SystemExit) as exc:
            run_cli([cmd, "--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        for flag in flags:
            assert flag in out, f"{cmd} help missing {flag}"
        if cmd != "rerun":
            assert "default" in out

    def test_prag_defaults_are_tuned_values(self):
        parser = cli.build_parser()
        ns = parser.parse_args(["prag", "--model", "gd", "--corpus", "c", "--vocab", "v",
                                "--params", "p"])
        assert ns.alpha == 1.17 and ns.steps == 9 and ns.lr == 0.357

    def test_unknown_flag_rejected(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli(["gradcheck", "--objective", "le", "--vocab-size", "5",
                     "--seed", "1", "--bogus", "x"])
        assert exc.value.code == 2


class TestGenData:
    def test_manifest_written(self, pipeline):
        manifest = json.loads(
            (pipeline["corpus"].parent / "corpus.jsonl.manifest.json").read_text())
        assert manifest["command"] == "gen-data"
        assert manifest["seed"] == 5
        assert str(pipeline["cfg"]) in manifest["inputs"]

    def test_rerun_is_bit_identical(self, pipeline, tmp_path):
        corpus_path = pipeline["corpus"]
        saved = tmp_path / "orig.jsonl"
        shutil.copyfile(corpus_path, saved)
        manifest_path = corpus_path.parent / "corpus.jsonl.manifest.json"
        assert run_cli(["rerun", "--manifest", str(manifest_path)]) == 0
        assert corpus_path.read_bytes() == saved.read_bytes()

    def test_missing_config_is_data_error(self, tmp_path):
        rc = run_cli(["gen-data", "--config", str(tmp_path / "nope.json"),
                      "--out", str(tmp_path / "c.jsonl")])
        assert rc == cli.EXIT_DATA


class TestTrainLexicon:
    def test_train_rerun_bit_identical(self, pipeline, tmp_path):
        params_path = pipeline["params"]
        saved = tmp_path / "params.json"
        shutil.copyfile(params_path, saved)
        manifest_path = params_path.parent / "lex.json.manifest.json"
        assert run_cli(["rerun", "--manifest", str(manifest_path)]) == 0
        assert params_path.read_bytes() == saved.read_bytes()

    def test_bad_embeddings_spec(self, pipeline, tmp_path):
        rc = run_cli(["train-lexicon", "--mode", "decontextualized",
                      "--corpus", str(pipeline["corpus"]), "--vocab", str(pipeline["vocab"]),
                      "--embeddings", "random:x", "--out", str(tmp_path / "p.json"),
                      "--seed", "1"])
        assert rc == cli.EXIT_DATA


class TestPrag:
    def test_prag_writes_predictions_and_trace(self, pipeline, tmp_path):
        out = tmp_path / "preds.jsonl"
        trace = tmp_path / "trace.jsonl"
        rc = run_cli(["prag", "--model", "gd", "--corpus", str(pipeline["corpus"]),
                      "--vocab", str(pipeline["vocab"]), "--params", str(pipeline["params"]),
                      "--split", "test", "--out", str(out), "--trace", str(trace),
                      "--steps", "3"])
        assert rc == 0
        preds = [json.loads(line) for line in out.read_text().splitlines()]
        traces = [json.loads(line) for line in trace.read_text().splitlines()]
        assert len(preds) == len(traces) > 0
        assert all(len(t["trace"]) == 3 for t in traces)
        assert all(abs(sum(p["listener_dist"]) - 1.0) < 1e-9 for p in preds)


class TestEval:
    def test_eval_report_files(self, pipeline, tmp_path):
        report_dir = tmp_path / "rpt"
        rc = run_cli(["eval", "--models", "base,am", "--corpus", str(pipeline["corpus"]),
                      "--vocab", str(pipeline["vocab"]), "--params", str(pipeline["params"]),
                      "--report", str(report_dir), "--split", "test", "--jobs", "1"])
        assert rc == 0
        assert (report_dir / "report.json").exists()
        assert (report_dir / "per_round.csv").exists()
        assert (report_dir / "seeds_summary.json").exists()
        assert (report_dir / "manifest.json").exists()

    def test_missing_sl_artifact_named(self, pipeline, tmp_path, capsys):
        rc = run_cli(["eval", "--models", "sl", "--corpus", str(pipeline["corpus"]),
                      "--vocab", str(pipeline["vocab"]), "--params", str(pipeline["params"]),
                      "--report", str(tmp_path / "r")])
        assert rc == cli.EXIT_DATA
        assert "missing artifact: sl lexicon" in capsys.readouterr().err


class TestGradcheck:
    def test_passes_within_tolerance(self, capsys):
        rc = run_cli(["gradcheck", "--objective", "le", "--vocab-size", "5",
                      "--seed", "7", "--h", "1e-5"])
        assert rc == 0
        assert "PASS" in capsys.readouterr().out

    def test_fails_with_absurd_tolerance(self, capsys):
        rc = run_cli(["gradcheck", "--objective", "rd", "--vocab-size", "4",
                      "--seed", "3", "--h", "1e-5", "--tol", "1e-18"])
        assert rc == cli.EXIT_NUMERICAL


class TestDemo:
    def test_demo_prints_models(self, pipeline, capsys):
        rc = run_cli(["demo", "--context", "#aa8455,#884db3,#876e91", "--target", "0",
                      "--vocab", str(pipeline["vocab"]), "--params", str(pipeline["params"]),
                      "--steps", "2"])
        assert rc == 0
        out = capsys.readouterr().out
        for name in ("base", "am", "gd"):
            assert f"{name:>5} speaker" in out

    def test_demo_rejects_bad_context(self, pipeline):
        rc = run_cli(["demo", "--context", "#aa8455,#884db3", "--target", "0",
                      "--vocab", str(pipeline["vocab"]), "--params", str(pipeline["params"])])
        assert rc == cli.EXIT_DATA


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "pragmachine.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "pragmachine" in proc.stdout
