import csv
import io
import shutil
import signal
import subprocess
import sys

import pytest

from pqriqa.checkpoint import load_checkpoint
from pqriqa.cli import main, run
from pqriqa.errors import EXIT_DATA, EXIT_OK, EXIT_USAGE
from pqriqa.fileio import sha256_file
from pqriqa.harness import SweepRow, SweepTable
from pqriqa.results_db import get_connection, init_schema, store_sweep

GEN_ARGS = ["--sources", "6", "--kinds", "blur,awgn", "--levels", "2", "--size", "16",
            "--patch-size", "8", "--train-crops", "4", "--seed", "5"]


@pytest.fixture(scope="module")
def lab(tmp_path_factory):
    out = tmp_path_factory.mktemp("lab")
    assert main(["gen-data", "--out", str(out)] + GEN_ARGS) == EXIT_OK
    return out


@pytest.fixture(scope="module")
def pqr_ckpt(lab, tmp_path_factory):
    path = tmp_path_factory.mktemp("runs") / "pqr.ckpt"
    code = main(["train", "--manifest", str(lab), "--arch", "tiny", "--epochs", "2",
                 "--batch-size", "16", "--seed", "3", "--out", str(path)])
    assert code == EXIT_OK
    return path


def write_scores(path, values, header=True):
    path.write_text(("score\n" if header else "") + "".join(f"{v}\n" for v in values))
    return path


class TestGenData:

    def test_summary(self, tmp_path, capsys):
        assert main(["gen-data", "--out", str(tmp_path / "lab")] + GEN_ARGS) == EXIT_OK
        out = capsys.readouterr().out
        assert "Images: 12" in out
        assert "Manifest sha256:" in out
        assert (tmp_path / "lab" / "manifest.jsonl").exists()

    def test_unknown_kind(self, tmp_path, capsys):
        code = main(["gen-data", "--out", str(tmp_path / "lab"), "--kinds", "sepia"])
        assert code == EXIT_USAGE
        assert "sepia" in capsys.readouterr().err


class TestEncode:

    def test_rows_on_stdout(self, tmp_path, capsys):
        scores = write_scores(tmp_path / "scores.csv", [0.5, 0.1, 0.9])
        assert main(["encode", "--scores", str(scores)]) == EXIT_OK
        captured = capsys.readouterr()
        rows = list(csv.reader(io.StringIO(captured.out)))
        assert rows[0] == ["score", "q1", "q2", "q3", "q4", "q5"]
        first = [float(v) for v in rows[1][1:]]
        assert sum(first) == pytest.approx(1.0)
        assert max(first) == first[2]
        assert "fit_mae=" in captured.err

    def test_out_file(self, tmp_path, capsys):
        scores = write_scores(tmp_path / "scores.csv", [0.2, 0.4], header=False)
        out = tmp_path / "pqr.csv"
        assert main(["encode", "--scores", str(scores), "--M", "3", "--out", str(out)]) == EXIT_OK
        assert out.read_text().splitlines()[0] == "score,q1,q2,q3"
        assert "anchors (uniform)" in capsys.readouterr().out

    def test_out_of_range_names_file_line(self, tmp_path, capsys):
        scores = write_scores(tmp_path / "scores.csv", [0.5, 1.2])
        assert main(["encode", "--scores", str(scores)]) == EXIT_USAGE
        assert "line 3: score 1.2" in capsys.readouterr().err

    def test_out_of_range_line_without_header(self, tmp_path, capsys):
        scores = write_scores(tmp_path / "scores.csv", [0.5, -0.1, 0.4], header=False)
        assert main(["encode", "--scores", str(scores)]) == EXIT_USAGE
        assert "line 2: score -0.1" in capsys.readouterr().err

    def test_out_of_range_line_skips_blank_rows(self, tmp_path, capsys):
        scores = tmp_path / "scores.csv"
        scores.write_text("score\n0.5\n\n1.5\n")
        assert main(["encode", "--scores", str(scores)]) == EXIT_USAGE
        assert "line 4: score 1.5" in capsys.readouterr().err

    def test_lloyd_out_of_range_names_line(self, tmp_path, capsys):
        scores = write_scores(tmp_path / "scores.csv", [0.1, 0.5, 0.9, 1.3])
        code = main(["encode", "--scores", str(scores), "--M", "3", "--anchors", "lloyd_max"])
        assert code == EXIT_USAGE
        assert "line 5: score 1.3" in capsys.readouterr().err

    def test_lloyd_scores_file_out_of_range(self, tmp_path, capsys):
        scores = write_scores(tmp_path / "scores.csv", [0.1, 0.5, 0.9])
        fit = write_scores(tmp_path / "fit.csv", [0.2, 2.0], header=False)
        code = main(["encode", "--scores", str(scores), "--M", "2", "--anchors", "lloyd_max",
                     "--lloyd-scores", str(fit)])
        assert code == EXIT_USAGE
        err = capsys.readouterr().err
        assert "fit.csv: line 2: score 2.0" in err

    def test_non_numeric_row(self, tmp_path, capsys):
        scores = write_scores(tmp_path / "scores.csv", [0.5, "good"])
        assert main(["encode", "--scores", str(scores)]) == EXIT_DATA
        assert "line 3 is not a number" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["encode", "--scores", str(tmp_path / "none.csv")]) == EXIT_DATA


class TestTrainEval:

    def test_single_anchor_rejected(self, lab, tmp_path):
        code = main(["train", "--manifest", str(lab), "--arch", "tiny", "--M", "1",
                     "--out", str(tmp_path / "x.ckpt")])
        assert code == EXIT_USAGE
        assert not (tmp_path / "x.ckpt").exists()

    def test_train_writes_checkpoint_and_trace(self, pqr_ckpt):
        assert pqr_ckpt.exists()
        trace = pqr_ckpt.with_suffix(".trace.csv").read_text().splitlines()
        assert trace[0] == "epoch,lr,loss"
        assert len(trace) == 3

    def test_train_on_renamed_manifest_file(self, lab, tmp_path):
        copy = tmp_path / "lab"
        shutil.copytree(lab, copy)
        renamed = copy / "run_a.jsonl"
        (copy / "manifest.jsonl").rename(renamed)
        out = tmp_path / "pqr.ckpt"
        code = main(["train", "--manifest", str(renamed), "--arch", "tiny", "--epochs", "1",
                     "--batch-size", "16", "--seed", "3", "--out", str(out)])
        assert code == EXIT_OK
        assert load_checkpoint(out).meta["manifest_sha256"] == sha256_file(renamed)

    def test_eval_single_grid_patch(self, lab, pqr_ckpt, tmp_path, capsys):
        out = tmp_path / "pred.csv"
        code = main(["eval", "--checkpoint", str(pqr_ckpt), "--manifest", str(lab),
                     "--stride", "16", "--out", str(out)])
        assert code == EXIT_OK
        text = capsys.readouterr().out
        assert "Patches per image: 1" in text
        assert "SRCC=" in text
        assert len(out.read_text().splitlines()) == 1 + 8

    def test_eval_mismatched_m(self, lab, pqr_ckpt):
        code = main(["eval", "--checkpoint", str(pqr_ckpt), "--manifest", str(lab), "--M", "4"])
        assert code == EXIT_USAGE

    def test_eval_missing_checkpoint(self, lab, tmp_path):
        code = main(["eval", "--checkpoint", str(tmp_path / "none.ckpt"), "--manifest", str(lab)])
        assert code == EXIT_DATA


class TestSweepAndResults:

    def test_empty_grid(self, lab, tmp_path, capsys):
        cfg = tmp_path / "run.ini"
        cfg.write_text(f"[dataset]\nmanifest = {lab}\n[arch]\npreset = tiny\n")
        code = main(["sweep", "--config", str(cfg), "--param", "beta", "--values", ""])
        assert code == EXIT_USAGE
        assert "empty" in capsys.readouterr().err

    def test_bad_config(self, tmp_path):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[dataset]\nmanifest = lab\n[encoder]\nbeta = sharp\n")
        assert main(["compare", "--config", str(cfg)]) == EXIT_USAGE

    def test_results_listing(self, tmp_path, capsys):
        db = tmp_path / "results.duckdb"
        conn = get_connection(db)
        init_schema(conn)
        store_sweep(conn, SweepTable("m", "test", [SweepRow("m", "uniform", 3.0, 0.61, 0.55)]), label="grid")
        conn.close()
        assert main(["results", "--db", str(db)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "sweep" in out
        assert "SRCC=0.6100" in out

    def test_results_missing_db(self, tmp_path):
        assert main(["results", "--db", str(tmp_path / "none.duckdb")]) == EXIT_DATA


class TestUsage:

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == EXIT_USAGE

    def test_missing_required_flag(self):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--manifest", "lab"])
        assert exc.value.code == EXIT_USAGE


@pytest.mark.skipif(not hasattr(signal, "SIGPIPE"), reason="no SIGPIPE on this platform")
class TestSigpipe:

    def test_import_leaves_handler_alone(self):
        code = ("import signal; before = signal.getsignal(signal.SIGPIPE); "
                "import pqriqa.cli; print(signal.getsignal(signal.SIGPIPE) == before)")
        done = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True)
        assert done.stdout.strip() == "True"

    def test_entry_point_restores_default(self, monkeypatch):
        previous = signal.getsignal(signal.SIGPIPE)
        monkeypatch.setattr("pqriqa.cli.main", lambda: EXIT_OK)
        try:
            with pytest.raises(SystemExit) as exc:
                run()
            assert exc.value.code == EXIT_OK
            assert signal.getsignal(signal.SIGPIPE) == signal.SIG_DFL
        finally:
            signal.signal(signal.SIGPIPE, previous)
