import subprocess
import sys

import pytest

from scf_ganlab.cli import main

SMALL = """world.n = 500
world.default_rate = 0.2
gan.epochs = 10
gan.batch_size = 32
classifier.epochs = 3
"""


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(SMALL)
    return str(path)


def test_stage_chain(tmp_path, cfg, capsys):
    w, g, s, c, e = (str(tmp_path / d) for d in "wgsce")
    assert main(["genworld", "--config", cfg, "--out", w, "--seed", "2"]) == 0
    assert main(["train-gan", "--config", cfg, "--data", f"{w}/train.csv", "--out", g]) == 0
    assert main(["synth", "--config", cfg, "--model", f"{g}/gan.json", "--n", "30", "--out", s]) == 0
    assert main(["train-clf", "--config", cfg, "--data", f"{w}/train.csv",
                 "--synthetic", f"{s}/synthetic.csv", "--kind", "logreg", "--out", c]) == 0
    assert main(["eval", "--config", cfg, "--model", f"{c}/logreg.json", "--data", f"{w}/test.csv",
                 "--out", e, "--format", "csv"]) == 0
    out = capsys.readouterr().out
    assert "Model,Accuracy,Recall,Precision,F1,AUC" in out
    assert (tmp_path / "e" / "roc.svg").exists() and (tmp_path / "e" / "manifest.json").exists()


def test_benchmark_and_formats(tmp_path, cfg, capsys):
    assert main(["benchmark", "--config", cfg, "--out", str(tmp_path / "b"), "--format", "csv",
                 "--mode", "vanilla"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("Model,Accuracy,Recall,Precision,F1,AUC")
    assert out.count("+GAN") == 3


def test_exit_codes(tmp_path, cfg, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("gan.unknown = 3\n")
    assert main(["benchmark", "--config", str(bad)]) == 2
    assert main(["train-gan", "--config", cfg, "--data", str(tmp_path / "missing.csv"),
                 "--out", str(tmp_path / "x")]) == 5
    broken = tmp_path / "broken.csv"
    broken.write_text("firm_id,industry\nF1,Steel\n")
    assert main(["train-clf", "--config", cfg, "--data", str(broken), "--out", str(tmp_path / "x")]) == 3
    assert main(["synth", "--config", cfg, "--model", str(broken), "--n", "2",
                 "--out", str(tmp_path / "x")]) == 5
    assert main(["gradcheck", "--trials", "1", "--tol", "0"]) == 4
    err = capsys.readouterr().err
    assert "stage 'train-clf'" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "scf_ganlab", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("genworld", "train-gan", "synth", "train-clf", "eval", "benchmark", "ablate", "gradcheck"):
        assert cmd in proc.stdout
