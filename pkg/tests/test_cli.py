import csv
import re

import pytest

from nfdx.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def quick_config(tmp_path):
    path = tmp_path / "quick.cfg"
    path.write_text("train.epochs = 2\ntrain.batch_size = 8\nimage.side = 50\nimage.window_seconds = 1\n")
    return str(path)


def test_synth_counts_and_determinism(tmp_path, capsys):
    code, out, _ = run(capsys, "synth", "--out", str(tmp_path / "a"), "--trials", "2", "--seed", "5")
    assert code == 0 and "wrote 72 traces" in out
    assert len(list((tmp_path / "a").glob("*.s11"))) == 72
    run(capsys, "synth", "--out", str(tmp_path / "b"), "--trials", "2", "--seed", "5")
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def test_synth_env_seed(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("NFDX_SEED", "123")
    run(capsys, "synth", "--out", str(tmp_path), "--trials", "1")
    with open(tmp_path / "manifest.csv") as fh:
        rows = list(csv.DictReader(fh))
    from nfdx.synth import trial_seed

    r = rows[0]
    assert int(r["seed"]) == trial_seed(123, int(r["condition"]), 0, int(r["position_cm"]), int(r["trial"]))


def test_analyze_inner_race(small_dataset, capsys, tmp_path):
    root, manifest = small_dataset
    entry = next(e for e in manifest if e.condition == 2 and e.carrier == 2 and e.position_cm == 0)
    code, out, _ = run(capsys, "analyze", str(manifest.resolve(entry)), "--out", str(tmp_path))
    assert code == 0
    assert re.search(r"magnitude inner_race expected 111\.3636 Hz present", out)
    assert re.search(r"magnitude outer_race expected 63\.6364 Hz absent", out)
    assert len(list(tmp_path.glob("*_spectrum.csv"))) == 2
    assert (tmp_path / f"{manifest.resolve(entry).stem}_report.txt").exists()


def test_analyze_normal(small_dataset, capsys):
    _, manifest = small_dataset
    entry = next(e for e in manifest if e.condition == 0 and e.carrier == 2 and e.position_cm == 0)
    _, out, _ = run(capsys, "analyze", str(manifest.resolve(entry)))
    assert "inner_race expected 111.3636 Hz absent" in out
    assert "outer_race expected 63.6364 Hz absent" in out
    assert "present" not in out.replace("shaft expected 25.0000 Hz present", "")


def test_analyze_pure_tone(tmp_path, capsys):
    import numpy as np

    from nfdx.formats import write_trace
    from nfdx.synth import S11Trace

    t = np.arange(5000) / 1000
    write_trace(tmp_path / "tone.s11", S11Trace(np.sin(2 * np.pi * 25 * t), np.zeros(5000), 1000.0))
    _, out, _ = run(capsys, "analyze", str(tmp_path / "tone.s11"))
    assert "magnitude dominant_peak 25.0000 Hz amplitude 1" in out
    assert "magnitude shaft expected 25.0000 Hz present detections 1 k1=25.00Hz/1" in out


def test_analyze_missing_file(capsys):
    code, _, err = run(capsys, "analyze", "/nonexistent.s11")
    assert code == 1 and err.startswith("nfdx: io:")


@pytest.mark.parametrize("side", ["50", "150"])
def test_spectrogram(small_dataset, capsys, tmp_path, side):
    _, manifest = small_dataset
    path = manifest.resolve(manifest.entries[0])
    code, out, _ = run(capsys, "spectrogram", str(path), "--side", side, "--out", str(tmp_path))
    assert code == 0
    pgms = sorted(tmp_path.glob("*.pgm"))
    assert len(pgms) == 3
    assert pgms[0].read_bytes().startswith(f"P5\n{side} {side}\n255\n".encode())
    assert len(list(tmp_path.glob("*.csv"))) == 1


def test_spectrogram_bad_mode(small_dataset, capsys):
    _, manifest = small_dataset
    with pytest.raises(SystemExit) as exc:
        main(["spectrogram", str(manifest.resolve(manifest.entries[0])), "--mode", "rgb"])
    assert exc.value.code == 2


def test_train_and_eval(small_dataset, capsys, tmp_path, quick_config):
    root, _ = small_dataset
    man = str(root / "manifest.csv")
    args = ["--manifest", man, "--config", quick_config, "--fold", "0", "--folds", "3"]
    code, out, _ = run(capsys, "train", *args, "--model", str(tmp_path / "m.nfdx"))
    assert code == 0
    assert len(re.findall(r"^epoch\s+\d+", out, re.M)) == 2
    digest = re.search(r"sha256 ([0-9a-f]{64})", out).group(1)
    with open(tmp_path / "m.curve.csv") as fh:
        assert len(list(csv.reader(fh))) == 3

    _, out2, _ = run(capsys, "train", *args, "--model", str(tmp_path / "again.nfdx"))
    assert re.search(r"sha256 ([0-9a-f]{64})", out2).group(1) == digest

    code, out, _ = run(capsys, "eval", *args, "--model", str(tmp_path / "m.nfdx"), "--out", str(tmp_path))
    assert code == 0
    with open(tmp_path / "metrics.csv") as fh:
        rows = dict(list(csv.reader(fh))[1:])
    for key in ("accuracy", "sensitivity", "precision", "f1"):
        assert 0.0 <= float(rows[key]) <= 100.0
    with open(tmp_path / "confusion.csv") as fh:
        counts = [list(map(int, r[1:])) for r in list(csv.reader(fh))[1:]]
    assert sum(map(sum, counts)) == 8  # 2 test trials per class


def test_train_missing_cell(small_dataset, capsys, tmp_path, quick_config):
    root, _ = small_dataset
    code, _, err = run(
        capsys, "train", "--manifest", str(root / "manifest.csv"), "--carrier", "2.4GHz",
        "--config", quick_config, "--model", str(tmp_path / "m.nfdx"),
    )
    assert code == 1 and err.startswith("nfdx: missing-cell:")


def test_eval_side_mismatch(small_dataset, capsys, tmp_path, quick_config):
    from nfdx.nn import ArchConfig, init_model, save_model

    root, _ = small_dataset
    save_model(init_model(ArchConfig(side=100)), tmp_path / "m.nfdx")
    code, _, err = run(
        capsys, "eval", "--manifest", str(root / "manifest.csv"), "--config", quick_config,
        "--model", str(tmp_path / "m.nfdx"), "--out", str(tmp_path),
    )
    assert code == 1 and err.startswith("nfdx: shape:")


def test_eval_perfect_fixture(small_dataset, capsys, tmp_path, monkeypatch):
    """A model that always answers the truth yields a diagonal confusion matrix."""
    import numpy as np

    import nfdx.nn

    root, _ = small_dataset
    from nfdx.nn import ArchConfig, init_model, save_model

    save_model(init_model(ArchConfig(side=50)), tmp_path / "m.nfdx")
    from nfdx import pipeline

    seen = {}
    real_batch = pipeline.image_batch

    def batch(*a, **kw):
        x, y = real_batch(*a, **kw)
        seen["y"] = y
        return x, y

    monkeypatch.setattr(pipeline, "image_batch", batch)
    monkeypatch.setattr(nfdx.nn, "predict", lambda model, x: seen["y"].copy())
    code, _, _ = run(
        capsys, "eval", "--manifest", str(root / "manifest.csv"), "--side", "50", "--window", "1",
        "--model", str(tmp_path / "m.nfdx"), "--out", str(tmp_path),
    )
    assert code == 0
    with open(tmp_path / "confusion.csv") as fh:
        counts = np.array([list(map(int, r[1:])) for r in list(csv.reader(fh))[1:]])
    np.testing.assert_array_equal(counts, 6 * np.eye(4, dtype=int))


def test_sweep_window_axis(small_dataset, capsys, tmp_path, quick_config):
    root, _ = small_dataset
    out_csv = tmp_path / "w.csv"
    code, _, _ = run(
        capsys, "sweep", "--manifest", str(root / "manifest.csv"), "--axes", "window", "--windows", "1,2",
        "--folds", "2", "--config", quick_config, "--out", str(out_csv),
    )
    assert code == 0
    rows = list(csv.reader(open(out_csv)))
    assert len(rows) == 3 and [r[3] for r in rows[1:]] == ["1.0", "2.0"]


def test_sweep_grid_cells(small_dataset, capsys, tmp_path, quick_config):
    root, _ = small_dataset
    out_csv = tmp_path / "g.csv"
    code, _, _ = run(
        capsys, "sweep", "--manifest", str(root / "manifest.csv"), "--axes", "carrier,position",
        "--carriers", "433MHz,5.8GHz", "--positions", "0,10", "--folds", "2", "--config", quick_config,
        "--out", str(out_csv),
    )
    assert code == 0
    rows = list(csv.reader(open(out_csv)))[1:]
    assert {(r[0], r[1]) for r in rows} == {("433", "0"), ("433", "10"), ("5800", "0"), ("5800", "10")}
    assert all(r[4] == "2" for r in rows)


def test_sweep_bad_axes(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--manifest", "m.csv", "--axes", "colour", "--out", "x.csv"])
    assert exc.value.code == 2


def test_complexity(capsys, tmp_path):
    code, out, _ = run(capsys, "complexity", "--side", "100", "--csv", str(tmp_path / "c.csv"))
    assert code == 0
    assert "parameters 112,320" in out and "flops 155,520,000" in out
    assert (tmp_path / "c.csv").read_text().splitlines()[-1] == "total,,,,,112320,155520000"
    _, out, _ = run(capsys, "complexity", "--side", "50")
    assert "flops 37,976,832" in out
    _, out, _ = run(capsys, "complexity", "--side", "150")
    assert "347,173,632" in out and "note:" in out


def test_complexity_too_small(capsys):
    code, _, err = run(capsys, "complexity", "--side", "7")
    assert code == 1 and err.startswith("nfdx: shape:")


def test_config_error_exit(capsys, tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("synth.colour = red\n")
    code, _, err = run(capsys, "synth", "--out", str(tmp_path), "--config", str(bad))
    assert code == 1 and err.startswith("nfdx: config:") and "bad.cfg:1" in err


def test_module_entry_point():
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-m", "nfdx", "complexity", "--side", "50"], capture_output=True, text=True)
    assert out.returncode == 0 and "37,976,832" in out.stdout
