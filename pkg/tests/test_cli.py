import json

import numpy as np
import pytest

from repralign.cli import main, resolve_config
from repralign.ingest import read_tagged_csv, write_labels, write_npy


@pytest.fixture
def data(tmp_path):
    rng = np.random.default_rng(0)
    y = rng.integers(0, 2, 300)
    X = rng.normal(size=(300, 5))
    X[:, 0] += 2 * y
    write_npy(tmp_path / "x.npy", X)
    write_labels(tmp_path / "y.txt", y, ["neg", "pos"])
    return tmp_path


def _base(d, out="out"):
    return ["--matrix", str(d / "x.npy"), "--labels", str(d / "y.txt"), "--positive", "pos", "--out", str(d / out)]


def test_thas_outputs(data, capsys):
    assert main(["thas", *_base(data), "--subsample", "120", "--seeds", "2"]) == 0
    out = data / "out"
    for name in ("alignment_seed0.csv", "alignment_seed1.csv", "alignment_mean.csv", "thas_summary.csv", "cells.csv", "alignment.svg"):
        assert (out / name).exists(), name
    _, header, rows, meta = read_tagged_csv(out / "alignment_mean.csv")
    assert header == ["k", "alignment"] and len(rows) == 120
    assert float(rows[-1][1]) == 1.0
    assert "thas_std" in meta and meta["config"]["subsample"] == 120
    assert "±" in capsys.readouterr().out


def test_single_seed_has_no_spread(data, capsys):
    assert main(["thas", *_base(data), "--subsample", "60", "--seeds", "1"]) == 0
    _, _, _, meta = read_tagged_csv(data / "out" / "alignment_mean.csv")
    assert "thas_std" not in meta
    assert "±" not in capsys.readouterr().out


def test_adbi_outputs(data):
    assert main(["adbi", *_base(data), "--subsample", "80", "--seeds", "1", "--k-stride", "4"]) == 0
    _, header, rows, meta = read_tagged_csv(data / "out" / "dbi_seed0.csv")
    assert header == ["k", "dbi"] and [int(r[0]) for r in rows] == list(range(2, 81, 4))
    assert meta["stride"] == 4 and "excluded_levels" in meta
    assert (data / "out" / "dbi_mean.csv").exists()


def test_alc_outputs(data):
    assert main(["alc", *_base(data), "--seeds", "2", "--n-grid", "40:80:20", "--lambdas", "0.1,1", "--metric", "f1"]) == 0
    _, header, rows, meta = read_tagged_csv(data / "out" / "learning_curve.csv")
    assert header == ["N", "mean_metric", "std_metric"] and [r[0] for r in rows] == ["40", "60", "80"]
    assert meta["metric_kind"] == "f1" and meta["grid"] == [0.1, 1.0]


def test_alc_explicit_test_set(data):
    write_npy(data / "tx.npy", np.load(data / "x.npy")[:50])
    (data / "ty.txt").write_text("".join((data / "y.txt").read_text().splitlines(True)[:50]))
    args = ["alc", *_base(data), "--seeds", "1", "--n-grid", "50", "--lambdas", "1", "--test-matrix", str(data / "tx.npy"), "--test-labels", str(data / "ty.txt")]
    assert main(args) == 0


def test_cluster_then_reuse(data):
    assert main(["cluster", *_base(data, "dn"), "--subsample", "50", "--seeds", "2"]) == 0
    tmpl = str(data / "dn" / "dendrogram_seed{seed}.csv")
    assert main(["thas", *_base(data, "a"), "--subsample", "50", "--seeds", "2"]) == 0
    assert main(["thas", *_base(data, "b"), "--subsample", "50", "--seeds", "2", "--dendrogram", tmpl]) == 0
    assert (data / "a" / "alignment_mean.csv").read_bytes() != b""
    a = read_tagged_csv(data / "a" / "alignment_mean.csv")[2]
    b = read_tagged_csv(data / "b" / "alignment_mean.csv")[2]
    assert a == b
    # a dendrogram for another subsample is rejected
    assert main(["thas", *_base(data, "c"), "--subsample", "60", "--seeds", "2", "--dendrogram", tmpl]) == 2


def test_validation_exit_codes(data, capsys):
    assert main(["thas", *_base(data), "--seeds", "0"]) == 2
    assert "error[ValidationError]" in capsys.readouterr().err
    assert main(["thas", "--matrix", str(data / "missing.npy"), "--labels", str(data / "y.txt"), "--positive", "pos"]) == 2
    assert main(["thas", *_base(data)[:-2], "--positive", "nothere", "--out", str(data / "o")]) == 2
    assert "error[DegenerateLabels]" in capsys.readouterr().err
    assert main(["thas", *_base(data), "--seeds", "3", "--dendrogram", "fixed.csv"]) == 2
    assert main(["alc", *_base(data), "--n-grid", "5000"]) == 2
    assert main(["bogus"]) == 2


def test_config_file_and_flag_precedence(data):
    (data / "cfg.toml").write_text(
        f'[common]\nout = "{data / "from_cfg"}"\n[thas]\nmatrix = "{data / "x.npy"}"\n'
        f'labels = "{data / "y.txt"}"\npositive = "pos"\nsubsample = 40\nseeds = 3\n'
    )
    cfg, _ = resolve_config(["thas", "--config", str(data / "cfg.toml"), "--seeds", "1"])
    assert cfg.subsample == 40 and cfg.seeds == 1 and cfg.out.endswith("from_cfg")
    assert main(["thas", "--config", str(data / "cfg.toml")]) == 0
    assert (data / "from_cfg" / "alignment_seed2.csv").exists()


def test_workers_env(data, monkeypatch):
    monkeypatch.setenv("REPRALIGN_WORKERS", "3")
    cfg, _ = resolve_config(["thas", *_base(data)])
    assert cfg.workers == 3
    cfg, _ = resolve_config(["thas", *_base(data), "--workers", "2"])
    assert cfg.workers == 2
    assert "workers" not in cfg.provenance() and "out" not in cfg.provenance()


def test_from_artifact_command_mismatch(data):
    assert main(["adbi", *_base(data), "--subsample", "30", "--seeds", "1"]) == 0
    assert main(["thas", "--from-artifact", str(data / "out" / "dbi_mean.csv"), "--out", str(data / "x")]) == 2


def test_featurize_report_correlate(data, capsys):
    with open(data / "c.jsonl", "w") as fh:
        for i in range(40):
            fh.write(json.dumps({"text": f"word{i % 5} shared {'good' if i % 2 else 'bad'}", "label": "p" if i % 2 else "n"}) + "\n")
    assert main(["featurize", "--corpus", str(data / "c.jsonl"), "--out", str(data / "f")]) == 0
    for name in ("bow.npz", "labels.txt", "vocabulary.csv"):
        assert (data / "f" / name).exists()
    assert main(["thas", "--matrix", str(data / "f" / "bow.npz"), "--labels", str(data / "f" / "labels.txt"), "--positive", "p", "--seeds", "1", "--out", str(data / "t")]) == 0

    lines = ["representation,dataset,metric,value"]
    rng = np.random.default_rng(0)
    for r in range(4):
        for d in range(3):
            alc = 0.5 + 0.1 * r + 0.02 * d
            lines += [f"r{r},d{d},ALC,{alc}", f"r{r},d{d},THAS,{alc + rng.normal(scale=0.01)}", f"r{r},d{d},ADBI,{rng.normal(2, 0.5)}"]
    (data / "cells.csv").write_text("\n".join(lines) + "\n")
    assert main(["report", "--cells", str(data / "cells.csv"), "--out", str(data / "rep")]) == 0
    assert {p.name for p in (data / "rep").iterdir()} >= {"report_ALC.csv", "report_THAS.txt", "report_ADBI.csv"}
    assert main(["correlate", "--cells", str(data / "cells.csv"), "--out", str(data / "cor")]) == 0
    _, header, rows, _ = read_tagged_csv(data / "cor" / "correlation.csv")
    assert len(rows) == 4
    thas_cells = next(r for r in rows if r[1] == "THAS" and r[2] == "cells")
    assert float(thas_cells[4]) > 0.9
    assert (data / "cor" / "scatter_THAS_cells.svg").exists()
    _, header, rows, _ = read_tagged_csv(data / "cor" / "pairs_THAS_cells.csv")
    assert header == ["x", "y", "tag"] and len(rows) == 12


def test_runtime_failure_exit_code(data, monkeypatch, capsys):
    from repralign import hierclust

    def boom(*args, **kwargs):
        raise MemoryError("simulated")

    monkeypatch.setattr(hierclust, "ward_cluster", boom)
    assert main(["thas", *_base(data), "--subsample", "30", "--seeds", "1"]) == 3
    assert "error[MemoryError]" in capsys.readouterr().err
