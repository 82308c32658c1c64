import json

import numpy as np
import pytest
import scipy.sparse as sp

from repralign.errors import (
    BadJson,
    EmptyFile,
    EmptyVocabulary,
    FormatError,
    MissingField,
    NonFinite,
    RowCountMismatch,
    VersionMismatch,
)
from repralign.ingest import (
    bow_featurize,
    load_cells,
    load_curve,
    load_dataset,
    load_dendrogram,
    load_dense_matrix,
    load_jsonl_corpus,
    load_labels,
    load_report,
    load_vocabulary,
    read_npy,
    read_tagged_csv,
    save_cells,
    save_curve,
    save_dendrogram,
    save_report,
    save_vocabulary,
    tokenize,
    write_npy,
    write_tagged_csv,
)
from repralign.hierclust import ward_cluster
from repralign.stats import Cell, build_report

from conftest import make_dataset


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_npy_roundtrip_and_numpy_compat(tmp_path, dtype):
    a = np.random.default_rng(0).normal(size=(7, 3)).astype(dtype)
    write_npy(tmp_path / "a.npy", a)
    assert np.array_equal(np.load(tmp_path / "a.npy"), a)
    np.save(tmp_path / "b.npy", a)
    assert np.array_equal(read_npy(tmp_path / "b.npy"), a.astype(np.float64))
    assert (tmp_path / "a.npy").stat().st_size % 64 == (7 * 3 * a.itemsize) % 64


def test_npy_errors(tmp_path):
    (tmp_path / "bad.npy").write_bytes(b"nonsense")
    with pytest.raises(FormatError) as err:
        read_npy(tmp_path / "bad.npy")
    assert err.value.offset == 0
    np.save(tmp_path / "int.npy", np.arange(6).reshape(2, 3))
    with pytest.raises(FormatError):
        read_npy(tmp_path / "int.npy")
    np.save(tmp_path / "v.npy", np.arange(6.0))
    with pytest.raises(FormatError):
        read_npy(tmp_path / "v.npy")
    np.save(tmp_path / "f.npy", np.asfortranarray(np.ones((3, 2))))
    with pytest.raises(FormatError):
        read_npy(tmp_path / "f.npy")


def test_csv_matrix_with_header_and_errors(tmp_path):
    (tmp_path / "m.csv").write_text("a,b\n1,2\n3,4\n")
    assert np.array_equal(load_dense_matrix(tmp_path / "m.csv"), [[1, 2], [3, 4]])
    (tmp_path / "bad.csv").write_text("1,2\n3,x\n")
    with pytest.raises(FormatError) as err:
        load_dense_matrix(tmp_path / "bad.csv")
    assert err.value.offset == 4
    (tmp_path / "nan.csv").write_text("1,2\n3,nan\n")
    with pytest.raises(NonFinite) as err:
        load_dense_matrix(tmp_path / "nan.csv")
    assert (err.value.row, err.value.col) == (1, 1)
    (tmp_path / "empty.csv").write_text("")
    with pytest.raises(EmptyFile):
        load_dense_matrix(tmp_path / "empty.csv")


def test_sparse_npz(tmp_path):
    m = sp.random(5, 8, density=0.3, random_state=0, format="csr")
    sp.save_npz(tmp_path / "m.npz", m)
    out = load_dense_matrix(tmp_path / "m.npz")
    assert sp.issparse(out) and np.allclose(out.toarray(), m.toarray())


def test_labels_formats(tmp_path):
    (tmp_path / "a.txt").write_text("pos\nneg\npos\n")
    ids, vocab = load_labels(tmp_path / "a.txt")
    assert vocab == ["pos", "neg"] and ids.tolist() == [0, 1, 0]
    (tmp_path / "b.csv").write_text("id,label\n0,x\n1,y\n")
    ids, vocab = load_labels(tmp_path / "b.csv")
    assert vocab == ["x", "y"]
    with pytest.raises(RowCountMismatch):
        load_labels(tmp_path / "a.txt", expected_rows=4)


def test_load_dataset(tmp_path):
    write_npy(tmp_path / "x.npy", np.arange(8.0).reshape(4, 2))
    (tmp_path / "y.txt").write_text("a\nb\na\nb\n")
    ds = load_dataset(tmp_path / "x.npy", tmp_path / "y.txt", "b")
    assert ds.positive_class == 1 and ds.n == 4


def test_jsonl_corpus(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text(json.dumps({"t": "Hello world", "l": "x"}) + "\n\n" + json.dumps({"t": "bye", "l": "y"}) + "\n")
    c = load_jsonl_corpus(p, "t", "l", positive="y")
    assert c.documents == [("Hello world", 0), ("bye", 1)] and c.positive_class == 1
    p.write_text('{"t": "a", "l": "x"}\n{"t": "b"}\n')
    with pytest.raises(MissingField) as err:
        load_jsonl_corpus(p, "t", "l")
    assert err.value.line == 2
    p.write_text('{"t": "a", "l": "x"}\n{oops\n')
    with pytest.raises(BadJson):
        load_jsonl_corpus(p, "t", "l")


def test_tokenize():
    assert tokenize("Don't STOP_me now, café 42!") == ["don", "t", "stop", "me", "now", "café", "42"]


def test_bow_fit_and_transform(tmp_path):
    texts = ["the cat sat", "the dog sat", "a cat and a dog", "zebra"]
    m, vocab = bow_featurize(texts, min_count=2)
    assert vocab.terms == ("a", "cat", "dog", "sat", "the")
    assert m.toarray()[2].tolist() == [2, 1, 1, 0, 0]
    assert m.toarray()[3].sum() == 0
    m2, v2 = bow_featurize(["cat cat unknown"], vocab=vocab)
    assert v2 is vocab and m2.toarray().tolist() == [[0, 2, 0, 0, 0]]
    save_vocabulary(tmp_path / "v.csv", vocab)
    assert load_vocabulary(tmp_path / "v.csv") == vocab
    with pytest.raises(EmptyVocabulary):
        bow_featurize(["a b", "c d"], min_count=2)


def test_bow_workers_match(tmp_path):
    texts = [f"w{i % 13} w{i % 7} common" for i in range(2500)]
    a, _ = bow_featurize(texts, 1)
    b, _ = bow_featurize(texts, 1, workers=2)
    assert (a != b).nnz == 0


def test_tagged_csv_roundtrip_and_version(tmp_path):
    write_tagged_csv(tmp_path / "t.csv", "thing", ["a", "b"], [(1, 0.1), (2, float("inf"))], {"k": [1, 2]})
    name, header, rows, meta = read_tagged_csv(tmp_path / "t.csv")
    assert name == "thing" and header == ["a", "b"] and rows == [["1", "0.1"], ["2", "inf"]]
    assert meta == {"k": [1, 2]}
    text = (tmp_path / "t.csv").read_text().replace("thing/1", "thing/2")
    (tmp_path / "t2.csv").write_text(text)
    with pytest.raises(VersionMismatch):
        read_tagged_csv(tmp_path / "t2.csv")
    (tmp_path / "t3.csv").write_text("a,b\n1,2\n")
    with pytest.raises(FormatError):
        read_tagged_csv(tmp_path / "t3.csv")


def test_dendrogram_roundtrip(tmp_path):
    ds = make_dataset(n=30)
    dn = ward_cluster(ds)
    save_dendrogram(tmp_path / "d.csv", dn)
    back = load_dendrogram(tmp_path / "d.csv")
    assert back == dn
    back.check_against(ds)


def test_curve_cells_report_roundtrip(tmp_path):
    save_curve(tmp_path / "c.csv", "curve", ["k", "v"], [np.arange(1, 4), np.array([0.5, 0.25, 1 / 3])], {"area": 0.1})
    cols, meta = load_curve(tmp_path / "c.csv")
    assert cols["k"].dtype == np.int64 and cols["v"][2] == 1 / 3 and meta["area"] == 0.1
    cells = [Cell("r", "d", "ALC", 0.5), Cell("q", "d", "ALC", 0.25)]
    save_cells(tmp_path / "cells.csv", cells)
    assert load_cells(tmp_path / "cells.csv") == [("r", "d", "ALC", 0.5), ("q", "d", "ALC", 0.25)]
    (tmp_path / "plain.csv").write_text("representation,dataset,metric,value\nr,d,ALC,0.5\nr,e,ALC,\n")
    assert np.isnan(load_cells(tmp_path / "plain.csv")[1][3])
    rep = build_report(cells)
    save_report(tmp_path / "r.csv", rep)
    assert load_report(tmp_path / "r.csv") == rep
