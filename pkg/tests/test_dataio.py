import numpy as np
import pytest

from fcggnn.corpus import Sample
from fcggnn.dataio import (
    decode_model,
    encode_model,
    export_embeddings,
    load_corpus,
    load_model,
    read_manifest,
    save_model,
    scan_directory,
    write_manifest,
)
from fcggnn.errors import DataError, ModelFormatError
from fcggnn.gnn import ModelConfig, init_params
from fcggnn.synthetic import make_corpus, write_corpus
from fcggnn.train import TrainConfig, fit, predict


def edge_file(path, text="0 1\n1 2\n"):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def manifest(tmp_path, rows):
    for p, _, _ in rows:
        edge_file(tmp_path / p)
    m = tmp_path / "manifest.csv"
    m.write_text("path,label,split\n" + "".join(f"{p},{l},{s}\n" for p, l, s in rows))
    return m


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    corpus = make_corpus({"train": 12, "val": 3, "test": 6}, max_nodes=9, seed=1)
    cfg = ModelConfig(layer_kind="gin", num_layers=2, hidden=6, head_units=5, num_classes=3)
    params, _ = fit(corpus, cfg, TrainConfig(epochs=2, batch_size=4))
    return params, corpus


class TestManifest:
    def test_lexicographic_class_ids(self, tmp_path):
        m = read_manifest(manifest(tmp_path, [("a.el", "trojan", "train"), ("b.el", "adware", "test"),
                                              ("c.el", "benign", "train")]))
        assert m.class_ids == {"adware": 0, "benign": 1, "trojan": 2}
        assert all(e.path.is_absolute() for e in m.entries)

    @pytest.mark.parametrize("rows, match", [
        ([("a.el", "x", "validation"), ("b.el", "x", "test")], "unknown split"),
        ([("a.el", "x", "train"), ("b.el", "y", "train")], "empty test"),
        ([("a.el", "x", "train"), ("a.el", "x", "test")], "duplicate"),
    ])
    def test_invalid(self, tmp_path, rows, match):
        with pytest.raises(DataError, match=match):
            read_manifest(manifest(tmp_path, rows))

    def test_bad_header(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("file,class,split\n")
        with pytest.raises(DataError, match="header"):
            read_manifest(p)

    def test_write_read_round_trip(self, tmp_path):
        src = read_manifest(manifest(tmp_path, [("g/a.el", "x", "train"), ("g/b.el", "y", "test")]))
        out = tmp_path / "again.csv"
        write_manifest(src, out)
        first = out.read_text()
        again = read_manifest(out)
        assert again.entries == src.entries and again.class_names == src.class_names
        write_manifest(again, out)
        assert out.read_text() == first


class TestScan:
    def test_layout(self, tmp_path):
        for rel in ("train/b/x.edgelist", "train/a/y.edgelist", "test/a/z.edgelist"):
            edge_file(tmp_path / rel)
        (tmp_path / "README").write_text("ignored")
        m = scan_directory(tmp_path)
        assert m.class_names == ["a", "b"]
        assert sorted((e.split, e.label) for e in m.entries) == [("test", "a"), ("train", "a"), ("train", "b")]

    def test_mixed_layout(self, tmp_path):
        edge_file(tmp_path / "train/a/x.edgelist")
        edge_file(tmp_path / "test/a/z.edgelist")
        edge_file(tmp_path / "stray.edgelist")
        with pytest.raises(DataError, match="stray.edgelist"):
            scan_directory(tmp_path)

    def test_synthetic_tree_loads(self, tmp_path):
        corpus = make_corpus({"train": 6, "test": 3}, seed=2)
        loaded = load_corpus(write_corpus(corpus, tmp_path))
        assert loaded.class_names == corpus.class_names
        assert len(loaded.samples) == 9
        by_name = {s.name.rsplit("/", 1)[-1].removesuffix(".edgelist"): s for s in loaded.samples}
        for s in corpus.samples:
            assert by_name[s.name].graph == s.graph and by_name[s.name].label == s.label


class TestModelContainer:
    def test_bit_identical_round_trip(self, trained, tmp_path):
        params, _ = trained
        save_model(params, tmp_path / "m.bin")
        back = load_model(tmp_path / "m.bin")
        assert back.config == params.config
        assert back.class_names == params.class_names
        assert back.stats == params.stats
        for k, v in params.weights.items():
            assert back.weights[k].tobytes() == v.tobytes()
        assert encode_model(back) == encode_model(params)

    def test_untrained_round_trip(self):
        params = init_params(ModelConfig(hidden=4, head_units=3, num_layers=1))
        back = decode_model(encode_model(params))
        assert back.stats is None and back.class_names == []

    def test_bad_magic(self, trained):
        blob = bytearray(encode_model(trained[0]))
        blob[0:1] = b"X"
        with pytest.raises(ModelFormatError, match="magic"):
            decode_model(bytes(blob))

    def test_bad_version(self, trained):
        blob = bytearray(encode_model(trained[0]))
        blob[6] = 99
        with pytest.raises(ModelFormatError, match="version"):
            decode_model(bytes(blob))

    @pytest.mark.parametrize("cut", [7, 20, -1, -100])
    def test_truncation(self, trained, cut):
        with pytest.raises(ModelFormatError, match="dimension error"):
            decode_model(encode_model(trained[0])[:cut])

    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelFormatError):
            load_model(tmp_path / "nope.bin")


def test_export_embeddings(trained, tmp_path):
    params, corpus = trained
    out = tmp_path / "emb.tsv"
    assert export_embeddings(params, corpus, out) == len(corpus.samples)
    lines = out.read_text().splitlines()
    header = lines[0].split("\t")
    assert header[:3] == ["graph_id", "class", "split"] and len(header) == 3 + params.config.hidden
    assert len(lines) == 1 + len(corpus.samples)
    for line, s in zip(lines[1:], corpus.samples):
        cols = line.split("\t")
        assert cols[:3] == [s.name, corpus.class_names[s.label], s.split]
        _, _, emb = predict(params, s.graph)
        np.testing.assert_allclose(np.array(cols[3:], dtype=float), emb, atol=1e-6)


def test_duplicated_graph_exports_identical_rows(trained, tmp_path):
    params, corpus = trained
    s = corpus.samples[0]
    dup = [s, Sample(s.graph, s.label, "copy", s.split)]
    out = tmp_path / "dup.tsv"
    export_embeddings(params, dup, out)
    rows = [line.split("\t")[3:] for line in out.read_text().splitlines()[1:]]
    assert rows[0] == rows[1]


def test_five_class_tree_ids(tmp_path):
    for c in "edcba":
        edge_file(tmp_path / "train" / c / "g.edgelist")
        edge_file(tmp_path / "test" / c / "g.edgelist")
    corpus = load_corpus(tmp_path)
    assert corpus.class_names == list("abcde")
    assert sorted({s.label for s in corpus.samples}) == [0, 1, 2, 3, 4]
