import math

import pytest

import w2cspace as w


def test_tokenize_modes():
    assert w.tokenize("你好 world") == ["你", "好", "world"]
    assert w.tokenize("a  b\tc", "whitespace") == ["a", "b", "c"]
    with pytest.raises(ValueError):
        w.tokenize("x", "bpe")


def test_vocab_and_network():
    vocab = w.build_vocab(["a b", "a c"], 1, "whitespace")
    assert vocab.tokens == ["<pad>", "<unk>", "a", "b", "c"]
    assert "a" in vocab and "z" not in vocab
    ids = vocab.encode("a b c", "whitespace")
    net = w.AssocNetwork(len(vocab))
    net.update(ids)
    assert net.score(ids[0], ids[1]) == pytest.approx(1.0, abs=1e-9)
    assert net.score(ids[0], ids[2]) == pytest.approx(0.5, abs=1e-9)
    ms = w.sample_assoc_matrix(net, ids)
    assert ms[0][1] == pytest.approx(1 / (1 + math.exp(-2)) - 0.5, abs=1e-9)
    assert all(-0.5 < x < 0.5 for row in ms for x in row)
    back = w.AssocNetwork.from_bytes(net.to_bytes())
    assert back.score(ids[0], ids[1]) == net.score(ids[0], ids[1])
    with pytest.raises(ValueError):
        w.AssocNetwork.from_bytes(b"nope")


def test_kmeans_two_pairs():
    res = w.kmeans([[1, 0], [1, 0], [0, 1], [0, 1]], 2, seed=3)
    assert sorted(map(tuple, res["centroids"])) == [(0.0, 1.0), (1.0, 0.0)]
    assert res["objective"] == pytest.approx(0.0, abs=1e-12)
    trace = res["objective_trace"]
    assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))


def test_metrics():
    assert w.cosine_similarity([1, 0], [0, 1]) == 0.0
    assert w.f1_score(50.0, 100.0) == pytest.approx(200 / 3)
    assert w.evaluate_classification([0, 1, 0, 1], [0, 1, 1, 0]) == 50.0
    m = w.evaluate_correction([[1, 2], [4, 5, 6]], [[1, 3], [7, 8, 6]], [[1, 3], [7, 9, 6]])
    assert m["sentence"]["correction_precision"] == 50.0
    r = w.reversal_metrics([1, 0, 1, 1], [0, 1, 0, 0], [1, 0, 1, 0])
    assert (r.original_accuracy, r.changed_accuracy, r.reversed_ratio) == (75.0, 25.0, 100.0)


def test_run_cli(tmp_path):
    (tmp_path / "pts.txt").write_text("1 0\n1 0\n0 1\n0 1\n")
    code, out, _ = w.run_cli(
        ["cluster", "--elements", str(tmp_path / "pts.txt"), "--k", "2", "--out", str(tmp_path / "s.w2cs")]
    )
    assert code == 0
    assert "objective 0.000000" in out
    assert (tmp_path / "s.w2cs").exists()
    code, _, err = w.run_cli(["build-akn", "--corpus", str(tmp_path / "missing.txt"), "--out", "x"])
    assert code == 3
    assert "missing.txt" in err
