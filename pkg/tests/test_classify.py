import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

import helpers
from coco.classify import (
    ClassifierError,
    HttpPredictor,
    LocalPredictor,
    ReferenceStub,
    TrainConfig,
    external_predict,
    featurize,
    load_model,
    loss_and_grad,
    predict,
    save_model,
    softmax,
    train,
)
from coco.corpus import Corpus
from coco.embed import WordVectors


def toy_vectors(dim=4):
    rng = np.random.default_rng(7)
    words = set(helpers._FUZZ_VOCAB)
    table = {w: rng.normal(size=dim) for w in words}
    return WordVectors(dim=dim, table=table, oov_policy="hashed_random")


def separable_corpus(n=40):
    """Label decided by a single unambiguous token next to the entities."""
    rng = np.random.default_rng(3)
    samples = []
    for i in range(n):
        label = "rel_a" if i % 2 == 0 else "rel_b"
        marker = "alloy" if label == "rel_a" else "barge"
        samples.append(
            helpers.make_sample(
                f"t{i:03d}",
                ["cable", marker, "depot"],
                ["NN", "NN", "NN"],
                [1, -1, 1],
                ["nsubj", "root", "obj"],
                [("m1", 0, 1, "e1"), ("m2", 2, 3, "e2")],
                label,
            )
        )
    return Corpus(("rel_a", "rel_b"), "rel_b", samples)


def test_featurize_hand_computed():
    wv = WordVectors(
        dim=2,
        table={
            "a": np.array([2.0, 0.0]),
            "b": np.array([0.0, 4.0]),
            "c": np.array([2.0, 2.0]),
        },
    )
    s = helpers.make_sample(
        "f", ["a", "b", "c"], ["NN", "VB", "NN"], [1, -1, 1], ["x", "root", "y"],
        [("m1", 0, 1, "e1"), ("m2", 2, 3, "e2")], "l",
    )
    feat = featurize(s, wv)
    assert feat == pytest.approx([4 / 3, 2.0, 2.0, 0.0, 2.0, 2.0])


def test_featurize_all_oov_zero():
    wv = WordVectors(dim=3, table={}, oov_policy="zero_vector")
    s = helpers.winery_sample()
    assert featurize(s, wv) == pytest.approx([0.0] * 9)


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(11)
    for _ in range(10):
        num_labels, dim, batch = rng.integers(2, 5), rng.integers(2, 6), rng.integers(1, 6)
        w = rng.normal(size=(num_labels, dim))
        b = rng.normal(size=num_labels)
        x = rng.normal(size=(batch, dim))
        y = rng.integers(0, num_labels, size=batch)
        _, grad_w, grad_b = loss_and_grad(w, b, x, y, l2=0.01)
        analytic = np.concatenate([grad_w.ravel(), grad_b.ravel()])
        numeric = np.empty_like(analytic)
        eps = 1e-6
        pos = 0
        for arr in (w, b):
            flat = arr.ravel()
            for idx in range(flat.size):
                orig = flat[idx]
                flat[idx] = orig + eps
                up, _, _ = loss_and_grad(w, b, x, y, l2=0.01)
                flat[idx] = orig - eps
                down, _, _ = loss_and_grad(w, b, x, y, l2=0.01)
                flat[idx] = orig
                numeric[pos] = (up - down) / (2 * eps)
                pos += 1
        rel = np.linalg.norm(numeric - analytic) / max(np.linalg.norm(numeric), 1e-12)
        assert rel < 1e-5


def test_l2_shrinks_weights_when_data_gradient_vanishes():
    # gigantic correct logits make the cross-entropy gradient negligible
    w = np.array([[50.0, 0.0], [0.0, 50.0]])
    b = np.zeros(2)
    x = np.array([[10.0, 0.0], [0.0, 10.0]])
    y = np.array([0, 1])
    _, grad_w, _ = loss_and_grad(w, b, x, y, l2=0.1)
    stepped = w - 0.5 * grad_w
    assert np.linalg.norm(stepped) < np.linalg.norm(w)


def test_train_separable_reaches_full_accuracy():
    corpus = separable_corpus()
    wv = toy_vectors()
    model = train(corpus, wv, TrainConfig(epochs=50, seed=0))
    hits = sum(predict(model, s, wv)[0] == s.label for s in corpus)
    assert hits == len(corpus)


def test_zero_epochs_uniform_predictions():
    corpus = separable_corpus(6)
    wv = toy_vectors()
    model = train(corpus, wv, TrainConfig(epochs=0, seed=0))
    _, scores = predict(model, corpus[0], wv)
    assert scores == pytest.approx([0.5, 0.5])


def test_training_is_deterministic():
    corpus = separable_corpus()
    wv = toy_vectors()
    m1 = train(corpus, wv, TrainConfig(epochs=5, seed=42))
    m2 = train(corpus, wv, TrainConfig(epochs=5, seed=42))
    assert np.array_equal(m1.weights, m2.weights)
    assert np.array_equal(m1.bias, m2.bias)


def test_single_label_corpus_rejected():
    corpus = separable_corpus(6)
    only_a = Corpus(("rel_a",), "rel_a", [s for s in corpus.records if s.label == "rel_a"])
    with pytest.raises(ClassifierError, match="single-label"):
        train(only_a, toy_vectors(), TrainConfig())


def test_predict_bias_dominates():
    wv = toy_vectors()
    from coco.classify import LinearRcModel

    model = LinearRcModel(
        labels=("x", "y"), weights=np.zeros((2, 12)), bias=np.array([0.0, 50.0]), wv_dim=4
    )
    label, _ = predict(model, separable_corpus(2)[0], wv)
    assert label == "y"


def test_predict_matches_independent_softmax_argmax():
    rng = np.random.default_rng(5)
    for _ in range(100):
        logits = rng.normal(size=4)

        def independent_softmax(z):
            total = sum(pow(2.718281828459045, float(v)) for v in z)
            return [pow(2.718281828459045, float(v)) / total for v in z]

        ours = softmax(logits)
        theirs = independent_softmax(logits)
        assert ours == pytest.approx(theirs, rel=1e-8)
        assert int(np.argmax(ours)) == max(range(4), key=lambda i: theirs[i])


def test_model_save_load_round_trip(tmp_path):
    corpus = separable_corpus()
    wv = toy_vectors()
    model = train(corpus, wv, TrainConfig(epochs=3, seed=1))
    path = tmp_path / "model.bin"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.labels == model.labels
    assert loaded.wv_dim == model.wv_dim
    assert np.array_equal(loaded.weights, model.weights)
    assert np.array_equal(loaded.bias, model.bias)
    # retraining with the same seed reproduces the same bytes
    save_model(train(corpus, wv, TrainConfig(epochs=3, seed=1)), tmp_path / "model2.bin")
    assert (tmp_path / "model.bin").read_bytes() == (tmp_path / "model2.bin").read_bytes()


def test_load_model_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"not a model at all")
    with pytest.raises(ClassifierError):
        load_model(path)


def test_reference_stub_loopback_equivalence():
    corpus = separable_corpus(20)
    wv = toy_vectors()
    model = train(corpus, wv, TrainConfig(epochs=5, seed=2))
    local = LocalPredictor(model, wv).predict(corpus.records)
    with ReferenceStub(model, wv) as stub:
        remote = external_predict(stub.url, corpus.records, labels=model.labels)
        via_predictor = HttpPredictor(stub.url, labels=model.labels).predict(corpus.records)
    assert [lab for lab, _ in remote] == [lab for lab, _ in local]
    for (_, a), (_, b) in zip(remote, local):
        assert a == pytest.approx(b, abs=1e-12)
    assert remote == via_predictor


class _FixedLabelHandler(BaseHTTPRequestHandler):
    payload: dict = {}

    def log_message(self, *args):
        pass

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        n = len(body["samples"])
        out = dict(self.payload)
        if out.get("labels") == "echo-n":
            out = {"labels": ["fixed"] * n, "scores": [[1.0]] * n}
        data = json.dumps(out).encode()
        self.send_response(200)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


def _serve(payload):
    handler = type("H", (_FixedLabelHandler,), {"payload": payload})
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    host, port = server.server_address[:2]
    return server, f"http://{host}:{port}/predict"


def test_external_predict_echo_stub():
    server, url = _serve({"labels": "echo-n"})
    try:
        records = separable_corpus(4).records
        out = external_predict(url, records)
        assert [lab for lab, _ in out] == ["fixed"] * 4
    finally:
        server.shutdown()


def test_external_predict_malformed_response():
    server, url = _serve({"labels": ["x"]})  # missing scores, wrong length
    try:
        with pytest.raises(ClassifierError, match="scores|labels"):
            external_predict(url, separable_corpus(4).records)
    finally:
        server.shutdown()


def test_external_predict_label_outside_declared_set():
    server, url = _serve({"labels": "echo-n"})
    try:
        with pytest.raises(ClassifierError, match="outside declared set"):
            external_predict(url, separable_corpus(2).records, labels=("rel_a", "rel_b"))
    finally:
        server.shutdown()


def test_external_predict_unreachable_endpoint():
    with pytest.raises(ClassifierError, match="failed"):
        external_predict("http://127.0.0.1:9/predict", separable_corpus(2).records, timeout=0.5)
