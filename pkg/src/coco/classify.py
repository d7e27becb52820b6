"""Verification and evaluation classifier.

The built-in model is a softmax regression over averaged word vectors
(whole sentence, e1 span, e2 span), trained with plain mini-batch SGD.
It stands in for heavyweight neural backbones at desk scale; real ones
plug in over the HTTP wire protocol and stay interchangeable behind the
same predictor interface.
"""

from __future__ import annotations

import json
import struct
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Sequence

import numpy as np
import requests

from .corpus import Corpus, Record, record_from_obj, record_to_obj
from .embed import WordVectors

PREDICT_FORMAT = "coco-predict/1"

_MODEL_MAGIC = b"COCOMDL1"


class ClassifierError(RuntimeError):
    """Training precondition violations and external-predictor failures."""


@dataclass
class TrainConfig:
    lr0: float = 0.5
    lr_decay: float = 0.9  # per epoch
    l2: float = 0.002
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self) -> None:
        if self.lr0 <= 0:
            raise ValueError("lr0 must be positive")
        if not 0 < self.lr_decay <= 1:
            raise ValueError("lr_decay must be in (0, 1]")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")


@dataclass
class LinearRcModel:
    labels: tuple[str, ...]
    weights: np.ndarray  # [num_labels, feature_dim]
    bias: np.ndarray  # [num_labels]
    wv_dim: int


def featurize(rec: Record, wv: WordVectors) -> np.ndarray:
    """Mean of all tokens, of the e1 span, and of the e2 span, concatenated."""
    if len(rec.entities) < 2:
        raise ClassifierError(f"record {rec.id} has fewer than 2 entities")
    vecs = np.stack([wv.lookup(t.surface) for t in rec.tokens])
    e1 = rec.entity("e1")
    e2 = rec.entity("e2")
    return np.concatenate(
        [vecs.mean(axis=0), vecs[e1.start : e1.end].mean(axis=0), vecs[e2.start : e2.end].mean(axis=0)]
    )


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def loss_and_grad(
    weights: np.ndarray,
    bias: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy plus (l2/2)*||W||^2, with its analytic gradient.

    ``x`` is [batch, dim], ``y`` integer class indices.  The bias is not
    regularized.
    """
    logits = x @ weights.T + bias
    probs = softmax(logits)
    batch = x.shape[0]
    ce = -np.mean(np.log(probs[np.arange(batch), y] + 1e-300))
    loss = ce + 0.5 * l2 * float(np.sum(weights * weights))
    delta = probs  # reused in place; the loss is already extracted
    delta[np.arange(batch), y] -= 1.0
    grad_w = delta.T @ x / batch + l2 * weights
    grad_b = delta.mean(axis=0)
    return float(loss), grad_w, grad_b


def train(corpus: Corpus | Sequence[Record], wv: WordVectors, cfg: TrainConfig) -> LinearRcModel:
    """Mini-batch SGD with per-epoch learning-rate decay; fully seeded."""
    if isinstance(corpus, Corpus):
        records = list(corpus.records)
        labels = tuple(corpus.labels) if corpus.labels else tuple(sorted({r.label for r in records}))
    else:
        records = list(corpus)
        labels = tuple(sorted({r.label for r in records}))
    if not records:
        raise ClassifierError("cannot train on an empty corpus")
    if len(labels) < 2:
        raise ClassifierError("cannot train on a single-label corpus")
    index = {lab: i for i, lab in enumerate(labels)}
    x = np.stack([featurize(r, wv) for r in records])
    y = np.array([index[r.label] for r in records])
    dim = x.shape[1]
    weights = np.zeros((len(labels), dim))
    bias = np.zeros(len(labels))
    rng = np.random.default_rng(cfg.seed)
    for epoch in range(cfg.epochs):
        lr = cfg.lr0 * cfg.lr_decay**epoch
        order = rng.permutation(len(records))
        for start in range(0, len(records), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            _, grad_w, grad_b = loss_and_grad(weights, bias, x[batch], y[batch], cfg.l2)
            weights -= lr * grad_w
            bias -= lr * grad_b
    return LinearRcModel(labels=labels, weights=weights, bias=bias, wv_dim=wv.dim)


def predict(model: LinearRcModel, rec: Record, wv: WordVectors) -> tuple[str, list[float]]:
    """Argmax label plus the softmax scores in the model's label order."""
    scores = softmax(model.weights @ featurize(rec, wv) + model.bias)
    return model.labels[int(np.argmax(scores))], [float(s) for s in scores]


def save_model(model: LinearRcModel, path: str | Path) -> None:
    """Versioned binary: magic, label map, dims, then row-major float64 weights."""
    label_blob = json.dumps(list(model.labels)).encode("utf-8")
    num_labels, dim = model.weights.shape
    with Path(path).open("wb") as fh:
        fh.write(_MODEL_MAGIC)
        fh.write(struct.pack("<IIII", len(label_blob), model.wv_dim, num_labels, dim))
        fh.write(label_blob)
        fh.write(np.ascontiguousarray(model.bias, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.weights, dtype="<f8").tobytes())


def load_model(path: str | Path) -> LinearRcModel:
    blob = Path(path).read_bytes()
    if blob[:8] != _MODEL_MAGIC:
        raise ClassifierError(f"{path}: not a model file")
    label_len, wv_dim, num_labels, dim = struct.unpack("<IIII", blob[8:24])
    offset = 24
    labels = tuple(json.loads(blob[offset : offset + label_len].decode("utf-8")))
    offset += label_len
    bias = np.frombuffer(blob, dtype="<f8", count=num_labels, offset=offset).copy()
    offset += num_labels * 8
    weights = (
        np.frombuffer(blob, dtype="<f8", count=num_labels * dim, offset=offset)
        .reshape(num_labels, dim)
        .copy()
    )
    return LinearRcModel(labels=labels, weights=weights, bias=bias, wv_dim=wv_dim)


class LocalPredictor:
    """Predicts with an in-process built-in model."""

    def __init__(self, model: LinearRcModel, wv: WordVectors):
        self.model = model
        self.wv = wv

    def predict(self, records: Sequence[Record]) -> list[tuple[str, list[float]]]:
        return [predict(self.model, r, self.wv) for r in records]


class HttpPredictor:
    """Predicts through the wire protocol of an external backbone."""

    def __init__(self, endpoint: str, labels: Sequence[str] | None = None, timeout: float = 30.0):
        self.endpoint = endpoint
        self.labels = tuple(labels) if labels else None
        self.timeout = timeout

    def predict(self, records: Sequence[Record]) -> list[tuple[str, list[float]]]:
        return external_predict(self.endpoint, records, labels=self.labels, timeout=self.timeout)


def external_predict(
    endpoint: str,
    records: Sequence[Record],
    labels: Sequence[str] | None = None,
    timeout: float = 30.0,
) -> list[tuple[str, list[float]]]:
    """POST a batch to ``endpoint`` and return positionally aligned results."""
    payload = {
        "format": PREDICT_FORMAT,
        "samples": [record_to_obj(r) for r in records],
    }
    try:
        resp = requests.post(endpoint, json=payload, timeout=timeout)
    except requests.RequestException as exc:
        raise ClassifierError(f"prediction request to {endpoint} failed: {exc}") from exc
    if resp.status_code != 200:
        raise ClassifierError(f"{endpoint} answered HTTP {resp.status_code}")
    try:
        body = resp.json()
    except ValueError as exc:
        raise ClassifierError(f"{endpoint}: response is not JSON") from exc
    for key in ("labels", "scores"):
        if key not in body:
            raise ClassifierError(f"{endpoint}: response missing field {key!r}")
    got_labels, got_scores = body["labels"], body["scores"]
    if not isinstance(got_labels, list) or len(got_labels) != len(records):
        raise ClassifierError(f"{endpoint}: field 'labels' misaligned with request batch")
    if not isinstance(got_scores, list) or len(got_scores) != len(records):
        raise ClassifierError(f"{endpoint}: field 'scores' misaligned with request batch")
    if labels is not None:
        known = set(labels)
        for lab in got_labels:
            if lab not in known:
                raise ClassifierError(f"{endpoint}: predicted label {lab!r} outside declared set")
    return [(lab, [float(s) for s in sc]) for lab, sc in zip(got_labels, got_scores)]


def _make_handler(model: LinearRcModel, wv: WordVectors):
    class _Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):  # keep test output quiet
            pass

        def do_POST(self):
            if self.path != "/predict":
                self.send_error(404)
                return
            length = int(self.headers.get("Content-Length", "0"))
            try:
                body = json.loads(self.rfile.read(length).decode("utf-8"))
                if body.get("format") != PREDICT_FORMAT:
                    raise ValueError(f"unsupported format {body.get('format')!r}")
                records = [record_from_obj(o) for o in body["samples"]]
                results = [predict(model, r, wv) for r in records]
            except Exception as exc:  # noqa: BLE001 - surface any bad request as 400
                self.send_response(400)
                self.send_header("Content-Type", "application/json")
                self.end_headers()
                self.wfile.write(json.dumps({"error": str(exc)}).encode("utf-8"))
                return
            out = {"labels": [r[0] for r in results], "scores": [r[1] for r in results]}
            payload = json.dumps(out).encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

    return _Handler


class ReferenceStub:
    """In-process HTTP server exposing a built-in model over the wire protocol.

    Used as the loopback reference for external-predictor equivalence and
    runnable standalone through scripts/serve_stub.py.
    """

    def __init__(self, model: LinearRcModel, wv: WordVectors, host: str = "127.0.0.1", port: int = 0):
        self._server = ThreadingHTTPServer((host, port), _make_handler(model, wv))
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/predict"

    def start(self) -> "ReferenceStub":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join()

    def __enter__(self) -> "ReferenceStub":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
