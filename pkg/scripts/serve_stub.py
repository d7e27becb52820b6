#!/usr/bin/env python3
"""Serve a trained built-in model over the prediction wire protocol.

POST /predict with {"format": "coco-predict/1", "samples": [...]} answers
{"labels": [...], "scores": [[...], ...]}.  Useful as a loopback reference
when wiring external backbone classifiers.
"""

import argparse

from coco.classify import ReferenceStub, load_model
from coco.embed import WordVectors, load_vectors


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", required=True, help="model file from train-classifier")
    ap.add_argument("--embeddings", help="word-vector text file (must match training)")
    ap.add_argument("--oov-policy", default="zero_vector")
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=8756)
    args = ap.parse_args()

    model = load_model(args.model)
    if args.embeddings:
        wv = load_vectors(args.embeddings, dim=model.wv_dim, oov_policy=args.oov_policy)
    else:
        wv = WordVectors(dim=model.wv_dim, table={}, oov_policy=args.oov_policy)
    stub = ReferenceStub(model, wv, host=args.host, port=args.port)
    print(f"serving {args.model} at {stub.url} (ctrl-c to stop)")
    try:
        stub._server.serve_forever()
    except KeyboardInterrupt:
        stub.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
