#!/usr/bin/env python3
"""Write a small demo corpus plus a matching word-vector file.

The corpus holds two annotated pairs: a chain-shaped sentence whose entity
neighborhood gets substituted by the syntactic generator, and a copular
sentence whose semantic path gets spliced.  Good for trying the CLI:

    python scripts/make_demo_corpus.py demo/
    coco generate demo/corpus.jsonl --embeddings demo/vectors.txt --dim 16 -o demo/cad.jsonl
"""

import argparse
from pathlib import Path

import numpy as np

from coco.corpus import (
    ROOT,
    SEMANTIC,
    SYNTACTIC,
    AnnotatedSample,
    Corpus,
    DepEdge,
    EntityMention,
    Token,
    emit_corpus,
)


def sample(sid, words, pos, heads, rels, entities, label, sem):
    return AnnotatedSample(
        id=sid,
        tokens=tuple(Token(i, w, p) for i, (w, p) in enumerate(zip(words, pos))),
        entities=tuple(EntityMention(m, s, e, r) for m, s, e, r in entities),
        label=label,
        syn_edges=tuple(
            DepEdge(h, d, r, SYNTACTIC) for d, (h, r) in enumerate(zip(heads, rels))
        ),
        sem_edges=tuple(DepEdge(h, d, r, SEMANTIC) for h, d, r in sem),
    )


def build_corpus() -> Corpus:
    records = [
        sample(
            "demo-syn-a",
            ["They", "drank", "wine", "produced", "by", "wineries"],
            ["PRP", "VBD", "NN", "VBN", "IN", "NNS"],
            [1, ROOT, 1, 2, 3, 4],
            ["nsubj", "root", "obj", "acl", "prep", "pobj"],
            [("m1", 2, 3, "e1"), ("m2", 5, 6, "e2")],
            "Product-Producer",
            [(1, 0, "arg1"), (1, 2, "arg2"), (3, 2, "arg2"), (3, 5, "arg1")],
        ),
        sample(
            "demo-syn-b",
            ["They", "bought", "the", "grapes", "from", "farms"],
            ["PRP", "VBD", "DT", "NNS", "IN", "NNS"],
            [1, ROOT, 3, 1, 1, 4],
            ["nsubj", "root", "det", "obj", "prep", "pobj"],
            [("m1", 3, 4, "e1"), ("m2", 5, 6, "e2")],
            "Entity-Origin",
            [(1, 0, "arg1"), (1, 3, "arg2"), (4, 3, "arg1"), (4, 5, "arg2")],
        ),
        sample(
            "demo-sem-a",
            ["Wine", "is", "in", "the", "bottle"],
            ["NN", "VBZ", "IN", "DT", "NN"],
            [4, 4, 4, 4, ROOT],
            ["nsubj", "cop", "case", "det", "root"],
            [("m1", 0, 1, "e1"), ("m2", 4, 5, "e2")],
            "Content-Container",
            [(2, 0, "arg1"), (2, 4, "arg2")],
        ),
        sample(
            "demo-sem-b",
            ["Letter", "is", "from", "the", "city"],
            ["NN", "VBZ", "IN", "DT", "NN"],
            [4, 4, 4, 4, ROOT],
            ["nsubj", "cop", "case", "det", "root"],
            [("m1", 0, 1, "e1"), ("m2", 4, 5, "e2")],
            "Entity-Origin",
            [(2, 0, "arg1"), (2, 4, "arg2")],
        ),
    ]
    labels = ("Product-Producer", "Entity-Origin", "Content-Container", "Other")
    return Corpus(labels, "Other", records)


def write_vectors(path: Path, dim: int = 16) -> None:
    """Context words carry the signal; entities and function words stay small.

    That way the tiny built-in verifier, trained on the demo corpus itself,
    classifies by context and actually flips the edited samples.  The two
    prepositions share a direction so the semantic-similarity gate opens.
    """
    rng = np.random.default_rng(0)
    quiet = {
        "they", "wine", "wineries", "the", "grapes", "farms",
        "is", "bottle", "letter", "city", "was",
    }
    loud = {"drank", "produced", "by", "bought", "in", "from"}
    prep_base = rng.normal(size=dim)

    def vec_for(word):
        if word in ("in", "from"):
            return prep_base + 0.45 * rng.normal(size=dim)
        if word in loud:
            return rng.normal(size=dim)
        return 0.05 * rng.normal(size=dim)

    rows = [
        word + " " + " ".join(f"{x:.6f}" for x in vec_for(word))
        for word in sorted(quiet | loud)
    ]
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out_dir", nargs="?", default="demo")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    emit_corpus(build_corpus(), out / "corpus.jsonl")
    write_vectors(out / "vectors.txt")
    print(f"wrote {out / 'corpus.jsonl'} and {out / 'vectors.txt'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
