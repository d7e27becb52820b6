"""Word vectors, tag embeddings and the cosine-similarity computations.

All lookups are case-folded to lowercase.  Out-of-vocabulary handling is
a store-level policy: ``zero_vector`` (default) keeps cosine well defined
and penalizes unknown-word matches, ``hashed_random`` derives a stable
pseudo-random vector from the word itself so file-less runs still work.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import ROOT, AnnotatedSample, Counterfactual, EntityMention, coarse_pos
from .depgraph import DepGraph

OOV_ZERO = "zero_vector"
OOV_HASHED = "hashed_random"

OOV_POLICIES = (OOV_ZERO, OOV_HASHED)


class EmbeddingError(ValueError):
    """Bad vector file, dimension mismatch, or unusable path input."""


class DegeneratePathError(EmbeddingError):
    """An empty path interior has no embedding; callers skip the candidate."""


def _stable_rng(key: str) -> np.random.Generator:
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


def _hashed_vector(word: str, dim: int) -> np.ndarray:
    rng = _stable_rng(f"wv-oov:{dim}:{word}")
    return rng.uniform(-0.5 / dim, 0.5 / dim, dim)


@dataclass
class WordVectors:
    dim: int = 300
    table: dict[str, np.ndarray] = field(default_factory=dict)
    oov_policy: str = OOV_ZERO

    def __post_init__(self) -> None:
        if self.oov_policy not in OOV_POLICIES:
            raise EmbeddingError(f"unknown OOV policy {self.oov_policy!r}")

    def lookup(self, word: str) -> np.ndarray:
        key = word.lower()
        vec = self.table.get(key)
        if vec is not None:
            return vec
        if self.oov_policy == OOV_ZERO:
            return np.zeros(self.dim)
        return _hashed_vector(key, self.dim)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.table


def load_vectors(path: str | Path, dim: int = 300, oov_policy: str = OOV_ZERO) -> WordVectors:
    """Read a standard text vector file: one word plus ``dim`` floats per line."""
    path = Path(path)
    table: dict[str, np.ndarray] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise EmbeddingError(
                    f"{path}:{lineno}: expected {dim + 1} columns, got {len(parts)}"
                )
            table[parts[0].lower()] = np.array([float(x) for x in parts[1:]])
    return WordVectors(dim=dim, table=table, oov_policy=oov_policy)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    if len(u) != len(v):
        raise EmbeddingError(f"cosine between dim {len(u)} and dim {len(v)}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


@dataclass
class TagEmbeddings:
    """Seeded 30-d embeddings for POS classes and dependency relations.

    Every vector is a pure function of (seed, kind, key), drawn uniformly
    from [-0.5/dim, 0.5/dim], so reconstruction from the same seed is
    bit-identical regardless of lookup order.
    """

    dim: int = 30
    seed: int = 0
    pos_table: dict[str, np.ndarray] = field(default_factory=dict)
    rel_table: dict[str, np.ndarray] = field(default_factory=dict)

    def _vector(self, kind: str, key: str) -> np.ndarray:
        rng = _stable_rng(f"tags:{self.seed}:{self.dim}:{kind}:{key}")
        return rng.uniform(-0.5 / self.dim, 0.5 / self.dim, self.dim)

    def pos_vector(self, tag: str) -> np.ndarray:
        if tag not in self.pos_table:
            self.pos_table[tag] = self._vector("pos", tag)
        return self.pos_table[tag]

    def rel_vector(self, rel: str) -> np.ndarray:
        if rel not in self.rel_table:
            self.rel_table[rel] = self._vector("rel", rel)
        return self.rel_table[rel]


def entity_head_token(sample: AnnotatedSample, mention: EntityMention) -> int:
    """Span token whose syntactic head lies outside the span; first token if none."""
    span = set(mention.span)
    head_of = {e.dep: e.head for e in sample.syn_edges}
    for t in mention.span:
        h = head_of.get(t, ROOT)
        if h == ROOT or h not in span:
            return t
    return mention.start


def syntactic_feature(
    sample: AnnotatedSample,
    mention: EntityMention,
    g: DepGraph,
    tags: TagEmbeddings,
) -> np.ndarray:
    """Entity feature: head-POS embedding next to the mean incident-relation embedding.

    The relation half is all zeros exactly when no edge touches the span.
    """
    head = entity_head_token(sample, mention)
    pos_part = tags.pos_vector(coarse_pos(sample.tokens[head].pos))
    rels = g.incident_rels(mention.span)
    if rels:
        rel_part = np.mean([tags.rel_vector(r) for r in rels], axis=0)
    else:
        rel_part = np.zeros(tags.dim)
    return np.concatenate([pos_part, rel_part])


@dataclass(frozen=True)
class TagInventory:
    """Fixed vocabularies for the one-hot feature variant."""

    pos_classes: tuple[str, ...]
    rels: tuple[str, ...]

    @classmethod
    def from_samples(cls, samples) -> "TagInventory":
        pos = sorted({coarse_pos(t.pos) for s in samples for t in s.tokens})
        rels = sorted(
            {e.rel for s in samples for e in s.syn_edges} | {e.rel for s in samples for e in s.sem_edges}
        )
        return cls(tuple(pos), tuple(rels))


def syntactic_feature_onehot(
    sample: AnnotatedSample,
    mention: EntityMention,
    g: DepGraph,
    inventory: TagInventory,
) -> np.ndarray:
    """One-hot POS plus multi-hot incident relations, for comparison runs."""
    head = entity_head_token(sample, mention)
    pos_part = np.zeros(len(inventory.pos_classes))
    cls = coarse_pos(sample.tokens[head].pos)
    if cls in inventory.pos_classes:
        pos_part[inventory.pos_classes.index(cls)] = 1.0
    rel_part = np.zeros(len(inventory.rels))
    for r in g.incident_rels(mention.span):
        if r in inventory.rels:
            rel_part[inventory.rels.index(r)] = 1.0
    return np.concatenate([pos_part, rel_part])


def path_embedding(
    sample: AnnotatedSample | Counterfactual,
    interior: tuple[int, ...] | list[int],
    wv: WordVectors,
) -> np.ndarray:
    """Mean word vector over the interior tokens of a dependency path."""
    if not interior:
        raise DegeneratePathError(f"sample {sample.id}: empty path interior")
    return np.mean([wv.lookup(sample.tokens[i].surface) for i in interior], axis=0)
