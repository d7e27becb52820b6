"""Data model for relation-classification samples and JSONL corpus I/O.

A corpus file is one JSON object per line.  A full corpus starts with a
header line declaring the label set and the designated negative label;
bare record lists (no header) are also accepted, in which case label
membership is not checked.  All token indices are 0-based and entity
spans are half-open ``[start, end)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Union

ROOT = -1

FORMAT_VERSION = "coco-corpus/1"

SYNTACTIC = "syntactic"
SEMANTIC = "semantic"

_VERB_TAGS = {"VB", "VBD", "VBG", "VBN", "VBP", "VBZ"}
_NOUN_TAGS = {"NN", "NNS", "NNP", "NNPS"}


class CorpusError(ValueError):
    """Malformed corpus file or violated record invariant."""


def coarse_pos(pos: str) -> str:
    """Collapse a Penn tag into its coarse class; unknown tags map to themselves."""
    if pos in _VERB_TAGS:
        return "VERB"
    if pos in _NOUN_TAGS:
        return "NOUN"
    if pos.startswith("JJ"):
        return "ADJ"
    if pos.startswith("RB"):
        return "ADV"
    return pos


@dataclass(frozen=True)
class Token:
    index: int
    surface: str
    pos: str

    @property
    def coarse_pos(self) -> str:
        return coarse_pos(self.pos)


@dataclass(frozen=True)
class EntityMention:
    id: str
    start: int
    end: int
    role: str  # "e1", "e2" or "e3"

    @property
    def span(self) -> range:
        return range(self.start, self.end)


@dataclass(frozen=True)
class DepEdge:
    head: int  # token index, or ROOT (-1)
    dep: int
    rel: str
    layer: str  # SYNTACTIC or SEMANTIC


@dataclass(frozen=True)
class AnnotatedSample:
    id: str
    tokens: tuple[Token, ...]
    entities: tuple[EntityMention, ...]
    label: str
    syn_edges: tuple[DepEdge, ...]
    sem_edges: tuple[DepEdge, ...]
    domain: str | None = None

    def entity(self, role: str) -> EntityMention:
        for m in self.entities:
            if m.role == role:
                return m
        raise KeyError(f"sample {self.id} has no entity with role {role!r}")

    def surfaces(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)


@dataclass(frozen=True)
class Counterfactual:
    """A derived sample with full provenance.

    The dependency annotations of a counterfactual are stale after the
    intervention, so both edge lists are empty; re-parse before doing any
    graph work on one.
    """

    id: str
    source_id: str
    candidate_id: str
    method: str  # "SynCo" or "SemCo"
    tokens: tuple[Token, ...]
    entities: tuple[EntityMention, ...]
    label: str
    substitutions: tuple[tuple[int, str, str], ...]
    scores: dict[str, float]
    verified: bool
    predicted_label: str
    domain: str | None = None

    def entity(self, role: str) -> EntityMention:
        for m in self.entities:
            if m.role == role:
                return m
        raise KeyError(f"counterfactual {self.id} has no entity with role {role!r}")

    def surfaces(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)


Record = Union[AnnotatedSample, Counterfactual]


@dataclass
class Corpus:
    """Header information plus records, in file order.

    Immutable by convention after construction; safe for shared reads.
    """

    labels: tuple[str, ...] = ()
    negative_label: str | None = None
    records: list[Record] = field(default_factory=list)

    def __iter__(self) -> Iterator[Record]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def samples(self) -> list[AnnotatedSample]:
        return [r for r in self.records if isinstance(r, AnnotatedSample)]

    def with_records(self, records: Iterable[Record]) -> "Corpus":
        return Corpus(self.labels, self.negative_label, list(records))


def _validate_entities(sid: str, entities: tuple[EntityMention, ...], n: int) -> None:
    if not 2 <= len(entities) <= 3:
        raise CorpusError(f"sample {sid}: expected 2 or 3 entities, got {len(entities)}")
    seen_roles = set()
    for m in entities:
        if m.role not in ("e1", "e2", "e3"):
            raise CorpusError(f"sample {sid}: bad entity role {m.role!r}")
        if m.role in seen_roles:
            raise CorpusError(f"sample {sid}: duplicate entity role {m.role!r}")
        seen_roles.add(m.role)
        if not 0 <= m.start < m.end <= n:
            raise CorpusError(
                f"sample {sid}: entity {m.id} span [{m.start},{m.end}) out of range"
            )
    spans = sorted((m.start, m.end) for m in entities)
    for (s1, e1), (s2, _) in zip(spans, spans[1:]):
        if s2 < e1:
            raise CorpusError(f"sample {sid}: overlapping entity spans")
    if "e1" not in seen_roles or "e2" not in seen_roles:
        raise CorpusError(f"sample {sid}: entities must include roles e1 and e2")


def _validate_edges(sid: str, edges: tuple[DepEdge, ...], n: int, layer: str) -> None:
    for e in edges:
        if not 0 <= e.dep < n:
            raise CorpusError(f"sample {sid}: {layer} edge dep {e.dep} out of range")
        if e.head != ROOT and not 0 <= e.head < n:
            raise CorpusError(f"sample {sid}: {layer} edge head {e.head} out of range")
        if e.head == e.dep:
            raise CorpusError(f"sample {sid}: {layer} self-loop at token {e.dep}")


def _validate_tree(sid: str, edges: tuple[DepEdge, ...], n: int) -> None:
    head_of: dict[int, int] = {}
    for e in edges:
        if e.dep in head_of:
            raise CorpusError(f"sample {sid}: token {e.dep} has more than one syntactic head")
        head_of[e.dep] = e.head
    if len(head_of) != n:
        missing = next(i for i in range(n) if i not in head_of)
        raise CorpusError(f"sample {sid}: token {missing} has no syntactic head")
    roots = [d for d, h in head_of.items() if h == ROOT]
    if len(roots) != 1:
        raise CorpusError(f"sample {sid}: expected exactly one ROOT-headed token, got {len(roots)}")
    for start in range(n):
        v, steps = start, 0
        while v != ROOT:
            v = head_of[v]
            steps += 1
            if steps > n:
                raise CorpusError(f"sample {sid}: cycle in syntactic heads at token {start}")


def validate_sample(sample: AnnotatedSample, labels: tuple[str, ...] = ()) -> None:
    sid = sample.id
    n = len(sample.tokens)
    for i, t in enumerate(sample.tokens):
        if t.index != i:
            raise CorpusError(f"sample {sid}: token index {t.index} at position {i}")
        if not t.surface:
            raise CorpusError(f"sample {sid}: empty token surface at {i}")
    _validate_entities(sid, sample.entities, n)
    _validate_edges(sid, sample.syn_edges, n, "syntactic")
    _validate_edges(sid, sample.sem_edges, n, "semantic")
    _validate_tree(sid, sample.syn_edges, n)
    if labels and sample.label not in labels:
        raise CorpusError(f"sample {sid}: label {sample.label!r} not in declared label set")


def validate_counterfactual(cf: Counterfactual, labels: tuple[str, ...] = ()) -> None:
    sid = cf.id
    n = len(cf.tokens)
    for i, t in enumerate(cf.tokens):
        if t.index != i:
            raise CorpusError(f"counterfactual {sid}: token index {t.index} at position {i}")
        if not t.surface:
            raise CorpusError(f"counterfactual {sid}: empty token surface at {i}")
    _validate_entities(sid, cf.entities, n)
    if cf.method not in ("SynCo", "SemCo"):
        raise CorpusError(f"counterfactual {sid}: unknown method {cf.method!r}")
    # substitution indices refer to the source sample; they are only
    # comparable to this record's spans when no insertion/deletion (empty
    # old or new side) shifted the entities
    if all(old and new for _, old, new in cf.substitutions):
        entity_positions = {i for m in cf.entities for i in m.span}
        for idx, _, _ in cf.substitutions:
            if idx in entity_positions:
                raise CorpusError(f"counterfactual {sid}: substitution at entity token {idx}")
    if labels and cf.label not in labels:
        raise CorpusError(f"counterfactual {sid}: label {cf.label!r} not in declared label set")


def _entity_from_obj(obj: dict) -> EntityMention:
    return EntityMention(id=obj["id"], start=obj["start"], end=obj["end"], role=obj["role"])


def _edges_from_obj(objs: list, layer: str) -> tuple[DepEdge, ...]:
    return tuple(DepEdge(head=o["head"], dep=o["dep"], rel=o["rel"], layer=layer) for o in objs)


def _tokens_from_obj(obj: dict) -> tuple[Token, ...]:
    words, tags = obj["tokens"], obj["pos"]
    if len(words) != len(tags):
        raise CorpusError(f"sample {obj.get('id', '?')}: tokens/pos length mismatch")
    return tuple(Token(i, w, p) for i, (w, p) in enumerate(zip(words, tags)))


def record_from_obj(obj: dict) -> Record:
    """Build a record from a parsed JSON object (no label-set check)."""
    tokens = _tokens_from_obj(obj)
    entities = tuple(_entity_from_obj(e) for e in obj["entities"])
    domain = obj.get("domain")
    if "method" in obj:
        return Counterfactual(
            id=obj["id"],
            source_id=obj["source_id"],
            candidate_id=obj["candidate_id"],
            method=obj["method"],
            tokens=tokens,
            entities=entities,
            label=obj["label"],
            substitutions=tuple((s[0], s[1], s[2]) for s in obj["substitutions"]),
            scores=dict(obj["scores"]),
            verified=obj.get("verified", True),
            predicted_label=obj["predicted_label"],
            domain=domain,
        )
    return AnnotatedSample(
        id=obj["id"],
        tokens=tokens,
        entities=entities,
        label=obj["label"],
        syn_edges=_edges_from_obj(obj["syn_edges"], SYNTACTIC),
        sem_edges=_edges_from_obj(obj["sem_edges"], SEMANTIC),
        domain=domain,
    )


def record_to_obj(rec: Record) -> dict:
    obj: dict = {
        "id": rec.id,
        "tokens": [t.surface for t in rec.tokens],
        "pos": [t.pos for t in rec.tokens],
        "entities": [
            {"id": m.id, "start": m.start, "end": m.end, "role": m.role} for m in rec.entities
        ],
        "label": rec.label,
    }
    if isinstance(rec, AnnotatedSample):
        obj["syn_edges"] = [{"head": e.head, "dep": e.dep, "rel": e.rel} for e in rec.syn_edges]
        obj["sem_edges"] = [{"head": e.head, "dep": e.dep, "rel": e.rel} for e in rec.sem_edges]
    else:
        obj["syn_edges"] = []
        obj["sem_edges"] = []
        obj["source_id"] = rec.source_id
        obj["candidate_id"] = rec.candidate_id
        obj["method"] = rec.method
        obj["substitutions"] = [list(s) for s in rec.substitutions]
        obj["scores"] = rec.scores
        obj["verified"] = rec.verified
        obj["predicted_label"] = rec.predicted_label
    if rec.domain is not None:
        obj["domain"] = rec.domain
    return obj


def load_corpus(path: str | Path) -> Corpus:
    """Load a corpus file, validating every record invariant.

    An entirely empty file yields an empty corpus.  A file whose first
    line is a header object gets full label-set validation; headerless
    files are treated as bare record lists.
    """
    path = Path(path)
    labels: tuple[str, ...] = ()
    negative: str | None = None
    records: list[Record] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: malformed JSON: {exc.msg}") from exc
            if lineno == 1 and isinstance(obj, dict) and "format" in obj:
                if obj["format"] != FORMAT_VERSION:
                    raise CorpusError(f"{path}:1: unsupported format {obj['format']!r}")
                labels = tuple(obj["labels"])
                negative = obj["negative_label"]
                if negative not in labels:
                    raise CorpusError(f"{path}:1: negative label {negative!r} not in label set")
                continue
            try:
                rec = record_from_obj(obj)
            except (KeyError, TypeError, IndexError) as exc:
                raise CorpusError(f"{path}:{lineno}: missing or malformed field: {exc}") from exc
            if isinstance(rec, AnnotatedSample):
                validate_sample(rec, labels)
            else:
                validate_counterfactual(rec, labels)
            records.append(rec)
    return Corpus(labels=labels, negative_label=negative, records=records)


def emit_corpus(corpus: Corpus | Iterable[Record], path: str | Path) -> None:
    """Write a corpus (header + records) or a bare record list to ``path``.

    Loading the result reproduces the input field for field.
    """
    path = Path(path)
    lines: list[str] = []
    if isinstance(corpus, Corpus):
        if corpus.labels:
            header = {
                "format": FORMAT_VERSION,
                "labels": list(corpus.labels),
                "negative_label": corpus.negative_label,
            }
            lines.append(json.dumps(header, ensure_ascii=False, separators=(",", ":")))
        records: Iterable[Record] = corpus.records
    else:
        records = corpus
    for rec in records:
        lines.append(json.dumps(record_to_obj(rec), ensure_ascii=False, separators=(",", ":")))
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
