"""Raw-to-corpus conversion: parse, align offsets, emit, validate.

The adapter talks to the primary package only through its public
surfaces: it writes the coco-corpus/1 JSONL format and (optionally) runs
the primary's ``ingest-validate`` subcommand over the result.  Samples
whose entity offsets do not land on token boundaries, or whose parse
fails a structural check, are skipped with a logged reason and counted
in the conversion summary.
"""

from __future__ import annotations

import json
import logging
import shutil
import subprocess
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .backends import ROOT, Edge, SyntacticParse, TokenSpan
from .raw import RawDataset, RawSample

log = logging.getLogger("coco_adapter")

CORPUS_FORMAT = "coco-corpus/1"


@dataclass
class ConversionSummary:
    converted: int = 0
    skipped: list[tuple[str, str]] = field(default_factory=list)  # (sample id, reason)

    def skip(self, sample_id: str, reason: str) -> None:
        log.warning("skipping %s: %s", sample_id, reason)
        self.skipped.append((sample_id, reason))


def align_entity(tokens: tuple[TokenSpan, ...], start: int, end: int) -> tuple[int, int] | None:
    """Map character offsets to a half-open token span; None on misalignment."""
    first = next((i for i, t in enumerate(tokens) if t.start == start), None)
    last = next((i for i, t in enumerate(tokens) if t.end == end), None)
    if first is None or last is None or last < first:
        return None
    return first, last + 1


def _tree_problem(edges: tuple[Edge, ...], n: int) -> str | None:
    head_of: dict[int, int] = {}
    for e in edges:
        if e.head == e.dep:
            return f"self-loop at token {e.dep}"
        if not 0 <= e.dep < n or not (e.head == ROOT or 0 <= e.head < n):
            return "edge index out of range"
        if e.dep in head_of:
            return f"token {e.dep} has two heads"
        head_of[e.dep] = e.head
    if len(head_of) != n:
        return "token without a head"
    if sum(1 for h in head_of.values() if h == ROOT) != 1:
        return "not exactly one root"
    for start in range(n):
        seen = set()
        v = start
        while v != ROOT:
            if v in seen:
                return "cycle in heads"
            seen.add(v)
            v = head_of[v]
    return None


def convert_sample(sample: RawSample, syn_backend, sem_backend) -> dict | str:
    """One coco-corpus record object, or a skip-reason string."""
    reason = sample.check()
    if reason is not None:
        return reason
    parse: SyntacticParse = syn_backend.parse_syntactic(sample.text)
    tokens = parse.tokens
    if not tokens:
        return "no tokens"
    problem = _tree_problem(parse.edges, len(tokens))
    if problem is not None:
        return f"bad syntactic parse: {problem}"
    entities = []
    for ent in sample.entities:
        span = align_entity(tokens, ent.start, ent.end)
        if span is None:
            return (
                f"entity {ent.id} [{ent.start},{ent.end}) does not align with token boundaries"
            )
        entities.append({"id": ent.id, "start": span[0], "end": span[1], "role": ent.role})
    starts = sorted((e["start"], e["end"]) for e in entities)
    for (_, e1), (s2, _) in zip(starts, starts[1:]):
        if s2 < e1:
            return "entities overlap at the token level"
    try:
        sem_edges = sem_backend.parse_semantic(tokens, parse.edges)
    except TypeError:
        sem_edges = sem_backend.parse_semantic(tokens)
    record = {
        "id": sample.id,
        "tokens": [t.surface for t in tokens],
        "pos": [t.pos for t in tokens],
        "entities": entities,
        "label": sample.label,
        "syn_edges": [{"head": e.head, "dep": e.dep, "rel": e.rel} for e in parse.edges],
        "sem_edges": [
            {"head": e.head, "dep": e.dep, "rel": e.rel}
            for e in sem_edges
            if e.head != ROOT and e.head != e.dep
        ],
    }
    if sample.domain is not None:
        record["domain"] = sample.domain
    return record


def convert_dataset(
    dataset: RawDataset,
    syn_backend,
    sem_backend,
    negative_label: str = "Other",
    shard_index: int = 0,
    shard_count: int = 1,
) -> tuple[list[dict], dict, ConversionSummary]:
    """All convertible records plus the corpus header and a summary."""
    summary = ConversionSummary()
    records: list[dict] = []
    for i, sample in enumerate(dataset.samples):
        if i % shard_count != shard_index:
            continue
        result = convert_sample(sample, syn_backend, sem_backend)
        if isinstance(result, str):
            summary.skip(sample.id, result)
        else:
            records.append(result)
            summary.converted += 1
    negative = dataset.negative_label or negative_label
    labels = list(dataset.labels)
    if not labels:
        labels = sorted({r["label"] for r in records} | {negative})
    header = {"format": CORPUS_FORMAT, "labels": labels, "negative_label": negative}
    return records, header, summary


def write_corpus(records: list[dict], header: dict, path: str | Path) -> None:
    path = Path(path)
    lines = [json.dumps(header, ensure_ascii=False, separators=(",", ":"))]
    lines.extend(json.dumps(r, ensure_ascii=False, separators=(",", ":")) for r in records)
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def validate_with_primary(path: str | Path) -> tuple[bool, str]:
    """Run the primary loader's CLI over the emitted file.

    Prefers the installed ``coco`` entry point and falls back to
    ``python -m coco.cli``.  Returns (ok, output).
    """
    if shutil.which("coco"):
        cmd = ["coco", "ingest-validate", str(path)]
    else:
        cmd = [sys.executable, "-m", "coco.cli", "ingest-validate", str(path)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    output = (proc.stdout + proc.stderr).strip()
    return proc.returncode == 0, output
