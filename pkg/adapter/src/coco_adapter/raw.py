"""Raw input records: plain text, character-offset entities, a label.

Input is JSONL.  An optional first-line header
``{"format": "coco-raw/1", "labels": [...], "negative_label": "..."}``
declares the label set; without it the labels are collected from the data
and the negative label comes from the CLI.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

RAW_FORMAT = "coco-raw/1"


class RawError(ValueError):
    """Unreadable raw file or malformed line."""


@dataclass(frozen=True)
class RawEntity:
    id: str
    start: int  # character offsets, half-open
    end: int
    role: str


@dataclass(frozen=True)
class RawSample:
    id: str
    text: str
    entities: tuple[RawEntity, ...]
    label: str
    domain: str | None = None

    def check(self) -> str | None:
        """Return a reason string when an invariant fails, else None."""
        for ent in self.entities:
            if not 0 <= ent.start < ent.end <= len(self.text):
                return f"entity {ent.id} offsets [{ent.start},{ent.end}) outside text"
        spans = sorted((e.start, e.end) for e in self.entities)
        for (_, e1), (s2, _) in zip(spans, spans[1:]):
            if s2 < e1:
                return "overlapping entity offsets"
        roles = [e.role for e in self.entities]
        if len(set(roles)) != len(roles) or not {"e1", "e2"} <= set(roles):
            return "entities must carry distinct roles including e1 and e2"
        return None


@dataclass
class RawDataset:
    labels: tuple[str, ...]
    negative_label: str | None
    samples: list[RawSample]


def load_raw(path: str | Path) -> RawDataset:
    path = Path(path)
    labels: tuple[str, ...] = ()
    negative: str | None = None
    samples: list[RawSample] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RawError(f"{path}:{lineno}: malformed JSON: {exc.msg}") from exc
            if lineno == 1 and isinstance(obj, dict) and obj.get("format") == RAW_FORMAT:
                labels = tuple(obj.get("labels", ()))
                negative = obj.get("negative_label")
                continue
            try:
                samples.append(
                    RawSample(
                        id=obj.get("id", f"raw-{lineno:05d}"),
                        text=obj["text"],
                        entities=tuple(
                            RawEntity(
                                id=e.get("id", f"m{k + 1}"),
                                start=e["start"],
                                end=e["end"],
                                role=e["role"],
                            )
                            for k, e in enumerate(obj["entities"])
                        ),
                        label=obj["label"],
                        domain=obj.get("domain"),
                    )
                )
            except (KeyError, TypeError) as exc:
                raise RawError(f"{path}:{lineno}: missing or malformed field: {exc}") from exc
    return RawDataset(labels=labels, negative_label=negative, samples=samples)
