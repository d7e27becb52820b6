"""Raw-data adapter for the coco corpus format.

Tokenizes and parses raw relation-classification records (text, entity
character offsets, label) through pluggable syntactic and semantic
backends and emits coco-corpus/1 JSONL that the primary loader accepts.
"""

from .backends import (
    BackendError,
    CollapseSemanticBackend,
    CoreNlpBackend,
    HeuristicBackend,
    semantic_backend,
    syntactic_backend,
)
from .convert import convert_dataset, convert_sample, validate_with_primary, write_corpus
from .raw import RawDataset, RawEntity, RawSample, load_raw

__version__ = "0.1.0"
