"""Pluggable parser backends.

A syntactic backend turns text into tokens (with character offsets and
POS tags) plus a dependency tree; a semantic backend turns those tokens
into a predicate-argument graph.  Backends are looked up by name, so
parser choices can churn without touching the conversion logic.  Edge
labels are passed through as opaque strings.

Built in:
  heuristic  - deterministic rule-based tokenizer/tagger/parsers, no
               external services; good enough for smoke tests and demos
  corenlp:<url> - syntactic parses from a CoreNLP server's JSON API
  collapse   - semantic layer derived from the syntactic tree by linking
               content words across function-word chains
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import requests

ROOT = -1

_PUNCT_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)

_DETS = {"the", "a", "an", "this", "that", "these", "those"}
_PREPS = {
    "in", "on", "at", "by", "from", "of", "with", "to", "for", "into",
    "over", "under", "inside", "through", "near", "about", "across",
}
_PRONOUNS = {"they", "he", "she", "it", "we", "you", "i", "them", "him", "her", "us"}
_CONJ = {"and", "or", "but"}
_COPULA = {"is": "VBZ", "was": "VBD", "are": "VBP", "were": "VBD", "am": "VBP", "be": "VB", "been": "VBN"}
_VERBS = {
    "drank", "drink", "bought", "buy", "produced", "produce", "made", "make",
    "stored", "store", "kept", "keep", "sold", "sell", "sent", "send",
    "found", "find", "put", "has", "have", "had", "holds", "hold",
    "contains", "contain", "ships", "ship", "built", "build", "grew", "grow",
    "says", "said", "wrote", "write", "came", "come", "went", "go",
}


class BackendError(RuntimeError):
    """Unknown backend name or unreachable parser service."""


@dataclass(frozen=True)
class TokenSpan:
    surface: str
    pos: str
    start: int  # character offsets into the source text
    end: int


@dataclass(frozen=True)
class Edge:
    head: int  # token index or ROOT
    dep: int
    rel: str


@dataclass(frozen=True)
class SyntacticParse:
    tokens: tuple[TokenSpan, ...]
    edges: tuple[Edge, ...]


def _is_verbish(pos: str) -> bool:
    return pos.startswith("VB")


def _is_nounish(pos: str) -> bool:
    return pos.startswith("NN") or pos == "PRP"


def _tag(surface: str, position: int) -> str:
    word = surface.lower()
    if not word[0].isalnum():
        return surface[0] if surface[0] in ".,:;!?" else "SYM"
    if word.isdigit():
        return "CD"
    if word in _DETS:
        return "DT"
    if word in _PREPS:
        return "IN"
    if word in _PRONOUNS:
        return "PRP"
    if word in _CONJ:
        return "CC"
    if word in _COPULA:
        return _COPULA[word]
    if word in _VERBS:
        return "VBD" if word.endswith("ed") or word in {"drank", "bought", "made", "kept", "sold", "sent", "found", "built", "grew", "had", "said", "wrote", "came", "went"} else "VBZ" if word.endswith("s") else "VB"
    if word.endswith("ing") and len(word) > 4:
        return "VBG"
    if word.endswith("ed") and len(word) > 3:
        return "VBD"
    if word.endswith("ly") and len(word) > 3:
        return "RB"
    if surface[0].isupper() and position > 0:
        return "NNP"
    if word.endswith("s") and len(word) > 3:
        return "NNS"
    return "NN"


class HeuristicBackend:
    """Deterministic regex tokenizer with rule-based tree and graph builders."""

    name = "heuristic"

    def parse_syntactic(self, text: str) -> SyntacticParse:
        tokens = tuple(
            TokenSpan(m.group(0), _tag(m.group(0), m.start()), m.start(), m.end())
            for m in _PUNCT_RE.finditer(text)
        )
        return SyntacticParse(tokens, self._tree(tokens))

    def _tree(self, tokens: tuple[TokenSpan, ...]) -> tuple[Edge, ...]:
        n = len(tokens)
        if n == 0:
            return ()
        root = next((i for i, t in enumerate(tokens) if _is_verbish(t.pos)), 0)
        heads = [root] * n
        rels = ["dep"] * n
        for i, tok in enumerate(tokens):
            if i == root:
                continue
            pos = tok.pos
            if pos in ("DT", "JJ"):
                target = next((j for j in range(i + 1, n) if _is_nounish(tokens[j].pos)), root)
                heads[i], rels[i] = target, "det" if pos == "DT" else "amod"
            elif pos == "IN":
                target = next(
                    (j for j in range(i - 1, -1, -1) if _is_verbish(tokens[j].pos) or _is_nounish(tokens[j].pos)),
                    root,
                )
                heads[i], rels[i] = target, "prep"
            elif _is_nounish(pos):
                if i > 0 and tokens[i - 1].pos == "IN":
                    heads[i], rels[i] = i - 1, "pobj"
                elif i < root:
                    heads[i], rels[i] = root, "nsubj"
                else:
                    target = next((j for j in range(i - 1, -1, -1) if _is_verbish(tokens[j].pos)), root)
                    heads[i], rels[i] = target, "obj"
            elif pos == "RB":
                target = next((j for j in range(i - 1, -1, -1) if _is_verbish(tokens[j].pos)), root)
                heads[i], rels[i] = target, "advmod"
            elif _is_verbish(pos):
                if i > 0 and _is_nounish(tokens[i - 1].pos):
                    heads[i], rels[i] = i - 1, "acl"
                else:
                    heads[i], rels[i] = root, "conj"
            elif pos in (".", ",", ":", ";", "!", "?", "SYM"):
                heads[i], rels[i] = root, "punct"
        heads[root] = ROOT
        rels[root] = "root"
        self._break_cycles(heads, root)
        return tuple(Edge(heads[i], i, rels[i]) for i in range(n))

    @staticmethod
    def _break_cycles(heads: list[int], root: int) -> None:
        # every node must reach ROOT; reroute any node on a cycle to the root
        n = len(heads)
        for start in range(n):
            seen = set()
            v = start
            while v != ROOT:
                if v in seen:
                    heads[start] = root if start != root else ROOT
                    break
                seen.add(v)
                v = heads[v]

    def parse_semantic(self, tokens: tuple[TokenSpan, ...]) -> tuple[Edge, ...]:
        """Link each verb to its nearest noun-like neighbors on both sides."""
        edges = []
        nounish = [i for i, t in enumerate(tokens) if _is_nounish(t.pos)]
        for i, tok in enumerate(tokens):
            if _is_verbish(tok.pos):
                left = max((j for j in nounish if j < i), default=None)
                right = min((j for j in nounish if j > i), default=None)
                if left is not None:
                    edges.append(Edge(i, left, "arg1"))
                if right is not None:
                    edges.append(Edge(i, right, "arg2"))
            elif tok.pos == "JJ":
                right = min((j for j in nounish if j > i), default=None)
                if right is not None:
                    edges.append(Edge(right, i, "mod"))
        return tuple(edges)


class CollapseSemanticBackend:
    """Semantic layer folded out of the syntactic tree.

    Content words connected through at most one function word become
    direct neighbors; the function word's surface is folded into the
    relation label (e.g. ``prep_by``).
    """

    name = "collapse"

    def parse_semantic(self, tokens: tuple[TokenSpan, ...], syntactic: tuple[Edge, ...] | None = None) -> tuple[Edge, ...]:
        if syntactic is None:
            raise BackendError("collapse backend needs the syntactic parse")

        def content(i: int) -> bool:
            pos = tokens[i].pos
            return _is_verbish(pos) or _is_nounish(pos) or pos in ("JJ", "RB")

        head_of = {e.dep: (e.head, e.rel) for e in syntactic}
        edges = []
        for dep, (head, rel) in head_of.items():
            if head == ROOT or not content(dep):
                continue
            if content(head):
                edges.append(Edge(head, dep, rel))
                continue
            grand = head_of.get(head, (ROOT, ""))[0]
            if grand != ROOT and content(grand):
                edges.append(Edge(grand, dep, f"{rel}_{tokens[head].surface.lower()}"))
        return tuple(edges)


class CoreNlpBackend:
    """Syntactic parses from a CoreNLP server (JSON output format)."""

    def __init__(self, url: str, timeout: float = 30.0):
        self.name = f"corenlp:{url}"
        self.url = url
        self.timeout = timeout

    def parse_syntactic(self, text: str) -> SyntacticParse:
        try:
            resp = requests.post(
                self.url,
                params={
                    "properties": '{"annotators":"tokenize,ssplit,pos,depparse","outputFormat":"json","ssplit.isOneSentence":"true"}'
                },
                data=text.encode("utf-8"),
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise BackendError(f"CoreNLP at {self.url} unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise BackendError(f"CoreNLP at {self.url} answered HTTP {resp.status_code}")
        body = resp.json()
        tokens: list[TokenSpan] = []
        edges: list[Edge] = []
        offset = 0
        for sentence in body.get("sentences", []):
            base = len(tokens)
            for tok in sentence["tokens"]:
                tokens.append(
                    TokenSpan(
                        tok["word"],
                        tok["pos"],
                        tok["characterOffsetBegin"],
                        tok["characterOffsetEnd"],
                    )
                )
            for dep in sentence.get("basicDependencies", []):
                head = dep["governor"] - 1
                edges.append(
                    Edge(
                        ROOT if head < 0 else base + head,
                        base + dep["dependent"] - 1,
                        dep["dep"],
                    )
                )
            offset += 1
        return SyntacticParse(tuple(tokens), tuple(edges))


def syntactic_backend(name: str):
    if name == "heuristic":
        return HeuristicBackend()
    if name.startswith("corenlp:"):
        return CoreNlpBackend(name.split(":", 1)[1])
    raise BackendError(f"unknown syntactic backend {name!r}")


def semantic_backend(name: str):
    if name == "heuristic":
        return HeuristicBackend()
    if name == "collapse":
        return CollapseSemanticBackend()
    raise BackendError(f"unknown semantic backend {name!r}")
