"""Semantic counterfactual generation.

The shortest dependency path between the two entities carries the core of
their relation; when a different-label candidate has a semantically close
path, the original path interior is spliced out for the candidate's and
the edit is kept only if the verifying classifier flips.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import (
    SEMANTIC,
    AnnotatedSample,
    Corpus,
    Counterfactual,
    EntityMention,
    Token,
)
from .depgraph import SdpResult, build_graph, shortest_dependency_path
from .embed import DegeneratePathError, WordVectors, cosine, path_embedding
from .synco import _verify_and_choose, sample_candidates, sample_rng


@dataclass
class SemCoConfig:
    sst: float = 0.6  # semantic-similarity threshold
    candidates_per_sample: int = 3
    seed: int = 0
    strict_flip: bool = False

    def __post_init__(self) -> None:
        if not -1.0 <= self.sst <= 1.0:
            raise ValueError("sst must lie in [-1, 1]")
        if self.candidates_per_sample < 1:
            raise ValueError("candidates_per_sample must be at least 1")


def path_similarity(
    original: AnnotatedSample,
    candidate: AnnotatedSample,
    sdp_o: SdpResult,
    sdp_c: SdpResult,
    wv: WordVectors,
) -> float:
    """Cosine of the averaged word embeddings along the two path interiors."""
    if not sdp_o.found or not sdp_o.interior:
        raise DegeneratePathError(f"sample {original.id}: no usable semantic path")
    if not sdp_c.found or not sdp_c.interior:
        raise DegeneratePathError(f"sample {candidate.id}: no usable semantic path")
    return cosine(
        path_embedding(original, sdp_o.interior, wv),
        path_embedding(candidate, sdp_c.interior, wv),
    )


def splice_path(
    original: AnnotatedSample,
    sdp_o: SdpResult,
    candidate: AnnotatedSample,
    sdp_c: SdpResult,
) -> tuple[tuple[Token, ...], tuple[EntityMention, ...], tuple[tuple[int, str, str], ...]]:
    """Replace the original path interior with the candidate's, index-wise.

    Interior tokens are rewritten in path order at their own surface
    positions; a longer candidate interior is inserted right after the
    last replaced position, a shorter one deletes the leftover original
    interior tokens.  Entity spans are re-indexed but their surfaces never
    change.  Substitution records use original token indices; an empty
    old side marks an insertion, an empty new side a deletion.
    """
    o_interior = list(sdp_o.interior)
    c_words = [(candidate.tokens[i].surface, candidate.tokens[i].pos) for i in sdp_c.interior]
    shared = min(len(o_interior), len(c_words))
    replacements: dict[int, tuple[str, str]] = {}
    subs: list[tuple[int, str, str]] = []
    for j in range(shared):
        idx = o_interior[j]
        surface, pos = c_words[j]
        old = original.tokens[idx].surface
        if old != surface:
            replacements[idx] = (surface, pos)
            subs.append((idx, old, surface))
    deleted = set(o_interior[shared:])
    for idx in sorted(deleted):
        subs.append((idx, original.tokens[idx].surface, ""))
    inserted = c_words[shared:]
    anchor = o_interior[shared - 1]
    for surface, _ in inserted:
        subs.append((anchor, "", surface))

    new_tokens: list[Token] = []
    new_index: dict[int, int] = {}
    for i, tok in enumerate(original.tokens):
        if i in deleted:
            continue
        new_index[i] = len(new_tokens)
        if i in replacements:
            surface, pos = replacements[i]
        else:
            surface, pos = tok.surface, tok.pos
        new_tokens.append(Token(len(new_tokens), surface, pos))
        if i == anchor:
            for surface, pos in inserted:
                new_tokens.append(Token(len(new_tokens), surface, pos))
    entities = tuple(
        EntityMention(m.id, new_index[m.start], new_index[m.end - 1] + 1, m.role)
        for m in original.entities
    )
    subs.sort(key=lambda s: s[0])
    return tuple(new_tokens), entities, tuple(subs)


def generate_semco(
    original: AnnotatedSample,
    corpus: Corpus,
    cfg: SemCoConfig,
    predictor,
    wv: WordVectors,
) -> Counterfactual | None:
    """Full pipeline for one sample; None when nothing survives the gates."""
    rng = sample_rng(cfg.seed, "semco", original.id)
    candidates = sample_candidates(corpus, original, cfg.candidates_per_sample, rng)
    if not candidates:
        return None
    g_o = build_graph(original, SEMANTIC)
    sdp_o = shortest_dependency_path(g_o, original.entity("e1"), original.entity("e2"))
    if not sdp_o.found or not sdp_o.interior:
        return None
    attempts: list[Counterfactual] = []
    for cand in candidates:
        g_c = build_graph(cand, SEMANTIC)
        sdp_c = shortest_dependency_path(g_c, cand.entity("e1"), cand.entity("e2"))
        if not sdp_c.found or not sdp_c.interior:
            continue
        similarity = path_similarity(original, cand, sdp_o, sdp_c, wv)
        if similarity <= cfg.sst:
            continue
        tokens, entities, subs = splice_path(original, sdp_o, cand, sdp_c)
        if not subs:
            continue
        attempts.append(
            Counterfactual(
                id=f"{original.id}-semco-{cand.id}",
                source_id=original.id,
                candidate_id=cand.id,
                method="SemCo",
                tokens=tokens,
                entities=entities,
                label=cand.label,
                substitutions=subs,
                scores={"path_similarity": similarity},
                verified=False,
                predicted_label="",
                domain=original.domain,
            )
        )
    return _verify_and_choose(attempts, original.label, cfg.strict_flip, predictor, rng)
