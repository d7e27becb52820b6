"""Syntactic counterfactual generation.

Candidates with a different label are paired entity-by-entity through
centrality distance, gated on syntactic-feature similarity, and edited by
swapping first-order neighbors of matching coarse POS class.  A verifying
classifier keeps only edits whose predicted label actually moves.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .corpus import (
    SYNTACTIC,
    AnnotatedSample,
    Corpus,
    Counterfactual,
    EntityMention,
    Token,
)
from .depgraph import (
    CentralityProfile,
    DepGraph,
    build_graph,
    entity_centrality,
    first_order_neighbors,
    topological_distance,
)
from .embed import TagEmbeddings, cosine, syntactic_feature


class GenerationError(RuntimeError):
    """A sample could not be processed (e.g. the verifying classifier is down)."""


@dataclass
class SynCoConfig:
    tdt: float = 0.2  # topological-distance threshold
    fst: float = 0.8  # feature-similarity threshold
    candidates_per_sample: int = 3
    seed: int = 0
    strict_flip: bool = False

    def __post_init__(self) -> None:
        if self.tdt < 0:
            raise ValueError("tdt must be non-negative")
        if not -1.0 <= self.fst <= 1.0:
            raise ValueError("fst must lie in [-1, 1]")
        if self.candidates_per_sample < 1:
            raise ValueError("candidates_per_sample must be at least 1")


@dataclass(frozen=True)
class Substitution:
    index: int  # token index in the original sample
    old: str
    new: str
    new_pos: str


def sample_rng(seed: int, method: str, sample_id: str) -> random.Random:
    # string seeding hashes via sha512, so streams are stable across runs
    # and independent per (seed, method, sample)
    return random.Random(f"{seed}:{method}:{sample_id}")


def sample_candidates(
    corpus: Corpus, original: AnnotatedSample, k: int, rng: random.Random
) -> list[AnnotatedSample]:
    """Uniform draw without replacement from the different-label pool."""
    pool = [s for s in corpus.samples if s.label != original.label]
    if not pool:
        return []
    return rng.sample(pool, min(k, len(pool)))


def pair_entities(
    original: AnnotatedSample,
    candidate: AnnotatedSample,
    profile_o: CentralityProfile,
    profile_c: CentralityProfile,
    tdt: float,
) -> list[tuple[EntityMention, EntityMention, float]]:
    """Cross-sample entity pairs whose centrality distance clears the threshold.

    Each original mention keeps at most one partner: smallest distance
    wins, ties go to the lower candidate role ordinal.
    """
    pairs = []
    for m_o in sorted(original.entities, key=lambda m: m.role):
        avg_o = entity_centrality(profile_o, m_o)
        best: tuple[float, str, EntityMention] | None = None
        for m_c in sorted(candidate.entities, key=lambda m: m.role):
            td = topological_distance(avg_o, entity_centrality(profile_c, m_c))
            if td < tdt and (best is None or (td, m_c.role) < (best[0], best[1])):
                best = (td, m_c.role, m_c)
        if best is not None:
            pairs.append((m_o, best[2], best[0]))
    return pairs


def _grouped_by_class(sample: AnnotatedSample, indices: list[int]) -> dict[str, list[int]]:
    groups: dict[str, list[int]] = {}
    for i in indices:
        groups.setdefault(sample.tokens[i].coarse_pos, []).append(i)
    return groups


def substitute_neighbors(
    original: AnnotatedSample,
    candidate: AnnotatedSample,
    pair: tuple[EntityMention, EntityMention, float],
    g_o: DepGraph,
    g_c: DepGraph,
    profile_o: CentralityProfile,
    profile_c: CentralityProfile,
    tags: TagEmbeddings,
    fst: float,
) -> tuple[float, list[Substitution]] | None:
    """Swap same-class first-order neighbors of a paired entity.

    Returns None when the feature-similarity gate rejects the pair.  For
    every coarse POS class among the candidate entity's neighbors, the
    donor closest (by centrality distance) to the original neighborhood
    replaces exactly the one original neighbor nearest to it; classes
    with no counterpart on the original side contribute nothing.
    """
    m_o, m_c, _ = pair
    fs = cosine(
        syntactic_feature(original, m_o, g_o, tags),
        syntactic_feature(candidate, m_c, g_c, tags),
    )
    if fs <= fst:
        return None
    entity_positions = {i for m in original.entities for i in m.span}
    orig_neighbors = [
        i for i in first_order_neighbors(g_o, m_o) if i not in entity_positions
    ]
    cand_neighbors = first_order_neighbors(g_c, m_c)
    orig_groups = _grouped_by_class(original, orig_neighbors)
    cand_groups = _grouped_by_class(candidate, cand_neighbors)
    subs: list[Substitution] = []
    for cls in sorted(cand_groups):
        targets = orig_groups.get(cls)
        if not targets:
            continue
        donors = cand_groups[cls]
        donor = min(
            donors,
            key=lambda d: (
                min(
                    topological_distance(profile_c.agg[d], profile_o.agg[o])
                    for o in targets
                ),
                d,
            ),
        )
        target = min(
            targets,
            key=lambda o: (topological_distance(profile_o.agg[o], profile_c.agg[donor]), o),
        )
        old = original.tokens[target].surface
        new = candidate.tokens[donor].surface
        if old != new:
            subs.append(Substitution(target, old, new, candidate.tokens[donor].pos))
    subs.sort(key=lambda s: s.index)
    return fs, subs


def _apply_substitutions(
    tokens: tuple[Token, ...], subs: dict[int, Substitution]
) -> tuple[Token, ...]:
    out = []
    for i, t in enumerate(tokens):
        if i in subs:
            out.append(Token(i, subs[i].new, subs[i].new_pos))
        else:
            out.append(t)
    return tuple(out)


def _verify_and_choose(
    attempts: list[Counterfactual],
    original_label: str,
    strict_flip: bool,
    predictor,
    rng: random.Random,
) -> Counterfactual | None:
    """Re-predict every attempt; keep the flips and pick one at random."""
    if not attempts:
        return None
    try:
        predictions = predictor.predict(attempts)
    except Exception as exc:  # noqa: BLE001 - classifier failures become generation errors
        raise GenerationError(f"verification failed for {attempts[0].source_id}: {exc}") from exc
    accepted = []
    for cf, (predicted, _) in zip(attempts, predictions):
        flipped = predicted == cf.label if strict_flip else predicted != original_label
        if flipped:
            accepted.append(replace(cf, verified=True, predicted_label=predicted))
    if not accepted:
        return None
    if len(accepted) == 1:
        return accepted[0]
    return rng.choice(accepted)


def generate_synco(
    original: AnnotatedSample,
    corpus: Corpus,
    cfg: SynCoConfig,
    predictor,
    tags: TagEmbeddings,
) -> Counterfactual | None:
    """Full pipeline for one sample; None when nothing survives the gates."""
    rng = sample_rng(cfg.seed, "synco", original.id)
    candidates = sample_candidates(corpus, original, cfg.candidates_per_sample, rng)
    if not candidates:
        return None
    g_o = build_graph(original, SYNTACTIC)
    profile_o = CentralityProfile.compute(g_o)
    attempts: list[Counterfactual] = []
    for cand in candidates:
        g_c = build_graph(cand, SYNTACTIC)
        profile_c = CentralityProfile.compute(g_c)
        merged: dict[int, Substitution] = {}
        scores: dict[str, float] | None = None
        for pair in pair_entities(original, cand, profile_o, profile_c, cfg.tdt):
            gated = substitute_neighbors(
                original, cand, pair, g_o, g_c, profile_o, profile_c, tags, cfg.fst
            )
            if gated is None:
                continue
            fs, subs = gated
            if subs and scores is None:
                scores = {"TD": pair[2], "FS": fs}
            for sub in subs:
                merged.setdefault(sub.index, sub)
        if not merged:
            continue
        attempts.append(
            Counterfactual(
                id=f"{original.id}-synco-{cand.id}",
                source_id=original.id,
                candidate_id=cand.id,
                method="SynCo",
                tokens=_apply_substitutions(original.tokens, merged),
                entities=original.entities,
                label=cand.label,
                substitutions=tuple(
                    (s.index, s.old, s.new) for s in sorted(merged.values(), key=lambda s: s.index)
                ),
                scores=scores or {},
                verified=False,
                predicted_label="",
                domain=original.domain,
            )
        )
    return _verify_and_choose(attempts, original.label, cfg.strict_flip, predictor, rng)
