"""Scoring, out-of-domain splitting, and the desk-scale robustness harness.

Micro and macro aggregates exclude the designated negative label, which is
the usual convention for TACRED- and SemEval-style scoring; the flag
``exclude_negative`` turns that off for datasets that count it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .classify import LocalPredictor, TrainConfig, predict, train
from .corpus import (
    ROOT,
    SEMANTIC,
    SYNTACTIC,
    AnnotatedSample,
    Corpus,
    Counterfactual,
    DepEdge,
    EntityMention,
    Record,
    Token,
)
from .embed import TagEmbeddings, WordVectors, _stable_rng
from .semco import SemCoConfig, generate_semco
from .synco import SynCoConfig, generate_synco


@dataclass(frozen=True)
class LabelMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricReport:
    accuracy: float
    per_label: dict[str, LabelMetrics]
    micro_precision: float
    micro_recall: float
    micro_f1: float
    macro_f1: float
    total: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "micro_precision": self.micro_precision,
            "micro_recall": self.micro_recall,
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
            "total": self.total,
            "per_label": {
                lab: {"precision": m.precision, "recall": m.recall, "f1": m.f1, "support": m.support}
                for lab, m in self.per_label.items()
            },
        }


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def score(
    gold: Sequence[str],
    pred: Sequence[str],
    negative_label: str,
    labels: Sequence[str] | None = None,
    exclude_negative: bool = True,
) -> MetricReport:
    if len(gold) != len(pred):
        raise ValueError(f"gold has {len(gold)} items, pred has {len(pred)}")
    if labels is not None:
        known = set(labels)
        for lab in list(gold) + list(pred):
            if lab not in known:
                raise ValueError(f"label {lab!r} outside the declared set")
        universe = sorted(known)
    else:
        universe = sorted(set(gold) | set(pred))
    total = len(gold)
    accuracy = sum(g == p for g, p in zip(gold, pred)) / total if total else 0.0
    per_label: dict[str, LabelMetrics] = {}
    counts: dict[str, tuple[int, int, int]] = {}
    for lab in universe:
        tp = sum(1 for g, p in zip(gold, pred) if g == lab and p == lab)
        fp = sum(1 for g, p in zip(gold, pred) if g != lab and p == lab)
        fn = sum(1 for g, p in zip(gold, pred) if g == lab and p != lab)
        counts[lab] = (tp, fp, fn)
        p, r, f = _prf(tp, fp, fn)
        per_label[lab] = LabelMetrics(p, r, f, sum(1 for g in gold if g == lab))
    pool = [lab for lab in universe if not (exclude_negative and lab == negative_label)]
    tp = sum(counts[lab][0] for lab in pool)
    fp = sum(counts[lab][1] for lab in pool)
    fn = sum(counts[lab][2] for lab in pool)
    micro_p, micro_r, micro_f = _prf(tp, fp, fn)
    macro_f = sum(per_label[lab].f1 for lab in pool) / len(pool) if pool else 0.0
    return MetricReport(
        accuracy=accuracy,
        per_label=per_label,
        micro_precision=micro_p,
        micro_recall=micro_r,
        micro_f1=micro_f,
        macro_f1=macro_f,
        total=total,
    )


@dataclass(frozen=True)
class SplitPlan:
    train_domains: frozenset[str]
    dev_domain: str
    dev_fraction: float
    test_domains: frozenset[str]

    def __post_init__(self) -> None:
        overlap = self.train_domains & self.test_domains
        if overlap:
            raise ValueError(f"train and test domains overlap: {sorted(overlap)}")
        if self.dev_domain in self.train_domains:
            raise ValueError("development domain cannot also be a training domain")
        if not 0.0 <= self.dev_fraction <= 1.0:
            raise ValueError("dev_fraction must lie in [0, 1]")


def ood_split(corpus: Corpus, plan: SplitPlan, seed: int) -> tuple[Corpus, Corpus, Corpus]:
    """Domain-based train/dev/test partition with a seeded dev half."""
    by_domain: dict[str, list[Record]] = {}
    for rec in corpus:
        by_domain.setdefault(rec.domain or "", []).append(rec)
    wanted = set(plan.train_domains) | set(plan.test_domains) | {plan.dev_domain}
    for dom in sorted(wanted):
        if not by_domain.get(dom):
            raise ValueError(f"requested domain {dom!r} has no samples")
    dev_pool = sorted(by_domain[plan.dev_domain], key=lambda r: r.id)
    rng = random.Random(f"{seed}:ood:{plan.dev_domain}")
    rng.shuffle(dev_pool)
    n_dev = int(len(dev_pool) * plan.dev_fraction)
    dev_ids = {r.id for r in dev_pool[:n_dev]}
    train_records = [r for r in corpus if r.domain in plan.train_domains]
    dev_records = [r for r in corpus if r.id in dev_ids]
    test_records = [
        r for r in corpus if r.domain in plan.test_domains and r.id not in dev_ids
    ]
    return (
        corpus.with_records(train_records),
        corpus.with_records(dev_records),
        corpus.with_records(test_records),
    )


LABEL_MADE = "made_by"
LABEL_STORED = "located_in"
LABEL_NONE = "no_relation"

_E1_WORDS = ("wine", "cheese", "bread", "cloth", "paper", "glassware")
_E2_WORDS = ("winery", "factory", "bakery", "mill", "workshop", "market")
_VERBS = {LABEL_MADE: ("produced", "crafted", "manufactured"), LABEL_STORED: ("stored", "displayed", "kept")}
_PREPS = {LABEL_MADE: ("by", "through"), LABEL_STORED: ("in", "inside")}
_DECOY = "reportedly"


@dataclass
class SpuriousConfig:
    n_train: int = 2000
    n_test: int = 500
    confound_rate: float = 0.95
    wv_dim: int = 50

    def __post_init__(self) -> None:
        if not 0.0 <= self.confound_rate <= 1.0:
            raise ValueError("confound_rate must lie in [0, 1]")


@dataclass
class SpuriousBenchmark:
    train: Corpus
    test: Corpus
    vectors: WordVectors


def _template_sample(sid: str, label: str, e1: str, e2: str, verb: str, prep: str, decoy: bool) -> AnnotatedSample:
    words = ["the", e1, "was", verb, prep, "the", e2]
    pos = ["DT", "NN", "VBD", "VBN", "IN", "DT", "NN"]
    syn = [
        DepEdge(1, 0, "det", SYNTACTIC),
        DepEdge(3, 1, "nsubjpass", SYNTACTIC),
        DepEdge(3, 2, "auxpass", SYNTACTIC),
        DepEdge(ROOT, 3, "root", SYNTACTIC),
        DepEdge(3, 4, "prep", SYNTACTIC),
        DepEdge(4, 6, "pobj", SYNTACTIC),
        DepEdge(6, 5, "det", SYNTACTIC),
    ]
    # the semantic layer chains predicate and preposition between the
    # entities, so the path interior carries the whole causal pattern
    sem = [
        DepEdge(3, 1, "arg1", SEMANTIC),
        DepEdge(3, 4, "mod", SEMANTIC),
        DepEdge(4, 6, "arg2", SEMANTIC),
    ]
    if decoy:
        words.append(_DECOY)
        pos.append("RB")
        syn.append(DepEdge(3, 7, "advmod", SYNTACTIC))
        sem.append(DepEdge(3, 7, "mod", SEMANTIC))
    words.append(".")
    pos.append(".")
    syn.append(DepEdge(3, len(words) - 1, "punct", SYNTACTIC))
    tokens = tuple(Token(i, w, p) for i, (w, p) in enumerate(zip(words, pos)))
    entities = (EntityMention("m1", 1, 2, "e1"), EntityMention("m2", 6, 7, "e2"))
    return AnnotatedSample(
        id=sid,
        tokens=tokens,
        entities=entities,
        label=label,
        syn_edges=tuple(syn),
        sem_edges=tuple(sem),
        domain=None,
    )


def _benchmark_vectors(seed: int, dim: int, cluster_noise: float = 0.65) -> WordVectors:
    """Seeded vectors where the causal tokens live in tight clusters.

    Verbs of both labels share one cluster and prepositions another, so
    (a) cross-label path similarity clears the SemCo gate and (b) the
    label signal is a subtle within-cluster difference while the decoy
    token is a blatant isolated direction, which is what makes the decoy
    an attractive spurious feature for an undertrained model.
    """
    rng = _stable_rng(f"spurious-vectors:{seed}:{dim}")
    table: dict[str, np.ndarray] = {}

    def unit(v: np.ndarray) -> np.ndarray:
        return v / np.linalg.norm(v)

    verb_center = unit(rng.normal(size=dim))
    prep_center = unit(rng.normal(size=dim))
    vocab = ["the", "was", ".", _DECOY, *_E1_WORDS, *_E2_WORDS]
    for word in vocab:
        table[word] = unit(rng.normal(size=dim))
    # noise directions are re-normalized so cluster tightness does not
    # depend on the dimension: pairwise cosine is about 1/(1+noise^2)
    for verb in (*_VERBS[LABEL_MADE], *_VERBS[LABEL_STORED]):
        table[verb] = unit(verb_center + cluster_noise * unit(rng.normal(size=dim)))
    for prep in (*_PREPS[LABEL_MADE], *_PREPS[LABEL_STORED]):
        table[prep] = unit(prep_center + cluster_noise * unit(rng.normal(size=dim)))
    return WordVectors(dim=dim, table=table, oov_policy="zero_vector")


def spurious_benchmark(seed: int, cfg: SpuriousConfig | None = None) -> SpuriousBenchmark:
    """Templated corpus pair with an injected train-time confound.

    In training data the decoy token appears in exactly
    round(rate * n) of the made_by samples and round((1-rate) * n) of the
    located_in samples; the test set reverses the association (decoy
    present iff located_in).  Entities and the relation-bearing verb stay
    consistent across both sets.
    """
    cfg = cfg or SpuriousConfig()
    rng = random.Random(f"spurious:{seed}")
    labels = (LABEL_MADE, LABEL_STORED, LABEL_NONE)

    def build_set(prefix: str, n: int, decoy_rule) -> list[AnnotatedSample]:
        n_a = n // 2 + n % 2
        plan = [LABEL_MADE] * n_a + [LABEL_STORED] * (n - n_a)
        rng.shuffle(plan)
        decoy_flags = decoy_rule(plan)
        out = []
        for i, (label, decoy) in enumerate(zip(plan, decoy_flags)):
            out.append(
                _template_sample(
                    f"{prefix}-{i:04d}",
                    label,
                    rng.choice(_E1_WORDS),
                    rng.choice(_E2_WORDS),
                    rng.choice(_VERBS[label]),
                    rng.choice(_PREPS[label]),
                    decoy,
                )
            )
        return out

    def train_decoys(plan: list[str]) -> list[bool]:
        flags = [False] * len(plan)
        for label, rate in ((LABEL_MADE, cfg.confound_rate), (LABEL_STORED, 1.0 - cfg.confound_rate)):
            idx = [i for i, lab in enumerate(plan) if lab == label]
            rng.shuffle(idx)
            for i in idx[: round(rate * len(idx))]:
                flags[i] = True
        return flags

    def test_decoys(plan: list[str]) -> list[bool]:
        return [lab == LABEL_STORED for lab in plan]

    train_records = build_set(f"sp{seed}-train", cfg.n_train, train_decoys)
    test_records = build_set(f"sp{seed}-test", cfg.n_test, test_decoys)
    return SpuriousBenchmark(
        train=Corpus(labels, LABEL_NONE, list(train_records)),
        test=Corpus(labels, LABEL_NONE, list(test_records)),
        vectors=_benchmark_vectors(seed, cfg.wv_dim),
    )


@dataclass
class AblationConfig:
    synco: SynCoConfig = field(default_factory=SynCoConfig)
    semco: SemCoConfig = field(default_factory=SemCoConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    tags: TagEmbeddings = field(default_factory=TagEmbeddings)


def generate_cads(
    corpus: Corpus,
    generators: set[str],
    cfg: AblationConfig,
    predictor,
    wv: WordVectors,
) -> dict[str, list[Counterfactual]]:
    """Run the selected generators over every sample, in corpus order."""
    out: dict[str, list[Counterfactual]] = {}
    if "SynCo" in generators:
        out["SynCo"] = [
            cf
            for s in corpus.samples
            if (cf := generate_synco(s, corpus, cfg.synco, predictor, cfg.tags)) is not None
        ]
    if "SemCo" in generators:
        out["SemCo"] = [
            cf
            for s in corpus.samples
            if (cf := generate_semco(s, corpus, cfg.semco, predictor, wv)) is not None
        ]
    return out


def dedup_counterfactuals(cads: Sequence[Counterfactual]) -> list[Counterfactual]:
    """Drop later counterfactuals that repeat a (source, token sequence) pair."""
    seen: set[tuple[str, tuple[str, ...]]] = set()
    out = []
    for cf in cads:
        key = (cf.source_id, cf.surfaces())
        if key not in seen:
            seen.add(key)
            out.append(cf)
    return out


def ablation_run(
    train_corpus: Corpus,
    test_corpus: Corpus,
    wv: WordVectors,
    generators: set[str],
    cfg: AblationConfig | None = None,
) -> dict[str, MetricReport]:
    """Baseline-versus-augmented comparison table, computed sequentially."""
    cfg = cfg or AblationConfig()
    base = train(train_corpus, wv, cfg.train)
    predictor = LocalPredictor(base, wv)

    def evaluate(model) -> MetricReport:
        gold = [r.label for r in test_corpus]
        preds = [predict(model, r, wv)[0] for r in test_corpus]
        return score(gold, preds, test_corpus.negative_label or "", labels=test_corpus.labels or None)

    def retrain(cads: Sequence[Counterfactual]) -> MetricReport:
        augmented = train_corpus.with_records(list(train_corpus.records) + list(cads))
        return evaluate(train(augmented, wv, cfg.train))

    cads = generate_cads(train_corpus, generators, cfg, predictor, wv)
    rows: dict[str, MetricReport] = {"Ori": evaluate(base)}
    if "SynCo" in generators:
        rows["+SynCo"] = retrain(cads["SynCo"])
    if "SemCo" in generators:
        rows["+SemCo"] = retrain(cads["SemCo"])
    if {"SynCo", "SemCo"} <= generators:
        rows["+CoCo"] = retrain(dedup_counterfactuals(cads["SynCo"] + cads["SemCo"]))
    return rows
