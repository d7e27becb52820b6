"""Acceptance suite: one test per criterion, each at its stated tolerance.

A pass/fail line per criterion is printed in the pytest terminal summary
(see conftest.py).
"""

import random
import time

import numpy as np
import pytest

import helpers
from helpers import criterion
from coco.classify import (
    LocalPredictor,
    ReferenceStub,
    TrainConfig,
    external_predict,
    loss_and_grad,
    predict,
    train,
)
from coco.cli import validate_config, run_pipeline
from coco.corpus import SYNTACTIC, EntityMention, emit_corpus, load_corpus
from coco.depgraph import (
    CentralityProfile,
    betweenness_centrality,
    build_graph,
    closeness_centrality,
    degree_centrality,
    shortest_dependency_path,
    topological_distance,
)
from coco.embed import TagEmbeddings, WordVectors
from coco.evalkit import (
    AblationConfig,
    SpuriousConfig,
    dedup_counterfactuals,
    generate_cads,
    score,
    spurious_benchmark,
)
from coco.semco import SemCoConfig, generate_semco
from coco.synco import SynCoConfig, generate_synco, pair_entities, substitute_neighbors

TAGS = TagEmbeddings(dim=30, seed=13)


@criterion("centrality oracle suite (200 connected graphs, 1e-9, <10s)")
def test_centrality_oracle_suite():
    rng = random.Random("acceptance-centrality")
    start = time.monotonic()
    for i in range(200):
        n = rng.randint(2, 10)
        g = helpers.random_connected_graph(rng, n)
        assert betweenness_centrality(g) == pytest.approx(helpers.oracle_betweenness(g), abs=1e-9)
        assert closeness_centrality(g) == pytest.approx(helpers.oracle_closeness(g), abs=1e-9)
        assert degree_centrality(g) == pytest.approx(helpers.oracle_degree(g), abs=1e-9)
    elapsed = time.monotonic() - start
    assert elapsed < 10.0, f"centrality suite took {elapsed:.1f}s"


@criterion("SDP oracle suite (200 graphs, BFS-oracle length + replay, <5s)")
def test_sdp_oracle_suite():
    rng = random.Random("acceptance-sdp")
    start = time.monotonic()
    for i in range(200):
        n = rng.randint(3, 10)
        g = helpers.random_graph(rng, n, edge_prob=0.3)
        s1 = rng.randrange(n)
        s2 = rng.randrange(n)
        while s2 == s1:
            s2 = rng.randrange(n)
        m1 = EntityMention("m1", s1, s1 + 1, "e1")
        m2 = EntityMention("m2", s2, s2 + 1, "e2")
        res = shortest_dependency_path(g, m1, m2)
        oracle = helpers.oracle_sdp(g, m1, m2)
        if oracle is None:
            assert not res.found
        else:
            assert res.found
            assert len(res.path) - 1 == oracle[0]
        replay = shortest_dependency_path(g, m1, m2)
        assert replay == res
    elapsed = time.monotonic() - start
    assert elapsed < 5.0, f"SDP suite took {elapsed:.1f}s"


@criterion("worked examples: TD arithmetic and the neighbor-substitution fixture")
def test_worked_example_fixtures():
    # reference distance arithmetic
    assert topological_distance(1.24, 1.17) == pytest.approx(0.07)
    assert topological_distance(0.56, 1.24) == pytest.approx(0.68)
    assert topological_distance(0.56, 1.24) > 0.2  # rejected at the 0.2 threshold
    assert topological_distance(1.24, 1.17) < 0.2  # accepted

    corpus = helpers.synco_fixture_corpus()
    original, candidate = corpus.records
    g_o = build_graph(original, SYNTACTIC)
    g_c = build_graph(candidate, SYNTACTIC)

    # neighbor selection with reference distances fed in directly:
    # drank at TD 0.57 from the donor, produced at TD 0.50
    profile_o = CentralityProfile(
        bc=(0,) * 6, cc=(0,) * 6, dc=(0,) * 6, agg=(0.10, 0.43, 0.20, 0.50, 0.30, 0.20)
    )
    profile_c = CentralityProfile(
        bc=(0,) * 6, cc=(0,) * 6, dc=(0,) * 6, agg=(0.20, 1.00, 0.30, 0.20, 0.40, 0.20)
    )
    pair = (original.entity("e1"), candidate.entity("e1"), 0.07)
    fs, subs = substitute_neighbors(
        original, candidate, pair, g_o, g_c, profile_o, profile_c, TAGS, fst=0.8
    )
    assert topological_distance(profile_o.agg[1], profile_c.agg[1]) == pytest.approx(0.57)
    assert topological_distance(profile_o.agg[3], profile_c.agg[1]) == pytest.approx(0.50)
    assert [(s.index, s.old, s.new) for s in subs] == [(3, "produced", "bought")]

    # full pipeline on computed centralities with a flipping stub classifier
    cf = generate_synco(original, corpus, SynCoConfig(seed=0), helpers.FlipStub(), TAGS)
    assert cf is not None
    assert cf.surfaces() == ("They", "drank", "wine", "bought", "from", "wineries")
    assert cf.label == "Entity-Origin"


@criterion("entity invariance: 500-sample fuzz, both generators, zero violations")
def test_entity_invariance_fuzz():
    corpus = helpers.fuzz_corpus(500, 500)
    stub = helpers.FlipStub()
    synco_cfg = SynCoConfig(tdt=1.0, fst=-1.0, seed=17)
    semco_cfg = SemCoConfig(sst=-1.0, seed=17)
    wv = WordVectors(dim=10, table={}, oov_policy="hashed_random")
    emitted = 0
    violations = 0
    for sample in corpus.samples:
        for cf in (
            generate_synco(sample, corpus, synco_cfg, stub, TAGS),
            generate_semco(sample, corpus, semco_cfg, stub, wv),
        ):
            if cf is None:
                continue
            emitted += 1
            for role in ("e1", "e2"):
                src = sample.entity(role)
                dst = cf.entity(role)
                src_surf = [t.surface for t in sample.tokens[src.start : src.end]]
                dst_surf = [t.surface for t in cf.tokens[dst.start : dst.end]]
                if src_surf != dst_surf:
                    violations += 1
            if cf.label == sample.label or cf.label not in corpus.labels:
                violations += 1
    assert emitted > 100, f"only {emitted} counterfactuals emitted; fuzz too weak"
    assert violations == 0


@criterion("verification soundness: re-checking emitted flips reproduces them")
def test_verification_soundness():
    bench = spurious_benchmark(0, SpuriousConfig(n_train=300, n_test=50))
    tcfg = TrainConfig(epochs=8, seed=0)
    model = train(bench.train, bench.vectors, tcfg)
    predictor = LocalPredictor(model, bench.vectors)
    cfg = AblationConfig(
        synco=SynCoConfig(seed=0), semco=SemCoConfig(seed=0), train=tcfg
    )
    cads = generate_cads(bench.train, {"SynCo", "SemCo"}, cfg, predictor, bench.vectors)
    union = dedup_counterfactuals(cads["SynCo"] + cads["SemCo"])
    assert union, "no counterfactuals to re-check"
    for cf in union:
        label, _ = predict(model, cf, bench.vectors)
        assert label == cf.predicted_label
        assert label != bench.train.negative_label  # sanity: a real prediction
        source_label = next(s.label for s in bench.train if s.id == cf.source_id)
        assert label != source_label
        assert cf.verified


@criterion("determinism: byte-identical cad.jsonl, model and report across reruns")
def test_pipeline_determinism(tmp_path):
    corpus_path = tmp_path / "corpus.jsonl"
    emit_corpus(helpers.fuzz_corpus(77, 40), corpus_path)
    cfg = validate_config(
        {
            "corpus": str(corpus_path),
            "out_dir": str(tmp_path / "out"),
            "seed": 11,
            "embeddings": {"dim": 12, "oov_policy": "hashed_random"},
            "synco": {"tdt": 0.8, "fst": -1.0},
            "semco": {"sst": -0.5},
            "train": {"epochs": 4},
        }
    )
    artifacts = run_pipeline(cfg)
    first = {name: path.read_bytes() for name, path in artifacts.items()}
    artifacts = run_pipeline(cfg)
    for name in ("cad", "model", "report"):
        assert artifacts[name].read_bytes() == first[name], f"{name} differs between runs"
    cad = load_corpus(artifacts["cad"])
    assert len(cad) > 0, "determinism check should cover a non-empty CAD file"


@criterion("gradient check: analytic vs central differences, 1e-5 relative, 50 instances")
def test_gradient_check():
    # relative error is measured norm-wise over the whole gradient:
    # central differences carry ~1e-10 absolute roundoff per component, so a
    # pointwise ratio is undefined near zero crossings while any genuine
    # gradient bug shows up at 1e-2 or worse in the norm
    rng = np.random.default_rng(123)
    for _ in range(50):
        num_labels = int(rng.integers(2, 6))
        dim = int(rng.integers(2, 8))
        batch = int(rng.integers(1, 7))
        l2 = float(rng.uniform(0, 0.05))
        w = rng.normal(size=(num_labels, dim))
        b = rng.normal(size=num_labels)
        x = rng.normal(size=(batch, dim))
        y = rng.integers(0, num_labels, size=batch)
        _, grad_w, grad_b = loss_and_grad(w, b, x, y, l2=l2)
        analytic = np.concatenate([grad_w.ravel(), grad_b.ravel()])
        eps = 1e-6
        numeric = np.empty_like(analytic)
        pos = 0
        for arr in (w, b):
            flat = arr.ravel()
            for idx in range(flat.size):
                orig = flat[idx]
                flat[idx] = orig + eps
                up, _, _ = loss_and_grad(w, b, x, y, l2=l2)
                flat[idx] = orig - eps
                down, _, _ = loss_and_grad(w, b, x, y, l2=l2)
                flat[idx] = orig
                numeric[pos] = (up - down) / (2 * eps)
                pos += 1
        rel = np.linalg.norm(numeric - analytic) / max(np.linalg.norm(numeric), 1e-12)
        assert rel < 1e-5, f"gradient relative error {rel:.2e}"


@criterion("metric oracle: exact match with naive confusion-matrix scoring, 100 instances")
def test_metric_oracle():
    from test_evalkit import naive_oracle

    rng = random.Random("acceptance-metrics")
    for _ in range(100):
        labels = tuple(f"l{i}" for i in range(rng.randint(2, 5)))
        negative = labels[-1]
        n = rng.randint(1, 50)
        gold = [rng.choice(labels) for _ in range(n)]
        pred = [rng.choice(labels) for _ in range(n)]
        rep = score(gold, pred, negative, labels=labels)
        acc, mp, mr, mf, maf, table = naive_oracle(gold, pred, negative, sorted(labels))
        assert (rep.accuracy, rep.micro_precision, rep.micro_recall, rep.micro_f1, rep.macro_f1) == (
            acc, mp, mr, mf, maf,
        )
        for lab in labels:
            got = rep.per_label[lab]
            assert (got.precision, got.recall, got.f1) == table[lab][3:6]


@criterion("robustness direction: CAD >= Ori in >=8/10 seeds, mean gain > 0, <2min")
def test_robustness_direction():
    start = time.monotonic()

    def accuracy(model, test, wv):
        gold = [r.label for r in test]
        preds = [predict(model, r, wv)[0] for r in test]
        return score(gold, preds, test.negative_label or "").accuracy

    improvements = []
    for seed in range(10):
        bench = spurious_benchmark(
            seed, SpuriousConfig(n_train=2000, n_test=500, confound_rate=0.95)
        )
        tcfg = TrainConfig(epochs=12, seed=seed)
        cfg = AblationConfig(
            synco=SynCoConfig(seed=seed), semco=SemCoConfig(seed=seed), train=tcfg
        )
        base = train(bench.train, bench.vectors, tcfg)
        predictor = LocalPredictor(base, bench.vectors)
        cads = generate_cads(bench.train, {"SynCo", "SemCo"}, cfg, predictor, bench.vectors)
        union = dedup_counterfactuals(cads["SynCo"] + cads["SemCo"])
        augmented = bench.train.with_records(list(bench.train.records) + union)
        cad_model = train(augmented, bench.vectors, tcfg)
        improvements.append(
            accuracy(cad_model, bench.test, bench.vectors)
            - accuracy(base, bench.test, bench.vectors)
        )
    elapsed = time.monotonic() - start
    wins = sum(d >= 0 for d in improvements)
    mean_gain = sum(improvements) / len(improvements)
    assert wins >= 8, f"CAD helped in only {wins}/10 seeds: {improvements}"
    assert mean_gain > 0, f"mean improvement {mean_gain:+.4f} not positive"
    assert elapsed < 120.0, f"robustness run took {elapsed:.0f}s"


@criterion("loopback equivalence: external_predict equals local predict on 100 samples")
def test_loopback_equivalence():
    corpus = helpers.fuzz_corpus(9, 100)
    wv = WordVectors(dim=10, table={}, oov_policy="hashed_random")
    model = train(corpus, wv, TrainConfig(epochs=6, seed=4))
    local = LocalPredictor(model, wv).predict(corpus.records)
    with ReferenceStub(model, wv) as stub:
        remote = external_predict(stub.url, corpus.records, labels=model.labels)
    assert len(remote) == 100
    assert [lab for lab, _ in remote] == [lab for lab, _ in local]
    for (_, a), (_, b) in zip(remote, local):
        assert a == pytest.approx(b, abs=1e-12)
