"""Command-line orchestration: config handling, pipeline wiring, exit codes.

Exit codes: 0 success, 2 config error, 3 input error, 4 generation error,
5 classifier error.  The environment variable COCO_SEED overrides any
configured or flag-given seed.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .classify import (
    ClassifierError,
    HttpPredictor,
    LinearRcModel,
    LocalPredictor,
    TrainConfig,
    predict,
    save_model,
    train,
)
from .corpus import (
    Corpus,
    CorpusError,
    Counterfactual,
    SEMANTIC,
    SYNTACTIC,
    emit_corpus,
    load_corpus,
)
from .depgraph import CentralityProfile, build_graph
from .embed import OOV_POLICIES, TagEmbeddings, WordVectors, load_vectors
from .evalkit import (
    AblationConfig,
    SpuriousConfig,
    ablation_run,
    dedup_counterfactuals,
    score,
    spurious_benchmark,
)
from .semco import SemCoConfig, generate_semco
from .synco import GenerationError, SynCoConfig, generate_synco

log = logging.getLogger("coco")


class ConfigError(ValueError):
    """Unknown key, bad type, or out-of-range value in a pipeline config."""


_DEFAULTS: dict[str, object] = {
    "corpus": None,
    "test_corpus": None,
    "out_dir": "out",
    "seed": 0,
    "classifier": "builtin",
    "embeddings.path": None,
    "embeddings.dim": 300,
    "embeddings.oov_policy": "zero_vector",
    "embeddings.feature_mode": "embedding",
    "tags.dim": 30,
    "tags.seed": 13,
    "synco.tdt": 0.2,
    "synco.fst": 0.8,
    "synco.candidates": 3,
    "synco.strict_flip": False,
    "semco.sst": 0.6,
    "semco.candidates": 3,
    "semco.strict_flip": False,
    "train.lr0": 0.5,
    "train.lr_decay": 0.9,
    "train.l2": 0.002,
    "train.epochs": 30,
    "train.batch_size": 32,
}


@dataclass
class PipelineConfig:
    corpus: str | None
    test_corpus: str | None
    out_dir: str
    seed: int
    classifier: str
    embeddings_path: str | None
    embeddings_dim: int
    oov_policy: str
    feature_mode: str
    tags_dim: int
    tags_seed: int
    synco: SynCoConfig
    semco: SemCoConfig
    train: TrainConfig


def _flatten(obj: dict, prefix: str = "") -> dict[str, object]:
    """Accept both nested JSON objects and flat dotted keys."""
    out: dict[str, object] = {}
    for key, value in obj.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, f"{dotted}."))
        else:
            out[dotted] = value
    return out


def _check_range(key: str, value: object, ok: bool) -> None:
    if not ok:
        raise ConfigError(f"config key {key}: value {value!r} out of range")


def validate_config(source: dict | str | Path | None = None) -> PipelineConfig:
    """Apply defaults, reject unknown keys, and enforce documented ranges."""
    if source is None:
        raw: dict[str, object] = {}
    elif isinstance(source, dict):
        raw = _flatten(source)
    else:
        try:
            raw = _flatten(json.loads(Path(source).read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}: not valid JSON: {exc.msg}") from exc
    for key in raw:
        if key not in _DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
    merged = dict(_DEFAULTS)
    merged.update(raw)

    def num(key: str) -> float:
        v = merged[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"config key {key}: expected a number, got {v!r}")
        return float(v)

    def integer(key: str) -> int:
        v = merged[key]
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"config key {key}: expected an integer, got {v!r}")
        return v

    def flag(key: str) -> bool:
        v = merged[key]
        if not isinstance(v, bool):
            raise ConfigError(f"config key {key}: expected a boolean, got {v!r}")
        return v

    _check_range("synco.tdt", merged["synco.tdt"], num("synco.tdt") >= 0)
    _check_range("synco.fst", merged["synco.fst"], -1 <= num("synco.fst") <= 1)
    _check_range("semco.sst", merged["semco.sst"], -1 <= num("semco.sst") <= 1)
    _check_range("synco.candidates", merged["synco.candidates"], integer("synco.candidates") >= 1)
    _check_range("semco.candidates", merged["semco.candidates"], integer("semco.candidates") >= 1)
    _check_range("embeddings.dim", merged["embeddings.dim"], integer("embeddings.dim") >= 1)
    _check_range("tags.dim", merged["tags.dim"], integer("tags.dim") >= 1)
    _check_range("train.lr0", merged["train.lr0"], num("train.lr0") > 0)
    _check_range("train.lr_decay", merged["train.lr_decay"], 0 < num("train.lr_decay") <= 1)
    _check_range("train.l2", merged["train.l2"], num("train.l2") >= 0)
    _check_range("train.epochs", merged["train.epochs"], integer("train.epochs") >= 0)
    _check_range("train.batch_size", merged["train.batch_size"], integer("train.batch_size") >= 1)
    if merged["embeddings.oov_policy"] not in OOV_POLICIES:
        raise ConfigError(f"config key embeddings.oov_policy: {merged['embeddings.oov_policy']!r}")
    if merged["embeddings.feature_mode"] not in ("embedding", "one_hot"):
        raise ConfigError(f"config key embeddings.feature_mode: {merged['embeddings.feature_mode']!r}")
    classifier = str(merged["classifier"])
    if not _valid_classifier(classifier):
        raise ConfigError(f"config key classifier: expected 'builtin' or an http URL, got {classifier!r}")

    seed = resolve_seed(integer("seed"))
    return PipelineConfig(
        corpus=merged["corpus"],
        test_corpus=merged["test_corpus"],
        out_dir=str(merged["out_dir"]),
        seed=seed,
        classifier=str(classifier),
        embeddings_path=merged["embeddings.path"],
        embeddings_dim=integer("embeddings.dim"),
        oov_policy=str(merged["embeddings.oov_policy"]),
        feature_mode=str(merged["embeddings.feature_mode"]),
        tags_dim=integer("tags.dim"),
        tags_seed=integer("tags.seed"),
        synco=SynCoConfig(
            tdt=num("synco.tdt"),
            fst=num("synco.fst"),
            candidates_per_sample=integer("synco.candidates"),
            seed=seed,
            strict_flip=flag("synco.strict_flip"),
        ),
        semco=SemCoConfig(
            sst=num("semco.sst"),
            candidates_per_sample=integer("semco.candidates"),
            seed=seed,
            strict_flip=flag("semco.strict_flip"),
        ),
        train=TrainConfig(
            lr0=num("train.lr0"),
            lr_decay=num("train.lr_decay"),
            l2=num("train.l2"),
            epochs=integer("train.epochs"),
            batch_size=integer("train.batch_size"),
            seed=seed,
        ),
    )


def _valid_classifier(value: str) -> bool:
    return value == "builtin" or value.startswith("http://") or value.startswith("https://")


def resolve_seed(seed: int) -> int:
    env = os.environ.get("COCO_SEED")
    if env is None:
        return seed
    try:
        return int(env)
    except ValueError as exc:
        raise ConfigError(f"COCO_SEED must be an integer, got {env!r}") from exc


def _load_word_vectors(path: str | None, dim: int, oov_policy: str) -> WordVectors:
    if path is None:
        if oov_policy == "zero_vector":
            log.warning(
                "no embeddings file configured and OOV policy is zero_vector; "
                "all features will be zero and every similarity gate will reject"
            )
        return WordVectors(dim=dim, table={}, oov_policy=oov_policy)
    return load_vectors(path, dim=dim, oov_policy=oov_policy)


def _zero_model(labels: tuple[str, ...], wv: WordVectors) -> LinearRcModel:
    return LinearRcModel(
        labels=labels,
        weights=np.zeros((len(labels), 3 * wv.dim)),
        bias=np.zeros(len(labels)),
        wv_dim=wv.dim,
    )


def _train_or_zero(corpus: Corpus, wv: WordVectors, cfg: TrainConfig) -> LinearRcModel:
    if not corpus.records:
        return _zero_model(corpus.labels, wv)
    return train(corpus, wv, cfg)


def _make_predictor(classifier: str, model: LinearRcModel, wv: WordVectors, labels):
    if classifier == "builtin":
        return LocalPredictor(model, wv)
    return HttpPredictor(classifier, labels=labels)


def _generate_all(
    corpus: Corpus,
    synco_cfg: SynCoConfig,
    semco_cfg: SemCoConfig,
    predictor,
    tags: TagEmbeddings,
    wv: WordVectors,
    methods: Sequence[str] = ("SynCo", "SemCo"),
) -> list[Counterfactual]:
    """Union of generator outputs, de-duplicated and ordered by source id."""
    cads: list[Counterfactual] = []
    for method in methods:
        for sample in corpus.samples:
            try:
                if method == "SynCo":
                    cf = generate_synco(sample, corpus, synco_cfg, predictor, tags)
                else:
                    cf = generate_semco(sample, corpus, semco_cfg, predictor, wv)
            except GenerationError as exc:
                log.warning("sample %s left unaugmented: %s", sample.id, exc)
                continue
            if cf is not None:
                cads.append(cf)
    cads = dedup_counterfactuals(cads)
    cads.sort(key=lambda cf: cf.source_id)
    return cads


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage}: {cause}")
        self.stage = stage
        self.cause = cause


def run_pipeline(cfg: PipelineConfig) -> dict[str, Path]:
    """ingest -> generate -> augment -> train -> evaluate, artifacts on disk.

    Identical config and inputs reproduce byte-identical artifacts; on any
    stage failure the partial artifacts are removed.
    """
    if cfg.corpus is None:
        raise ConfigError("config key corpus: a corpus path is required")
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts = {
        "cad": out_dir / "cad.jsonl",
        "augmented": out_dir / "augmented.jsonl",
        "model": out_dir / "model.bin",
        "report": out_dir / "report.json",
    }
    written: list[Path] = []
    stage = "input"
    try:
        corpus = load_corpus(cfg.corpus)
        test = load_corpus(cfg.test_corpus) if cfg.test_corpus else corpus

        stage = "classifier"
        wv = _load_word_vectors(cfg.embeddings_path, cfg.embeddings_dim, cfg.oov_policy)
        tags = TagEmbeddings(dim=cfg.tags_dim, seed=cfg.tags_seed)
        verifier = _train_or_zero(corpus, wv, cfg.train)
        predictor = _make_predictor(cfg.classifier, verifier, wv, corpus.labels)

        stage = "generation"
        cads = _generate_all(corpus, cfg.synco, cfg.semco, predictor, tags, wv)
        emit_corpus(corpus.with_records(cads), artifacts["cad"])
        written.append(artifacts["cad"])

        stage = "augment"
        augmented = corpus.with_records(list(corpus.records) + cads)
        emit_corpus(augmented, artifacts["augmented"])
        written.append(artifacts["augmented"])

        stage = "train"
        final = _train_or_zero(augmented, wv, cfg.train)
        save_model(final, artifacts["model"])
        written.append(artifacts["model"])

        stage = "evaluate"
        gold = [r.label for r in test]
        preds = [predict(final, r, wv)[0] for r in test] if len(final.labels) else []
        report = score(gold, preds, test.negative_label or "", labels=test.labels or None)
        row = {"config": "pipeline", **report.to_dict()}
        artifacts["report"].write_text(
            json.dumps({"rows": [row]}, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        written.append(artifacts["report"])
    except Exception as exc:
        for path in written:
            path.unlink(missing_ok=True)
        raise StageError(stage, exc) from exc
    return artifacts


def _add_embedding_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--embeddings", help="word-vector text file")
    p.add_argument("--dim", type=int, default=300, help="word-vector dimension")
    p.add_argument("--oov-policy", choices=OOV_POLICIES, default="zero_vector")


def _vectors_from_args(args: argparse.Namespace) -> WordVectors:
    return _load_word_vectors(args.embeddings, args.dim, args.oov_policy)


def _cmd_ingest_validate(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    n_cf = sum(isinstance(r, Counterfactual) for r in corpus)
    print(
        f"ok: {len(corpus)} records ({len(corpus) - n_cf} samples, {n_cf} counterfactuals), "
        f"{len(corpus.labels)} labels, negative={corpus.negative_label!r}"
    )
    return 0


def _cmd_centrality(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    layer = SYNTACTIC if args.layer == "syn" else SEMANTIC
    lines = []
    for sample in corpus.samples:
        profile = CentralityProfile.compute(build_graph(sample, layer), mode=args.agg)
        lines.append(
            json.dumps(
                {
                    "id": sample.id,
                    "bc": list(profile.bc),
                    "cc": list(profile.cc),
                    "dc": list(profile.dc),
                    "agg": list(profile.agg),
                },
                separators=(",", ":"),
            )
        )
    text = "".join(line + "\n" for line in lines)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_train_classifier(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    wv = _vectors_from_args(args)
    cfg = TrainConfig(
        lr0=args.lr0,
        lr_decay=args.lr_decay,
        l2=args.l2,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=resolve_seed(args.seed),
    )
    model = train(corpus, wv, cfg)
    save_model(model, args.output)
    log.info("trained on %d records, %d labels -> %s", len(corpus), len(model.labels), args.output)
    return 0


def _generator_command(args: argparse.Namespace, methods: Sequence[str]) -> int:
    corpus = load_corpus(args.corpus)
    wv = _vectors_from_args(args)
    tags = TagEmbeddings(dim=args.tags_dim, seed=args.tags_seed)
    seed = resolve_seed(args.seed)
    synco_cfg = SynCoConfig(
        tdt=args.tdt if hasattr(args, "tdt") else 0.2,
        fst=args.fst if hasattr(args, "fst") else 0.8,
        candidates_per_sample=args.candidates,
        seed=seed,
        strict_flip=args.strict_flip,
    )
    semco_cfg = SemCoConfig(
        sst=args.sst if hasattr(args, "sst") else 0.6,
        candidates_per_sample=args.candidates,
        seed=seed,
        strict_flip=args.strict_flip,
    )
    if not _valid_classifier(args.classifier):
        raise ConfigError(f"--classifier: expected 'builtin' or an http URL, got {args.classifier!r}")
    if args.classifier == "builtin":
        model = _train_or_zero(corpus, wv, TrainConfig(seed=seed))
        predictor = LocalPredictor(model, wv)
    else:
        predictor = HttpPredictor(args.classifier, labels=corpus.labels or None)
    cads = _generate_all(corpus, synco_cfg, semco_cfg, predictor, tags, wv, methods=methods)
    emit_corpus(corpus.with_records(cads), args.output)
    log.info("%d counterfactuals -> %s", len(cads), args.output)
    return 0


def _cmd_augment(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    cad = load_corpus(args.cad)
    emit_corpus(corpus.with_records(list(corpus.records) + list(cad.records)), args.output)
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    gold_corpus = load_corpus(args.gold)
    predictions: dict[str, str] = {}
    with Path(args.pred).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "format" in obj:
                continue
            predictions[obj["id"]] = obj.get("predicted_label") or obj["label"]
    gold, pred = [], []
    for rec in gold_corpus:
        if rec.id not in predictions:
            raise CorpusError(f"prediction file has no entry for record {rec.id}")
        gold.append(rec.label)
        pred.append(predictions[rec.id])
    report = score(gold, pred, args.negative_label, labels=gold_corpus.labels or None)
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_robustness(args: argparse.Namespace) -> int:
    seed = resolve_seed(args.seed)
    bench = spurious_benchmark(
        seed,
        SpuriousConfig(
            n_train=args.train_size, n_test=args.test_size, confound_rate=args.confound_rate
        ),
    )
    cfg = AblationConfig(
        synco=SynCoConfig(seed=seed),
        semco=SemCoConfig(seed=seed),
        train=TrainConfig(epochs=args.epochs, seed=seed),
    )
    rows = ablation_run(bench.train, bench.test, bench.vectors, {"SynCo", "SemCo"}, cfg)
    payload = {
        "rows": [
            {
                "config": name,
                "accuracy": rep.accuracy,
                "micro_f1": rep.micro_f1,
                "macro_f1": rep.macro_f1,
            }
            for name, rep in rows.items()
        ]
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    overrides: dict[str, object] = {}
    if args.config:
        overrides = json.loads(Path(args.config).read_text(encoding="utf-8"))
    flat = _flatten(overrides) if isinstance(overrides, dict) else {}
    for key, value in (
        ("corpus", args.corpus),
        ("test_corpus", args.test_corpus),
        ("out_dir", args.out_dir),
        ("seed", args.seed),
    ):
        if value is not None:
            flat[key] = value
    cfg = validate_config(flat)
    artifacts = run_pipeline(cfg)
    for name, path in artifacts.items():
        log.info("%s: %s", name, path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coco", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-validate", help="load a corpus and report basic statistics")
    p.add_argument("corpus")
    p.set_defaults(func=_cmd_ingest_validate)

    p = sub.add_parser("centrality", help="per-token centrality values as JSONL")
    p.add_argument("corpus")
    p.add_argument("--layer", choices=("syn", "sem"), default="syn")
    p.add_argument("--agg", choices=("mean", "sum"), default="mean")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_centrality)

    p = sub.add_parser("train-classifier", help="train the built-in linear model")
    p.add_argument("corpus")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--lr0", type=float, default=0.5)
    p.add_argument("--lr-decay", type=float, default=0.9)
    p.add_argument("--l2", type=float, default=0.002)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    _add_embedding_flags(p)
    p.set_defaults(func=_cmd_train_classifier)

    def generator_parser(name: str, help_text: str) -> argparse.ArgumentParser:
        gp = sub.add_parser(name, help=help_text)
        gp.add_argument("corpus")
        gp.add_argument("-o", "--output", required=True)
        gp.add_argument("--candidates", type=int, default=3)
        gp.add_argument("--seed", type=int, default=0)
        gp.add_argument("--classifier", default="builtin", help="'builtin' or an http URL")
        gp.add_argument("--strict-flip", action="store_true")
        gp.add_argument("--tags-dim", type=int, default=30)
        gp.add_argument("--tags-seed", type=int, default=13)
        _add_embedding_flags(gp)
        return gp

    p = generator_parser("synco", "generate syntactic counterfactuals")
    p.add_argument("--tdt", type=float, default=0.2)
    p.add_argument("--fst", type=float, default=0.8)
    p.set_defaults(func=lambda a: _generator_command(a, ("SynCo",)))

    p = generator_parser("semco", "generate semantic counterfactuals")
    p.add_argument("--sst", type=float, default=0.6)
    p.set_defaults(func=lambda a: _generator_command(a, ("SemCo",)))

    p = generator_parser("generate", "run SynCo then SemCo and union the outputs")
    p.add_argument("--tdt", type=float, default=0.2)
    p.add_argument("--fst", type=float, default=0.8)
    p.add_argument("--sst", type=float, default=0.6)
    p.set_defaults(func=lambda a: _generator_command(a, ("SynCo", "SemCo")))

    p = sub.add_parser("augment", help="concatenate a corpus with generated counterfactuals")
    p.add_argument("--corpus", required=True)
    p.add_argument("--cad", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("evaluate", help="score predictions against a gold corpus")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--negative-label", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("robustness", help="spurious-correlation benchmark with ablation rows")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--confound-rate", type=float, default=0.95)
    p.add_argument("--train-size", type=int, default=2000)
    p.add_argument("--test-size", type=int, default=500)
    p.add_argument("--epochs", type=int, default=12)
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_robustness)

    p = sub.add_parser("run", help="full pipeline from a JSON config file")
    p.add_argument("--config")
    p.add_argument("--corpus")
    p.add_argument("--test-corpus")
    p.add_argument("--out-dir")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_run)

    return parser


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, StageError):
        return _exit_code(exc.cause)
    if isinstance(exc, ConfigError):
        return 2
    if isinstance(exc, (CorpusError, FileNotFoundError, json.JSONDecodeError)):
        return 3
    if isinstance(exc, GenerationError):
        return 4
    if isinstance(exc, ClassifierError):
        return 5
    if isinstance(exc, ValueError):
        return 3
    raise exc


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - map known failures onto exit codes
        code = _exit_code(exc)
        print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    raise SystemExit(main())
