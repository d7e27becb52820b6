#!/usr/bin/env python3
"""Multi-seed spurious-correlation experiment.

Trains the built-in classifier on the confounded training set and on the
counterfactually augmented one, then compares anti-confound test accuracy
seed by seed.  Writes a JSON report and prints a summary table.
"""

import argparse
import json
from pathlib import Path

from coco.classify import LocalPredictor, TrainConfig, predict, train
from coco.evalkit import (
    AblationConfig,
    SpuriousConfig,
    dedup_counterfactuals,
    generate_cads,
    score,
    spurious_benchmark,
)
from coco.semco import SemCoConfig
from coco.synco import SynCoConfig


def accuracy(model, test, wv):
    gold = [r.label for r in test]
    preds = [predict(model, r, wv)[0] for r in test]
    return score(gold, preds, test.negative_label or "").accuracy


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--train-size", type=int, default=2000)
    ap.add_argument("--test-size", type=int, default=500)
    ap.add_argument("--confound-rate", type=float, default=0.95)
    ap.add_argument("--epochs", type=int, default=12)
    ap.add_argument("-o", "--output", default="robustness_report.json")
    args = ap.parse_args()

    rows = []
    for seed in range(args.seeds):
        bench = spurious_benchmark(
            seed,
            SpuriousConfig(
                n_train=args.train_size,
                n_test=args.test_size,
                confound_rate=args.confound_rate,
            ),
        )
        tcfg = TrainConfig(epochs=args.epochs, seed=seed)
        cfg = AblationConfig(
            synco=SynCoConfig(seed=seed), semco=SemCoConfig(seed=seed), train=tcfg
        )
        base = train(bench.train, bench.vectors, tcfg)
        predictor = LocalPredictor(base, bench.vectors)
        cads = generate_cads(bench.train, {"SynCo", "SemCo"}, cfg, predictor, bench.vectors)
        union = dedup_counterfactuals(cads["SynCo"] + cads["SemCo"])
        augmented = bench.train.with_records(list(bench.train.records) + union)
        cad_model = train(augmented, bench.vectors, tcfg)
        row = {
            "seed": seed,
            "ori_accuracy": accuracy(base, bench.test, bench.vectors),
            "cad_accuracy": accuracy(cad_model, bench.test, bench.vectors),
            "synco_count": len(cads["SynCo"]),
            "semco_count": len(cads["SemCo"]),
            "cad_count": len(union),
        }
        rows.append(row)
        print(
            f"seed {seed}: ori={row['ori_accuracy']:.3f} cad={row['cad_accuracy']:.3f} "
            f"gain={row['cad_accuracy'] - row['ori_accuracy']:+.3f} "
            f"(syn {row['synco_count']}, sem {row['semco_count']})"
        )

    gains = [r["cad_accuracy"] - r["ori_accuracy"] for r in rows]
    summary = {
        "wins": sum(g >= 0 for g in gains),
        "seeds": args.seeds,
        "mean_gain": sum(gains) / len(gains),
    }
    print(f"wins: {summary['wins']}/{args.seeds}  mean gain: {summary['mean_gain']:+.4f}")
    Path(args.output).write_text(
        json.dumps({"rows": rows, "summary": summary}, indent=2) + "\n", encoding="utf-8"
    )
    print(f"report -> {args.output}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
