"""coco-adapter command line: convert raw data into coco-corpus JSONL."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from .backends import BackendError, semantic_backend, syntactic_backend
from .convert import convert_dataset, validate_with_primary, write_corpus
from .raw import RawError, load_raw

log = logging.getLogger("coco_adapter")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coco-adapter", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("convert", help="raw JSONL -> coco-corpus JSONL")
    p.add_argument("--in", dest="input", required=True, help="raw JSONL file")
    p.add_argument("--out", dest="output", required=True, help="corpus JSONL to write")
    p.add_argument("--syn-backend", default="heuristic", help="heuristic or corenlp:<url>")
    p.add_argument("--sem-backend", default="heuristic", help="heuristic or collapse")
    p.add_argument("--negative-label", default="Other", help="used when the raw file has no header")
    p.add_argument("--shard-index", type=int, default=0)
    p.add_argument("--shard-count", type=int, default=1)
    p.add_argument(
        "--no-validate",
        action="store_true",
        help="skip the final pass through the primary loader",
    )
    p.set_defaults(func=_cmd_convert)
    return parser


def _cmd_convert(args: argparse.Namespace) -> int:
    if not 0 <= args.shard_index < args.shard_count:
        print("error: shard index out of range", file=sys.stderr)
        return 2
    dataset = load_raw(args.input)
    syn = syntactic_backend(args.syn_backend)
    sem = semantic_backend(args.sem_backend)
    records, header, summary = convert_dataset(
        dataset,
        syn,
        sem,
        negative_label=args.negative_label,
        shard_index=args.shard_index,
        shard_count=args.shard_count,
    )
    write_corpus(records, header, args.output)
    if not args.no_validate:
        ok, output = validate_with_primary(args.output)
        if not ok:
            print(f"error: emitted corpus failed primary validation: {output}", file=sys.stderr)
            return 1
        log.info("primary validation: %s", output)
    print(
        f"converted {summary.converted} sample(s), skipped {len(summary.skipped)} -> {args.output}"
    )
    for sid, reason in summary.skipped:
        print(f"  skipped {sid}: {reason}")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RawError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except BackendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
