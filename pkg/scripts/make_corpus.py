#!/usr/bin/env python3
"""Write a synthetic rewrite corpus: a source file plus an aligned target file
with a controlled edit rate, ready for `aggdec --scorer scripted`."""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

import numpy as np

from aggdec import detokenize
from aggdec.synthetic import rewrite_pairs, synthetic_vocab


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sentences", type=int, default=200)
    parser.add_argument("--words", type=int, default=150, help="vocabulary size")
    parser.add_argument("--min-len", type=int, default=8)
    parser.add_argument("--max-len", type=int, default=30)
    parser.add_argument("--edit-rate", type=float, nargs=2, default=(0.0, 0.3),
                        metavar=("LO", "HI"))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--source", default="source.txt")
    parser.add_argument("--target", default="target.txt")
    args = parser.parse_args()

    vocab = synthetic_vocab(args.words)
    rng = np.random.default_rng(args.seed)
    pairs = rewrite_pairs(
        rng, args.sentences, vocab,
        min_len=args.min_len, max_len=args.max_len,
        edit_rate=tuple(args.edit_rate),
    )
    Path(args.source).write_text(
        "".join(detokenize(src, vocab) + "\n" for src, _ in pairs), encoding="utf-8"
    )
    Path(args.target).write_text(
        "".join(detokenize(tgt, vocab) + "\n" for _, tgt in pairs), encoding="utf-8"
    )
    print(f"wrote {args.sentences} sentence pairs to {args.source} / {args.target}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
