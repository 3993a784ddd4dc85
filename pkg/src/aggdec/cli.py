"""Command line: decode corpora, check greedy equivalence, and run benchmarks.

Subcommands: decode, check, bench, sweep-lmax, sweep-depth. Corpora are UTF-8
text, one sentence per line. Outputs are deterministic for a fixed (config,
seed, corpus) triple, except for wall-clock columns.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .core import (
    AGGRESSIVE,
    DecodeConfig,
    Vocab,
    build_vocab,
    corpus_to_ids,
    detokenize,
    load_corpus,
    load_parallel_corpus,
    prepare_input,
    tokenize,
)
from .decoding import DecodeResult, decode
from .metrics import (
    bench,
    check_equivalence,
    depth_rows_csv,
    lmax_rows_csv,
    sentence_reports_csv,
    sentence_reports_json,
    sweep_depth,
    sweep_lmax,
    thread_limit,
)
from .scorers import Scorer, identity_scorer, ngram_scorer, scripted_edit_scorer
from .transformer import TransformerConfig, tiny_transformer

SCORER_KINDS = ("identity", "scripted", "ngram", "transformer")


def emit_trace(result: DecodeResult, vocab: Vocab) -> str:
    """Render the output as bracketed per-iteration segments.

    Tokens inside one bracket were emitted by a single sequential iteration;
    the subscript is the iteration index and the tag is agg (parallel
    copy-and-verify) or ar (one-by-one).
    """
    tokens = result.output[1:]
    parts = []
    pos = 0
    for idx, record in enumerate(result.trace.iterations):
        segment = tokens[pos: pos + record.accepted]
        pos += record.accepted
        tag = "agg" if record.mode == AGGRESSIVE else "ar"
        parts.append(f"[{' '.join(vocab.surface(t) for t in segment)}]_{idx}({tag})")
    return " ".join(parts)


def _parse_lmax(text: str) -> list[int | None]:
    values: list[int | None] = []
    for piece in text.split(","):
        piece = piece.strip()
        if piece == "unlimited":
            values.append(None)
        else:
            value = int(piece)
            if value < 1:
                raise ValueError(f"--lmax values must be >= 1 or 'unlimited', got {piece}")
            values.append(value)
    if not values:
        raise ValueError("--lmax needs at least one value")
    return values


def _parse_depths(text: str) -> list[tuple[int, int]]:
    depths = []
    for piece in text.split(","):
        enc, _, dec = piece.strip().partition("+")
        depths.append((int(enc), int(dec)))
    return depths


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"{what} not found: {path}")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scorer", choices=SCORER_KINDS, default="identity")
    common.add_argument(
        "--scripted-pairs",
        nargs=2,
        metavar=("SRC", "TGT"),
        help="aligned source/target files backing the scripted scorer",
    )
    common.add_argument("--transformer-config", metavar="PATH",
                        help="key-value file with encoder_layers/decoder_layers/model_dim/heads/ffn_dim/seed")
    common.add_argument("--enc-layers", type=int, default=6)
    common.add_argument("--dec-layers", type=int, default=6)
    common.add_argument("--model-dim", type=int, default=64)
    common.add_argument("--heads", type=int, default=4)
    common.add_argument("--ffn-dim", type=int, default=128)
    common.add_argument("--order", type=int, default=2, help="n-gram order")
    common.add_argument("--smoothing", type=float, default=0.1)
    common.add_argument("--copy-bias", type=float, default=0.0)
    common.add_argument("--scheme", choices=("whitespace", "character"), default="whitespace")
    common.add_argument("--mode", choices=("greedy", "beam", "aggressive"), default="aggressive")
    common.add_argument("--beam", type=int, default=5)
    common.add_argument("--length-penalty", type=float, default=0.0)
    common.add_argument("--lmax", default="unlimited",
                        help="comma list of ints or 'unlimited'")
    common.add_argument("--max-len", type=int, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--format", choices=("csv", "json", "text"), default="text")
    common.add_argument("--output", metavar="PATH", default=None)

    parser = argparse.ArgumentParser(prog="aggdec", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("decode", parents=[common], help="rewrite a corpus line by line")
    p.add_argument("--input", required=True, metavar="PATH")
    p.add_argument("--trace", action="store_true", help="render per-iteration segments")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("check", parents=[common],
                       help="verify aggressive output equals greedy output")
    p.add_argument("--corpus", required=True, metavar="PATH")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("bench", parents=[common], help="per-sentence speedup report")
    p.add_argument("--corpus", required=True, metavar="PATH")
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--warmup", type=int, default=2)
    p.add_argument("--with-beam", action="store_true")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("sweep-lmax", parents=[common],
                       help="aggregate stats per copy-window cap")
    p.add_argument("--corpus", required=True, metavar="PATH")
    p.add_argument("--config", metavar="PATH", help="key-value file overriding flags")
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--warmup", type=int, default=0)
    p.set_defaults(func=_cmd_sweep_lmax)

    p = sub.add_parser("sweep-depth", parents=[common],
                       help="wall-clock per encoder+decoder depth")
    p.add_argument("--corpus", required=True, metavar="PATH")
    p.add_argument("--config", metavar="PATH", help="key-value file overriding flags")
    p.add_argument("--depths", default="6+6,9+3", help="comma list of ENC+DEC pairs")
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--warmup", type=int, default=2)
    p.set_defaults(func=_cmd_sweep_depth)
    return parser


_CONFIG_COERCERS = {
    "beam": int, "max_len": int, "seed": int, "threads": int, "workers": int,
    "enc_layers": int, "dec_layers": int, "model_dim": int, "heads": int,
    "ffn_dim": int, "order": int, "repetitions": int, "warmup": int,
    "smoothing": float, "copy_bias": float, "length_penalty": float,
}


def _apply_config_file(args: argparse.Namespace) -> None:
    """`--config` key-value pairs override already-parsed flags on sweeps."""
    if getattr(args, "config", None) is None:
        return
    path = _require_file(args.config, "config file")
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ValueError(f"{path}:{lineno}: expected `key = value`")
        key, _, value = text.partition("=")
        dest = key.strip().replace("-", "_")
        value = value.strip()
        if not hasattr(args, dest):
            raise ValueError(f"{path}:{lineno}: unknown config key {key.strip()!r}")
        coerce = _CONFIG_COERCERS.get(dest, str)
        setattr(args, dest, coerce(value))


def _load_lines(args: argparse.Namespace, attr: str) -> list[str]:
    return load_corpus(_require_file(getattr(args, attr), f"--{attr} corpus"))


def _make_vocab(args: argparse.Namespace, lines: list[str]) -> Vocab:
    pool = list(lines)
    if args.scorer == "scripted":
        if not args.scripted_pairs:
            raise ValueError("--scorer scripted requires --scripted-pairs SRC TGT")
        src, tgt = load_parallel_corpus(
            _require_file(args.scripted_pairs[0], "scripted source corpus"),
            _require_file(args.scripted_pairs[1], "scripted target corpus"),
        )
        pool += src + tgt
    return build_vocab(pool, args.scheme)


def _make_scorer(args: argparse.Namespace, vocab: Vocab, lines: list[str]) -> Scorer:
    if args.scorer == "identity":
        return identity_scorer(vocab)
    if args.scorer == "scripted":
        src, tgt = load_parallel_corpus(args.scripted_pairs[0], args.scripted_pairs[1])
        pairs = [
            (tokenize(s, args.scheme, vocab), tokenize(t, args.scheme, vocab))
            for s, t in zip(src, tgt)
        ]
        return scripted_edit_scorer(pairs, vocab)
    if args.scorer == "ngram":
        corpus_ids = corpus_to_ids(lines, args.scheme, vocab)
        return ngram_scorer(corpus_ids, args.order, args.smoothing, vocab,
                            copy_bias=args.copy_bias)
    if args.scorer == "transformer":
        if args.transformer_config:
            config = TransformerConfig.from_file(
                _require_file(args.transformer_config, "transformer config")
            )
        else:
            if args.seed is None:
                raise ValueError("--scorer transformer requires --seed (or a config file)")
            config = TransformerConfig(
                encoder_layers=args.enc_layers,
                decoder_layers=args.dec_layers,
                model_dim=args.model_dim,
                heads=args.heads,
                ffn_dim=args.ffn_dim,
                seed=args.seed,
            )
        return tiny_transformer(config, vocab)
    raise ValueError(f"unknown scorer kind: {args.scorer!r}")


def _decode_config(args: argparse.Namespace, l_max: int | None) -> DecodeConfig:
    return DecodeConfig(
        mode=args.mode,
        max_len=args.max_len,
        l_max=l_max,
        beam_size=args.beam,
        length_penalty=args.length_penalty,
    )


def _single_lmax(args: argparse.Namespace) -> int | None:
    values = _parse_lmax(args.lmax)
    if len(values) > 1:
        raise ValueError(f"{args.subcommand} takes a single --lmax value")
    return values[0]


def _write(args: argparse.Namespace, content: str) -> None:
    if not content.endswith("\n"):
        content += "\n"
    if args.output:
        Path(args.output).write_text(content, encoding="utf-8")
    else:
        sys.stdout.write(content)


# --- subcommands ------------------------------------------------------------


def _cmd_decode(args: argparse.Namespace) -> int:
    lines = _load_lines(args, "input")
    vocab = _make_vocab(args, lines)
    scorer = _make_scorer(args, vocab, lines)
    cfg = _decode_config(args, _single_lmax(args))
    results = []
    for line in lines:
        raw = tokenize(line, args.scheme, vocab)
        results.append(decode(scorer, prepare_input(raw, vocab), cfg))
    if args.format == "json":
        payload = [
            {
                "input": line,
                "output": detokenize(res.output, vocab),
                "iterations": res.trace.sequential_iterations,
                "trace": emit_trace(res, vocab),
            }
            for line, res in zip(lines, results)
        ]
        _write(args, json.dumps(payload, indent=2, sort_keys=True))
    elif args.format == "csv":
        rows = ["sentence,iterations,output"]
        for idx, res in enumerate(results):
            rows.append(f"{idx},{res.trace.sequential_iterations},{detokenize(res.output, vocab)}")
        _write(args, "".join(row + "\n" for row in rows))
    else:
        render = (lambda r: emit_trace(r, vocab)) if args.trace else (
            lambda r: detokenize(r.output, vocab)
        )
        # one newline-terminated line per input line, even when a line is empty
        _write(args, "".join(render(res) + "\n" for res in results))
    return 0


def _cmd_check(args: argparse.Namespace) -> int:
    lines = _load_lines(args, "corpus")
    vocab = _make_vocab(args, lines)
    scorer = _make_scorer(args, vocab, lines)
    corpus_ids = corpus_to_ids(lines, args.scheme, vocab)
    report = check_equivalence(
        scorer,
        corpus_ids,
        l_max_values=_parse_lmax(args.lmax),
        cfg=DecodeConfig(max_len=args.max_len),
    )
    if args.format == "json":
        payload = {
            "sentences": report.sentences,
            "decode_pairs": report.decode_pairs,
            "mismatches": [
                {
                    "sentence": m.sentence,
                    "l_max": "unlimited" if m.l_max is None else m.l_max,
                    "greedy": detokenize(m.greedy_output, vocab),
                    "aggressive": detokenize(m.aggressive_output, vocab),
                    "greedy_trace": emit_trace(m.greedy_result, vocab),
                    "aggressive_trace": emit_trace(m.aggressive_result, vocab),
                }
                for m in report.mismatches
            ],
        }
        _write(args, json.dumps(payload, indent=2, sort_keys=True))
    else:
        detail = "".join(
            f"sentence {m.sentence} l_max={m.l_max}:\n"
            f"  greedy:     {detokenize(m.greedy_output, vocab)}\n"
            f"  aggressive: {detokenize(m.aggressive_output, vocab)}\n"
            f"  greedy trace:     {emit_trace(m.greedy_result, vocab)}\n"
            f"  aggressive trace: {emit_trace(m.aggressive_result, vocab)}\n"
            for m in report.mismatches
        )
        _write(args, detail + report.summary())
    return 0 if report.ok else 1


def _nonempty_corpus(lines: list[str], vocab: Vocab, scheme: str):
    ids = corpus_to_ids(lines, scheme, vocab)
    return [seq for seq in ids if seq]


def _cmd_bench(args: argparse.Namespace) -> int:
    lines = _load_lines(args, "corpus")
    vocab = _make_vocab(args, lines)
    scorer = _make_scorer(args, vocab, lines)
    corpus_ids = _nonempty_corpus(lines, vocab, args.scheme)
    reports = bench(
        scorer,
        corpus_ids,
        cfg=DecodeConfig(
            max_len=args.max_len,
            l_max=_single_lmax(args),
            beam_size=args.beam,
            length_penalty=args.length_penalty,
        ),
        repetitions=args.repetitions,
        warmup=args.warmup,
        threads=args.threads,
        with_beam=args.with_beam,
        workers=args.workers,
    )
    if args.format == "csv":
        _write(args, sentence_reports_csv(reports))
    elif args.format == "json":
        _write(args, sentence_reports_json(reports))
    else:
        mean_iter = sum(r.iteration_speedup for r in reports) / len(reports)
        mean_wall = sum(r.wall_speedup for r in reports) / len(reports)
        _write(
            args,
            f"{len(reports)} sentences; mean iteration speedup {mean_iter:.2f}x; "
            f"mean wall-clock speedup {mean_wall:.2f}x",
        )
    return 0


def _cmd_sweep_lmax(args: argparse.Namespace) -> int:
    _apply_config_file(args)
    lines = _load_lines(args, "corpus")
    vocab = _make_vocab(args, lines)
    scorer = _make_scorer(args, vocab, lines)
    corpus_ids = _nonempty_corpus(lines, vocab, args.scheme)
    rows = sweep_lmax(
        scorer,
        corpus_ids,
        l_max_values=_parse_lmax(args.lmax),
        cfg=DecodeConfig(max_len=args.max_len),
        repetitions=args.repetitions,
        warmup=args.warmup,
    )
    if args.format == "json":
        payload = [
            {
                "l_max": "unlimited" if r.l_max is None else r.l_max,
                "sequential_iterations": r.sequential_iterations,
                "positions_scored": r.positions_scored,
                "tokens_emitted": r.tokens_emitted,
                "wall_clock": r.wall_clock,
                "outputs_match_greedy": r.outputs_match_greedy,
            }
            for r in rows
        ]
        _write(args, json.dumps(payload, indent=2, sort_keys=True))
    else:
        _write(args, lmax_rows_csv(rows))
    return 0


def _cmd_sweep_depth(args: argparse.Namespace) -> int:
    _apply_config_file(args)
    if args.seed is None:
        raise ValueError("sweep-depth requires --seed for the transformer weights")
    lines = _load_lines(args, "corpus")
    vocab = build_vocab(lines, args.scheme)
    corpus_ids = _nonempty_corpus(lines, vocab, args.scheme)
    configs = [
        TransformerConfig(
            encoder_layers=enc,
            decoder_layers=dec,
            model_dim=args.model_dim,
            heads=args.heads,
            ffn_dim=args.ffn_dim,
            seed=args.seed,
        )
        for enc, dec in _parse_depths(args.depths)
    ]
    rows = sweep_depth(
        configs,
        corpus_ids,
        vocab,
        cfg=DecodeConfig(max_len=args.max_len),
        repetitions=args.repetitions,
        warmup=args.warmup,
        threads=args.threads,
    )
    if args.format == "json":
        payload = [
            {
                "enc_layers": r.enc_layers,
                "dec_layers": r.dec_layers,
                "greedy_iterations": r.greedy_iterations,
                "greedy_tokens": r.greedy_tokens,
                "greedy_wall": r.greedy_wall,
                "aggressive_iterations": r.aggressive_iterations,
                "aggressive_tokens": r.aggressive_tokens,
                "aggressive_wall": r.aggressive_wall,
            }
            for r in rows
        ]
        _write(args, json.dumps(payload, indent=2, sort_keys=True))
    else:
        _write(args, depth_rows_csv(rows))
    return 0


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with thread_limit(args.threads):
            return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
