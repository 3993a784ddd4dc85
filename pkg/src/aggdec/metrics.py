"""Edit-ratio metrics, equivalence checking, and the benchmark harness.

Speedup is reported in two currencies: sequential iterations (scorer calls in
the decode loop — hardware independent and exactly reproducible) and
wall-clock (hardware dependent, trend only). Per-sentence timing is the
median over `repetitions` runs after `warmup` untimed runs, always in the
online setting: one sentence per decode call.
"""

from __future__ import annotations

import io
import json
import statistics
import time
from contextlib import contextmanager
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import AGGRESSIVE, BEAM, GREEDY, DecodeConfig, TokenIds, Vocab, prepare_input, strip_sentinels
from .decoding import DecodeResult, aggressive_decode, beam_decode, greedy_decode
from .scorers import Scorer
from .transformer import TransformerConfig, tiny_transformer


# --- edit distance -----------------------------------------------------------


def levenshtein(a: Sequence[int], b: Sequence[int]) -> int:
    """Token-level edit distance, unit insert/delete/substitute costs.

    Expects sentinel-free sequences; two-row dynamic program.
    """
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        current = [i] + [0] * len(b)
        for j, tok_b in enumerate(b, start=1):
            current[j] = min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (tok_a != tok_b),
            )
        previous = current
    return previous[len(b)]


def edit_ratio(input_seq: Sequence[int], output_seq: Sequence[int]) -> float:
    """Edit distance normalized by the input length (may exceed 1)."""
    if not input_seq:
        raise ValueError("edit_ratio needs a nonempty input")
    return levenshtein(input_seq, output_seq) / len(input_seq)


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation, average ranks for ties; nan when either
    series is constant (correlation undefined)."""
    rx, ry = _ranks(xs), _ranks(ys)
    if np.all(rx == rx[0]) or np.all(ry == ry[0]):
        return float("nan")
    return float(np.corrcoef(rx, ry)[0, 1])


def _ranks(values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    order = np.argsort(arr, kind="mergesort")
    ranks = np.empty(len(arr))
    i = 0
    while i < len(arr):
        j = i
        while j + 1 < len(arr) and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i: j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


# --- per-sentence accounting ---------------------------------------------------


@dataclass(frozen=True)
class StepStats:
    sequential_iterations: int
    positions_scored: int
    tokens_emitted: int
    wall_clock: float

    @classmethod
    def of(cls, result: DecodeResult, wall_clock: float) -> "StepStats":
        trace = result.trace
        return cls(
            sequential_iterations=trace.sequential_iterations,
            positions_scored=trace.positions_scored,
            tokens_emitted=trace.tokens_accepted,
            wall_clock=wall_clock,
        )


@dataclass(frozen=True)
class SentenceReport:
    index: int
    input_len: int
    output_len: int
    edit_ratio: float
    greedy_stats: StepStats
    aggressive_stats: StepStats
    beam_stats: StepStats | None
    iteration_speedup: float
    wall_speedup: float


# --- equivalence checking -------------------------------------------------------


@dataclass(frozen=True)
class Mismatch:
    sentence: int
    l_max: int | None
    greedy_output: TokenIds
    aggressive_output: TokenIds
    greedy_result: DecodeResult
    aggressive_result: DecodeResult


@dataclass(frozen=True)
class EquivalenceReport:
    sentences: int
    decode_pairs: int
    mismatches: tuple[Mismatch, ...]

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def summary(self) -> str:
        return f"{len(self.mismatches)} mismatches / {self.sentences} sentences"


def check_equivalence(
    scorer: Scorer,
    corpus: Sequence[TokenIds],
    l_max_values: Sequence[int | None] = (None,),
    cfg: DecodeConfig | None = None,
) -> EquivalenceReport:
    """Decode every sentence greedily and aggressively for each l_max; collect
    any output differences (expected: none) with full traces attached."""
    if not corpus:
        raise ValueError("equivalence check needs a nonempty corpus")
    base = cfg or DecodeConfig()
    mismatches: list[Mismatch] = []
    pairs = 0
    for idx, raw in enumerate(corpus):
        x = prepare_input(raw, scorer.vocab)
        greedy = greedy_decode(scorer, x, replace(base, mode=GREEDY))
        for l_max in l_max_values:
            aggressive = aggressive_decode(
                scorer, x, replace(base, mode=AGGRESSIVE, l_max=l_max)
            )
            pairs += 1
            if aggressive.output != greedy.output:
                mismatches.append(
                    Mismatch(
                        sentence=idx,
                        l_max=l_max,
                        greedy_output=greedy.output,
                        aggressive_output=aggressive.output,
                        greedy_result=greedy,
                        aggressive_result=aggressive,
                    )
                )
    return EquivalenceReport(
        sentences=len(corpus), decode_pairs=pairs, mismatches=tuple(mismatches)
    )


# --- benchmarking ---------------------------------------------------------------


@contextmanager
def thread_limit(threads: int | None):
    """Pin the scorer's internal math to `threads` BLAS threads when possible."""
    if threads is None:
        yield
        return
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        yield
        return
    with threadpool_limits(limits=threads):
        yield


def _timed(fn: Callable[[], DecodeResult], repetitions: int, warmup: int) -> tuple[DecodeResult, float]:
    for _ in range(warmup):
        fn()
    times = []
    result = None
    for _ in range(repetitions):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    return result, statistics.median(times)


def bench(
    scorer: Scorer,
    corpus: Sequence[TokenIds],
    cfg: DecodeConfig | None = None,
    repetitions: int = 5,
    warmup: int = 2,
    threads: int | None = None,
    with_beam: bool = False,
    workers: int = 1,
) -> list[SentenceReport]:
    """Per-sentence greedy vs aggressive comparison (plus beam when asked).

    Each timed decode is single-sentence and timed in isolation; workers > 1
    fans sentences out for harness throughput but makes wall-clock columns
    noisy, so leave it at 1 when timings matter.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    base = cfg or DecodeConfig()
    vocab = scorer.vocab

    def one(idx_raw: tuple[int, TokenIds]) -> SentenceReport:
        idx, raw = idx_raw
        if not raw:
            raise ValueError(f"bench sentence {idx} is empty; edit_ratio needs input tokens")
        x = prepare_input(raw, vocab)
        greedy_res, greedy_wall = _timed(
            lambda: greedy_decode(scorer, x, replace(base, mode=GREEDY)), repetitions, warmup
        )
        agg_res, agg_wall = _timed(
            lambda: aggressive_decode(scorer, x, replace(base, mode=AGGRESSIVE)),
            repetitions,
            warmup,
        )
        beam_stats = None
        if with_beam:
            beam_res, beam_wall = _timed(
                lambda: beam_decode(scorer, x, replace(base, mode=BEAM)), repetitions, warmup
            )
            beam_stats = StepStats.of(beam_res, beam_wall)
        output = strip_sentinels(agg_res.output, vocab)
        greedy_stats = StepStats.of(greedy_res, greedy_wall)
        agg_stats = StepStats.of(agg_res, agg_wall)
        return SentenceReport(
            index=idx,
            input_len=len(raw),
            output_len=len(output),
            edit_ratio=edit_ratio(raw, output),
            greedy_stats=greedy_stats,
            aggressive_stats=agg_stats,
            beam_stats=beam_stats,
            iteration_speedup=greedy_stats.sequential_iterations
            / agg_stats.sequential_iterations,
            wall_speedup=greedy_wall / agg_wall if agg_wall > 0 else float("inf"),
        )


    with thread_limit(threads):
        items = list(enumerate(corpus))
        if workers > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(one, items))
        return [one(item) for item in items]


# --- sweeps ----------------------------------------------------------------------


@dataclass(frozen=True)
class LmaxRow:
    l_max: int | None
    sequential_iterations: int
    positions_scored: int
    tokens_emitted: int
    wall_clock: float
    outputs_match_greedy: bool


def sweep_lmax(
    scorer: Scorer,
    corpus: Sequence[TokenIds],
    l_max_values: Sequence[int | None],
    cfg: DecodeConfig | None = None,
    repetitions: int = 1,
    warmup: int = 0,
) -> list[LmaxRow]:
    """Aggregate aggressive-decoding stats per copy-window cap; outputs must be
    identical across the sweep (and to greedy) since l_max never changes them."""
    base = cfg or DecodeConfig()
    prepared = [prepare_input(raw, scorer.vocab) for raw in corpus]
    greedy_outputs = [
        greedy_decode(scorer, x, replace(base, mode=GREEDY)).output for x in prepared
    ]
    rows = []
    for l_max in l_max_values:
        iters = scored = emitted = 0
        wall = 0.0
        match = True
        for x, reference in zip(prepared, greedy_outputs):
            result, elapsed = _timed(
                lambda: aggressive_decode(scorer, x, replace(base, mode=AGGRESSIVE, l_max=l_max)),
                repetitions,
                warmup,
            )
            iters += result.trace.sequential_iterations
            scored += result.trace.positions_scored
            emitted += result.trace.tokens_accepted
            wall += elapsed
            match = match and result.output == reference
        rows.append(
            LmaxRow(
                l_max=l_max,
                sequential_iterations=iters,
                positions_scored=scored,
                tokens_emitted=emitted,
                wall_clock=wall,
                outputs_match_greedy=match,
            )
        )
    return rows


@dataclass(frozen=True)
class DepthRow:
    enc_layers: int
    dec_layers: int
    greedy_iterations: int
    greedy_tokens: int
    greedy_wall: float
    aggressive_iterations: int
    aggressive_tokens: int
    aggressive_wall: float


def sweep_depth(
    configs: Sequence[TransformerConfig],
    corpus: Sequence[TokenIds],
    vocab: Vocab,
    cfg: DecodeConfig | None = None,
    repetitions: int = 5,
    warmup: int = 2,
    threads: int | None = None,
) -> list[DepthRow]:
    """Greedy and aggressive wall-clock/iteration totals per encoder+decoder depth."""
    dims = {(c.model_dim, c.heads) for c in configs}
    if len(dims) > 1:
        raise ValueError("depth sweep configs must share model_dim and heads")
    base = cfg or DecodeConfig()
    rows = []
    with thread_limit(threads):
        for config in configs:
            scorer = tiny_transformer(config, vocab)
            greedy_iters = agg_iters = greedy_tokens = agg_tokens = 0
            greedy_wall = agg_wall = 0.0
            for raw in corpus:
                x = prepare_input(raw, vocab)
                g_res, g_time = _timed(
                    lambda: greedy_decode(scorer, x, replace(base, mode=GREEDY)),
                    repetitions,
                    warmup,
                )
                a_res, a_time = _timed(
                    lambda: aggressive_decode(scorer, x, replace(base, mode=AGGRESSIVE)),
                    repetitions,
                    warmup,
                )
                greedy_iters += g_res.trace.sequential_iterations
                agg_iters += a_res.trace.sequential_iterations
                greedy_tokens += g_res.trace.tokens_accepted
                agg_tokens += a_res.trace.tokens_accepted
                greedy_wall += g_time
                agg_wall += a_time
            rows.append(
                DepthRow(
                    enc_layers=config.encoder_layers,
                    dec_layers=config.decoder_layers,
                    greedy_iterations=greedy_iters,
                    greedy_tokens=greedy_tokens,
                    greedy_wall=greedy_wall,
                    aggressive_iterations=agg_iters,
                    aggressive_tokens=agg_tokens,
                    aggressive_wall=agg_wall,
                )
            )
    return rows


# --- report emission ----------------------------------------------------------------

SENTENCE_COLUMNS = (
    "sentence",
    "input_len",
    "output_len",
    "edit_ratio",
    "greedy_iters",
    "aggressive_iters",
    "beam_iters",
    "iteration_speedup",
    "wall_speedup",
    "greedy_wall",
    "aggressive_wall",
    "beam_wall",
)

LMAX_COLUMNS = (
    "l_max",
    "sequential_iterations",
    "positions_scored",
    "tokens_emitted",
    "wall_clock",
    "outputs_match_greedy",
)

DEPTH_COLUMNS = (
    "enc_layers",
    "dec_layers",
    "greedy_iterations",
    "greedy_tokens",
    "greedy_wall",
    "aggressive_iterations",
    "aggressive_tokens",
    "aggressive_wall",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def sentence_reports_csv(reports: Iterable[SentenceReport]) -> str:
    out = io.StringIO()
    out.write(",".join(SENTENCE_COLUMNS) + "\n")
    for r in reports:
        beam = r.beam_stats
        row = (
            r.index,
            r.input_len,
            r.output_len,
            r.edit_ratio,
            r.greedy_stats.sequential_iterations,
            r.aggressive_stats.sequential_iterations,
            beam.sequential_iterations if beam else None,
            r.iteration_speedup,
            r.wall_speedup,
            r.greedy_stats.wall_clock,
            r.aggressive_stats.wall_clock,
            beam.wall_clock if beam else None,
        )
        out.write(",".join(_fmt(v) for v in row) + "\n")
    return out.getvalue()


def sentence_reports_json(reports: Sequence[SentenceReport]) -> str:
    """Aggregates over a bench run; per-sentence detail belongs to the CSV."""
    ratios = [r.edit_ratio for r in reports]
    speedups = [r.iteration_speedup for r in reports]
    walls = [r.wall_speedup for r in reports]
    correlation = spearman(ratios, speedups) if len(reports) > 2 else float("nan")
    payload = {
        "sentences": len(reports),
        "mean_edit_ratio": statistics.fmean(ratios) if reports else 0.0,
        "mean_iteration_speedup": statistics.fmean(speedups) if reports else 0.0,
        "median_iteration_speedup": statistics.median(speedups) if reports else 0.0,
        "mean_wall_speedup": statistics.fmean(walls) if reports else 0.0,
        "total_greedy_iterations": sum(r.greedy_stats.sequential_iterations for r in reports),
        "total_aggressive_iterations": sum(
            r.aggressive_stats.sequential_iterations for r in reports
        ),
        "spearman_edit_ratio_vs_iteration_speedup": (
            correlation if np.isfinite(correlation) else None
        ),
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def lmax_rows_csv(rows: Iterable[LmaxRow]) -> str:
    out = io.StringIO()
    out.write(",".join(LMAX_COLUMNS) + "\n")
    for r in rows:
        values = (
            "unlimited" if r.l_max is None else r.l_max,
            r.sequential_iterations,
            r.positions_scored,
            r.tokens_emitted,
            r.wall_clock,
            r.outputs_match_greedy,
        )
        out.write(",".join(_fmt(v) for v in values) + "\n")
    return out.getvalue()


def depth_rows_csv(rows: Iterable[DepthRow]) -> str:
    out = io.StringIO()
    out.write(",".join(DEPTH_COLUMNS) + "\n")
    for r in rows:
        values = (
            r.enc_layers,
            r.dec_layers,
            r.greedy_iterations,
            r.greedy_tokens,
            r.greedy_wall,
            r.aggressive_iterations,
            r.aggressive_tokens,
            r.aggressive_wall,
        )
        out.write(",".join(_fmt(v) for v in values) + "\n")
    return out.getvalue()
