"""Synthetic rewrite corpora with controlled edit rates.

Pairs a random source sentence with a perturbed target so a scripted scorer
decodes with a known, tunable edit ratio; the workhorse behind the trend and
speedup benchmarks in the test suite and scripts.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import RESERVED_SURFACES, TokenIds, Vocab


def synthetic_vocab(n_words: int = 200) -> Vocab:
    return Vocab(f"w{i:03d}" for i in range(n_words))


def word_ids(vocab: Vocab) -> range:
    """Ids of the non-reserved tokens."""
    return range(len(RESERVED_SURFACES), len(vocab))


def random_sentence(
    rng: np.random.Generator, vocab: Vocab, min_len: int, max_len: int
) -> TokenIds:
    length = int(rng.integers(min_len, max_len + 1))
    words = word_ids(vocab)
    return tuple(int(rng.integers(words.start, words.stop)) for _ in range(length))


def perturb(
    rng: np.random.Generator, tokens: Sequence[int], edit_rate: float, vocab: Vocab
) -> TokenIds:
    """Apply roughly edit_rate * len(tokens) random substitutions, insertions,
    and deletions."""
    words = word_ids(vocab)
    out = list(tokens)
    edits = int(round(edit_rate * len(tokens)))
    for _ in range(edits):
        op = rng.choice(("sub", "ins", "del"))
        if op == "del" and len(out) > 1:
            del out[int(rng.integers(len(out)))]
        elif op == "ins":
            out.insert(int(rng.integers(len(out) + 1)), int(rng.integers(words.start, words.stop)))
        elif out:
            pos = int(rng.integers(len(out)))
            replacement = int(rng.integers(words.start, words.stop))
            while replacement == out[pos] and len(words) > 1:
                replacement = int(rng.integers(words.start, words.stop))
            out[pos] = replacement
    return tuple(out)


def rewrite_pairs(
    rng: np.random.Generator,
    count: int,
    vocab: Vocab,
    min_len: int = 8,
    max_len: int = 30,
    edit_rate: float | tuple[float, float] = 0.1,
) -> list[tuple[TokenIds, TokenIds]]:
    """(source, target) pairs with unique sources; edit_rate may be a fixed
    rate or a (low, high) range sampled per sentence."""
    pairs: list[tuple[TokenIds, TokenIds]] = []
    seen: set[TokenIds] = set()
    while len(pairs) < count:
        source = random_sentence(rng, vocab, min_len, max_len)
        if source in seen:
            continue
        seen.add(source)
        if isinstance(edit_rate, tuple):
            rate = float(rng.uniform(edit_rate[0], edit_rate[1]))
        else:
            rate = float(edit_rate)
        pairs.append((source, perturb(rng, source, rate, vocab)))
    return pairs
