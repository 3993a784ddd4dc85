import numpy as np
import pytest

from aggdec import (
    DecodeConfig,
    aggressive_decode,
    greedy_decode,
    identity_scorer,
    ngram_scorer,
    prepare_input,
    scripted_edit_scorer,
    tokenize,
)
from aggdec.decoding import argmax_with_tiebreak
from aggdec.scorers import log_softmax


def ids(text, vocab):
    return tokenize(text, "whitespace", vocab)


def test_scripted_identity_pair(vocab):
    pair = (ids("a b", vocab), ids("a b", vocab))
    scorer = scripted_edit_scorer([pair], vocab)
    x = prepare_input(pair[0], vocab)
    result = greedy_decode(scorer, x, DecodeConfig())
    assert result.output == (vocab.bos,) + pair[1] + (vocab.eos,)


def test_scripted_substitution(vocab):
    pair = (ids("a b c d", vocab), ids("a b X d", vocab))
    scorer = scripted_edit_scorer([pair], vocab)
    x = prepare_input(pair[0], vocab)
    result = greedy_decode(scorer, x, DecodeConfig())
    assert result.output == (vocab.bos,) + pair[1] + (vocab.eos,)


def test_scripted_greedy_aggressive_agree(vocab, rng):
    """Both decoders emit the same tokens on every scripted source."""
    words = [vocab.id_of(w) for w in ["a", "b", "c", "d", "X"]]
    pairs = []
    seen = set()
    for _ in range(30):
        src = tuple(rng.choice(words, size=rng.integers(1, 9)))
        if src in seen:
            continue
        seen.add(src)
        tgt = tuple(rng.choice(words, size=rng.integers(1, 9)))
        pairs.append((src, tgt))
    scorer = scripted_edit_scorer(pairs, vocab)
    for src, _ in pairs:
        x = prepare_input(src, vocab)
        greedy = greedy_decode(scorer, x, DecodeConfig())
        aggressive = aggressive_decode(scorer, x, DecodeConfig(mode="aggressive"))
        assert greedy.output == aggressive.output


def test_scripted_unknown_source_decodes_to_itself(vocab):
    scorer = identity_scorer(vocab)
    raw = ids("c a d", vocab)
    result = greedy_decode(scorer, prepare_input(raw, vocab), DecodeConfig())
    assert result.output == (vocab.bos,) + raw + (vocab.eos,)


def test_scripted_off_target_fallback_copies_source(vocab):
    """A prefix that diverged from the target continues by copying the source."""
    pair = (ids("a b c", vocab), ids("a X", vocab))
    scorer = scripted_edit_scorer([pair], vocab)
    state = scorer.encode(prepare_input(pair[0], vocab))
    diverged = (vocab.bos, vocab.id_of("b"), vocab.id_of("b"))
    assert scorer.next_token(state, diverged) == vocab.id_of("c")
    exhausted = (vocab.bos,) + ids("b b b", vocab)
    assert scorer.next_token(state, exhausted) == vocab.eos


def test_scripted_rejects_duplicate_sources(vocab):
    pair = (ids("a b", vocab), ids("a b", vocab))
    with pytest.raises(ValueError):
        scripted_edit_scorer([pair, pair], vocab)


def test_scripted_rejects_sentinel_pairs(vocab):
    with pytest.raises(ValueError):
        scripted_edit_scorer([((vocab.eos,), (vocab.id_of("a"),))], vocab)


def test_scripted_prefix_consistency_bit_exact(vocab):
    pair = (ids("a b c d", vocab), ids("a b X d", vocab))
    scorer = scripted_edit_scorer([pair], vocab)
    x = prepare_input(pair[0], vocab)
    state = scorer.encode(x)
    prefix = (vocab.bos,) + pair[0]
    joint = scorer.score_positions(state, prefix, range(len(prefix)))
    for p in range(len(prefix)):
        single = scorer.score_positions(state, prefix[: p + 1], (p,))[0]
        assert np.array_equal(joint[p], single)


def test_ngram_uniform_counts_tie_break(vocab):
    """With all counted tokens tied, argmax falls to the smallest token id."""
    corpus = [ids("a b c", vocab)]  # every counted token appears exactly once
    scorer = ngram_scorer(corpus, order=1, smoothing=1.0, vocab=vocab)
    state = scorer.encode(prepare_input(ids("a", vocab), vocab))
    row = scorer.score_positions(state, (vocab.bos,), (0,))[0]
    tied_max = np.flatnonzero(row == row.max())
    assert len(tied_max) > 1
    assert argmax_with_tiebreak(row) == int(tied_max[0]) == vocab.eos


def test_ngram_huge_copy_bias_is_identity(vocab):
    scorer = ngram_scorer([ids("a b", vocab)], order=2, smoothing=0.5, vocab=vocab,
                          copy_bias=1e9)
    raw = ids("d c b a", vocab)
    result = greedy_decode(scorer, prepare_input(raw, vocab), DecodeConfig())
    assert result.output == (vocab.bos,) + raw + (vocab.eos,)


def test_ngram_determinism(vocab, rng):
    corpus = [tuple(rng.integers(4, len(vocab), size=6)) for _ in range(10)]
    scorer = ngram_scorer(corpus, order=2, smoothing=0.1, vocab=vocab, copy_bias=1.0)
    x = prepare_input(corpus[0], vocab)
    state = scorer.encode(x)
    prefix = (vocab.bos,) + corpus[0][:3]
    first = scorer.score_positions(state, prefix, range(len(prefix)))
    second = scorer.score_positions(scorer.encode(x), prefix, range(len(prefix)))
    assert np.array_equal(first, second)


def test_ngram_prefix_consistency_bit_exact(vocab, rng):
    corpus = [tuple(rng.integers(4, len(vocab), size=8)) for _ in range(15)]
    scorer = ngram_scorer(corpus, order=3, smoothing=0.2, vocab=vocab, copy_bias=2.0)
    x = prepare_input(corpus[0], vocab)
    state = scorer.encode(x)
    prefix = (vocab.bos,) + corpus[1][:6]
    joint = scorer.score_positions(state, prefix, range(len(prefix)))
    for p in range(len(prefix)):
        single = scorer.score_positions(state, prefix[: p + 1], (p,))[0]
        assert np.array_equal(joint[p], single)


def test_ngram_validation(vocab):
    with pytest.raises(ValueError):
        ngram_scorer([(4,)], order=0, smoothing=0.1, vocab=vocab)
    with pytest.raises(ValueError):
        ngram_scorer([(4,)], order=1, smoothing=0.0, vocab=vocab)
    with pytest.raises(ValueError):
        ngram_scorer([], order=1, smoothing=0.1, vocab=vocab)


def test_pad_logit_masked_everywhere(vocab):
    scorers = [
        identity_scorer(vocab),
        ngram_scorer([ids("a b c", vocab)], order=2, smoothing=0.1, vocab=vocab),
    ]
    raw = ids("a b", vocab)
    x = prepare_input(raw, vocab)
    for scorer in scorers:
        state = scorer.encode(x)
        rows = scorer.score_positions(state, (vocab.bos,) + raw, range(3))
        assert np.all(np.isneginf(rows[:, vocab.pad]))


def test_log_softmax_normalizes():
    row = np.array([0.0, 1.0, float("-inf"), -2.0])
    logp = log_softmax(row)
    assert np.isclose(np.exp(logp[np.isfinite(logp)]).sum(), 1.0)
    assert np.isneginf(logp[2])


def test_log_softmax_rejects_all_masked():
    with pytest.raises(ValueError):
        log_softmax(np.array([float("-inf")] * 3))
