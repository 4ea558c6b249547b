import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nbf.errors import ConfigError, NbfError, UtteranceMismatchError
from nbf.hypcore import Hypothesis, NBestCorpus
from nbf.metrics import (
    EditStats,
    corpus_wer,
    default_length_bins,
    edit_distance,
    oracle_select,
    oracle_wer,
    overlap_histogram,
    parse_bins,
    wer_by_length,
)

from oracles import min_edit_exhaustive


def W(s):
    return tuple(s.split())


def corpus(d):
    return NBestCorpus({u: [Hypothesis(W(h), W(h)) for h in hyps] for u, hyps in d.items()})


@pytest.mark.parametrize("hyp,ref,expect", [
    ("a b c", "a b c", (0, 0, 0)),
    ("a x c", "a b c", (1, 0, 0)),
    ("", "a b", (0, 0, 2)),
    ("a b", "", (0, 2, 0)),
    ("a b", "b a", (2, 0, 0)),
    ("a a b", "a b", (0, 1, 0)),
])
def test_edit_distance_examples(hyp, ref, expect):
    st_ = edit_distance(W(hyp), W(ref))
    assert (st_.substitutions, st_.insertions, st_.deletions) == expect
    assert st_.ref_len == len(W(ref))


def test_edit_distance_prefers_substitution():
    # "x" vs "a b": one sub + one del in either order; never ins+2 dels
    st_ = edit_distance(("x",), ("a", "b"))
    assert (st_.substitutions, st_.insertions, st_.deletions) == (1, 0, 1)


words = st.lists(st.sampled_from("abc"), max_size=6)


@settings(max_examples=300, deadline=None)
@given(words, words)
def test_edit_distance_matches_exhaustive(hyp, ref):
    st_ = edit_distance(hyp, ref)
    assert st_.errors == min_edit_exhaustive(hyp, ref)
    assert st_.insertions - st_.deletions == len(hyp) - len(ref)
    assert min(st_.substitutions, st_.insertions, st_.deletions) >= 0


@settings(max_examples=100, deadline=None)
@given(words, words)
def test_edit_distance_symmetric_total(hyp, ref):
    assert edit_distance(hyp, ref).errors == edit_distance(ref, hyp).errors


def test_corpus_wer_examples():
    refs = {"u1": W("a b c"), "u2": W("d e")}
    assert corpus_wer({"u1": W("a b c")}, refs).wer == 0.0
    rep = corpus_wer({"u1": W("a b c"), "u2": W("d")}, refs)
    assert rep.wer == 20.0
    assert rep.per_utt["u2"] == EditStats(0, 0, 1, 2)
    assert rep.errors == 1 and rep.ref_words == 5


def test_corpus_wer_missing_reference():
    with pytest.raises(NbfError, match="'u9'") as e:
        corpus_wer({"u9": W("a")}, {"u1": W("a")})
    assert e.value.utt == "u9"


def test_oracle_examples():
    refs = {"u1": W("a b c"), "u2": W("a b")}
    joint = corpus({"u1": ["x y z", "a b c"], "u2": ["x y", "a y", "a z"]})
    rep = oracle_wer(joint, refs)
    assert rep.per_utt["u1"].errors == 0
    assert rep.per_utt["u2"].errors == 1
    # first of the tied 1-error hypotheses
    assert oracle_select(joint, refs) == {"u1": 1, "u2": 1}
    assert oracle_wer(joint, refs, n=1).errors == 5


def test_oracle_empty_list():
    with pytest.raises(NbfError, match="empty"):
        oracle_wer(corpus({"u1": []}), {"u1": W("a")})


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.sampled_from("ab"), max_size=3), min_size=1, max_size=6), words.filter(bool))
def test_oracle_never_above_any_member(hyps, ref):
    joint = NBestCorpus({"u": [Hypothesis(h, h) for h in dict.fromkeys(map(tuple, hyps))]})
    refs = {"u": tuple(ref)}
    best = oracle_wer(joint, refs).errors
    assert best == min(edit_distance(h.words, ref).errors for h in joint["u"])
    prev = None
    for n in (1, 2, 4, 8, 16):
        e = oracle_wer(joint, refs, n=n).errors
        assert prev is None or e <= prev
        prev = e


def test_bins_parse_and_validate():
    assert parse_bins("1-5,6-10,11-") == [(1, 5), (6, 10), (11, None)]
    for bad in ("1-5,5-10,11-", "1-5,7-", "1-5,6-10", "2-", "1-,3-"):
        with pytest.raises(ConfigError):
            wer_by_length({}, {}, parse_bins(bad))
    with pytest.raises(ConfigError):
        parse_bins("a-b")
    assert default_length_bins(5, 10) == [(1, 5), (6, 10), (11, None)]


def test_wer_by_length():
    refs = {"u1": W("a b"), "u2": W("a b c d e f g"), "u3": W("c")}
    hyps = {"u1": W("a"), "u2": W("a b c d e f g"), "u3": W("c")}
    bins = wer_by_length(hyps, refs, [(1, 2), (3, 5), (6, None)])
    assert [(b.lo, b.hi, b.wer, b.ref_words, b.errors, b.num_utts) for b in bins] == [
        (1, 2, 100.0 / 3, 3, 1, 2),
        (3, 5, None, 0, 0, 0),
        (6, None, 0.0, 7, 0, 1),
    ]
    assert sum(b.ref_words for b in bins) == corpus_wer(hyps, refs).ref_words


def test_overlap_histogram():
    a = corpus({"u1": ["a", "b", "c"], "u2": ["a"], "u3": ["x"]})
    b = corpus({"u1": ["c", "a", "z"], "u2": ["b"], "u3": ["x", "y"]})
    assert overlap_histogram(a, b, 3) == [(0, 1), (1, 1), (2, 1), (3, 0)]
    # only the top-n of each list count
    assert overlap_histogram(a, b, 1) == [(0, 2), (1, 1)]


def test_overlap_self_and_disjoint():
    lists = {f"u{i}": [f"w{k}" for k in range(16)] for i in range(5)}
    a = corpus(lists)
    hist = overlap_histogram(a, a, 16)
    assert hist[16] == (16, 5) and sum(c for _, c in hist) == 5
    other = corpus({u: [h + "x" for h in hs] for u, hs in lists.items()})
    assert overlap_histogram(a, other, 16)[0] == (0, 5)


def test_overlap_mismatch():
    with pytest.raises(UtteranceMismatchError, match="u2"):
        overlap_histogram(corpus({"u1": ["a"]}), corpus({"u1": ["a"], "u2": ["b"]}), 4)


def test_overlap_sum_equals_utterances(rng):
    vocab = list("abcdef")
    for _ in range(20):
        d1, d2 = {}, {}
        for u in range(int(rng.integers(1, 8))):
            d1[f"u{u}"] = list(dict.fromkeys(rng.choice(vocab, size=int(rng.integers(1, 6)))))
            d2[f"u{u}"] = list(dict.fromkeys(rng.choice(vocab, size=int(rng.integers(1, 6)))))
        hist = overlap_histogram(corpus(d1), corpus(d2), 4)
        assert sum(c for _, c in hist) == len(d1)
        assert np.all(np.array([c for _, c in hist]) >= 0)
