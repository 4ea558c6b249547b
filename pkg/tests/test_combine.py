import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nbf.combine import (
    Grid,
    JointHyp,
    JointList,
    combined_scores,
    grid_points,
    grid_search_weight,
    join_nbest,
    rescore,
    select,
)
from nbf.errors import ConfigError, NbfError, ResourceError, UtteranceMismatchError
from nbf.hypcore import Hypothesis, NBestCorpus, PosteriorGram, write_posteriorgram, write_step_scores
from nbf.metrics import corpus_wer, oracle_wer
from nbf.scorers import aed_sequence_score, ctc_sequence_score
from nbf.systems import ScorerSpec, build_scorer

from oracles import random_logprobs


def W(s):
    return tuple(s.split())


def nbest(d, name="am"):
    """{utt: [(words, score), ...]} -> NBestCorpus."""
    return NBestCorpus({
        u: [Hypothesis(W(w), W(w), {name: s}) for w, s in hyps] for u, hyps in d.items()
    })


def scored(d):
    """{utt: [(words, s1, s2), ...]} -> rescored JointList (all tagged system 1)."""
    return JointList({
        u: [JointHyp(W(w), {1: W(w)}, {}, "system1", {1: k + 1}, s1, s2) for k, (w, s1, s2) in enumerate(hs)]
        for u, hs in d.items()
    })


def passthrough(system, name):
    return build_scorer(ScorerSpec("passthrough", name), system)


# -- join ---------------------------------------------------------------------


def test_join_identical_lists():
    a = nbest({"u1": [("a b", -1.0), ("a c", -2.0)]})
    j = join_nbest(a, a)
    assert [h.words for h in j["u1"]] == [W("a b"), W("a c")]
    assert all(h.source == "both" for h in j["u1"])
    assert j["u1"][1].ranks == {1: 2, 2: 2}


def test_join_disjoint():
    a = nbest({"u1": [("a", -1.0), ("b", -2.0)]})
    b = nbest({"u1": [("c", -1.0)]})
    j = join_nbest(a, b)
    assert len(j["u1"]) == 3
    assert [h.source for h in j["u1"]] == ["system1", "system1", "system2"]


def test_join_union_order_and_scores():
    a = nbest({"u1": [("h1", -1.0), ("h2", -2.0)]}, "am")
    b = nbest({"u1": [("h2", -0.5), ("h3", -0.7)]}, "am")
    j = join_nbest(a, b)
    assert [(h.words, h.source) for h in j["u1"]] == [
        (W("h1"), "system1"), (W("h2"), "both"), (W("h3"), "system2")]
    assert j["u1"][1].scores == {"1:am": -2.0, "2:am": -0.5}
    assert j["u1"][1].ranks == {1: 2, 2: 1}


def test_join_utterance_mismatch():
    with pytest.raises(UtteranceMismatchError, match="u2"):
        join_nbest(nbest({"u1": [("a", 0.0)]}), nbest({"u1": [("a", 0.0)], "u2": [("b", 0.0)]}))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(["a", "b", "c", "d", "e"]), unique=True, max_size=5),
       st.lists(st.sampled_from(["a", "b", "c", "d", "e"]), unique=True, max_size=5))
def test_join_cardinality_bounds(ha, hb):
    a = nbest({"u": [(w, -1.0) for w in ha]})
    b = nbest({"u": [(w, -1.0) for w in hb]})
    n = len(join_nbest(a, b)["u"])
    assert max(len(ha), len(hb)) <= n <= len(ha) + len(hb)


# -- rescore ------------------------------------------------------------------


def test_rescore_passthrough_keeps_stored_scores():
    a = NBestCorpus({"u1": [Hypothesis(W("a"), W("a"), {"m1": -1.0, "m2": -3.0})]})
    b = NBestCorpus({"u1": [Hypothesis(W("b"), W("b"), {"m1": -2.0, "m2": -math.inf})]})
    j = join_nbest(a, b)
    r = rescore(j, passthrough(1, "m1"), passthrough(2, "m2"))
    assert [(h.s1, h.s2) for h in r["u1"]] == [(-1.0, -3.0), (-2.0, -math.inf)]
    assert [(h.words, h.source) for h in r["u1"]] == [(h.words, h.source) for h in j["u1"]]
    assert r.is_rescored() and not j.is_rescored()
    again = rescore(r, passthrough(1, "m1"), passthrough(2, "m2"))
    assert again == r


def test_rescore_missing_score_names_utt_and_scorer():
    a = nbest({"u7": [("a", -1.0)]}, "m1")
    with pytest.raises(ResourceError, match="system 2 \\(passthrough:m2\\)") as e:
        rescore(join_nbest(a, a), passthrough(1, "m1"), passthrough(2, "m2"))
    assert e.value.utt == "u7"


def test_rescore_threads_match(monkeypatch):
    d = {f"u{i}": [(f"w{i} x", -float(i)), (f"w{i} y", -0.5 * i)] for i in range(12)}
    j = join_nbest(nbest(d), nbest(d))
    s1, s2 = passthrough(1, "am"), passthrough(2, "am")
    assert rescore(j, s1, s2, threads=4) == rescore(j, s1, s2, threads=1)
    monkeypatch.setenv("NBF_THREADS", "3")
    assert rescore(j, s1, s2) == rescore(j, s1, s2, threads=1)


def test_rescore_ctc_and_aed_match_direct_calls(tmp_path, rng):
    # system 1: CTC over units {A, B}; system 2: AED step scores
    units = tmp_path / "units"
    units.write_text("A\nB\n")
    pg_dir, steps_dir = tmp_path / "pg", tmp_path / "steps"
    pg_dir.mkdir()
    steps_dir.mkdir()
    a = NBestCorpus({"u1": [Hypothesis(W("A B"), W("A B")), Hypothesis(W("A"), W("A"))],
                     "u2": [Hypothesis(W("B"), W("B"))]})
    b = NBestCorpus({"u1": [Hypothesis(W("B B A"), W("B B A")), Hypothesis(W("A"), W("A"))],
                     "u2": [Hypothesis(W("B A B A B"), W("B A B A B"))]})
    pgs, steps = {}, {}
    for utt, T in (("u1", 4), ("u2", 3)):
        pgs[utt] = PosteriorGram(utt, random_logprobs(rng, (T, 3)))
        write_posteriorgram(pgs[utt], pg_dir / f"{utt}.pg")
    joint = join_nbest(a, b)
    for utt, hyps in joint.entries.items():
        steps[utt] = {h.words: np.log(rng.uniform(0.1, 0.9, size=len(h.words) + 1)) for h in hyps}
        write_step_scores(utt, steps[utt], steps_dir / f"{utt}.steps")
    ctc = build_scorer(ScorerSpec("ctc", lm_scale=0.0, prior_scale=0.0, pg_dir=str(pg_dir),
                                  units=str(units)), 1)
    aed = build_scorer(ScorerSpec("aed", length_exponent=0.7, steps_dir=str(steps_dir)), 2)
    r = rescore(joint, ctc, aed)
    idx = {"A": 0, "B": 1}
    for utt, hyps in r.entries.items():
        for h in hyps:
            direct1 = ctc_sequence_score(pgs[utt], [idx[w] for w in h.words], lm_scale=0.0, prior_scale=0.0)
            direct2 = aed_sequence_score(steps[utt][h.words], 0.7)
            assert h.s1 == direct1.total
            assert h.s2 == direct2.total
    # "B A B A B" needs 9 frames under CTC: kept with the -inf sentinel
    (long,) = [h for h in r["u2"] if len(h.words) == 5]
    assert long.s1 == -math.inf and math.isfinite(long.s2)


# -- select -------------------------------------------------------------------


def test_select_tie_and_weight_examples():
    j = scored({"u": [("first", -1.0, -3.0), ("second", -2.0, -2.0)]})
    assert select(j, 0.5)["u"].words == W("first")
    assert select(j, 0.6)["u"].words == W("first")
    assert select(j, 0.4)["u"].words == W("second")
    # each system is centered on its best score, so the tie survives
    assert combined_scores(j, 0.5)["u"] == [-0.5, -0.5]


def test_select_endpoints():
    j = scored({"u": [("a", -1.0, -3.0), ("b", -2.0, -1.0), ("c", -0.5, -math.inf)]})
    assert select(j, 1.0)["u"].words == W("c")
    assert select(j, 0.0)["u"].words == W("b")
    # the -inf sentinel loses at any weight below 1
    assert select(j, 0.999)["u"].words != W("c")


def test_select_tie_break_system2_rank():
    hyps = [
        JointHyp(W("x"), {1: W("x")}, {}, "system1", {1: 1, 2: 2}, -1.0, -1.0),
        JointHyp(W("y"), {1: W("y")}, {}, "both", {1: 2, 2: 1}, -1.0, -1.0),
    ]
    j = JointList({"u": hyps})
    assert select(j, 0.5, "prefer-system1-rank")["u"].words == W("x")
    assert select(j, 0.5, "prefer-system2-rank")["u"].words == W("y")


def test_select_errors():
    with pytest.raises(NbfError, match="empty"):
        select(JointList({"u": []}), 0.5)
    with pytest.raises(ConfigError):
        select(scored({"u": [("a", 0.0, 0.0)]}), 1.5)
    with pytest.raises(ConfigError):
        select(scored({"u": [("a", 0.0, 0.0)]}), 0.5, "coin-flip")
    unscored = JointList({"u": [JointHyp(W("a"), {1: W("a")}, {}, "system1", {1: 1})]})
    with pytest.raises(NbfError, match="not rescored"):
        select(unscored, 0.5)


def test_select_zscore_option():
    j = scored({"u": [("a", -10.0, -1.0), ("b", -20.0, -1.5), ("c", -30.0, -0.5)]})
    # s1 spreads are 20x larger than s2; z-scoring evens them out
    assert select(j, 0.5)["u"].words == W("a")
    assert select(j, 0.5, normalize="zscore")["u"].words == W("a")
    assert select(j, 0.3, normalize="zscore")["u"].words == W("c")


_score = st.floats(-20, 0, allow_nan=False, width=16)
_utt = st.lists(st.tuples(_score, _score), min_size=1, max_size=5)


def _from_pairs(utts):
    return scored({f"u{i}": [(f"h{k}", a, b) for k, (a, b) in enumerate(hs)] for i, hs in enumerate(utts)})


@settings(max_examples=80, deadline=None)
@given(st.lists(_utt, min_size=1, max_size=4), st.integers(-64, 64), st.integers(0, 3))
def test_select_shift_invariance(utts, shift, which):
    j = _from_pairs(utts)
    target = f"u{which % len(utts)}"
    shifted = JointList({
        u: [JointHyp(h.words, h.labels, h.scores, h.source, h.ranks,
                     h.s1 + shift * 0.25 if u == target else h.s1, h.s2) for h in hs]
        for u, hs in j.entries.items()
    })
    for w in grid_points(Grid(0, 1, 0.05)):
        a, b = select(j, w), select(shifted, w)
        assert {u: h.words for u, h in a.items()} == {u: h.words for u, h in b.items()}


@settings(max_examples=80, deadline=None)
@given(st.lists(_utt, min_size=1, max_size=4))
def test_select_endpoint_consistency(utts):
    j = _from_pairs(utts)
    for w, key in ((1.0, "s1"), (0.0, "s2")):
        picked = select(j, w)
        for u, hs in j.entries.items():
            best = max(getattr(h, key) for h in hs)
            first = next(h for h in hs if getattr(h, key) == best)
            assert picked[u].words == first.words


# -- grid search --------------------------------------------------------------


def test_grid_points():
    assert Grid.parse("0:1:0.25").points() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert grid_points(Grid(0.2, 0.3, 0.05)) == [0.0, 0.2, 0.25, 0.3, 1.0]
    assert Grid(0, 0.1, 0.03).points()[-1] == 0.1
    assert len(Grid(0, 1, 0.001).points()) == 1001
    for bad in ("0:1", "0:1:0", "0.5:0.2:0.1", "x:y:z"):
        with pytest.raises(ConfigError):
            Grid.parse(bad)


def test_grid_identical_systems_picks_half():
    j = scored({"u1": [("a", -1.0, -1.0), ("b", -2.0, -2.0)], "u2": [("c", -3.0, -3.0), ("d", -1.0, -1.0)]})
    refs = {"u1": W("a"), "u2": W("c")}
    res = grid_search_weight(j, refs)
    assert res.best_w1 == 0.5
    assert len(set(res.wer)) == 1


def test_grid_endpoints_only():
    j = scored({"u1": [("a", -1.0, -2.0), ("b", -2.0, -1.0)], "u2": [("c", -1.0, -2.0), ("d", -2.0, -1.0)]})
    refs = {"u1": W("b"), "u2": W("d")}
    res = grid_search_weight(j, refs, [0.0, 1.0])
    assert res.grid == [0.0, 1.0]
    assert res.best_w1 == 0.0 and res.dev_wer == 0.0
    assert res.dev_wer <= min(res.wer)


def test_grid_interior_minimum():
    # u3's reference is ranked 2nd by both systems and only wins for
    # 1/3 < w1 < 2/3; u1 needs w1 > 0.55, u2 needs w1 < 0.75
    j = scored({
        "u1": [("r1", -1.0, -2.1), ("x1", -2.0, -0.875)],
        "u2": [("x2", -1.0, -4.0), ("r2", -1.75, -1.75)],
        "u3": [("s1", -1.0, -4.0), ("r3", -2.0, -2.0), ("s2", -4.0, -1.0)],
    })
    refs = {"u1": W("r1"), "u2": W("r2"), "u3": W("r3")}
    res = grid_search_weight(j, refs)
    assert res.dev_wer == 0.0
    assert res.errors[res.grid.index(0.0)] > 0 and res.errors[res.grid.index(1.0)] > 0
    assert res.best_w1 == 0.551
    coarse = grid_search_weight(j, refs, Grid(0, 1, 0.05))
    assert coarse.best_w1 == 0.6
    assert res.to_dict() == {"grid": res.grid, "wer": res.wer, "best_w1": 0.551, "dev_wer": 0.0}


def test_grid_threads_and_determinism(monkeypatch):
    rng = np.random.default_rng(7)
    d = {f"u{i}": [(f"h{k}", *rng.normal(size=2)) for k in range(4)] for i in range(15)}
    refs = {f"u{i}": W(f"h{rng.integers(4)}") for i in range(15)}
    j = scored(d)
    a = grid_search_weight(j, refs, threads=1)
    b = grid_search_weight(j, refs, threads=4)
    assert a == b == grid_search_weight(j, refs, threads=1)


@settings(max_examples=40, deadline=None)
@given(st.lists(_utt, min_size=1, max_size=4), st.lists(st.integers(0, 4), min_size=4, max_size=4))
def test_tuned_never_worse_than_endpoints_and_oracle_below(utts, ref_idx):
    j = _from_pairs(utts)
    refs = {u: W(f"h{ref_idx[i] % len(hs)}") if i % 2 == 0 else W("zz") for i, (u, hs) in
            enumerate(j.entries.items())}
    res = grid_search_weight(j, refs, Grid(0, 1, 0.1))
    at = dict(zip(res.grid, res.wer))
    assert res.dev_wer <= at[0.0] and res.dev_wer <= at[1.0]
    floor = oracle_wer(j, refs).wer
    for w in res.grid:
        sel = select(j, w)
        got = corpus_wer({u: h.words for u, h in sel.items()}, refs).wer
        assert floor <= got
        assert got == at[w]
