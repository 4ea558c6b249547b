"""Sequence-level scorers for each model family.

All time-synchronous scorers take a posteriorgram and a label index
sequence and return a :class:`ScoreBreakdown`. In ``"max"`` mode the best
alignment is chosen on the prior-corrected per-frame score (posterior
divided by prior**scale inside the maximum) and every term of the
breakdown is read off that single alignment. In ``"sum"`` mode the
corrected scores are marginalized over all alignments; the terms are then
not separable per path, so the marginal goes to ``am`` in full and the
prior/transition terms are reported as 0.

Scales: ``lm_scale`` multiplies the external LM log-probability,
``prior_scale`` the subtracted label prior / internal LM,
``transition_scale`` the HMM loop/forward log-probabilities and
``length_exponent`` the AED length normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .arpa import NgramModel, ngram_logprob
from .errors import ConfigError, ResourceError
from .hypcore import PosteriorGram, PriorTable, TransitionModel

__all__ = [
    "ScoreBreakdown",
    "ctc_path_score",
    "ctc_sequence_score",
    "transducer_sequence_score",
    "hmm_sequence_score",
    "aed_sequence_score",
    "passthrough_score",
    "ngram_logprob",
    "DEFAULT_LM_SCALE",
    "DEFAULT_PRIOR_SCALE",
    "DEFAULT_TRANSITION_SCALE",
    "DEFAULT_LENGTH_EXPONENT",
]

NEG_INF = -math.inf

# conventional values, not taken from any published setup
DEFAULT_LM_SCALE = 1.0
DEFAULT_PRIOR_SCALE = 0.3
DEFAULT_TRANSITION_SCALE = 1.0
DEFAULT_LENGTH_EXPONENT = 1.0


@dataclass(frozen=True)
class ScoreBreakdown:
    am: float = 0.0
    lm: float = 0.0
    ilm_or_prior: float = 0.0
    transition: float = 0.0
    length_norm: float = 0.0
    feasible: bool = True
    path: tuple | None = None

    @property
    def total(self) -> float:
        return self.am + self.lm + self.ilm_or_prior + self.transition + self.length_norm

    def as_dict(self):
        return {
            "am": self.am,
            "lm": self.lm,
            "ilm_or_prior": self.ilm_or_prior,
            "transition": self.transition,
            "length_norm": self.length_norm,
            "total": self.total,
            "feasible": self.feasible,
        }


def _err(cls, msg, **kw):
    return cls(msg, module="scorers", **kw)


def _check_mode(mode):
    if mode not in ("max", "sum"):
        raise _err(ConfigError, f"unknown alignment mode {mode!r}")


def _check_labels(labels, V):
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.size and (labels.min() < 0 or labels.max() >= V):
        raise _err(ConfigError, f"label index out of range [0, {V}): {labels.tolist()}")
    return labels


def _combine(stack, mode):
    """Reduce candidate scores along axis 0; returns (best, argmax or None)."""
    if mode == "max":
        idx = np.argmax(stack, axis=0)
        return np.take_along_axis(stack, idx[None], axis=0)[0], idx
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.logaddexp.reduce(stack, axis=0), None


def _lm_term(words, lm, lm_scale):
    if lm is None or lm_scale == 0.0:
        return 0.0
    return lm_scale * ngram_logprob(lm, words)


def _prior_grid(prior, V, scale):
    """Prior as a (context, label) grid, broadcasting an order-0 table."""
    if scale == 0.0:
        return np.zeros((V + 1, V + 1))
    if prior is None:
        raise _err(ConfigError, "a non-zero prior scale needs a prior/ILM table",
                   hint="pass a prior file or set the prior scale to 0")
    if prior.V != V:
        raise _err(ConfigError, f"prior has V={prior.V}, posteriorgram V={V}")
    if prior.order == 0:
        return np.broadcast_to(prior.values, (V + 1, V + 1))
    return prior.values


def _pg_grid(pg):
    if pg.order == 0:
        return np.broadcast_to(pg.values[:, None, :], (pg.T, pg.V + 1, pg.V + 1))
    return pg.values


# ---------------------------------------------------------------------------
# CTC


def _ctc_min_frames(labels) -> int:
    return len(labels) + int(np.sum(labels[1:] == labels[:-1])) if len(labels) else 0


def _ctc_lattice(emis, labels, blank, mode):
    """Best (or total) score over CTC alignments; emis is (T, V+1)."""
    T = emis.shape[0]
    M = len(labels)
    S = 2 * M + 1
    sym = np.full(S, blank, dtype=np.int64)
    sym[1::2] = labels
    skip = np.zeros(S, dtype=bool)
    if M > 1:
        skip[3::2] = labels[1:] != labels[:-1]
    alpha = np.full(S, NEG_INF)
    alpha[0] = emis[0, blank]
    if M:
        alpha[1] = emis[0, sym[1]]
    pad = np.full(2, NEG_INF)
    back = np.zeros((T, S), dtype=np.int8)
    for t in range(1, T):
        c1 = np.concatenate([pad[:1], alpha])[:S]
        c2 = np.concatenate([pad, alpha])[:S]
        c2[~skip] = NEG_INF
        best, idx = _combine(np.stack([alpha, c1, c2]), mode)
        if idx is not None:
            back[t] = idx
        alpha = best + emis[t, sym]
    finals = [S - 1] + ([S - 2] if M else [])
    if mode == "sum":
        with np.errstate(invalid="ignore", divide="ignore"):
            return float(np.logaddexp.reduce(alpha[finals])), None
    s = max(finals, key=lambda k: (alpha[k], k == S - 1))
    value = float(alpha[s])
    if value == NEG_INF:
        return value, None
    path = [0] * T
    for t in range(T - 1, -1, -1):
        path[t] = int(sym[s])
        s -= int(back[t, s])
    return value, tuple(path)


def ctc_path_score(pg: PosteriorGram, labels: Sequence[int], mode: str = "max") -> float:
    """Log-probability of ``labels`` under CTC: best alignment (``max``) or
    all alignments (``sum``). Returns ``-inf`` if the labels cannot fit in
    the available frames."""
    _check_mode(mode)
    if pg.order != 0:
        raise _err(ConfigError, "CTC scoring needs a context-order 0 posteriorgram")
    labels = _check_labels(labels, pg.V)
    if _ctc_min_frames(labels) > pg.T:
        return NEG_INF
    return _ctc_lattice(pg.values, labels, pg.blank, mode)[0]


def ctc_sequence_score(
    pg: PosteriorGram,
    labels: Sequence[int],
    words: Sequence[str] = (),
    lm: NgramModel | None = None,
    prior: PriorTable | None = None,
    lm_scale: float = DEFAULT_LM_SCALE,
    prior_scale: float = DEFAULT_PRIOR_SCALE,
    mode: str = "max",
) -> ScoreBreakdown:
    _check_mode(mode)
    if pg.order != 0:
        raise _err(ConfigError, "CTC scoring needs a context-order 0 posteriorgram")
    labels = _check_labels(labels, pg.V)
    if prior is not None and prior_scale != 0.0 and prior.order != 0:
        raise _err(ConfigError, "CTC scoring needs an order-0 label prior")
    log_prior = _prior_grid(prior, pg.V, prior_scale)[0]
    lm_term = _lm_term(words, lm, lm_scale)
    if _ctc_min_frames(labels) > pg.T:
        return ScoreBreakdown(am=NEG_INF, lm=lm_term, feasible=False)
    emis = pg.values - prior_scale * log_prior
    value, path = _ctc_lattice(emis, labels, pg.blank, mode)
    if mode == "sum":
        return ScoreBreakdown(am=value, lm=lm_term)
    if path is None:
        return ScoreBreakdown(am=NEG_INF, lm=lm_term)
    idx = np.array(path)
    am = float(pg.values[np.arange(pg.T), idx].sum())
    corr = -prior_scale * float(log_prior[idx].sum())
    return ScoreBreakdown(am=am, lm=lm_term, ilm_or_prior=corr, path=path)


# ---------------------------------------------------------------------------
# strictly monotonic transducer


def transducer_sequence_score(
    pg: PosteriorGram,
    labels: Sequence[int],
    words: Sequence[str] = (),
    lm: NgramModel | None = None,
    ilm: PriorTable | None = None,
    lm_scale: float = DEFAULT_LM_SCALE,
    prior_scale: float = DEFAULT_PRIOR_SCALE,
    mode: str = "max",
) -> ScoreBreakdown:
    """Transducer with first-order label context and exactly one output
    symbol (label or blank) per frame. The posterior and the internal LM at
    each frame are conditioned on the last emitted label (sentence-begin
    before the first one)."""
    _check_mode(mode)
    V, T, blank = pg.V, pg.T, pg.blank
    labels = _check_labels(labels, V)
    M = len(labels)
    ilm_grid = _prior_grid(ilm, V, prior_scale)
    lm_term = _lm_term(words, lm, lm_scale)
    if M > T:
        return ScoreBreakdown(am=NEG_INF, lm=lm_term, feasible=False)
    post = _pg_grid(pg)
    ctx = np.concatenate([[blank], labels])  # ctx[m]: context after m emissions
    corr = post - prior_scale * ilm_grid[None]
    stay = corr[:, ctx, blank]  # (T, M+1)
    emit = corr[:, ctx[:-1], labels]  # (T, M): emitting labels[m] from m
    q = np.full(M + 1, NEG_INF)
    q[0] = 0.0
    back = np.zeros((T, M + 1), dtype=np.int8)
    for t in range(T):
        adv = np.concatenate([[NEG_INF], q[:-1] + emit[t]])
        best, idx = _combine(np.stack([q + stay[t], adv]), mode)
        if idx is not None:
            back[t] = idx
        q = best
    value = float(q[M])
    if mode == "sum":
        return ScoreBreakdown(am=value, lm=lm_term)
    if value == NEG_INF:
        return ScoreBreakdown(am=NEG_INF, lm=lm_term)
    path = [None] * T
    m = M
    for t in range(T - 1, -1, -1):
        if back[t, m]:
            m -= 1
            path[t] = (int(ctx[m]), int(labels[m]))
        else:
            path[t] = (int(ctx[m]), blank)
    c, y = np.array(path).T
    am = float(post[np.arange(T), c, y].sum())
    ilm_term = -prior_scale * float(ilm_grid[c, y].sum())
    return ScoreBreakdown(am=am, lm=lm_term, ilm_or_prior=ilm_term, path=tuple(path))


# ---------------------------------------------------------------------------
# HMM (factored hybrid / monophone)


def hmm_sequence_score(
    pg: PosteriorGram,
    labels: Sequence[int],
    words: Sequence[str] = (),
    lm: NgramModel | None = None,
    prior: PriorTable | None = None,
    trans: TransitionModel | None = None,
    lm_scale: float = DEFAULT_LM_SCALE,
    prior_scale: float = DEFAULT_PRIOR_SCALE,
    transition_scale: float = DEFAULT_TRANSITION_SCALE,
    mode: str = "max",
) -> ScoreBreakdown:
    """One HMM state per label, each occupying one or more consecutive
    frames (loop/forward, no skips, no blank).

    Each frame scores the (left label, current label) posterior over the
    prior of the same pair; the first label sees the sentence-begin
    context. An order-0 posteriorgram and prior give the context-free
    (monophone) variant.
    """
    _check_mode(mode)
    V, T = pg.V, pg.T
    labels = _check_labels(labels, V)
    M = len(labels)
    prior_grid = _prior_grid(prior, V, prior_scale)
    lm_term = _lm_term(words, lm, lm_scale)
    if M == 0 or M > T:
        return ScoreBreakdown(am=NEG_INF, lm=lm_term, feasible=False)
    if trans is None:
        if transition_scale != 0.0:
            raise _err(ConfigError, "a non-zero transition scale needs a transition model")
        loop = fwd = 0.0
    else:
        loop = transition_scale * trans.loop
        fwd = transition_scale * trans.forward
    post = _pg_grid(pg)
    ctx = np.concatenate([[pg.blank], labels[:-1]])  # left context of state m
    raw = post[:, ctx, labels]  # (T, M)
    corr = raw - prior_scale * prior_grid[ctx, labels][None]
    q = np.full(M, NEG_INF)
    q[0] = corr[0, 0]
    back = np.zeros((T, M), dtype=np.int8)
    for t in range(1, T):
        adv = np.concatenate([[NEG_INF], q[:-1] + fwd])
        best, idx = _combine(np.stack([q + loop, adv]), mode)
        if idx is not None:
            back[t] = idx
        q = best + corr[t]
    value = float(q[M - 1])
    if mode == "sum":
        return ScoreBreakdown(am=value, lm=lm_term)
    if value == NEG_INF:
        return ScoreBreakdown(am=NEG_INF, lm=lm_term)
    states = [0] * T
    m = M - 1
    for t in range(T - 1, -1, -1):
        states[t] = m
        m -= int(back[t, m])
    s = np.array(states)
    n_fwd = M - 1
    am = float(raw[np.arange(T), s].sum())
    prior_term = -prior_scale * float(prior_grid[ctx[s], labels[s]].sum())
    trans_term = (T - 1 - n_fwd) * loop + n_fwd * fwd
    path = tuple((int(ctx[k]), int(labels[k])) for k in s)
    return ScoreBreakdown(am=am, lm=lm_term, ilm_or_prior=prior_term, transition=trans_term, path=path)


# ---------------------------------------------------------------------------
# AED and stored scores


def aed_sequence_score(
    label_logprobs: Sequence[float],
    length_exponent: float = DEFAULT_LENGTH_EXPONENT,
    length_norm: str = "log",
) -> ScoreBreakdown:
    """Sum of per-step log-probabilities (EOS step included, so M counts it)
    with length normalization.

    ``length_norm="log"`` adds ``-length_exponent * ln M``, i.e. the log of
    dividing the sequence probability by ``M**length_exponent``.
    ``"divide"`` instead divides the log-score by ``M**length_exponent``.
    """
    steps = np.asarray(label_logprobs, dtype=np.float64).reshape(-1)
    M = steps.size
    if M == 0:
        raise _err(ConfigError, "AED step scores are empty (the EOS step is required)")
    am = float(steps.sum())
    if length_norm == "log":
        norm = -length_exponent * math.log(M)
    elif length_norm == "divide":
        norm = am / M ** length_exponent - am if am != NEG_INF else 0.0
    else:
        raise _err(ConfigError, f"unknown length normalization {length_norm!r}")
    return ScoreBreakdown(am=am, length_norm=norm)


def passthrough_score(hyp, name: str) -> float:
    """Stored score ``name`` of ``hyp``, unchanged."""
    try:
        return hyp.scores[name]
    except KeyError:
        words = " ".join(getattr(hyp, "words", ()))
        raise _err(
            ResourceError,
            f"hypothesis {words!r} has no score {name!r}",
            hint=f"add '{name}' to the scores of every N-best record",
        ) from None
