"""Joint N-best lists, two-system rescoring, log-linear selection and
grid-search tuning of the interpolation weight."""

from __future__ import annotations

import dataclasses
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, NbfError, UtteranceMismatchError
from .metrics import _ref, edit_distance

__all__ = [
    "JointHyp",
    "JointList",
    "Grid",
    "GridResult",
    "join_nbest",
    "rescore",
    "select",
    "combined_scores",
    "grid_search_weight",
    "grid_points",
    "thread_count",
]

SELECT_TIE_BREAKS = ("prefer-system1-rank", "prefer-system2-rank")
NORMALIZATIONS = ("none", "zscore")


def thread_count(default: int = 1) -> int:
    """Worker cap from ``NBF_THREADS``."""
    raw = os.environ.get("NBF_THREADS")
    if not raw:
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"NBF_THREADS must be an integer, got {raw!r}", module="combine")
    return max(1, n)


@dataclass(frozen=True)
class JointHyp:
    words: tuple[str, ...]
    labels: Mapping[int, tuple[str, ...]]
    scores: Mapping[str, float]  # original scores as "<system>:<name>"
    source: str
    ranks: Mapping[int, int]  # 1-based rank in each originating list
    s1: float | None = None
    s2: float | None = None

    __hash__ = None


@dataclass
class JointList:
    entries: dict[str, list[JointHyp]] = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, utt):
        return self.entries[utt]

    def utts(self):
        return list(self.entries)

    def is_rescored(self):
        return all(h.s1 is not None and h.s2 is not None for hs in self.entries.values() for h in hs)


def _check_same_utts(a, b, what="N-best lists"):
    if set(a) != set(b):
        raise UtteranceMismatchError(f"{what} cover different utterances",
                                     set(a) - set(b), set(b) - set(a), module="combine")


def join_nbest(a, b) -> JointList:
    """Union of two systems' lists per utterance, keyed by normalized words.

    System-1 hypotheses come first in their original order, followed by the
    hypotheses only system 2 produced.
    """
    _check_same_utts(a.entries, b.entries)
    joint = {}
    for utt in a.entries:
        merged: dict[tuple, JointHyp] = {}
        for system, hyps in ((1, a.entries[utt]), (2, b.entries[utt])):
            for rank, h in enumerate(hyps, 1):
                scores = {f"{system}:{k}": v for k, v in h.scores.items()}
                prev = merged.get(h.words)
                if prev is None:
                    merged[h.words] = JointHyp(h.words, {system: h.labels}, scores,
                                               f"system{system}", {system: rank})
                elif system not in prev.labels:
                    merged[h.words] = dataclasses.replace(
                        prev,
                        labels={**prev.labels, system: h.labels},
                        scores={**prev.scores, **scores},
                        source="both",
                        ranks={**prev.ranks, system: rank},
                    )
        joint[utt] = list(merged.values())
    return JointList(joint)


def rescore(joint: JointList, scorer1, scorer2, threads: int | None = None) -> JointList:
    """Populate ``s1``/``s2`` of every hypothesis with the two scorers' totals."""
    threads = threads or thread_count()
    utts = joint.utts()

    def one(utt):
        out = []
        for h in joint.entries[utt]:
            b1 = scorer1.score(utt, h, utts)
            b2 = scorer2.score(utt, h, utts)
            out.append(dataclasses.replace(h, s1=b1.total, s2=b2.total))
        return out

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(one, utts))
    else:
        results = [one(u) for u in utts]
    return JointList(dict(zip(utts, results)))


# ---------------------------------------------------------------------------
# selection


def _normalize(col: np.ndarray, how: str) -> np.ndarray:
    finite = np.isfinite(col)
    if not finite.any():
        return col
    if how == "zscore":
        mu = col[finite].mean()
        sd = col[finite].std()
        return np.where(finite, (col - mu) / sd if sd > 0 else 0.0, col)
    # shift so the best finite score is 0; selection is unaffected, and
    # equal per-utterance offsets cancel exactly
    return col - col[finite].max()


class _ScoreMatrix:
    """Padded (utterance x hypothesis) score arrays in tie-break order."""

    def __init__(self, joint: JointList, tie_break: str, normalize: str):
        if tie_break not in SELECT_TIE_BREAKS:
            raise ConfigError(f"unknown tie-break {tie_break!r}", module="combine")
        if normalize not in NORMALIZATIONS:
            raise ConfigError(f"unknown score normalization {normalize!r}", module="combine")
        self.utts = joint.utts()
        width = max((len(h) for h in joint.entries.values()), default=0)
        U = len(self.utts)
        self.s1 = np.full((U, max(width, 1)), -math.inf)
        self.s2 = np.full((U, max(width, 1)), -math.inf)
        self.order = []
        for i, utt in enumerate(self.utts):
            hyps = joint.entries[utt]
            if not hyps:
                raise NbfError(f"empty joint list for {utt!r}", module="combine", utt=utt)
            if any(h.s1 is None or h.s2 is None for h in hyps):
                raise NbfError(f"joint list for {utt!r} is not rescored", module="combine", utt=utt,
                               hint="run rescore() before select()")
            order = list(range(len(hyps)))
            if tie_break == "prefer-system2-rank":
                order.sort(key=lambda k: (hyps[k].ranks.get(2, math.inf), k))
            self.order.append(order)
            self.s1[i, : len(hyps)] = _normalize(np.array([hyps[k].s1 for k in order]), normalize)
            self.s2[i, : len(hyps)] = _normalize(np.array([hyps[k].s2 for k in order]), normalize)

    def combined(self, w1: float) -> np.ndarray:
        if w1 == 1.0:
            return self.s1
        if w1 == 0.0:
            return self.s2
        return w1 * self.s1 + (1.0 - w1) * self.s2

    def argmax(self, w1: float) -> np.ndarray:
        # first maximum wins: pads sit at the end, so an all -inf row picks column 0
        return np.argmax(self.combined(w1), axis=1)

    def picks(self, w1: float) -> list[int]:
        cols = self.argmax(w1)
        return [self.order[i][c] for i, c in enumerate(cols)]


def _check_weight(w1):
    if not (0.0 <= w1 <= 1.0):
        raise ConfigError(f"weight w1={w1} outside [0, 1]", module="combine")


def combined_scores(joint: JointList, w1: float, normalize: str = "none") -> dict[str, list[float]]:
    """``w1*s1 + (1-w1)*s2`` per hypothesis after per-utterance normalization."""
    _check_weight(w1)
    mat = _ScoreMatrix(joint, "prefer-system1-rank", normalize)
    comb = mat.combined(w1)
    return {u: comb[i, : len(joint.entries[u])].tolist() for i, u in enumerate(mat.utts)}


def select(joint: JointList, w1: float, tie_break: str = "prefer-system1-rank",
           normalize: str = "none") -> dict[str, JointHyp]:
    """Pick the hypothesis maximizing ``w1*s1 + (1-w1)*s2`` per utterance.

    A ``-inf`` score only matters when its weight is non-zero. Ties go to
    the earliest hypothesis of the joint list (``prefer-system1-rank``) or
    to the best system-2 rank (``prefer-system2-rank``).
    """
    _check_weight(w1)
    mat = _ScoreMatrix(joint, tie_break, normalize)
    return {u: joint.entries[u][k] for u, k in zip(mat.utts, mat.picks(w1))}


# ---------------------------------------------------------------------------
# grid search


@dataclass(frozen=True)
class Grid:
    start: float = 0.0
    stop: float = 1.0
    step: float = 0.05

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigError("grid step must be > 0", module="combine")
        if not (0.0 <= self.start <= self.stop <= 1.0):
            raise ConfigError(f"grid {self.start}:{self.stop} must lie within [0, 1]", module="combine")

    @classmethod
    def parse(cls, text: str) -> "Grid":
        """``"a:b:step"``."""
        try:
            a, b, s = (float(x) for x in text.split(":"))
        except ValueError:
            raise ConfigError(f"bad grid {text!r}", module="combine", hint="use start:stop:step, e.g. 0:1:0.01")
        return cls(a, b, s)

    def points(self) -> list[float]:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9))
        pts = [round(self.start + i * self.step, 12) for i in range(n + 1)]
        if self.stop - pts[-1] > 1e-12:
            pts.append(self.stop)
        return pts


def grid_points(grid) -> list[float]:
    """Sorted unique weights of a Grid or explicit sequence, always with 0 and 1."""
    pts = grid.points() if isinstance(grid, Grid) else [float(w) for w in grid]
    for w in pts:
        _check_weight(w)
    return sorted(set(pts) | {0.0, 1.0})


@dataclass
class GridResult:
    best_w1: float
    dev_wer: float
    grid: list[float]
    wer: list[float]
    errors: list[int]
    ref_words: int

    def to_dict(self):
        return {"grid": self.grid, "wer": self.wer, "best_w1": self.best_w1, "dev_wer": self.dev_wer}


def _best(points, errors):
    # lowest error count; ties -> closest to 0.5, then the smaller weight
    return min(zip(points, errors), key=lambda pe: (pe[1], abs(pe[0] - 0.5), pe[0]))[0]


def grid_search_weight(joint: JointList, refs, grid=None, tie_break: str = "prefer-system1-rank",
                       normalize: str = "none", threads: int | None = None) -> GridResult:
    """Dev WER of :func:`select` at each grid weight; returns the minimizer.

    ``grid=None`` runs a coarse pass (step 0.05 over [0, 1]) and then a fine
    pass (step 0.001) within 0.05 of the coarse optimum.
    """
    mat = _ScoreMatrix(joint, tie_break, normalize)
    errs = np.zeros_like(mat.s1, dtype=np.int64)
    ref_words = 0
    for i, utt in enumerate(mat.utts):
        ref = _ref(refs, utt)
        ref_words += len(ref)
        hyps = joint.entries[utt]
        for col, k in enumerate(mat.order[i]):
            errs[i, col] = edit_distance(hyps[k].words, ref).errors
    rows = np.arange(len(mat.utts))
    threads = threads or thread_count()

    evaluated: dict[float, int] = {}

    def run(points):
        todo = [w for w in points if w not in evaluated]
        count = lambda w: int(errs[rows, mat.argmax(w)].sum())  # noqa: E731
        if threads > 1 and len(todo) > 1:
            with ThreadPoolExecutor(threads) as ex:
                results = list(ex.map(count, todo))
        else:
            results = [count(w) for w in todo]
        evaluated.update(zip(todo, results))

    if grid is None:
        coarse = grid_points(Grid(0.0, 1.0, 0.05))
        run(coarse)
        wc = _best(coarse, [evaluated[w] for w in coarse])
        run(grid_points(Grid(max(0.0, round(wc - 0.05, 12)), min(1.0, round(wc + 0.05, 12)), 0.001)))
    else:
        run(grid_points(grid))

    pts = sorted(evaluated)
    errors = [evaluated[w] for w in pts]
    if ref_words == 0:
        raise NbfError("no reference words on the tuning set", module="combine")
    best = _best(pts, errors)
    wer = [100.0 * e / ref_words for e in errors]
    return GridResult(best, 100.0 * evaluated[best] / ref_words, pts, wer, errors, ref_words)


def selection_words(selection: Mapping[str, JointHyp]) -> dict[str, Sequence[str]]:
    return {u: h.words for u, h in selection.items()}
