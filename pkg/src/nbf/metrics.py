"""Edit-distance alignment, corpus/oracle WER, length-binned WER and N-best
overlap statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import ConfigError, NbfError, UtteranceMismatchError

__all__ = [
    "EditStats",
    "EvalReport",
    "LengthBin",
    "edit_distance",
    "corpus_wer",
    "oracle_wer",
    "oracle_select",
    "wer_by_length",
    "default_length_bins",
    "parse_bins",
    "overlap_histogram",
]


@dataclass(frozen=True)
class EditStats:
    substitutions: int = 0
    insertions: int = 0
    deletions: int = 0
    ref_len: int = 0

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    def __add__(self, other: "EditStats") -> "EditStats":
        return EditStats(
            self.substitutions + other.substitutions,
            self.insertions + other.insertions,
            self.deletions + other.deletions,
            self.ref_len + other.ref_len,
        )


@dataclass(frozen=True)
class LengthBin:
    lo: int
    hi: int | None  # None = open-ended
    wer: float | None
    ref_words: int
    errors: int
    num_utts: int

    @property
    def label(self) -> str:
        return f"{self.lo}-" + ("inf" if self.hi is None else str(self.hi))


@dataclass
class EvalReport:
    wer: float
    substitutions: int
    insertions: int
    deletions: int
    ref_words: int
    per_utt: dict[str, EditStats] = field(default_factory=dict)
    oracle_wer: float | None = None
    length_bins: list[LengthBin] = field(default_factory=list)
    overlap_histogram: list[tuple[int, int]] = field(default_factory=list)

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions


def edit_distance(hyp: Sequence[str], ref: Sequence[str]) -> EditStats:
    """Minimal unit-cost alignment of ``hyp`` against ``ref``.

    When several alignments share the minimal cost the backtrace prefers a
    substitution (or match), then an insertion, then a deletion, so the
    per-class split is deterministic.
    """
    n, m = len(hyp), len(ref)
    # d[i][j]: cost of aligning hyp[:i] with ref[:j]
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        d[i][0] = i
    for j in range(1, m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        hi = hyp[i - 1]
        row, prev = d[i], d[i - 1]
        for j in range(1, m + 1):
            row[j] = min(
                prev[j - 1] + (hi != ref[j - 1]),
                prev[j] + 1,
                row[j - 1] + 1,
            )
    sub = ins = dele = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and d[i][j] == d[i - 1][j - 1] + (hyp[i - 1] != ref[j - 1]):
            sub += hyp[i - 1] != ref[j - 1]
            i, j = i - 1, j - 1
        elif i > 0 and d[i][j] == d[i - 1][j] + 1:
            ins += 1
            i -= 1
        else:
            dele += 1
            j -= 1
    return EditStats(sub, ins, dele, m)


def _report(per_utt: Mapping[str, EditStats]) -> EvalReport:
    total = EditStats()
    for st in per_utt.values():
        total = total + st
    if total.ref_len == 0:
        raise NbfError("no reference words to score", module="metrics",
                       hint="check that the hypothesis set is non-empty")
    return EvalReport(
        wer=100.0 * total.errors / total.ref_len,
        substitutions=total.substitutions,
        insertions=total.insertions,
        deletions=total.deletions,
        ref_words=total.ref_len,
        per_utt=dict(per_utt),
    )


def _ref(refs, utt):
    try:
        return refs[utt]
    except KeyError:
        raise NbfError(f"missing reference for utterance {utt!r}", module="metrics", utt=utt,
                       hint="every scored utterance needs exactly one reference") from None


def corpus_wer(hyps: Mapping[str, Sequence[str]], refs: Mapping[str, Sequence[str]]) -> EvalReport:
    """WER in percent over all utterances of ``hyps``."""
    return _report({u: edit_distance(h, _ref(refs, u)) for u, h in hyps.items()})


def oracle_select(joint, refs, n: int | None = None) -> dict[str, int]:
    """Index of the hypothesis closest to the reference per utterance
    (first one on ties), looking only at the first ``n`` entries."""
    chosen = {}
    for utt, hyps in _entries(joint).items():
        hyps = hyps[:n] if n else hyps
        if not hyps:
            raise NbfError(f"empty hypothesis list for {utt!r}", module="metrics", utt=utt)
        ref = _ref(refs, utt)
        best, best_err = 0, math.inf
        for k, h in enumerate(hyps):
            e = edit_distance(h.words, ref).errors
            if e < best_err:
                best, best_err = k, e
        chosen[utt] = best
    return chosen


def oracle_wer(joint, refs, n: int | None = None) -> EvalReport:
    """Cheating WER: best hypothesis of each list scored against its reference."""
    entries = _entries(joint)
    chosen = oracle_select(joint, refs, n)
    report = corpus_wer({u: entries[u][k].words for u, k in chosen.items()}, refs)
    report.oracle_wer = report.wer
    return report


def _entries(corpus):
    return corpus.entries if hasattr(corpus, "entries") else corpus


def default_length_bins(width: int = 5, last: int = 50) -> list[tuple[int, int | None]]:
    bins = [(lo, lo + width - 1) for lo in range(1, last + 1, width)]
    return bins + [(last + 1, None)]


def parse_bins(spec: str) -> list[tuple[int, int | None]]:
    """``"1-5,6-10,11-"`` -> [(1, 5), (6, 10), (11, None)]."""
    bins = []
    for item in spec.split(","):
        lo, _, hi = item.strip().partition("-")
        try:
            bins.append((int(lo), int(hi) if hi.strip() else None))
        except ValueError:
            raise ConfigError(f"bad bin {item!r}", module="metrics", hint="use e.g. 1-5,6-10,11-")
    return bins


def _check_bins(bins):
    if not bins:
        raise ConfigError("no length bins given", module="metrics")
    ordered = sorted(bins, key=lambda b: b[0])
    expect = 1
    for idx, (lo, hi) in enumerate(ordered):
        if hi is not None and hi < lo:
            raise ConfigError(f"empty bin {lo}-{hi}", module="metrics")
        if lo < expect:
            raise ConfigError(f"overlapping length bins at {lo}", module="metrics")
        if lo > expect:
            raise ConfigError(f"length bins leave a gap at {expect}-{lo - 1}", module="metrics")
        if hi is None:
            if idx != len(ordered) - 1:
                raise ConfigError(f"overlapping length bins after open bin {lo}-", module="metrics")
            return ordered
        expect = hi + 1
    raise ConfigError("length bins must partition [1, inf): last bin must be open-ended",
                      module="metrics")


def wer_by_length(hyps, refs, bins=None) -> list[LengthBin]:
    """WER per bin of reference word count; empty bins get ``wer=None``."""
    bins = _check_bins(bins if bins is not None else default_length_bins())
    acc = {b: [0, 0, 0] for b in bins}  # errors, ref words, utts
    for utt, h in hyps.items():
        ref = _ref(refs, utt)
        st = edit_distance(h, ref)
        for b in bins:
            if b[0] <= len(ref) and (b[1] is None or len(ref) <= b[1]):
                a = acc[b]
                a[0] += st.errors
                a[1] += st.ref_len
                a[2] += 1
                break
    out = []
    for (lo, hi), (err, words, utts) in acc.items():
        out.append(LengthBin(lo, hi, 100.0 * err / words if words else None, words, err, utts))
    return out


def overlap_histogram(list_a, list_b, n: int) -> list[tuple[int, int]]:
    """For each utterance count the word sequences shared by the top-``n`` of
    both lists; return ``[(k, num_utterances) for k in 0..n]``."""
    a, b = _entries(list_a), _entries(list_b)
    if set(a) != set(b):
        raise UtteranceMismatchError(
            "N-best lists cover different utterances",
            set(a) - set(b), set(b) - set(a), module="metrics",
        )
    if n < 1:
        raise ConfigError("overlap depth n must be >= 1", module="metrics")
    hist = [0] * (n + 1)
    for utt in a:
        wa = {h.words for h in a[utt][:n]}
        wb = {h.words for h in b[utt][:n]}
        hist[len(wa & wb)] += 1
    return list(enumerate(hist))
