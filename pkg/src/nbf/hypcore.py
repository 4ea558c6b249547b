"""Data model and file I/O: N-best lists, references, lexicons and the
text-grid formats (posteriorgrams, priors, transitions, AED step scores).

All parsed objects are treated as immutable after load.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, FormatError

__all__ = [
    "Hypothesis",
    "NBestCorpus",
    "RefMap",
    "Lexicon",
    "WordRule",
    "PosteriorGram",
    "PriorTable",
    "TransitionModel",
    "labels_to_words",
    "normalize_words",
    "parse_nbest",
    "write_nbest",
    "parse_refs",
    "write_refs",
    "parse_lexicon",
    "parse_posteriorgram",
    "write_posteriorgram",
    "parse_prior",
    "write_prior",
    "estimate_prior",
    "parse_transitions",
    "write_transitions",
    "parse_step_scores",
    "write_step_scores",
]

SOURCES = ("system1", "system2", "both")
RULES = ("bpe-marker", "phoneme-lexicon", "passthrough")
NORM_TOL = 1e-4


def _module_error(cls, *args, **kw):
    return cls(*args, module="hypcore", **kw)


# ---------------------------------------------------------------------------
# words


def normalize_words(words: Iterable[str], case: str | None = "upper") -> tuple[str, ...]:
    """Split on any whitespace, drop empties and fold case ("upper", "lower" or None)."""
    out = []
    for w in words:
        out.extend(w.split())
    if case == "upper":
        out = [w.upper() for w in out]
    elif case == "lower":
        out = [w.lower() for w in out]
    elif case is not None:
        raise _module_error(ConfigError, f"unknown case folding {case!r}")
    return tuple(out)


class Lexicon:
    """Pronunciation lexicon.

    ``prons`` maps a word to its pronunciations in file order; the reverse
    map (phoneme string -> word) keeps the first word listed for a
    pronunciation so homophones resolve deterministically.
    """

    def __init__(self, entries: Iterable[tuple[str, Sequence[str]]]):
        self.prons: dict[str, list[tuple[str, ...]]] = {}
        self.words: dict[tuple[str, ...], str] = {}
        for word, phones in entries:
            phones = tuple(phones)
            if not phones:
                raise _module_error(FormatError, f"empty pronunciation for {word!r}")
            self.prons.setdefault(word, []).append(phones)
            self.words.setdefault(phones, word)

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str]) -> "Lexicon":
        """Build from ``{"DH AH": "the", ...}``."""
        return cls((word, phones.split()) for phones, word in mapping.items())

    def word_of(self, phones: Sequence[str]) -> str | None:
        return self.words.get(tuple(phones))

    def pron_of(self, word: str, case: str | None = None) -> tuple[str, ...] | None:
        if word in self.prons:
            return self.prons[word][0]
        if case is not None:
            # lexicon words may be stored in a different case than the
            # normalized hypothesis words
            for cand in (word.lower(), word.upper(), word.capitalize()):
                if cand in self.prons:
                    return self.prons[cand][0]
        return None

    def __len__(self):
        return len(self.prons)


def parse_lexicon(path) -> Lexicon:
    """Read ``word ph1 ph2 ...`` lines (``#`` starts a comment line)."""
    entries = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 2:
                raise _module_error(
                    FormatError, "expected 'word phone...'", path=path, lineno=lineno
                )
            entries.append((parts[0], parts[1:]))
    return Lexicon(entries)


def labels_to_words(
    labels: Sequence[str],
    rule: str = "passthrough",
    lexicon: Lexicon | Mapping[str, str] | None = None,
    *,
    marker: str = "@@",
    boundary: str = "#",
    case: str | None = None,
) -> tuple[str, ...]:
    """Convert an output label sequence to words.

    ``bpe-marker`` glues every token ending in ``marker`` to its successor.
    ``phoneme-lexicon`` splits the phonemes at ``boundary`` tokens and looks
    each group up in the lexicon. ``passthrough`` treats labels as words.
    """
    if rule == "passthrough":
        words = list(labels)
    elif rule == "bpe-marker":
        words = []
        pending = ""
        for tok in labels:
            if tok.endswith(marker):
                pending += tok[: -len(marker)]
            else:
                words.append(pending + tok)
                pending = ""
        if pending:
            words.append(pending)
    elif rule == "phoneme-lexicon":
        if lexicon is None:
            raise _module_error(ConfigError, "phoneme-lexicon rule needs a lexicon")
        if not isinstance(lexicon, Lexicon):
            lexicon = Lexicon.from_mapping(lexicon)
        words = []
        group: list[str] = []
        start = 0
        for i, tok in enumerate(list(labels) + [boundary]):
            if tok != boundary:
                if not group:
                    start = i
                group.append(tok)
                continue
            if not group:
                continue
            word = lexicon.word_of(group)
            if word is None:
                raise _module_error(
                    FormatError,
                    f"phoneme span {' '.join(group)!r} at labels[{start}:{start + len(group)}]"
                    " not in lexicon",
                    hint="extend the lexicon or check the word-boundary marker",
                )
            words.append(word)
            group = []
    else:
        raise _module_error(ConfigError, f"unknown label-to-word rule {rule!r}")
    return normalize_words(words, case)


@dataclass(frozen=True)
class WordRule:
    """How a system's labels become normalized words."""

    rule: str = "passthrough"
    lexicon: Lexicon | None = None
    marker: str = "@@"
    boundary: str = "#"
    case: str | None = "upper"

    def __post_init__(self):
        if self.rule not in RULES:
            raise _module_error(ConfigError, f"unknown label-to-word rule {self.rule!r}")
        if self.rule == "phoneme-lexicon" and self.lexicon is None:
            raise _module_error(ConfigError, "phoneme-lexicon rule needs a lexicon")

    def __call__(self, labels: Sequence[str]) -> tuple[str, ...]:
        return labels_to_words(
            labels,
            self.rule,
            self.lexicon,
            marker=self.marker,
            boundary=self.boundary,
            case=self.case,
        )


# ---------------------------------------------------------------------------
# hypotheses and N-best lists


@dataclass(frozen=True)
class Hypothesis:
    labels: tuple[str, ...]
    words: tuple[str, ...]
    scores: Mapping[str, float] = field(default_factory=dict)
    source: str = "system1"

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "words", tuple(self.words))
        scores = {}
        for k, v in self.scores.items():
            v = float(v)
            if math.isnan(v) or v == math.inf:
                raise _module_error(FormatError, f"score {k!r} is {v}")
            scores[k] = v
        object.__setattr__(self, "scores", scores)
        if self.source not in SOURCES:
            raise _module_error(ConfigError, f"unknown hypothesis source {self.source!r}")

    __hash__ = None


@dataclass
class NBestCorpus:
    entries: dict[str, list[Hypothesis]] = field(default_factory=dict)
    n: int | None = None

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, utt):
        return self.entries[utt]

    def __contains__(self, utt):
        return utt in self.entries

    def utts(self):
        return list(self.entries)

    def top(self, n: int) -> "NBestCorpus":
        return NBestCorpus({u: hs[:n] for u, hs in self.entries.items()}, n=n)

    def top1(self) -> dict[str, tuple[str, ...]]:
        """First hypothesis of every utterance (empty word tuple for empty lists)."""
        return {u: (hs[0].words if hs else ()) for u, hs in self.entries.items()}


def _parse_jsonl_record(line, path, lineno):
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as e:
        raise _module_error(FormatError, f"invalid JSON ({e.msg})", path=path, lineno=lineno)
    if not isinstance(rec, dict):
        raise _module_error(FormatError, "record is not an object", path=path, lineno=lineno)
    try:
        utt = rec["utt"]
        labels = rec["labels"]
    except KeyError as e:
        raise _module_error(
            FormatError, f"missing field {e.args[0]!r}", path=path, lineno=lineno
        )
    rank = rec.get("rank")
    scores = rec.get("scores", {})
    if not isinstance(utt, str) or not isinstance(labels, list):
        raise _module_error(FormatError, "utt must be a string and labels a list", path=path, lineno=lineno)
    if not all(isinstance(x, str) for x in labels):
        raise _module_error(FormatError, "labels must be strings", path=path, lineno=lineno)
    if not isinstance(scores, dict):
        raise _module_error(FormatError, "scores must be an object", path=path, lineno=lineno)
    if rank is not None and (not isinstance(rank, int) or isinstance(rank, bool)):
        raise _module_error(FormatError, "rank must be an integer", path=path, lineno=lineno)
    return utt, rank, labels, scores, rec.get("source")


def _parse_text_record(line, path, lineno):
    # utt <TAB> rank <TAB> name=value,name=value <TAB> label label ...
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 4:
        raise _module_error(FormatError, "expected 4 tab-separated fields", path=path, lineno=lineno)
    utt, rank, score_field, labels = parts
    try:
        rank = int(rank)
        scores = {}
        for item in filter(None, score_field.split(",")):
            name, value = item.split("=")
            scores[name] = float(value)
    except ValueError:
        raise _module_error(FormatError, "bad rank or score field", path=path, lineno=lineno)
    return utt, rank, labels.split(), scores, None


def parse_nbest(
    path,
    format: str = "jsonl",
    rule: WordRule | None = None,
    system: str = "system1",
    n: int | None = None,
) -> NBestCorpus:
    """Read an N-best file.

    Records are grouped by utterance and ordered by rank (file order when the
    rank is absent). Hypotheses whose normalized words repeat an earlier one
    of the same utterance are dropped with a warning; ``n`` truncates lists.
    """
    rule = rule or WordRule()
    if format == "jsonl":
        parse_record = _parse_jsonl_record
    elif format == "text":
        parse_record = _parse_text_record
    else:
        raise _module_error(ConfigError, f"unknown N-best format {format!r}")

    raw: dict[str, list] = {}
    seen_ranks: set = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            utt, rank, labels, scores, source = parse_record(line, path, lineno)
            if rank is not None:
                if (utt, rank) in seen_ranks:
                    raise _module_error(
                        FormatError, f"duplicate rank {rank} for utterance {utt!r}",
                        path=path, lineno=lineno, utt=utt,
                    )
                seen_ranks.add((utt, rank))
            try:
                hyp = Hypothesis(labels, rule(labels), scores, source or system)
            except FormatError as e:
                raise _module_error(
                    FormatError, e.message, path=path, lineno=lineno, utt=utt, hint=e.hint
                )
            raw.setdefault(utt, []).append((rank, lineno, hyp))

    if not raw:
        warnings.warn(f"N-best file {path} is empty", stacklevel=2)

    entries = {}
    dropped = 0
    for utt, items in raw.items():
        items.sort(key=lambda x: (x[0] is None, x[0] if x[0] is not None else 0, x[1]))
        hyps, keys = [], set()
        for _, _, hyp in items:
            if hyp.words in keys:
                dropped += 1
                continue
            keys.add(hyp.words)
            hyps.append(hyp)
        entries[utt] = hyps[:n] if n else hyps
    if dropped:
        warnings.warn(
            f"{path}: dropped {dropped} hypotheses with duplicate word sequences", stacklevel=2
        )
    return NBestCorpus(entries, n=n)


def write_nbest(corpus: NBestCorpus, path) -> None:
    """Write ``corpus`` as JSON lines with 1-based ranks."""
    with open(path, "w", encoding="utf-8") as f:
        for utt, hyps in corpus.entries.items():
            for rank, hyp in enumerate(hyps, 1):
                rec = {
                    "utt": utt,
                    "rank": rank,
                    "labels": list(hyp.labels),
                    "scores": dict(hyp.scores),
                    "source": hyp.source,
                }
                f.write(json.dumps(rec, ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# references


class RefMap(dict):
    """utterance id -> normalized reference words."""


def parse_refs(path, case: str | None = "upper") -> RefMap:
    """Read Kaldi-style ``utt word word ...`` lines."""
    refs = RefMap()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            parts = line.split()
            if not parts:
                continue
            utt, words = parts[0], normalize_words(parts[1:], case)
            if utt in refs:
                raise _module_error(
                    FormatError, f"duplicate reference for {utt!r}", path=path, lineno=lineno, utt=utt
                )
            if not words:
                raise _module_error(
                    FormatError, f"empty reference for {utt!r}", path=path, lineno=lineno, utt=utt
                )
            refs[utt] = words
    return refs


def write_refs(refs: Mapping[str, Sequence[str]], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for utt, words in refs.items():
            f.write(" ".join([utt, *words]) + "\n")


# ---------------------------------------------------------------------------
# text grids


def _parse_header(line, tag, path):
    parts = line.split()
    if len(parts) < 2 or parts[0] != f"#{tag}" or parts[1] != "v1":
        raise _module_error(FormatError, f"expected '#{tag} v1 ...' header", path=path, lineno=1)
    fields = {}
    for item in parts[2:]:
        if "=" not in item:
            raise _module_error(FormatError, f"bad header field {item!r}", path=path, lineno=1)
        k, v = item.split("=", 1)
        fields[k] = v
    return fields


def _header_int(fields, key, path):
    try:
        return int(fields[key])
    except KeyError:
        raise _module_error(FormatError, f"header lacks {key}=", path=path, lineno=1)
    except ValueError:
        raise _module_error(FormatError, f"header {key}= is not an integer", path=path, lineno=1)


def _parse_row(line, width, path, lineno):
    try:
        row = [float(x) for x in line.split()]
    except ValueError:
        raise _module_error(FormatError, "non-numeric value", path=path, lineno=lineno)
    if len(row) != width:
        raise _module_error(
            FormatError, f"dimension mismatch: expected {width} values, got {len(row)}",
            path=path, lineno=lineno,
        )
    if any(math.isnan(x) or x == math.inf for x in row):
        raise _module_error(FormatError, "NaN or +inf log-value", path=path, lineno=lineno)
    return row


def _read_rows(f, width, nrows, path, first_lineno=2):
    rows = []
    lineno = first_lineno - 1
    for lineno, line in enumerate(f, first_lineno):
        if not line.strip():
            continue
        rows.append(_parse_row(line, width, path, lineno))
    if len(rows) != nrows:
        raise _module_error(
            FormatError, f"dimension mismatch: expected {nrows} rows, got {len(rows)}", path=path
        )
    return rows


def _fmt(x: float) -> str:
    return repr(float(x))


def _log_normalizer(values: np.ndarray) -> np.ndarray:
    m = values.max(axis=-1, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        return (np.log(np.exp(values - m).sum(axis=-1, keepdims=True)) + m)[..., 0]


@dataclass(frozen=True, eq=False)
class PosteriorGram:
    """Frame-level label log-posteriors.

    ``values`` has shape ``(T, V+1)`` for context order 0 and
    ``(T, V+1, V+1)`` for order 1, where the middle axis is the previously
    emitted label. Blank is output index ``V``; context row ``V`` is the
    sentence-begin context (blank is never a previous label).
    """

    utt: str
    values: np.ndarray
    order: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.order not in (0, 1) or v.ndim != self.order + 2:
            raise _module_error(FormatError, f"bad posteriorgram shape {v.shape} for order {self.order}")
        if v.shape[0] < 1 or v.shape[-1] < 2:
            raise _module_error(FormatError, f"dimension error: T={v.shape[0]}, V={v.shape[-1] - 1}")
        if self.order == 1 and v.shape[1] != v.shape[2]:
            raise _module_error(FormatError, f"bad posteriorgram shape {v.shape} for order 1")

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def V(self) -> int:
        return self.values.shape[-1] - 1

    @property
    def blank(self) -> int:
        return self.V

    def check_normalized(self, tol: float = NORM_TOL, path=None) -> None:
        z = _log_normalizer(self.values)
        bad = np.argwhere(~(np.abs(z) <= tol))
        if len(bad):
            idx = tuple(int(i) for i in bad[0])
            where = f"frame {idx[0]}" + (f", context {idx[1]}" if self.order == 1 else "")
            raise _module_error(
                FormatError,
                f"normalization error at {where}: log-sum-exp = {float(z[idx]):.6g}",
                path=path, utt=self.utt,
            )


def parse_posteriorgram(path) -> PosteriorGram:
    """Read ``#PG v1 utt=<id> T=<int> V=<int> ctx=<0|1>`` plus log-value rows.

    Order 0 has one row per frame; order 1 has V+1 rows per frame (one per
    context, sentence-begin last).
    """
    with open(path, encoding="utf-8") as f:
        fields = _parse_header(f.readline(), "PG", path)
        T = _header_int(fields, "T", path)
        V = _header_int(fields, "V", path)
        ctx = _header_int(fields, "ctx", path)
        utt = fields.get("utt") or Path(path).stem
        if T < 1 or V < 1:
            raise _module_error(FormatError, f"dimension error: T={T}, V={V}", path=path, lineno=1)
        if ctx not in (0, 1):
            raise _module_error(FormatError, f"ctx must be 0 or 1, got {ctx}", path=path, lineno=1)
        nrows = T if ctx == 0 else T * (V + 1)
        rows = _read_rows(f, V + 1, nrows, path)
    values = np.array(rows, dtype=np.float64)
    if ctx == 1:
        values = values.reshape(T, V + 1, V + 1)
    pg = PosteriorGram(utt, values, ctx)
    pg.check_normalized(path=path)
    return pg


def write_posteriorgram(pg: PosteriorGram, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"#PG v1 utt={pg.utt} T={pg.T} V={pg.V} ctx={pg.order}\n")
        for row in pg.values.reshape(-1, pg.V + 1):
            f.write(" ".join(_fmt(x) for x in row) + "\n")


@dataclass(frozen=True, eq=False)
class PriorTable:
    """Log label priors: shape ``(V+1,)`` for order 0, ``(V+1, V+1)`` for order 1
    (rows are contexts, sentence-begin last)."""

    values: np.ndarray
    order: int = 0
    source: str = "file"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.order not in (0, 1) or v.ndim != self.order + 1:
            raise _module_error(FormatError, f"bad prior shape {v.shape} for order {self.order}")
        if self.order == 1 and v.shape[0] != v.shape[1]:
            raise _module_error(FormatError, f"bad prior shape {v.shape} for order 1")
        if not np.all(np.isfinite(v)):
            raise _module_error(FormatError, "prior log-values must be finite")
        if self.source not in ("file", "estimated-from-posteriorgram-average"):
            raise _module_error(ConfigError, f"unknown prior source {self.source!r}")

    @property
    def V(self) -> int:
        return self.values.shape[-1] - 1

    def check_normalized(self, tol: float = NORM_TOL, path=None) -> None:
        z = np.atleast_1d(_log_normalizer(self.values))
        bad = np.flatnonzero(~(np.abs(z) <= tol))
        if len(bad):
            raise _module_error(
                FormatError,
                f"prior row {int(bad[0])} not normalized: log-sum-exp = {float(z[bad[0]]):.6g}",
                path=path,
            )

    @classmethod
    def uniform(cls, V: int, order: int = 0) -> "PriorTable":
        shape = (V + 1,) if order == 0 else (V + 1, V + 1)
        return cls(np.full(shape, -math.log(V + 1)), order)


def parse_prior(path) -> PriorTable:
    """Read ``#PRIOR v1 V=<int> ctx=<0|1>`` plus one row (order 0) or V+1 rows."""
    with open(path, encoding="utf-8") as f:
        fields = _parse_header(f.readline(), "PRIOR", path)
        V = _header_int(fields, "V", path)
        ctx = _header_int(fields, "ctx", path)
        if V < 1 or ctx not in (0, 1):
            raise _module_error(FormatError, f"bad prior header V={V} ctx={ctx}", path=path, lineno=1)
        rows = _read_rows(f, V + 1, 1 if ctx == 0 else V + 1, path)
    values = np.array(rows[0] if ctx == 0 else rows, dtype=np.float64)
    prior = PriorTable(values, ctx, "file")
    prior.check_normalized(path=path)
    return prior


def write_prior(prior: PriorTable, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"#PRIOR v1 V={prior.V} ctx={prior.order}\n")
        for row in np.atleast_2d(prior.values):
            f.write(" ".join(_fmt(x) for x in row) + "\n")


def estimate_prior(pgs: Iterable[PosteriorGram]) -> PriorTable:
    """Average the posteriors over all frames (probability domain), per context row."""
    total, frames, order = None, 0, None
    for pg in pgs:
        if order is None:
            order = pg.order
        elif pg.order != order:
            raise _module_error(ConfigError, "posteriorgrams of mixed context order")
        s = np.exp(pg.values).sum(axis=0)
        if total is not None and s.shape != total.shape:
            raise _module_error(ConfigError, "posteriorgrams of mixed vocabulary size")
        total = s if total is None else total + s
        frames += pg.T
    if total is None:
        raise _module_error(ConfigError, "cannot estimate a prior from zero posteriorgrams")
    avg = total / frames
    avg = avg / avg.sum(axis=-1, keepdims=True)
    return PriorTable(np.log(avg), order, "estimated-from-posteriorgram-average")


@dataclass(frozen=True)
class TransitionModel:
    """Loop/forward log-probabilities of the HMM alignment topology."""

    loop: float
    forward: float

    def __post_init__(self):
        z = np.logaddexp(self.loop, self.forward)
        if not abs(z) <= 1e-6:
            raise _module_error(
                FormatError, f"transition model not normalized: logaddexp(loop, forward) = {z:.3g}"
            )

    @classmethod
    def from_loop_prob(cls, p_loop: float) -> "TransitionModel":
        return cls(math.log(p_loop), math.log1p(-p_loop))


def parse_transitions(path) -> TransitionModel:
    """Read ``#TRANS v1`` followed by one row ``<loop-logprob> <forward-logprob>``."""
    with open(path, encoding="utf-8") as f:
        _parse_header(f.readline(), "TRANS", path)
        (row,) = _read_rows(f, 2, 1, path)
    return TransitionModel(*row)


def write_transitions(trans: TransitionModel, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("#TRANS v1\n")
        f.write(f"{_fmt(trans.loop)} {_fmt(trans.forward)}\n")


def parse_step_scores(path, case: str | None = "upper") -> tuple[str, dict]:
    """Read per-step AED log-probabilities for the hypotheses of one utterance.

    Format: ``#STEPS v1 utt=<id> N=<rows>`` then rows
    ``word word ...<TAB>logp_1 ... logp_M`` where the last step is EOS.
    Returns ``(utt, {words: array})``.
    """
    out = {}
    with open(path, encoding="utf-8") as f:
        fields = _parse_header(f.readline(), "STEPS", path)
        nrows = _header_int(fields, "N", path)
        utt = fields.get("utt") or Path(path).stem
        for lineno, line in enumerate(f, 2):
            if not line.strip():
                continue
            if "\t" not in line:
                raise _module_error(FormatError, "expected 'words<TAB>logprobs'", path=path, lineno=lineno)
            words, values = line.rstrip("\n").split("\t", 1)
            row = values.split()
            key = normalize_words(words.split(), case)
            if key in out:
                raise _module_error(
                    FormatError, f"duplicate word sequence {' '.join(key)!r}", path=path, lineno=lineno
                )
            out[key] = np.array(_parse_row(values, len(row), path, lineno), dtype=np.float64)
    if len(out) != nrows:
        raise _module_error(
            FormatError, f"dimension mismatch: expected {nrows} rows, got {len(out)}", path=path
        )
    return utt, out


def write_step_scores(utt: str, table: Mapping[Sequence[str], Sequence[float]], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"#STEPS v1 utt={utt} N={len(table)}\n")
        for words, values in table.items():
            f.write(" ".join(words) + "\t" + " ".join(_fmt(x) for x in values) + "\n")
