"""ARPA back-off n-gram language models.

ARPA files store log10 values; everything exposed here is natural log.
"""

from __future__ import annotations

import math
import re
from typing import Sequence

from .errors import ConfigError, FormatError

__all__ = ["NgramModel", "parse_arpa", "ngram_logprob"]

LN10 = math.log(10.0)

_COUNT_RE = re.compile(r"^ngram\s+(\d+)\s*=\s*(\d+)$")
_SECTION_RE = re.compile(r"^\\(\d+)-grams:$")


def _err(msg, **kw):
    return FormatError(msg, module="hypcore", **kw)


class NgramModel:
    """Back-off n-gram model.

    ``tables[k]`` maps a k-tuple of words to ``(logprob, backoff)`` in
    natural log. The highest order carries backoff 0.
    """

    def __init__(self, tables, bos="<s>", eos="</s>", unk="<unk>", oov="map"):
        self.tables: dict[int, dict[tuple[str, ...], tuple[float, float]]] = tables
        self.order = max(tables)
        self.vocab = frozenset(w for (w,) in tables[1])
        self.bos, self.eos = bos, eos
        if oov not in ("map", "error"):
            raise ConfigError(f"unknown OOV policy {oov!r}", module="scorers")
        self.unk = unk if (oov == "map" and unk in self.vocab) else None
        if eos not in self.vocab:
            raise _err(f"sentence-end token {eos!r} missing from unigrams")

    def _word(self, w):
        if w in self.vocab:
            return w
        if self.unk is not None:
            return self.unk
        raise ConfigError(
            f"word {w!r} not in LM vocabulary and no {'<unk>'} mapping",
            module="scorers",
            hint="add <unk> to the ARPA file or normalize words to the LM's case",
        )

    def logprob(self, word: str, history: Sequence[str]) -> float:
        """ln P(word | history) with standard back-off."""
        history = tuple(history)[-(self.order - 1):] if self.order > 1 else ()
        penalty = 0.0
        while True:
            gram = history + (word,)
            entry = self.tables[len(gram)].get(gram)
            if entry is not None:
                return penalty + entry[0]
            if not history:
                # only reachable for words absent from the unigram table
                return -math.inf
            ctx = self.tables[len(history)].get(history)
            if ctx is not None:
                penalty += ctx[1]
            history = history[1:]

    def __repr__(self):
        counts = {k: len(v) for k, v in self.tables.items()}
        return f"NgramModel(order={self.order}, counts={counts})"


def ngram_logprob(model: NgramModel, words: Sequence[str]) -> float:
    """Sentence log-probability: conditioned on ``<s>``, including ``</s>``."""
    history = [model.bos]
    total = 0.0
    for w in list(words) + [model.eos]:
        w = model._word(w) if w != model.eos else w
        total += model.logprob(w, history)
        history.append(w)
    return total


def parse_arpa(path, oov: str = "map") -> NgramModel:
    """Read an ARPA file.

    Declared counts must match the entries. Every k-gram (k > 1) needs its
    context present in the (k-1)-gram table, which is where its backoff
    weight lives, and all of its words present as unigrams.
    """
    counts: dict[int, int] = {}
    tables: dict[int, dict] = {}
    section = None  # None before \data\, "data", or an int order
    ended = False
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            if ended:
                raise _err("content after \\end\\", path=path, lineno=lineno)
            if line == "\\data\\":
                section = "data"
                continue
            if line == "\\end\\":
                ended = True
                continue
            m = _SECTION_RE.match(line)
            if m:
                section = int(m.group(1))
                if section not in counts:
                    raise _err(f"section {line} not declared in \\data\\", path=path, lineno=lineno)
                tables[section] = {}
                continue
            if section is None:
                continue  # free text before \data\ is allowed
            if section == "data":
                m = _COUNT_RE.match(line)
                if not m:
                    raise _err(f"bad count line {line!r}", path=path, lineno=lineno)
                counts[int(m.group(1))] = int(m.group(2))
                continue
            parts = line.split()
            k = section
            if len(parts) not in (k + 1, k + 2):
                raise _err(f"expected {k} words plus scores in {k}-gram entry", path=path, lineno=lineno)
            try:
                lp = float(parts[0])
                bo = float(parts[k + 1]) if len(parts) == k + 2 else 0.0
            except ValueError:
                raise _err("non-numeric probability or backoff", path=path, lineno=lineno)
            gram = tuple(parts[1:k + 1])
            if gram in tables[k]:
                raise _err(f"duplicate {k}-gram {' '.join(gram)!r}", path=path, lineno=lineno)
            tables[k][gram] = (lp * LN10, bo * LN10)

    if not ended:
        raise _err("missing \\end\\ marker (truncated file?)", path=path)
    if not counts:
        raise _err("missing \\data\\ section", path=path)
    if sorted(counts) != list(range(1, max(counts) + 1)):
        raise _err(f"non-contiguous n-gram orders {sorted(counts)}", path=path)
    for k, c in counts.items():
        got = len(tables.get(k, {}))
        if got != c:
            raise _err(f"count mismatch for {k}-grams: declared {c}, found {got}", path=path)
    for k in range(2, max(counts) + 1):
        lower = tables[k - 1]
        for gram in tables[k]:
            if gram[:-1] not in lower:
                raise _err(
                    f"missing backoff entry: context {' '.join(gram[:-1])!r} of "
                    f"{k}-gram {' '.join(gram)!r} absent from {k - 1}-grams",
                    path=path,
                )
            for w in gram:
                if (w,) not in tables[1]:
                    raise _err(f"word {w!r} of {k}-gram not in unigrams", path=path)
    return NgramModel(tables, oov=oov)
