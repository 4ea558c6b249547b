"""Scorers bound to their on-disk resources.

A :class:`ScorerSpec` names the model family, its scales and the files it
needs; :class:`SystemScorer` loads those lazily and scores joint-list
hypotheses for one side of a combination.
"""

from __future__ import annotations

import dataclasses
import threading
from dataclasses import dataclass, field
from pathlib import Path

from . import scorers
from .arpa import parse_arpa
from .errors import ConfigError, FormatError, NbfError, ResourceError
from .hypcore import (
    estimate_prior,
    normalize_words,
    parse_lexicon,
    parse_posteriorgram,
    parse_prior,
    parse_step_scores,
    parse_transitions,
)

KINDS = ("passthrough", "ctc", "transducer", "hmm", "aed")

PG_SUFFIX = ".pg"
STEPS_SUFFIX = ".steps"


@dataclass
class ScorerSpec:
    kind: str = "passthrough"
    name: str | None = None  # stored score name for passthrough
    lm_scale: float = scorers.DEFAULT_LM_SCALE
    prior_scale: float = scorers.DEFAULT_PRIOR_SCALE
    transition_scale: float = scorers.DEFAULT_TRANSITION_SCALE
    length_exponent: float = scorers.DEFAULT_LENGTH_EXPONENT
    length_norm: str = "log"
    mode: str = "max"
    arpa: str | None = None
    pg_dir: str | None = None
    prior: str | None = None  # prior / ILM table, or "estimate"
    transitions: str | None = None
    units: str | None = None
    lexicon: str | None = None
    steps_dir: str | None = None
    boundary: str = "#"
    oov: str = "map"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown scorer kind {self.kind!r}; expected one of {KINDS}",
                              module="scorers")
        for name in ("lm_scale", "prior_scale", "transition_scale", "length_exponent"):
            v = float(getattr(self, name))
            if v != v or v in (float("inf"), float("-inf")):
                raise ConfigError(f"{name} must be finite", module="scorers")
            setattr(self, name, v)
        if self.kind == "passthrough" and not self.name:
            raise ConfigError("passthrough scorer needs the stored score name",
                              module="scorers", hint="e.g. --scorer1 passthrough:am")

    @classmethod
    def parse(cls, text: str, **overrides) -> "ScorerSpec":
        """``"ctc"``, ``"passthrough:am"`` or ``"hmm,lm_scale=0.8,pg_dir=pg/"``."""
        head, *items = text.split(",")
        kind, _, name = head.partition(":")
        kw = dict(overrides)
        kw["kind"] = kind.strip()
        if name:
            kw["name"] = name.strip()
        known = {f.name for f in dataclasses.fields(cls)}
        for item in items:
            k, sep, v = item.partition("=")
            k = k.strip().replace("-", "_")
            if not sep or k not in known:
                raise ConfigError(f"bad scorer option {item!r}", module="cli")
            kw[k] = v.strip()
        return cls(**kw)

    def to_dict(self):
        return {k: v for k, v in dataclasses.asdict(self).items() if v not in (None, {})}


class SystemScorer:
    """Scores joint-list hypotheses for system ``system`` (1 or 2)."""

    def __init__(self, spec: ScorerSpec, system: int, *, case: str | None = "upper"):
        self.spec = spec
        self.system = system
        self.case = case
        self._lock = threading.Lock()
        self._pg = {}
        self._steps = {}
        s = spec
        needs = {
            "ctc": ("pg_dir", "units"),
            "transducer": ("pg_dir", "units"),
            "hmm": ("pg_dir", "units"),
            "aed": ("steps_dir",),
            "passthrough": (),
        }[s.kind]
        for attr in needs:
            if getattr(s, attr) is None:
                raise ConfigError(f"{s.kind} scorer for system {system} needs --{attr.replace('_', '-')}",
                                  module="scorers")
        self.lm = parse_arpa(s.arpa, oov=s.oov) if s.arpa and s.lm_scale != 0.0 else None
        if s.kind in ("ctc", "transducer", "hmm") and s.lm_scale != 0.0 and self.lm is None:
            raise ConfigError(f"{s.kind} scorer with non-zero LM scale needs --arpa",
                              module="scorers", hint="pass --arpa or set --lambda 0")
        self.units = self._load_units(s.units) if s.units else None
        # words are case-normalized, unit names are not
        self._folded_units = {}
        if self.units is not None and case is not None:
            for unit, idx in self.units.items():
                key = normalize_words([unit], case)[0]
                self._folded_units[key] = None if key in self._folded_units else idx
        self.lexicon = parse_lexicon(s.lexicon) if s.lexicon else None
        self.trans = parse_transitions(s.transitions) if s.transitions else None
        self._prior = None
        if s.kind in ("ctc", "transducer", "hmm") and s.prior_scale != 0.0:
            if s.prior is None:
                raise ConfigError(f"{s.kind} scorer with non-zero prior scale needs --prior/--ilm",
                                  module="scorers", hint="pass a prior file, 'estimate', or --alpha 0")
            if s.prior != "estimate":
                self._prior = parse_prior(s.prior)
        if s.kind == "hmm" and s.transition_scale != 0.0 and self.trans is None:
            raise ConfigError("hmm scorer with non-zero transition scale needs --transitions",
                              module="scorers")

    @property
    def label(self) -> str:
        return self.spec.kind + (f":{self.spec.name}" if self.spec.name else "")

    @staticmethod
    def _load_units(path):
        units = {}
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                parts = line.split()
                if not parts:
                    continue
                if parts[0] in units:
                    raise FormatError(f"duplicate unit {parts[0]!r}", path=path, lineno=lineno,
                                      module="scorers")
                units[parts[0]] = len(units)
        return units

    # -- resources -------------------------------------------------------

    def _err(self, utt, msg, hint=None):
        return ResourceError(f"system {self.system} ({self.label}): {msg}", utt=utt, hint=hint,
                             module="scorers")

    def posteriorgram(self, utt):
        with self._lock:
            pg = self._pg.get(utt)
        if pg is None:
            path = Path(self.spec.pg_dir) / f"{utt}{PG_SUFFIX}"
            if not path.exists():
                raise self._err(utt, f"no posteriorgram {path}")
            pg = parse_posteriorgram(path)
            with self._lock:
                self._pg[utt] = pg
        return pg

    def prior(self, utts=()):
        if self._prior is None and self.spec.prior == "estimate":
            pgs = [self.posteriorgram(u) for u in utts]
            with self._lock:
                if self._prior is None:
                    self._prior = estimate_prior(pgs)
        return self._prior

    def step_scores(self, utt):
        with self._lock:
            table = self._steps.get(utt)
        if table is None:
            path = Path(self.spec.steps_dir) / f"{utt}{STEPS_SUFFIX}"
            if not path.exists():
                raise self._err(utt, f"no AED step-score file {path}")
            _, table = parse_step_scores(path, case=self.case)
            with self._lock:
                self._steps[utt] = table
        return table

    # -- label routing ---------------------------------------------------

    def label_indices(self, utt, hyp):
        """This system's label index sequence for ``hyp``.

        Uses the hypothesis' own labels when this system produced it,
        otherwise spells the words with the lexicon (or takes the words as
        units when no lexicon is configured).
        """
        boundary = self.spec.boundary
        tokens = hyp.labels.get(self.system)
        folded = {}
        if tokens is None:
            folded = self._folded_units
            if self.lexicon is not None:
                tokens = []
                for w in hyp.words:
                    pron = self.lexicon.pron_of(w, case=self.case)
                    if pron is None:
                        raise self._err(utt, f"word {w!r} not in lexicon",
                                        hint="add the word to the lexicon")
                    tokens.extend(pron)
                    tokens.append(boundary)
            else:
                tokens = hyp.words
        out = []
        for tok in tokens:
            idx = self.units.get(tok)
            if idx is None:
                idx = folded.get(tok)
            if idx is None:
                if tok == boundary:
                    continue
                raise self._err(utt, f"label {tok!r} not in the unit inventory",
                                hint="check --units or the label-to-word rule")
            out.append(idx)
        return out

    # -- scoring ---------------------------------------------------------

    def score(self, utt, hyp, utts=()) -> scorers.ScoreBreakdown:
        s = self.spec
        if s.kind == "passthrough":
            key = self._stored_key(utt, hyp)
            value = scorers.passthrough_score(hyp, key)
            lm = s.lm_scale * scorers.ngram_logprob(self.lm, hyp.words) if self.lm else 0.0
            return scorers.ScoreBreakdown(am=value, lm=lm)
        if s.kind == "aed":
            table = self.step_scores(utt)
            steps = table.get(tuple(hyp.words))
            if steps is None:
                raise self._err(utt, f"no step scores for {' '.join(hyp.words)!r}",
                                hint="every joint-list hypothesis needs a row in the steps file")
            return scorers.aed_sequence_score(steps, s.length_exponent, s.length_norm)

        pg = self.posteriorgram(utt)
        labels = self.label_indices(utt, hyp)
        if self.units is not None and len(self.units) != pg.V:
            raise self._err(utt, f"{len(self.units)} units but posteriorgram V={pg.V}")
        prior = self.prior(utts or (utt,))
        common = dict(words=hyp.words, lm=self.lm, lm_scale=s.lm_scale, prior_scale=s.prior_scale,
                      mode=s.mode)
        if s.kind == "ctc":
            return scorers.ctc_sequence_score(pg, labels, prior=prior, **common)
        if s.kind == "transducer":
            return scorers.transducer_sequence_score(pg, labels, ilm=prior, **common)
        return scorers.hmm_sequence_score(pg, labels, prior=prior, trans=self.trans,
                                          transition_scale=s.transition_scale, **common)

    def _stored_key(self, utt, hyp):
        name = self.spec.name
        other = 2 if self.system == 1 else 1
        for key in (f"{self.system}:{name}", f"{other}:{name}", name):
            if key in hyp.scores:
                return key
        raise self._err(utt, f"hypothesis {' '.join(hyp.words)!r} has no stored score {name!r}",
                        hint=f"add '{name}' to the scores of every N-best record")


def build_scorer(spec: ScorerSpec, system: int, case="upper") -> SystemScorer:
    try:
        return SystemScorer(spec, system, case=case)
    except NbfError:
        raise
    except OSError as e:
        raise ResourceError(f"system {system}: cannot read {e.filename}: {e.strerror}",
                            module="scorers") from e
