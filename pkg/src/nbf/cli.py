"""Command line front end.

    nbf wer      --hyp H --refs R
    nbf oracle   --nbest1 A [--nbest2 B] --refs R [--n 16]
    nbf overlap  --nbest1 A --nbest2 B [--n 16] [--out DIR]
    nbf combine  --nbest1 A --nbest2 B --refs R --scorer1 S --scorer2 S --w1 W --out DIR
    nbf tune     --nbest1 A --nbest2 B --refs R --scorer1 S --scorer2 S [--grid a:b:step] --out DIR

Settings resolve as: per-scorer options on the command line
(``--scorer1 ctc,pg_dir=pg1``), then global flags, then the ``--config``
JSON file, then built-in defaults. The effective settings are written to
``effective_config.json`` in the output directory.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .analysis import (
    build_summary,
    emit_overlap_plot_data,
    emit_selections,
    emit_summary,
    evaluate_set,
)
from .combine import Grid, GridResult, grid_search_weight, join_nbest, rescore, select, thread_count
from .errors import ConfigError, FormatError, NbfError
from .hypcore import NBestCorpus, WordRule, parse_lexicon, parse_nbest, parse_refs
from .metrics import corpus_wer, oracle_wer, overlap_histogram, parse_bins
from .systems import ScorerSpec, build_scorer

log = logging.getLogger("nbf")

DEFAULTS = {
    "format": "jsonl",
    "words1": "passthrough",
    "words2": "passthrough",
    "marker": "@@",
    "boundary": "#",
    "case": "upper",
    "w1": 0.5,
    "grid": None,
    "tie_break": "prefer-system1-rank",
    "normalize": "none",
    "n": 16,
    "bins": None,
}

# global flags that fill per-scorer fields
SCORER_FLAGS = {
    "lambda": "lm_scale",
    "alpha": "prior_scale",
    "beta": "transition_scale",
    "delta": "length_exponent",
    "mode": "mode",
    "length_norm": "length_norm",
    "arpa": "arpa",
    "pg_dir": "pg_dir",
    "transitions": "transitions",
    "units": "units",
    "steps_dir": "steps_dir",
}


# ---------------------------------------------------------------------------
# argument parsing


def _add_io(p, two=True, refs=True):
    p.add_argument("--nbest1", help="system-1 N-best list (JSONL)")
    if two:
        p.add_argument("--nbest2", help="system-2 N-best list (JSONL)")
    if refs:
        p.add_argument("--refs", help="reference transcripts, 'utt word ...' per line")
    p.add_argument("--format", choices=["jsonl", "text"], help="N-best file format")
    p.add_argument("--words1", choices=["passthrough", "bpe-marker", "phoneme-lexicon"],
                   help="label-to-word rule of system 1")
    p.add_argument("--words2", choices=["passthrough", "bpe-marker", "phoneme-lexicon"],
                   help="label-to-word rule of system 2")
    p.add_argument("--lexicon", help="pronunciation lexicon shared by both systems")
    p.add_argument("--lexicon1", help="lexicon of system 1")
    p.add_argument("--lexicon2", help="lexicon of system 2")
    p.add_argument("--marker", help="BPE continuation marker")
    p.add_argument("--boundary", help="word-boundary token in phoneme label sequences")
    p.add_argument("--case", choices=["upper", "lower", "none"], help="case folding of words")
    p.add_argument("--n", type=int, help="N-best depth (lists are truncated to N)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="JSON file with default settings")


def _add_pipeline(p):
    _add_io(p)
    p.add_argument("--test-nbest1", help="system-1 N-best list of the test set")
    p.add_argument("--test-nbest2", help="system-2 N-best list of the test set")
    p.add_argument("--test-refs", help="references of the test set")
    p.add_argument("--scorer1", help="scorer of system 1, e.g. 'ctc', 'passthrough:am', "
                                     "'hmm,pg_dir=pg1,beta=0.5'")
    p.add_argument("--scorer2", help="scorer of system 2")
    p.add_argument("--name1", help="display name of system 1")
    p.add_argument("--name2", help="display name of system 2")
    p.add_argument("--arpa", help="ARPA LM for the external LM term")
    p.add_argument("--pg-dir", dest="pg_dir", help="directory of <utt>.pg posteriorgrams")
    p.add_argument("--prior", help="label prior table (CTC/HMM), or 'estimate'")
    p.add_argument("--ilm", help="internal LM table for transducer scorers")
    p.add_argument("--transitions", help="HMM loop/forward transition file")
    p.add_argument("--units", help="label inventory, one unit per line (blank is implicit)")
    p.add_argument("--steps-dir", dest="steps_dir", help="directory of <utt>.steps AED step scores")
    p.add_argument("--lambda", dest="lambda", type=float, help="external LM scale")
    p.add_argument("--alpha", type=float, help="prior / internal LM scale")
    p.add_argument("--beta", type=float, help="HMM transition scale")
    p.add_argument("--delta", type=float, help="AED length normalization exponent")
    p.add_argument("--mode", choices=["max", "sum"], help="alignment max or marginalization")
    p.add_argument("--length-norm", dest="length_norm", choices=["log", "divide"])
    p.add_argument("--tie-break", dest="tie_break",
                   choices=["prefer-system1-rank", "prefer-system2-rank"])
    p.add_argument("--normalize", choices=["none", "zscore"],
                   help="per-utterance score normalization before combining")
    p.add_argument("--bins", help="length bins, e.g. '1-5,6-10,11-'")


def build_parser():
    parser = argparse.ArgumentParser(prog="nbf", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"nbf {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("wer", help="corpus WER of a hypothesis file")
    p.add_argument("--hyp", required=True, help="'utt word ...' text, N-best JSONL or selections JSONL")
    p.add_argument("--refs", required=True)
    p.add_argument("--case", choices=["upper", "lower", "none"])
    p.add_argument("--bins", help="also report WER per reference-length bin")
    p.add_argument("--out")
    p.add_argument("--config")

    p = sub.add_parser("oracle", help="oracle (cheating) WER of one list or the union of two")
    _add_io(p)

    p = sub.add_parser("overlap", help="histogram of shared hypotheses between two lists")
    _add_io(p, refs=False)

    p = sub.add_parser("combine", help="join, rescore and select at a fixed weight")
    _add_pipeline(p)
    p.add_argument("--w1", type=float, help="weight of system 1 (system 2 gets 1-w1)")

    p = sub.add_parser("tune", help="grid-search w1 on dev, then evaluate test")
    _add_pipeline(p)
    p.add_argument("--grid", help="start:stop:step (default: 0.05 coarse pass + 0.001 fine pass)")
    return parser


def resolve(args) -> dict:
    """Merge defaults < config file < command line."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as f:
                file_cfg = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {args.config}: {e}", module="cli")
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object", module="cli")
        cfg.update({k.replace("-", "_"): v for k, v in file_cfg.items()})
    for k, v in vars(args).items():
        if v is not None and k not in ("config", "verbose"):
            cfg[k] = v
    if cfg.get("case") == "none":
        cfg["case"] = None
    return cfg


def _scorer_spec(cfg, system) -> ScorerSpec:
    key = f"scorer{system}"
    raw = cfg.get(key)
    if raw is None:
        raise ConfigError(f"--{key} is required", module="cli")
    base = {}
    file_spec = raw if isinstance(raw, dict) else None
    if file_spec is not None:
        base.update(file_spec)
    # global flags (and config-level globals) fill fields the scorer string leaves open
    for flag, fieldname in SCORER_FLAGS.items():
        if cfg.get(flag) is not None and fieldname not in base:
            base[fieldname] = cfg[flag]
    kind = (file_spec or {}).get("kind") if file_spec else raw.split(",")[0].split(":")[0]
    prior_key = "ilm" if kind == "transducer" else "prior"
    if "prior" not in base and cfg.get(prior_key) is not None:
        base["prior"] = cfg[prior_key]
    if "lexicon" not in base:
        lex = cfg.get(f"lexicon{system}") or cfg.get("lexicon")
        if lex:
            base["lexicon"] = lex
    if "boundary" not in base and cfg.get("boundary"):
        base["boundary"] = cfg["boundary"]
    if file_spec is not None:
        return ScorerSpec(**base)
    # per-scorer options in the flag string beat everything else
    return ScorerSpec.parse(raw, **base)


def _word_rule(cfg, system) -> WordRule:
    rule = cfg[f"words{system}"]
    lex = None
    if rule == "phoneme-lexicon":
        path = cfg.get(f"lexicon{system}") or cfg.get("lexicon")
        if not path:
            raise ConfigError(f"--words{system} phoneme-lexicon needs --lexicon", module="cli")
        lex = parse_lexicon(path)
    return WordRule(rule, lex, cfg["marker"], cfg["boundary"], cfg["case"])


def _need(cfg, *keys):
    for k in keys:
        if not cfg.get(k):
            raise ConfigError(f"--{k.replace('_', '-')} is required", module="cli")


def _load_nbest(cfg, path, system) -> NBestCorpus:
    return parse_nbest(path, cfg["format"], _word_rule(cfg, system), f"system{system}", cfg.get("n"))


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def _out_dir(cfg):
    if not cfg.get("out"):
        return None
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(out, cfg, extra=None):
    if out is None:
        return
    data = {k: v for k, v in cfg.items() if k not in ("command",)}
    if extra:
        data.update(extra)
    _write_json(out / "effective_config.json", data)


# ---------------------------------------------------------------------------
# commands


def _read_hyps(path, case):
    path = Path(path)
    if path.suffix == ".jsonl":
        with open(path, encoding="utf-8") as f:
            first = next((json.loads(line) for line in f if line.strip()), None)
        if first is not None and "words" in first:
            from .hypcore import normalize_words
            out = {}
            with open(path, encoding="utf-8") as f:
                for lineno, line in enumerate(f, 1):
                    if line.strip():
                        rec = json.loads(line)
                        out[rec["utt"]] = normalize_words(rec["words"], case)
            return out
        return parse_nbest(path, rule=WordRule(case=case)).top1()
    return dict(parse_refs(path, case)) if path.stat().st_size else {}


def cmd_wer(cfg) -> int:
    hyps = _read_hyps(cfg["hyp"], cfg["case"])
    refs = parse_refs(cfg["refs"], cfg["case"])
    report = corpus_wer(hyps, refs)
    print(f"WER {report.wer:.2f}% [ {report.errors} / {report.ref_words}, {report.insertions} ins, "
          f"{report.deletions} del, {report.substitutions} sub ]")
    out = _out_dir(cfg)
    if cfg.get("bins") or out:
        from .metrics import default_length_bins, wer_by_length
        bins = parse_bins(cfg["bins"]) if cfg.get("bins") else default_length_bins()
        report.length_bins = wer_by_length(hyps, refs, bins)
    if out:
        from .analysis import emit_length_plot_data
        _write_json(out / "wer.json", {
            "wer": report.wer, "substitutions": report.substitutions, "insertions": report.insertions,
            "deletions": report.deletions, "ref_words": report.ref_words})
        emit_length_plot_data([("eval", "hyp", report.length_bins)], out / "length_bins.csv")
        _echo_config(out, cfg)
    return 0


def cmd_oracle(cfg) -> int:
    _need(cfg, "nbest1", "refs")
    refs = parse_refs(cfg["refs"], cfg["case"])
    a = _load_nbest(cfg, cfg["nbest1"], 1)
    if cfg.get("nbest2"):
        joint = join_nbest(a, _load_nbest(cfg, cfg["nbest2"], 2))
    else:
        joint = a
    report = oracle_wer(joint, refs)
    print(f"oracle WER {report.wer:.2f}% [ {report.errors} / {report.ref_words} ]")
    out = _out_dir(cfg)
    if out:
        _write_json(out / "oracle.json", {"oracle_wer": report.wer, "errors": report.errors,
                                          "ref_words": report.ref_words})
        _echo_config(out, cfg)
    return 0


def cmd_overlap(cfg) -> int:
    _need(cfg, "nbest1", "nbest2")
    a = _load_nbest(cfg, cfg["nbest1"], 1)
    b = _load_nbest(cfg, cfg["nbest2"], 2)
    hist = overlap_histogram(a, b, cfg["n"])
    out = _out_dir(cfg)
    if out:
        emit_overlap_plot_data(hist, out / "overlap.csv")
        _echo_config(out, cfg)
    print("k,num_utterances")
    for k, c in hist:
        print(f"{k},{c}")
    return 0


class _Pipeline:
    """Loaded inputs shared by ``combine`` and ``tune``."""

    def __init__(self, cfg):
        _need(cfg, "nbest1", "nbest2", "refs")
        self.cfg = cfg
        self.spec1 = _scorer_spec(cfg, 1)
        self.spec2 = _scorer_spec(cfg, 2)
        self.scorer1 = build_scorer(self.spec1, 1, cfg["case"])
        self.scorer2 = build_scorer(self.spec2, 2, cfg["case"])
        self.name1 = cfg.get("name1") or self.scorer1.label
        self.name2 = cfg.get("name2") or self.scorer2.label
        self.bins = parse_bins(cfg["bins"]) if cfg.get("bins") else None
        self.threads = thread_count()
        self.dev = self._load(cfg["nbest1"], cfg["nbest2"], cfg["refs"])
        test_keys = ("test_nbest1", "test_nbest2", "test_refs")
        given = [bool(cfg.get(k)) for k in test_keys]
        if any(given) and not all(given):
            raise ConfigError("--test-nbest1, --test-nbest2 and --test-refs go together", module="cli")
        self.test = self._load(*(cfg[k] for k in test_keys)) if all(given) else None

    def _load(self, p1, p2, pr):
        refs = parse_refs(pr, self.cfg["case"])
        joint = join_nbest(_load_nbest(self.cfg, p1, 1), _load_nbest(self.cfg, p2, 2))
        joint = rescore(joint, self.scorer1, self.scorer2, self.threads)
        return joint, refs

    def select(self, data, w1):
        joint, _ = data
        return select(joint, w1, self.cfg["tie_break"], self.cfg["normalize"])

    def finish(self, w1, extra=None):
        out = _out_dir(self.cfg)
        sel_dev = self.select(self.dev, w1)
        dev_eval = evaluate_set("dev", self.dev[0], self.dev[1], sel_dev, self.bins)
        test_eval = None
        if self.test:
            sel_test = self.select(self.test, w1)
            test_eval = evaluate_set("test", self.test[0], self.test[1], sel_test, self.bins)
        summary = build_summary(self.name1, self.name2, w1, dev_eval, self.dev[0], test_eval,
                                self.cfg["n"])
        if out:
            emit_summary(summary, out)
            emit_selections(sel_dev, out / "selections_dev.jsonl")
            _write_joint(self.dev[0], out / "joint_dev.jsonl")
            if self.test:
                emit_selections(sel_test, out / "selections_test.jsonl")
                _write_joint(self.test[0], out / "joint_test.jsonl")
            _echo_config(out, self.cfg, {
                "scorer1": self.spec1.to_dict(), "scorer2": self.spec2.to_dict(), "w1": w1, **(extra or {})})
        return summary


def _write_joint(joint, path):
    with open(path, "w", encoding="utf-8") as f:
        for utt, hyps in joint.entries.items():
            for h in hyps:
                rec = {"utt": utt, "words": list(h.words), "source": h.source,
                       "ranks": {str(k): v for k, v in sorted(h.ranks.items())}, "s1": h.s1, "s2": h.s2}
                f.write(json.dumps(rec, ensure_ascii=False) + "\n")


def cmd_combine(cfg) -> int:
    pipe = _Pipeline(cfg)
    summary = pipe.finish(float(cfg["w1"]))
    print(summary.line())
    return 0


def cmd_tune(cfg) -> int:
    pipe = _Pipeline(cfg)
    grid = Grid.parse(cfg["grid"]) if cfg.get("grid") else None
    joint, refs = pipe.dev
    result: GridResult = grid_search_weight(joint, refs, grid, cfg["tie_break"], cfg["normalize"],
                                            pipe.threads)
    summary = pipe.finish(result.best_w1, {"best_w1": result.best_w1})
    out = _out_dir(cfg)
    if out:
        _write_json(out / "tuning.json", result.to_dict())
    print(summary.line())
    return 0


COMMANDS = {
    "wer": cmd_wer,
    "oracle": cmd_oracle,
    "overlap": cmd_overlap,
    "combine": cmd_combine,
    "tune": cmd_tune,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except NbfError as e:
        print(json.dumps(e.as_dict(), sort_keys=True), file=sys.stderr)
        return 1
    except OSError as e:
        err = FormatError(f"cannot open {e.filename}: {e.strerror}", module="cli",
                          hint="check the path")
        print(json.dumps(err.as_dict(), sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
