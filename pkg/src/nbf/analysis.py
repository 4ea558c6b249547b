"""Summaries and plot data for a combination run.

Every file is plain CSV or JSON; CSV files start with a ``#nbf v1`` schema
line. Floats are written with ``repr`` so files re-parse to the exact
in-memory values.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import FormatError, UtteranceMismatchError
from .metrics import LengthBin, corpus_wer, oracle_wer, overlap_histogram, wer_by_length

__all__ = [
    "SetEval",
    "ExperimentSummary",
    "evaluate_set",
    "system_top1",
    "system_lists",
    "emit_summary",
    "emit_length_plot_data",
    "emit_overlap_plot_data",
    "emit_per_utt",
    "emit_selections",
    "read_summary_csv",
    "read_length_csv",
    "read_overlap_csv",
    "SCHEMA_LINE",
    "SUMMARY_HEADER",
]

SCHEMA_LINE = "#nbf v1"
SUMMARY_HEADER = ["model1", "model2", "cheat", "dev", "test"]
LENGTH_HEADER = ["set", "system", "lo", "hi", "wer", "ref_words", "errors", "num_utts"]
OVERLAP_HEADER = ["k", "num_utterances"]
PER_UTT_HEADER = ["set", "utt", "system", "substitutions", "insertions", "deletions", "ref_len"]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _float_or_none(s):
    return None if s == "" else float(s)


def system_top1(joint, system: int) -> dict:
    """Each system's own first-best words, recovered from the joint list."""
    out = {}
    for utt, hyps in joint.entries.items():
        best = [h for h in hyps if h.ranks.get(system) == 1]
        out[utt] = best[0].words if best else ()
    return out


class _Lists:
    def __init__(self, entries):
        self.entries = entries


def system_lists(joint, system: int) -> _Lists:
    """One system's N-best lists (in its original order) from the joint list."""
    return _Lists({
        utt: sorted((h for h in hyps if system in h.ranks), key=lambda h: h.ranks[system])
        for utt, hyps in joint.entries.items()
    })


@dataclass
class SetEval:
    """WERs of one evaluation set (dev or test)."""

    name: str
    wer1: float
    wer2: float
    cheat: float
    combined: float
    ref_words: int
    length_bins: dict[str, list[LengthBin]] = field(default_factory=dict)
    per_utt: dict[str, dict] = field(default_factory=dict)


def evaluate_set(name, joint, refs, selection, bins=None) -> SetEval:
    if set(selection) != set(joint.entries):
        raise UtteranceMismatchError("selection and joint list differ", set(selection),
                                     set(joint.entries), module="analysis")
    hyps = {
        "system1": system_top1(joint, 1),
        "system2": system_top1(joint, 2),
        "combined": {u: h.words for u, h in selection.items()},
    }
    reports = {k: corpus_wer(v, refs) for k, v in hyps.items()}
    cheat = oracle_wer(joint, refs)
    return SetEval(
        name=name,
        wer1=reports["system1"].wer,
        wer2=reports["system2"].wer,
        cheat=cheat.wer,
        combined=reports["combined"].wer,
        ref_words=reports["combined"].ref_words,
        length_bins={k: wer_by_length(v, refs, bins) for k, v in hyps.items()},
        per_utt={k: r.per_utt for k, r in reports.items()} | {"cheat": cheat.per_utt},
    )


@dataclass
class ExperimentSummary:
    system1: str
    system2: str
    w1: float
    dev: SetEval
    test: SetEval | None = None
    overlap_n: int = 16
    overlap: list[tuple[int, int]] = field(default_factory=list)

    def rows(self) -> list[dict]:
        """Rows of the results table: each system alone, then the pair."""
        t = self.test
        return [
            {"model1": self.system1, "model2": "-", "cheat": None,
             "dev": self.dev.wer1, "test": t.wer1 if t else None},
            {"model1": self.system2, "model2": "-", "cheat": None,
             "dev": self.dev.wer2, "test": t.wer2 if t else None},
            {"model1": self.system1, "model2": self.system2, "cheat": self.dev.cheat,
             "dev": self.dev.combined, "test": t.combined if t else None},
        ]

    def line(self) -> str:
        test = f"{self.test.combined:.2f}" if self.test else "-"
        return (f"{self.system1} + {self.system2}: w1={self.w1:g} cheat={self.dev.cheat:.2f} "
                f"dev={self.dev.combined:.2f} test={test} "
                f"(singles dev {self.dev.wer1:.2f} / {self.dev.wer2:.2f})")

    def to_dict(self) -> dict:
        def set_dict(s):
            if s is None:
                return None
            return {
                "wer1": s.wer1, "wer2": s.wer2, "cheat": s.cheat, "combined": s.combined,
                "ref_words": s.ref_words,
                "length_bins": {k: [asdict(b) for b in v] for k, v in s.length_bins.items()},
            }

        return {
            "system1": self.system1,
            "system2": self.system2,
            "w1": self.w1,
            "dev": set_dict(self.dev),
            "test": set_dict(self.test),
            "overlap_n": self.overlap_n,
            "overlap": [list(x) for x in self.overlap],
            "table": self.rows(),
        }


def build_summary(system1, system2, w1, dev: SetEval, dev_joint, test: SetEval | None = None,
                  n: int = 16) -> ExperimentSummary:
    hist = overlap_histogram(system_lists(dev_joint, 1), system_lists(dev_joint, 2), n)
    return ExperimentSummary(system1, system2, w1, dev, test, n, hist)


# ---------------------------------------------------------------------------
# writers


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(SCHEMA_LINE + "\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row[k]) for k in header])


def _read_csv(path, header):
    with open(path, encoding="utf-8", newline="") as f:
        first = f.readline().rstrip("\n")
        if first != SCHEMA_LINE:
            raise FormatError(f"missing '{SCHEMA_LINE}' schema line", path=path, lineno=1,
                              module="analysis")
        reader = csv.reader(f)
        got = next(reader, None)
        if got != header:
            raise FormatError(f"unexpected header {got}", path=path, lineno=2, module="analysis")
        return [dict(zip(header, r)) for r in reader]


def emit_summary(summary: ExperimentSummary, out_dir) -> dict[str, Path]:
    """Write summary.csv/json, length_bins.csv, overlap.csv and per_utt.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "summary_csv": out / "summary.csv",
        "summary_json": out / "summary.json",
        "length_bins": out / "length_bins.csv",
        "overlap": out / "overlap.csv",
        "per_utt": out / "per_utt.csv",
    }
    _write_csv(paths["summary_csv"], SUMMARY_HEADER, summary.rows())
    with open(paths["summary_json"], "w", encoding="utf-8") as f:
        json.dump(summary.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    sets = [summary.dev] + ([summary.test] if summary.test else [])
    emit_length_plot_data(
        [(s.name, system, bins) for s in sets for system, bins in s.length_bins.items()],
        paths["length_bins"],
    )
    emit_overlap_plot_data(summary.overlap, paths["overlap"])
    emit_per_utt(sets, paths["per_utt"])
    return paths


def emit_length_plot_data(groups, path) -> None:
    """``groups``: iterable of ``(set name, system name, [LengthBin])``."""
    rows = []
    for set_name, system, bins in groups:
        for b in bins:
            rows.append({"set": set_name, "system": system, "lo": b.lo, "hi": b.hi, "wer": b.wer,
                         "ref_words": b.ref_words, "errors": b.errors, "num_utts": b.num_utts})
    _write_csv(path, LENGTH_HEADER, rows)


def emit_overlap_plot_data(hist, path) -> None:
    _write_csv(path, OVERLAP_HEADER, [{"k": k, "num_utterances": c} for k, c in hist])


def emit_per_utt(sets, path) -> None:
    rows = []
    for s in sets:
        for system, stats in s.per_utt.items():
            for utt, st in stats.items():
                rows.append({"set": s.name, "utt": utt, "system": system,
                             "substitutions": st.substitutions, "insertions": st.insertions,
                             "deletions": st.deletions, "ref_len": st.ref_len})
    _write_csv(path, PER_UTT_HEADER, rows)


def emit_selections(selection, path) -> None:
    """One JSON line per utterance: ``{"utt", "words", "source", "s1", "s2"}``."""
    with open(path, "w", encoding="utf-8") as f:
        for utt, h in selection.items():
            rec = {"utt": utt, "words": list(h.words), "source": h.source, "s1": h.s1, "s2": h.s2}
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# readers


def read_summary_csv(path) -> list[dict]:
    rows = _read_csv(path, SUMMARY_HEADER)
    for r in rows:
        for k in ("cheat", "dev", "test"):
            r[k] = _float_or_none(r[k])
    return rows


def read_length_csv(path) -> list[tuple[str, str, LengthBin]]:
    out = []
    for r in _read_csv(path, LENGTH_HEADER):
        out.append((r["set"], r["system"], LengthBin(
            int(r["lo"]), None if r["hi"] == "" else int(r["hi"]), _float_or_none(r["wer"]),
            int(r["ref_words"]), int(r["errors"]), int(r["num_utts"]))))
    return out


def read_overlap_csv(path) -> list[tuple[int, int]]:
    return [(int(r["k"]), int(r["num_utterances"])) for r in _read_csv(path, OVERLAP_HEADER)]
