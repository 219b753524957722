"""Check records and their text / line-delimited JSON renderings."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional

STATUSES = ("pass", "fail", "skip")
FORMATS = ("text", "records")


@dataclass(frozen=True)
class Record:
    suite: str
    check: str
    anchor: str  # topic label for the check
    status: str
    witness: str = ""
    seed: Optional[int] = None

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")


@dataclass
class Report:
    records: List[Record] = field(default_factory=list)
    tables: Dict[str, str] = field(default_factory=dict)  # title -> aligned grid

    def add(self, suite: str, check: str, anchor: str, ok: bool, witness: str = "", seed: Optional[int] = None) -> Record:
        r = Record(suite, check, anchor, "pass" if ok else "fail", "" if ok else witness, seed)
        self.records.append(r)
        return r

    def skip(self, suite: str, check: str, anchor: str, reason: str) -> Record:
        r = Record(suite, check, anchor, "skip", reason)
        self.records.append(r)
        return r

    def extend(self, other: "Report") -> None:
        self.records.extend(other.records)
        self.tables.update(other.tables)

    def sorted(self) -> List[Record]:
        return sorted(self.records, key=lambda r: (r.suite, r.check))

    def counts(self) -> Dict[str, int]:
        out = {s: 0 for s in STATUSES}
        for r in self.records:
            out[r.status] += 1
        return out

    @property
    def failed(self) -> int:
        return self.counts()["fail"]

    def exit_code(self) -> int:
        return 1 if self.failed else 0


def summary_line(counts: Dict[str, int]) -> str:
    line = f"{counts['pass']} passed, {counts['fail']} failed"
    if counts.get("skip"):
        line += f", {counts['skip']} skipped"
    return line


def render_text(rep: Report) -> str:
    rows = rep.sorted()
    w_suite = max([5] + [len(r.suite) for r in rows])
    w_check = max([5] + [len(r.check) for r in rows])
    lines = [f"{'suite':<{w_suite}}  {'check':<{w_check}}  status  topic", "-" * (w_suite + w_check + 24)]
    for r in rows:
        lines.append(f"{r.suite:<{w_suite}}  {r.check:<{w_check}}  {r.status:<6}  {r.anchor}")
        if r.witness:
            for wl in r.witness.splitlines():
                lines.append(" " * (w_suite + 2) + "  " + wl)
    for title in sorted(rep.tables):
        lines.append("")
        lines.append(title)
        lines.append(rep.tables[title])
    lines.append("")
    lines.append(summary_line(rep.counts()))
    return "\n".join(lines) + "\n"


def render_records(rep: Report) -> str:
    out = []
    for r in rep.sorted():
        d = {k: v for k, v in asdict(r).items() if v not in ("", None)}
        out.append(json.dumps(d, sort_keys=True, ensure_ascii=False))
    return "\n".join(out) + ("\n" if out else "")


def emit_report(rep: Report, fmt: str = "text") -> str:
    if fmt == "text":
        return render_text(rep)
    if fmt == "records":
        return render_records(rep)
    raise ValueError(f"unknown report format {fmt!r}; choose from {', '.join(FORMATS)}")


def counts_from_records(text: str) -> Dict[str, int]:
    out = {s: 0 for s in STATUSES}
    for line in text.splitlines():
        if line.strip():
            out[json.loads(line)["status"]] += 1
    return out


def records_of(rows: Iterable[Record]) -> Report:
    return Report(list(rows))
