"""Line-delimited JSON files for samples and bias ledgers.

A sample file starts with one header object (``{"header": ...}``) holding
the full run configuration, followed by one record per sample with the keys
``index, model, window, individuals, clan_depth, clan_size, truncated`` in
that order.  ``individuals`` is ``null`` for a truncated run that was not
cleaned.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from .model import Configuration, ModelSpec

SAMPLE_FORMAT = "clansim-samples/1"
LEDGER_FORMAT = "clansim-ledger/1"


def dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"))


def header_line(kind: str, config: dict) -> str:
    return dumps({"header": {"format": SAMPLE_FORMAT, "source": kind, "config": config}}) + "\n"


def sample_line(index: int, m: ModelSpec, window: dict, cfg: Configuration | None,
                depth: float, size: int, truncated: bool) -> str:
    rec = {
        "index": index,
        "model": m.kind,
        "window": window or None,
        "individuals": None if cfg is None else [m.individual_to_json(g) for g in cfg],
        "clan_depth": depth,
        "clan_size": size,
        "truncated": truncated,
    }
    return dumps(rec) + "\n"


@dataclass
class SampleFile:
    header: dict
    records: list[dict]

    @property
    def config(self) -> dict:
        return self.header["config"]

    def configurations(self, m: ModelSpec) -> list[Configuration]:
        """Configurations of the complete (cleaned) records, in index order."""
        return [Configuration.of(m.individual_from_json(o) for o in r["individuals"])
                for r in self.records if r["individuals"] is not None]


def parse_samples(text: str) -> SampleFile:
    lines = text.splitlines()
    if not lines:
        raise ValueError("sample file is empty (no header)")
    head = json.loads(lines[0])
    if "header" not in head or head["header"].get("format") != SAMPLE_FORMAT:
        raise ValueError("not a sample file: missing header")
    return SampleFile(head["header"], [json.loads(ln) for ln in lines[1:] if ln.strip()])


def read_samples(path) -> SampleFile:
    with open(path, encoding="utf-8") as f:
        return parse_samples(f.read())


def ledger_text(entries_jsonl: str, summary: dict | None) -> str:
    head = dumps({"header": {"format": LEDGER_FORMAT}}) + "\n"
    tail = dumps({"summary": summary}) + "\n" if summary is not None else ""
    return head + entries_jsonl + tail
