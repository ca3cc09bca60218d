"""Tail-reader for the oracle event channel (line-delimited JSON file).

The channel is a file-path contract: any process honoring the record schema
may append. Collection is windowed by a marker (byte offset + record count)
so each fuzzing round only sees its own delta.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from ..anchor.types import VulnClass
from .evidence import OracleHit

logger = logging.getLogger(__name__)

ORACLE_OUT_ENV = "VIPER_ORACLE_OUT"
MANIFEST_ENV = "VIPER_MANIFEST"


@dataclass(frozen=True)
class OracleMarker:
    offset: int = 0
    count: int = 0


def collect_oracle(
    events_path: str | Path, since_marker: OracleMarker | None = None
) -> tuple[list[OracleHit], OracleMarker]:
    """Records strictly after `since_marker`, plus the advanced marker.

    Malformed lines are skipped with a diagnostic. A trailing line without a
    newline is treated as still being written: the marker does not advance
    past it, so it is re-read on the next collection.
    """
    marker = since_marker or OracleMarker()
    path = Path(events_path)
    if not path.exists():
        return [], marker
    size = path.stat().st_size
    if marker.offset >= size:
        return [], marker

    hits: list[OracleHit] = []
    count = marker.count
    with path.open("rb") as fh:
        fh.seek(marker.offset)
        data = fh.read()
    offset = marker.offset
    for raw in data.split(b"\n"):
        # Only complete lines advance the marker.
        if offset + len(raw) + 1 > marker.offset + len(data):
            break
        offset += len(raw) + 1
        count += 1
        line = raw.decode("utf-8", errors="replace").strip()
        if not line:
            continue
        hit = _parse_event(line)
        if hit is None:
            logger.warning("oracle event %d malformed, skipped: %r", count, line[:120])
            continue
        hits.append(hit)
    return hits, OracleMarker(offset=offset, count=count)


def _parse_event(line: str) -> OracleHit | None:
    try:
        record = json.loads(line)
    except json.JSONDecodeError:
        return None
    if not isinstance(record, dict):
        return None
    try:
        return OracleHit(
            sink=record["sink"],
            category=VulnClass(record["category"]),
            args_preview=record.get("args_preview", ""),
            ts=float(record.get("ts", 0.0)),
            enclosing_function=record.get("enclosing_function"),
            line=record.get("line"),
        )
    except (KeyError, ValueError):
        return None


class OracleWatcher:
    """Holds the marker between rounds; hands hits only at round boundaries."""

    def __init__(self, events_path: str | Path):
        self.events_path = Path(events_path)
        self.marker = OracleMarker()

    def poll(self) -> list[OracleHit]:
        hits, self.marker = collect_oracle(self.events_path, self.marker)
        return hits

    def skip_to_end(self) -> None:
        _, self.marker = collect_oracle(self.events_path, self.marker)
