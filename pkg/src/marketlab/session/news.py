"""Per-period news items shown to all participants simultaneously.

The sentiment tag is an authoring aid only: it lets the experimenter
check that a news set is balanced before a session, and is never used by
the market logic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import NewsLoadError

TAGS = ("neutral", "positive", "negative")


@dataclass(frozen=True)
class NewsItem:
    period: int
    headline: str
    body: str
    tag: str

    def to_wire(self) -> dict:
        return {
            "period": self.period,
            "headline": self.headline,
            "body": self.body,
            "tag": self.tag,
        }


def load_news(source: str | Path, periods: int | None = None) -> list[NewsItem]:
    """Load a news file and validate it covers the session's periods.

    The file is a JSON array of ``{period, headline, body, tag}`` with
    periods numbered consecutively from 1.
    """
    path = Path(source)
    if not path.exists():
        raise NewsLoadError(f"news file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise NewsLoadError(f"news file is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise NewsLoadError("news file must be a JSON array")
    items = []
    for k, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise NewsLoadError(f"item {k} is not an object")
        try:
            item = NewsItem(
                period=int(entry["period"]),
                headline=str(entry["headline"]),
                body=str(entry.get("body", "")),
                tag=str(entry["tag"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise NewsLoadError(f"item {k} is malformed: {exc}") from exc
        if item.tag not in TAGS:
            raise NewsLoadError(f"item {k} has unknown tag {item.tag!r}")
        if item.period != k + 1:
            raise NewsLoadError(
                f"item {k} has period {item.period}, expected {k + 1}"
            )
        items.append(item)
    if periods is not None and len(items) < periods:
        raise NewsLoadError(
            f"news file provides {len(items)} items, session needs {periods}"
        )
    return items


def tag_balance(items: list[NewsItem]) -> dict:
    """Tag counts plus a flag telling whether positives and negatives match."""
    counts = {tag: 0 for tag in TAGS}
    for item in items:
        counts[item.tag] += 1
    counts["balanced"] = counts["positive"] == counts["negative"]
    return counts
