"""Live experiment sessions: timed periods, orders, prices, persistence."""

from .config import SessionConfig
from .engine import SessionEngine
from .log import SessionLog, replay
from .news import NewsItem, load_news, tag_balance

__all__ = [
    "NewsItem",
    "SessionConfig",
    "SessionEngine",
    "SessionLog",
    "load_news",
    "replay",
    "tag_balance",
]
