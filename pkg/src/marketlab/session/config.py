"""Session configuration and its JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

from ..errors import InvalidInputError
from ..market import MarketParams, to_money
from ..slaved import EnsembleConfig
from .news import NewsItem, load_news


@dataclass(frozen=True)
class SessionConfig:
    n_participants: int = 10
    period_seconds: float = 15.0
    periods: int = 60
    market: MarketParams = None  # type: ignore[assignment]
    news: list[NewsItem] = field(default_factory=list)
    pool: Decimal = Decimal("200")
    initial_cash: Decimal = Decimal("0")
    live_delta_d: EnsembleConfig | None = None
    feed_threshold: float = 0.2
    close_on_full_book: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.n_participants < 1:
            raise InvalidInputError("n_participants must be >= 1")
        if self.period_seconds < 1:
            raise InvalidInputError("period_seconds must be >= 1")
        if self.periods < 1:
            raise InvalidInputError("periods must be >= 1")
        if self.market is None:
            object.__setattr__(
                self,
                "market",
                MarketParams.for_participants(self.n_participants, periods=self.periods),
            )
        if len(self.news) < self.periods:
            raise InvalidInputError(
                f"{len(self.news)} news items for {self.periods} periods"
            )
        object.__setattr__(self, "pool", to_money(self.pool))
        object.__setattr__(self, "initial_cash", to_money(self.initial_cash))

    @classmethod
    def from_json(cls, path: str | Path) -> "SessionConfig":
        """Build a config from a JSON file; news comes from ``news_file``."""
        base = Path(path).parent
        raw = json.loads(Path(path).read_text())
        market_raw = raw.get("market", {})
        n = int(raw.get("n_participants", 10))
        periods = int(raw.get("periods", 60))
        market = MarketParams(
            initial_price=float(market_raw.get("initial_price", 5.0)),
            liquidity=float(market_raw.get("liquidity", 10.0 * n)),
            dividend=to_money(market_raw.get("dividend", "0.10")),
            periods=periods,
        )
        news_file = raw.get("news_file")
        if news_file is None:
            raise InvalidInputError("session config must name a news_file")
        news_path = Path(news_file)
        if not news_path.is_absolute():
            news_path = base / news_path
        news = load_news(news_path, periods=periods)
        feed_raw = raw.get("live_delta_d")
        feed = None
        if feed_raw is not None:
            feed = EnsembleConfig(
                n_agents=int(feed_raw.get("n_agents", n)),
                s_max=int(feed_raw.get("s_max", 10)),
                m_max=int(feed_raw.get("m_max", 6)),
                runs=int(feed_raw.get("runs", 200)),
                mode=feed_raw.get("mode", "dollar"),
                q=int(feed_raw.get("q", 1)),
                seed=int(feed_raw.get("seed", raw.get("seed", 0))),
            )
        return cls(
            n_participants=n,
            period_seconds=float(raw.get("period_seconds", 15)),
            periods=periods,
            market=market,
            news=news,
            pool=to_money(raw.get("pool", "200")),
            initial_cash=to_money(raw.get("initial_cash", "0")),
            live_delta_d=feed,
            feed_threshold=float(raw.get("feed_threshold", 0.2)),
            close_on_full_book=bool(raw.get("close_on_full_book", False)),
            seed=int(raw.get("seed", 0)),
        )

    def public_dict(self) -> dict:
        """The configuration as recorded in the session log."""
        return {
            "n_participants": self.n_participants,
            "period_seconds": self.period_seconds,
            "periods": self.periods,
            "initial_price": self.market.initial_price,
            "liquidity": self.market.liquidity,
            "dividend": str(self.market.dividend),
            "pool": str(self.pool),
            "initial_cash": str(self.initial_cash),
            "news_items": len(self.news),
            "close_on_full_book": self.close_on_full_book,
            "seed": self.seed,
        }
