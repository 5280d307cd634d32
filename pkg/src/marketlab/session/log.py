"""Append-only session log: newline-delimited JSON, the source of truth.

Replaying a log recomputes the price path from the recorded orders and
cross-checks it against the recorded closes, so any truncation or
tampering surfaces as a :class:`ReplayError` naming the first bad period.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import IO, Iterable

from ..errors import ReplayError
from ..market import (
    ORDER_BUY,
    ORDER_SELL,
    ParticipantAccount,
    apply_order,
    mark_to_market,
    money_str,
    settle_payout,
    to_money,
    update_price,
)
from ..slaved import PriceSeries


class SessionLog:
    """In-memory event list with optional live file mirroring."""

    def __init__(self, sink: IO[str] | None = None):
        self.events: list[dict] = []
        self._sink = sink
        self._last_ts = float("-inf")

    def append(self, event: dict) -> None:
        # Server timestamps must never run backwards in the log.
        ts = float(event.get("ts", 0.0))
        if ts < self._last_ts:
            event = dict(event)
            event["ts"] = self._last_ts
        else:
            self._last_ts = ts
        self.events.append(event)
        if self._sink is not None:
            self._sink.write(json.dumps(event, sort_keys=True) + "\n")
            self._sink.flush()

    def write(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for event in self.events:
                fh.write(json.dumps(event, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path: str | Path) -> "SessionLog":
        log = cls()
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    log.events.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise ReplayError(f"log line {lineno} is not valid JSON: {exc}") from exc
        return log


def replay(log: SessionLog | Iterable[dict]) -> PriceSeries:
    """Rebuild the price series from a session log, verifying every period.

    The path is recomputed from the accepted orders through the price
    impact rule and must match each recorded close exactly; when a
    settlement event is present, payouts are re-derived and checked too.
    """
    events = log.events if isinstance(log, SessionLog) else list(log)
    start = next((e for e in events if e.get("event") == "session_start"), None)
    if start is None:
        raise ReplayError("log has no session_start event")
    cfg = start["config"]
    periods = int(cfg["periods"])
    liquidity = float(cfg["liquidity"])
    initial_price = float(cfg["initial_price"])
    n_participants = int(cfg["n_participants"])
    initial_cash = to_money(cfg.get("initial_cash", "0"))

    orders_by_period: dict[int, dict[int, str]] = {}
    closes: dict[int, dict] = {}
    names: dict[int, str] = {}
    settlement = None
    for e in events:
        kind = e.get("event")
        if kind == "order":
            orders_by_period.setdefault(int(e["period"]), {})[int(e["participant"])] = e["action"]
        elif kind == "period_close":
            closes[int(e["period"])] = e
        elif kind == "join":
            names[int(e["participant"])] = e["name"]
        elif kind == "settlement":
            settlement = e

    prices = [initial_price]
    accounts = [
        ParticipantAccount(shares=0, cash=initial_cash, initial_cash=initial_cash)
        for _ in range(n_participants)
    ]
    for t in range(1, periods + 1):
        close = closes.get(t)
        if close is None:
            raise ReplayError(f"truncated log: missing period_close for period {t}")
        orders = orders_by_period.get(t, {})
        imbalance = sum(
            +1 if a == ORDER_BUY else -1 if a == ORDER_SELL else 0
            for a in orders.values()
        )
        if imbalance != int(close["imbalance"]):
            raise ReplayError(
                f"period {t}: recorded imbalance {close['imbalance']} "
                f"differs from replayed {imbalance}"
            )
        price = update_price(prices[-1], imbalance, liquidity)
        recorded = float(close["price"])
        if price != recorded:
            raise ReplayError(
                f"period {t}: recorded price {recorded!r} differs from replayed {price!r}"
            )
        exec_price = to_money(price)
        for pid in range(n_participants):
            accounts[pid] = apply_order(accounts[pid], orders.get(pid, "hold"), exec_price)
        prices.append(price)

    if settlement is not None:
        final_price = to_money(prices[-1])
        pnls = [mark_to_market(a, final_price) for a in accounts]
        payouts = settle_payout(pnls, to_money(cfg.get("pool", "0")))
        recorded_payouts = settlement.get("payouts", {})
        for pid, payout in enumerate(payouts):
            name = names.get(pid, str(pid))
            if money_str(payout) != recorded_payouts.get(name):
                raise ReplayError(
                    f"settlement mismatch for {name}: replayed {money_str(payout)}, "
                    f"recorded {recorded_payouts.get(name)}"
                )
    return PriceSeries.from_prices(prices)
