"""Pure sequencing logic of one live session.

The engine owns all mutable session state and is driven by a single
caller (the server's sequencer task, or a test) through explicit
timestamps; it performs no I/O and knows nothing about sockets.  Every
state change appends to the session log, and every method returns the
wire messages to deliver, tagged with their audience.

Rules enforced here: one accepted order per participant per period (the
first stands), nothing after the period deadline, absent orders count as
hold, and all participants see identical simultaneous information.
"""

from __future__ import annotations

import math
from typing import Any, Hashable

from ..errors import InvalidInputError
from ..game import DOWN, UP
from ..market import (
    ORDER_BUY,
    ORDER_HOLD,
    ORDER_SELL,
    ORDERS,
    ParticipantAccount,
    apply_order,
    mark_to_market,
    money_str,
    settle_payout,
    to_money,
    update_price,
)
from .config import SessionConfig
from .log import SessionLog

# Message audiences.
ALL = "all"
PARTICIPANTS = "participants"
OBSERVERS = "observers"

Outbox = list[tuple[Any, dict]]


class SessionEngine:
    def __init__(self, cfg: SessionConfig, log: SessionLog | None = None):
        self.cfg = cfg
        self.log = log if log is not None else SessionLog()
        self.phase = "lobby"
        self.period = 0
        self.deadline: float | None = None
        self.price: float = cfg.market.initial_price
        self.price_path: list[float] = [cfg.market.initial_price]
        self.bits: list[int] = []
        self.returns: list[float] = []
        self.names: list[str] = []
        self.accounts: list[ParticipantAccount] = []
        self.orders: dict[int, str] = {}
        self.payouts: list | None = None
        self._conns: dict[Hashable, int] = {}

    # -- lifecycle -----------------------------------------------------

    @property
    def ready(self) -> bool:
        return len(self.names) == self.cfg.n_participants

    def participant_of(self, conn_id: Hashable) -> int | None:
        return self._conns.get(conn_id)

    def start(self, ts: float) -> None:
        self.log.append({"ts": ts, "event": "session_start", "config": self.cfg.public_dict()})

    def handle_message(self, conn_id: Hashable, msg: dict, ts: float) -> Outbox:
        """Dispatch one client message; malformed input earns an error reply."""
        if not isinstance(msg, dict) or "type" not in msg:
            return [(conn_id, _error("bad_message", "messages need a type field"))]
        kind = msg["type"]
        if kind == "join":
            return self.join(conn_id, str(msg.get("name", "")), ts)
        if kind == "order":
            period = msg.get("period")
            action = msg.get("action")
            if not isinstance(period, int) or action not in ORDERS:
                return [(conn_id, _error("bad_message", "order needs period and a valid action"))]
            return self.submit_order(conn_id, period, action, ts)
        return [(conn_id, _error("bad_message", f"unknown message type {kind!r}"))]

    # -- lobby ---------------------------------------------------------

    def join(self, conn_id: Hashable, name: str, ts: float) -> Outbox:
        if self.phase != "lobby":
            return [(conn_id, _error("not_in_lobby", "session already started"))]
        if conn_id in self._conns:
            return [(conn_id, _error("already_joined", "connection already seated"))]
        if not name:
            return [(conn_id, _error("bad_name", "join needs a non-empty name"))]
        if name in self.names:
            return [(conn_id, _error("duplicate_name", f"name {name!r} already taken"))]
        if len(self.names) >= self.cfg.n_participants:
            return [(conn_id, _error("session_full", "all seats are taken"))]
        pid = len(self.names)
        self.names.append(name)
        self.accounts.append(
            ParticipantAccount(
                shares=0, cash=self.cfg.initial_cash, initial_cash=self.cfg.initial_cash
            )
        )
        self._conns[conn_id] = pid
        self.log.append({"ts": ts, "event": "join", "participant": pid, "name": name})
        return [
            (
                conn_id,
                {
                    "type": "joined",
                    "name": name,
                    "participant": pid,
                    "capacity": self.cfg.n_participants,
                    "joined": len(self.names),
                },
            ),
            (
                ALL,
                {
                    "type": "lobby",
                    "joined": len(self.names),
                    "capacity": self.cfg.n_participants,
                },
            ),
        ]

    def disconnect(self, conn_id: Hashable, ts: float) -> None:
        pid = self._conns.pop(conn_id, None)
        if pid is not None:
            self.log.append({"ts": ts, "event": "disconnect", "participant": pid})

    # -- periods ---------------------------------------------------------

    def open_period(self, ts: float) -> Outbox:
        if self.phase == "lobby" and not self.ready:
            raise InvalidInputError("cannot start: lobby not full")
        if self.phase not in ("lobby", "between"):
            raise InvalidInputError(f"cannot open a period from phase {self.phase}")
        if self.period >= self.cfg.periods:
            raise InvalidInputError("all periods already played")
        self.period += 1
        self.phase = "open"
        self.deadline = ts + self.cfg.period_seconds
        self.orders = {}
        news = self.cfg.news[self.period - 1]
        self.log.append(
            {
                "ts": ts,
                "event": "period_open",
                "period": self.period,
                "deadline": self.deadline,
                "price": self.price,
            }
        )
        return [
            (
                ALL,
                {
                    "type": "period_open",
                    "period": self.period,
                    "deadline_ms": int(round(self.deadline * 1000)),
                    "price": money_str(to_money(self.price)),
                    "news": news.to_wire(),
                },
            )
        ]

    def submit_order(self, conn_id: Hashable, period: int, action: str, ts: float) -> Outbox:
        pid = self._conns.get(conn_id)
        if pid is None:
            return [(conn_id, _error("unknown_participant", "join the session first"))]
        if self.phase != "open" or period != self.period:
            self.log.append(
                {
                    "ts": ts,
                    "event": "order_rejected",
                    "participant": pid,
                    "period": period,
                    "action": action,
                    "code": "wrong_period",
                }
            )
            return [(conn_id, _error("wrong_period", f"period {period} is not open"))]
        if ts > self.deadline:
            self.log.append(
                {
                    "ts": ts,
                    "event": "order_rejected",
                    "participant": pid,
                    "period": period,
                    "action": action,
                    "code": "late_order",
                }
            )
            return [(conn_id, _error("late_order", "the period deadline has passed"))]
        if pid in self.orders:
            self.log.append(
                {
                    "ts": ts,
                    "event": "order_rejected",
                    "participant": pid,
                    "period": period,
                    "action": action,
                    "code": "duplicate_order",
                }
            )
            return [(conn_id, _error("duplicate_order", "an order already stands for this period"))]
        self.orders[pid] = action
        self.log.append(
            {
                "ts": ts,
                "event": "order",
                "participant": pid,
                "period": period,
                "action": action,
            }
        )
        return [(conn_id, {"type": "order_ack", "period": period, "action": action})]

    @property
    def all_ordered(self) -> bool:
        return self.phase == "open" and len(self.orders) == self.cfg.n_participants

    def close_period(self, ts: float) -> tuple[Outbox, dict]:
        """Price the gathered orders, move accounts, broadcast the result.

        Returns the messages plus a summary dict (period, direction bit,
        log return) for the observer feed.
        """
        if self.phase != "open":
            raise InvalidInputError(f"no open period to close (phase {self.phase})")
        imbalance = 0
        for action in self.orders.values():
            if action == ORDER_BUY:
                imbalance += 1
            elif action == ORDER_SELL:
                imbalance -= 1
        prev_price = self.price
        new_price = update_price(prev_price, imbalance, self.cfg.market.liquidity)
        exec_price = to_money(new_price)
        for pid in range(len(self.accounts)):
            action = self.orders.get(pid, ORDER_HOLD)
            self.accounts[pid] = apply_order(self.accounts[pid], action, exec_price)
        if imbalance > 0:
            bit = UP
        elif imbalance < 0:
            bit = DOWN
        else:
            bit = self.bits[-1] if self.bits else DOWN
        log_return = math.log(new_price / prev_price)
        self.price = new_price
        self.price_path.append(new_price)
        self.bits.append(bit)
        self.returns.append(log_return)
        self.phase = "between"
        self.log.append(
            {
                "ts": ts,
                "event": "period_close",
                "period": self.period,
                "imbalance": imbalance,
                "price": new_price,
                "price_display": money_str(exec_price),
            }
        )
        outbox: Outbox = [
            (
                OBSERVERS,
                {
                    "type": "period_close",
                    "period": self.period,
                    "imbalance": imbalance,
                    "price": money_str(exec_price),
                },
            )
        ]
        for conn_id, pid in self._conns.items():
            acct = self.accounts[pid]
            outbox.append(
                (
                    conn_id,
                    {
                        "type": "period_close",
                        "period": self.period,
                        "imbalance": imbalance,
                        "price": money_str(exec_price),
                        "account": {
                            "shares": acct.shares,
                            "cash": money_str(acct.cash),
                            "pnl": money_str(mark_to_market(acct, exec_price)),
                        },
                    },
                )
            )
        info = {"period": self.period, "bit": bit, "log_return": log_return}
        return outbox, info

    # -- settlement ------------------------------------------------------

    def settle(self, ts: float) -> Outbox:
        if self.phase != "between" or self.period != self.cfg.periods:
            raise InvalidInputError("settlement happens after the final period closes")
        self.phase = "settling"
        final_price = to_money(self.price)
        pnls = [mark_to_market(acct, final_price) for acct in self.accounts]
        self.payouts = settle_payout(pnls, self.cfg.pool)
        self.log.append(
            {
                "ts": ts,
                "event": "settlement",
                "payouts": {
                    self.names[pid]: money_str(p) for pid, p in enumerate(self.payouts)
                },
                "pnls": {self.names[pid]: money_str(p) for pid, p in enumerate(pnls)},
            }
        )
        outbox: Outbox = [
            (
                OBSERVERS,
                {
                    "type": "settlement_summary",
                    "payouts": {
                        self.names[pid]: money_str(p)
                        for pid, p in enumerate(self.payouts)
                    },
                },
            )
        ]
        for conn_id, pid in self._conns.items():
            outbox.append(
                (conn_id, {"type": "settlement", "payout": money_str(self.payouts[pid])})
            )
        self.phase = "closed"
        self.log.append({"ts": ts, "event": "session_end"})
        return outbox


def _error(code: str, message: str) -> dict:
    return {"type": "error", "code": code, "message": message}
