"""Price formation, participant accounts and end-of-session settlement.

Prices move multiplicatively with the order imbalance, ``P(t) =
P(t-1) * exp(A/b)`` with liquidity ``b``; choosing ``b = 10 * N`` makes a
unanimous buy or sell a 10 percent move in log terms.  Prices are kept at
full float precision internally; money amounts (cash, P&L, payouts) are
exact decimals with four fractional digits, displayed with two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from decimal import ROUND_HALF_EVEN, Decimal

from .errors import InvalidInputError

MONEY_QUANTUM = Decimal("0.0001")

ORDER_BUY = "buy"
ORDER_SELL = "sell"
ORDER_HOLD = "hold"
ORDERS = (ORDER_BUY, ORDER_SELL, ORDER_HOLD)


def to_money(value) -> Decimal:
    """Quantize any numeric value to the internal 4-digit money grid."""
    if isinstance(value, float):
        value = repr(value)
    return Decimal(value).quantize(MONEY_QUANTUM, rounding=ROUND_HALF_EVEN)


def money_str(value: Decimal) -> str:
    """Wire/display form: plain string with 4 fractional digits."""
    return str(to_money(value))


@dataclass(frozen=True)
class MarketParams:
    initial_price: float = 5.0
    liquidity: float = 100.0
    dividend: Decimal = Decimal("0.10")
    periods: int = 60

    def __post_init__(self):
        if self.initial_price <= 0:
            raise InvalidInputError("initial_price must be > 0")
        if self.liquidity <= 0:
            raise InvalidInputError("liquidity must be > 0")
        if self.periods < 1:
            raise InvalidInputError("periods must be >= 1")

    @classmethod
    def for_participants(cls, n: int, **kwargs) -> "MarketParams":
        """Default parameterization: liquidity ten times the head count."""
        return cls(liquidity=10.0 * n, **kwargs)


def update_price(prev: float, imbalance: int, liquidity: float) -> float:
    """New price after one period's net order flow."""
    if prev <= 0:
        raise InvalidInputError("price must be > 0")
    if liquidity <= 0:
        raise InvalidInputError("liquidity must be > 0")
    return prev * math.exp(imbalance / liquidity)


@dataclass(frozen=True)
class ParticipantAccount:
    """Shares and cash of one participant; both may go negative.

    Short selling and zero-rate borrowing are allowed, so there are no
    margin constraints.  ``initial_cash`` anchors the mark-to-market P&L.
    """

    shares: int = 0
    cash: Decimal = Decimal("0")
    initial_cash: Decimal = Decimal("0")


def apply_order(
    acct: ParticipantAccount, order: str, exec_price: Decimal
) -> ParticipantAccount:
    """Execute a one-share order (or hold) at the given price."""
    if order not in ORDERS:
        raise InvalidInputError(f"order must be one of {ORDERS}")
    price = to_money(exec_price)
    if order == ORDER_BUY:
        return replace(acct, shares=acct.shares + 1, cash=acct.cash - price)
    if order == ORDER_SELL:
        return replace(acct, shares=acct.shares - 1, cash=acct.cash + price)
    return acct


def mark_to_market(
    acct: ParticipantAccount, price: Decimal, initial_cash: Decimal | None = None
) -> Decimal:
    """Cash plus position value, relative to the starting cash."""
    base = acct.initial_cash if initial_cash is None else initial_cash
    return to_money(acct.cash + acct.shares * to_money(price) - base)


def settle_payout(final_pnls: list[Decimal], pool: Decimal) -> list[Decimal]:
    """Split the pool pro rata among participants with a positive P&L.

    Losers and break-even participants receive zero; with no gainer at
    all the pool stays undistributed.  Shares are computed on the money
    grid with a largest-remainder correction so they sum to the pool
    exactly.
    """
    pool = to_money(pool)
    if pool < 0:
        raise InvalidInputError("pool must be >= 0")
    pnls = [to_money(p) for p in final_pnls]
    total_gain = sum((p for p in pnls if p > 0), Decimal("0"))
    if total_gain <= 0 or pool == 0:
        return [Decimal("0.0000") for _ in pnls]

    quantum = MONEY_QUANTUM
    floors: list[Decimal] = []
    remainders: list[tuple[Decimal, int]] = []
    for i, p in enumerate(pnls):
        if p <= 0:
            floors.append(Decimal("0.0000"))
            continue
        exact = pool * p / total_gain
        floor = (exact / quantum).to_integral_value(rounding="ROUND_FLOOR") * quantum
        floors.append(floor.quantize(quantum))
        remainders.append((exact - floor, i))
    leftover = int((pool - sum(floors)) / quantum)
    # Hand the residual quanta to the largest remainders; ties break by index.
    remainders.sort(key=lambda t: (-t[0], t[1]))
    for k in range(leftover):
        _, i = remainders[k % len(remainders)]
        floors[i] += quantum
    return [f.quantize(quantum) for f in floors]
