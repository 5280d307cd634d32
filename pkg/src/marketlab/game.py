"""Core engine for binary-choice market games.

Agents hold fixed lookup-table strategies over the last M realized price
directions, keep a cumulative virtual score per strategy, and always play
the strategy with the highest score.  Two payoff modes are supported:

* ``"minority"`` -- a strategy is rewarded for being on the less crowded
  side of the current order imbalance (score change ``-a * A``).
* ``"dollar"``   -- a strategy is rewarded when the position it proposed
  one period earlier is validated by the next price move (score change
  ``a * r`` with ``r`` the realized log return).

Indexing convention used everywhere in this package: a history window
contains the direction bits realized strictly before a decision, most
recent bit last, and the most recent bit carries weight ``2**0`` in the
encoded index.  Direction bits are 1 (up) and 0 (down); actions are +1
(buy) and -1 (sell).
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError, NotWarmedUpError

logger = logging.getLogger(__name__)

UP = 1
DOWN = 0
BUY = 1
SELL = -1

MODE_DOLLAR = "dollar"
MODE_MINORITY = "minority"
MODES = (MODE_DOLLAR, MODE_MINORITY)


def encode_history(bits: Sequence[int], memory: int | None = None) -> int:
    """Encode a direction-bit window (oldest first) as a table index.

    The most recent bit, ``bits[-1]``, has weight 1; each older bit doubles
    the weight.  With ``memory`` given, the window length must match it.
    """
    if memory is not None and len(bits) != memory:
        raise InvalidInputError(
            f"window of length {len(bits)} does not match memory {memory}"
        )
    h = 0
    for b in bits:
        if b not in (0, 1):
            raise InvalidInputError(f"direction bits must be 0 or 1, got {b!r}")
        h = (h << 1) | b
    return h


@dataclass(frozen=True)
class Strategy:
    """A fixed map from each of the 2**memory histories to buy/sell."""

    memory: int
    table: tuple[int, ...]

    def __post_init__(self):
        if self.memory < 1:
            raise InvalidInputError("memory must be >= 1")
        if len(self.table) != 2**self.memory:
            raise InvalidInputError(
                f"table length {len(self.table)} != 2**{self.memory}"
            )
        if any(a not in (BUY, SELL) for a in self.table):
            raise InvalidInputError("strategy actions must be +1 or -1")
        object.__setattr__(self, "table", tuple(int(a) for a in self.table))

    def action(self, history_index: int) -> int:
        return self.table[history_index]

    @classmethod
    def constant(cls, memory: int, action: int) -> "Strategy":
        return cls(memory, (action,) * (2**memory))

    @classmethod
    def random(cls, memory: int, rng: np.random.Generator) -> "Strategy":
        table = rng.integers(0, 2, size=2**memory) * 2 - 1
        return cls(memory, tuple(int(a) for a in table))


@dataclass
class AgentState:
    """One agent: its strategies plus a cumulative virtual score for each."""

    strategies: list[Strategy]
    scores: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not self.strategies:
            raise InvalidInputError("an agent needs at least one strategy")
        memories = {s.memory for s in self.strategies}
        if len(memories) != 1:
            raise InvalidInputError("all strategies of one agent share its memory")
        if self.scores is None:
            self.scores = np.zeros(len(self.strategies))
        else:
            self.scores = np.asarray(self.scores, dtype=float)
        if len(self.scores) != len(self.strategies):
            raise InvalidInputError("scores length must equal strategies length")

    @property
    def memory(self) -> int:
        return self.strategies[0].memory

    @property
    def n_strategies(self) -> int:
        return len(self.strategies)


@dataclass
class Population:
    agents: list[AgentState]

    def __post_init__(self):
        if not self.agents:
            raise InvalidInputError("population must contain at least one agent")

    @property
    def N(self) -> int:
        return len(self.agents)

    @property
    def max_memory(self) -> int:
        return max(a.memory for a in self.agents)


class HistoryWindow:
    """Rolling buffer of the most recent realized direction bits.

    Bits are stored oldest first; pushing beyond ``capacity`` drops the
    oldest bit.  ``encode_last(m)`` yields the table index for a memory-m
    strategy reading this window.
    """

    def __init__(self, capacity: int, bits: Iterable[int] = ()):
        if capacity < 1:
            raise InvalidInputError("capacity must be >= 1")
        self.capacity = capacity
        self._bits: deque[int] = deque(maxlen=capacity)
        for b in bits:
            self.push(b)

    def push(self, bit: int) -> None:
        if bit not in (0, 1):
            raise InvalidInputError(f"direction bits must be 0 or 1, got {bit!r}")
        self._bits.append(bit)

    def __len__(self) -> int:
        return len(self._bits)

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple(self._bits)

    def last_bits(self, m: int) -> tuple[int, ...]:
        if m > len(self._bits):
            raise NotWarmedUpError(
                f"window holds {len(self._bits)} bits, {m} requested"
            )
        return tuple(self._bits)[-m:] if m else ()

    def encode_last(self, m: int) -> int:
        return encode_history(self.last_bits(m))

    def copy(self) -> "HistoryWindow":
        return HistoryWindow(self.capacity, self._bits)


def mg_payoff(action: int, imbalance: int) -> float:
    """Minority-game payoff of one action against the order imbalance."""
    if action not in (BUY, SELL):
        raise InvalidInputError("action must be +1 or -1")
    return -action * imbalance


def dollar_payoff(prev_action: int, return_t: float) -> float:
    """Dollar-game payoff: the previous period's action times this return."""
    if prev_action not in (BUY, SELL):
        raise InvalidInputError("action must be +1 or -1")
    return prev_action * return_t


def select_best_strategy(agent: AgentState) -> int:
    """Index of the highest-scoring strategy; ties go to the lowest index."""
    return int(np.argmax(agent.scores))


def step_aggregate(pop: Population, window: HistoryWindow) -> tuple[int, int]:
    """One decision step: every agent plays its best strategy on the window.

    Returns the order imbalance ``A`` and the resulting direction bit.
    With a perfectly balanced book (A == 0) the previous bit, i.e. the
    window's most recent entry, is carried forward and the event logged.
    """
    if len(window) < pop.max_memory:
        raise NotWarmedUpError(
            f"window holds {len(window)} bits, agents need up to {pop.max_memory}"
        )
    a_total = 0
    for agent in pop.agents:
        h = window.encode_last(agent.memory)
        best = select_best_strategy(agent)
        a_total += agent.strategies[best].action(h)
    if a_total > 0:
        bit = UP
    elif a_total < 0:
        bit = DOWN
    else:
        bit = window.bits[-1]
        logger.debug("zero imbalance: carrying previous direction bit %d", bit)
    return a_total, bit


def update_scores(
    pop: Population,
    prev_window: HistoryWindow,
    realized_return: float,
    mode: str = MODE_DOLLAR,
    imbalance: int = 0,
) -> None:
    """Credit every strategy for its action on ``prev_window``.

    ``prev_window`` must be the window the strategies acted on.  In dollar
    mode each strategy gains its action times the realized return; in
    minority mode it gains minus its action times the imbalance.
    """
    if mode not in MODES:
        raise InvalidInputError(f"mode must be one of {MODES}")
    for agent in pop.agents:
        h = prev_window.encode_last(agent.memory)
        for j, strat in enumerate(agent.strategies):
            a = strat.action(h)
            if mode == MODE_DOLLAR:
                agent.scores[j] += a * realized_return
            else:
                agent.scores[j] += -a * imbalance


def count_minority_nash(n_players: int) -> int:
    """Number of one-shot minority-game equilibria for an odd player count.

    Counts the splits of the players into a minority of (N-1)/2 and a
    majority of (N+1)/2; which side buys and which sells is immaterial
    (the payoff is symmetric under relabeling buy as sell), so a split and
    its mirror image count once.
    """
    if n_players < 1 or n_players % 2 == 0:
        raise InvalidInputError("the one-shot count is defined for odd N >= 1")
    half_small = (n_players - 1) // 2
    return math.comb(n_players, half_small)


@dataclass(frozen=True)
class AbsorbingCertificate:
    """Evidence that a constant trend cannot make any agent switch away."""

    holds: bool
    memory: int
    periods: int
    direction: str
    constant_score: float
    best_score: float
    n_tied: int


def verify_constant_profile_absorbing(
    memory: int, periods: int, direction: str = "both"
) -> AbsorbingCertificate:
    """Exhaustively check that a constant trend is self-sustaining.

    Along an all-up path scored in dollar mode, the always-buy strategy
    accumulates at least the score of every one of the 2**(2**memory)
    possible strategies, so no agent holding it ever switches away; the
    mirrored statement holds for an all-down path and always-sell.  Only
    feasible for small memories (the check enumerates every table).
    """
    if memory > 4:
        raise InvalidInputError("exhaustive check is limited to memory <= 4")
    if direction == "both":
        up = verify_constant_profile_absorbing(memory, periods, "up")
        down = verify_constant_profile_absorbing(memory, periods, "down")
        merged = up if up.holds == down.holds or not up.holds else down
        return AbsorbingCertificate(
            up.holds and down.holds,
            memory,
            periods,
            "both",
            merged.constant_score,
            merged.best_score,
            merged.n_tied,
        )
    if direction not in ("up", "down"):
        raise InvalidInputError("direction must be 'up', 'down' or 'both'")

    n_entries = 2**memory
    n_strategies = 2**n_entries
    # Row s spells out table s: bit h of s gives the action on history h.
    codes = np.arange(n_strategies, dtype=np.uint32)
    tables = np.zeros((n_strategies, n_entries), dtype=np.int8)
    for h in range(n_entries):
        tables[:, h] = ((codes >> h) & 1).astype(np.int8) * 2 - 1

    bit = UP if direction == "up" else DOWN
    ret = 1.0 if direction == "up" else -1.0
    window = HistoryWindow(memory, [bit] * memory)
    scores = np.zeros(n_strategies)
    for _ in range(periods):
        h = window.encode_last(memory)
        scores += tables[:, h] * ret
        window.push(bit)

    # Always-buy is the table with every code bit set; always-sell is code 0.
    constant_index = n_strategies - 1 if direction == "up" else 0
    constant_score = float(scores[constant_index])
    best_score = float(scores.max())
    n_tied = int(np.sum(scores == best_score))
    return AbsorbingCertificate(
        holds=constant_score >= best_score,
        memory=memory,
        periods=periods,
        direction=direction,
        constant_score=constant_score,
        best_score=best_score,
        n_tied=n_tied,
    )
