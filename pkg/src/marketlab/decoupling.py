"""Detection of strategies and agents whose next actions are already fixed.

A strategy is q-step decoupled on a window when it recommends the same
action now and at every reachable point over the next q unrealized
direction bits: whatever path the market takes, the recommendation cannot
change.  An agent is decoupled when the same holds for the strategy it
would actually play, accounting for the possibility that hypothetical
intermediate outcomes change which of its strategies scores best.

The buy-minus-sell imbalance of a population therefore splits into a part
contributed by decoupled agents (already committed) and a coupled
remainder; the decoupled fractions d+ and d- and their gap drive the
prediction pipeline in :mod:`marketlab.slaved`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NotWarmedUpError
from .game import (
    BUY,
    MODE_DOLLAR,
    MODES,
    SELL,
    AgentState,
    HistoryWindow,
    Population,
    Strategy,
    encode_history,
    select_best_strategy,
)


@dataclass(frozen=True)
class DecoupledVerdict:
    decoupled: bool
    action: int | None = None

    def __post_init__(self):
        if self.decoupled != (self.action is not None):
            raise InvalidInputError("action is present iff decoupled")


@dataclass(frozen=True)
class ImbalanceSplit:
    coupled: int
    decoupled: int
    certain: bool


@dataclass(frozen=True)
class DecouplingSnapshot:
    d_plus: float
    d_minus: float

    @property
    def delta_d(self) -> float:
        return abs(self.d_plus - self.d_minus)


def reachable_windows(
    window_bits: tuple[int, ...], memory: int, q: int
) -> set[tuple[int, ...]]:
    """All memory-length windows reachable within 0..q future bits."""
    if len(window_bits) < memory:
        raise NotWarmedUpError(
            f"window holds {len(window_bits)} bits, memory {memory} needed"
        )
    level = {tuple(window_bits[-memory:])}
    seen = set(level)
    for _ in range(q):
        level = {w[1:] + (b,) for w in level for b in (0, 1)}
        seen |= level
    return seen


def strategy_decoupled(
    strategy: Strategy, window: HistoryWindow, q: int
) -> DecoupledVerdict:
    """Is this strategy's recommendation fixed over the next q bits?

    Decoupled means the table is constant on the current window and on
    every window reachable from it within q further direction bits; the
    verdict then carries that common action.
    """
    if q < 0:
        raise InvalidInputError("q must be >= 0")
    indices = {
        encode_history(w)
        for w in reachable_windows(window.bits, strategy.memory, q)
    }
    actions = {strategy.table[i] for i in indices}
    if len(actions) == 1:
        return DecoupledVerdict(True, actions.pop())
    return DecoupledVerdict(False)


def _branch_actions(
    agent: AgentState,
    scores: np.ndarray,
    bits: tuple[int, ...],
    depth: int,
    mode: str,
    magnitude: float,
    out: list[int],
) -> None:
    """Collect the agent's played action at every node of the branch tree.

    ``bits`` is the realized-plus-hypothetical history so far.  At each
    node the best strategy is re-selected on the hypothetically updated
    scores.  Hypothetical returns carry the branch bit's sign and a fixed
    ``magnitude``; in dollar mode a return credits each strategy's action
    on the window one bit earlier (the window it acted on), in minority
    mode the concurrent window.  A credit is skipped when the credited
    window is not fully contained in the available history.
    """
    m = agent.memory
    best = int(np.argmax(scores))
    out.append(agent.strategies[best].table[encode_history(bits[-m:])])
    if depth == 0:
        return
    for b in (0, 1):
        ret = magnitude if b == 1 else -magnitude
        if mode == MODE_DOLLAR:
            credit_bits = bits[:-1]
        else:
            credit_bits = bits
        new_scores = scores.copy()
        if len(credit_bits) >= m:
            h = encode_history(credit_bits[-m:])
            sign = 1.0 if mode == MODE_DOLLAR else -1.0
            for j, strat in enumerate(agent.strategies):
                new_scores[j] += sign * strat.table[h] * ret
        _branch_actions(agent, new_scores, bits + (b,), depth - 1, mode, magnitude, out)


def agent_decoupled(
    agent: AgentState,
    window: HistoryWindow,
    q: int,
    mode: str = MODE_DOLLAR,
    branch_magnitude: float = 1.0,
) -> DecoupledVerdict:
    """Is the action this agent will play fixed over the next q bits?

    Walks every intermediate bit path of length up to q, hypothetically
    updating scores along the way, and checks that the strategy actually
    selected recommends one and the same action at every node, the
    current decision included.

    Future return magnitudes are unknowable, so hypothetical updates use
    ``branch_magnitude`` with the branch bit's sign.  Callers scoring
    with real returns should pass the scale of those returns (the slaved
    engine uses the last realized magnitude) so that the verdict does not
    depend on the unit the series is quoted in; the default of 1 matches
    sign-only scoring.
    """
    if mode not in MODES:
        raise InvalidInputError(f"mode must be one of {MODES}")
    if q < 0:
        raise InvalidInputError("q must be >= 0")
    if branch_magnitude < 0:
        raise InvalidInputError("branch_magnitude must be >= 0")
    if len(window) < agent.memory:
        raise NotWarmedUpError(
            f"window holds {len(window)} bits, memory {agent.memory} needed"
        )
    actions: list[int] = []
    _branch_actions(
        agent,
        np.asarray(agent.scores, dtype=float),
        window.bits,
        q,
        mode,
        float(branch_magnitude),
        actions,
    )
    if len(set(actions)) == 1:
        return DecoupledVerdict(True, actions[0])
    return DecoupledVerdict(False)


def split_imbalance(
    pop: Population,
    window: HistoryWindow,
    q: int = 1,
    mode: str = MODE_DOLLAR,
    branch_magnitude: float = 1.0,
) -> ImbalanceSplit:
    """Split the order imbalance into decoupled and coupled contributions.

    Decoupled agents contribute their committed action (which equals
    their current best-strategy action); the rest contribute their
    current best-strategy action.  The two parts always sum to the
    population's aggregate on this window.  The split is *certain* when
    the decoupled part alone outweighs half the population.
    """
    dec = 0
    coup = 0
    for agent in pop.agents:
        verdict = agent_decoupled(agent, window, q, mode, branch_magnitude)
        if verdict.decoupled:
            dec += verdict.action  # type: ignore[operator]
        else:
            h = window.encode_last(agent.memory)
            coup += agent.strategies[select_best_strategy(agent)].action(h)
    return ImbalanceSplit(coupled=coup, decoupled=dec, certain=abs(dec) > pop.N / 2)


def snapshot(
    pop: Population,
    window: HistoryWindow,
    q: int = 1,
    mode: str = MODE_DOLLAR,
    census: bool = False,
    branch_magnitude: float = 1.0,
) -> DecouplingSnapshot:
    """Fractions of the population committed to buying and to selling.

    By default counts agents (the strategy each would actually play);
    with ``census=True`` counts every held strategy instead, decoupled or
    not by its own table, which ignores score-driven switching.
    """
    if census:
        n_buy = n_sell = total = 0
        for agent in pop.agents:
            for strat in agent.strategies:
                total += 1
                verdict = strategy_decoupled(strat, window, q)
                if verdict.decoupled:
                    if verdict.action == BUY:
                        n_buy += 1
                    else:
                        n_sell += 1
        return DecouplingSnapshot(n_buy / total, n_sell / total)

    n_buy = n_sell = 0
    for agent in pop.agents:
        verdict = agent_decoupled(agent, window, q, mode, branch_magnitude)
        if verdict.decoupled:
            if verdict.action == BUY:
                n_buy += 1
            else:
                n_sell += 1
    return DecouplingSnapshot(n_buy / pop.N, n_sell / pop.N)
