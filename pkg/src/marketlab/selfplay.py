"""Self-coupled game simulator: agents react to their own aggregate.

Each period every agent plays its best strategy on the current window, the
net imbalance moves the price through the market impact rule, and the
resulting direction bit and log return feed back into the scores.  The
emitted price series and per-period decoupling snapshots use exactly the
same slaved engine as offline analysis, so slaving the emitted series to
the population that generated it reproduces the trajectory bit for bit.

Decisions in the first periods need history that does not exist yet; a
pre-game window of uniformly random bits (derived from the run seed)
covers them.  Those bits are not part of the emitted series and nothing
is scored until the realized history fills the warm-up window, matching
the offline convention.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np

from .errors import InvalidInputError
from .game import BUY, DOWN, SELL, UP, AgentState, Population, Strategy
from .market import MarketParams
from .slaved import (
    _TAG_RUN,
    _TAG_WARMUP,
    DecouplingTrajectory,
    EnsembleConfig,
    PriceSeries,
    SlavedEnsemble,
    rng_for,
    sample_population,
)


def constant_population(n_agents: int, action: int) -> Population:
    """Agents that all hold a single always-buy or always-sell strategy."""
    if action not in (BUY, SELL):
        raise InvalidInputError("forced action must be +1 or -1")
    return Population(
        [AgentState([Strategy.constant(1, action)]) for _ in range(n_agents)]
    )


def run_selfplay(
    cfg: EnsembleConfig,
    periods: int,
    market: MarketParams | None = None,
    force_constant: int | None = None,
) -> tuple[PriceSeries, DecouplingTrajectory, Population]:
    """Play the self-coupled game and return series, trajectory, population."""
    if periods < 1:
        raise InvalidInputError("periods must be >= 1")
    if market is None:
        market = MarketParams.for_participants(cfg.n_agents, periods=periods)
    if force_constant is not None:
        pop = constant_population(cfg.n_agents, force_constant)
    else:
        pop = sample_population(cfg, rng_for(cfg.seed, _TAG_RUN, 0))

    engine = SlavedEnsemble(cfg, [pop])
    warm_rng = rng_for(cfg.seed, _TAG_WARMUP)
    decision = deque(
        (int(b) for b in warm_rng.integers(0, 2, size=cfg.m_max)),
        maxlen=cfg.m_max,
    )

    prices = [market.initial_price]
    emitted_bits: list[int] = []
    snap_periods, dps, dms = [], [], []
    for t in range(1, periods + 1):
        imbalance = engine.aggregate_action(tuple(decision))
        if imbalance > 0:
            bit = UP
        elif imbalance < 0:
            bit = DOWN
        else:
            bit = emitted_bits[-1] if emitted_bits else DOWN
        new_price = prices[-1] * math.exp(imbalance / market.liquidity)
        # Feed the exact float return the offline analyzer will recompute.
        log_return = math.log(new_price / prices[-1])
        prices.append(new_price)
        emitted_bits.append(bit)
        decision.append(bit)
        engine.observe(bit, log_return)
        if cfg.m_max <= t <= periods - 1:
            dp, dm = engine.snapshot()
            snap_periods.append(t)
            dps.append(dp)
            dms.append(dm)

    series = PriceSeries.from_prices(prices)
    traj = DecouplingTrajectory(
        np.asarray(snap_periods, dtype=int),
        np.asarray(dps),
        np.asarray(dms),
        provenance="single-run",
        runs=1,
    )
    return series, traj, pop
