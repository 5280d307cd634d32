"""Monte Carlo ensembles slaved to a recorded price series.

Instead of reacting to their own aggregate, the agents here read direction
bits and log returns from an externally supplied series: the series drives
everything, the agents only keep score.  Averaging the decoupled buy/sell
fractions d+ and d- over many independently sampled populations yields a
per-period gap whose size triggers predictions of the next direction bit.

Score accounting (one convention for the whole package): the return
realized in period t credits each strategy with its action on the window
that was current when the corresponding position was entered.  In dollar
mode that is the window ending two bits before t (a decision moves the
price it executes at, so its profit is the move after that); in minority
mode it is the window ending one bit before t (minority payoff is
concurrent).  No scoring happens until the credited window holds a full
``m_max`` realized bits, so runs on the same series are comparable across
agent memories.

Seeding: every stochastic object derives from a 64-bit master seed through
``numpy.random.SeedSequence`` with fixed integer tags, so ensembles are
bit-reproducible and runs may be computed in any order or in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .decoupling import reachable_windows
from .errors import InvalidInputError, NotWarmedUpError
from .game import (
    BUY,
    DOWN,
    MODE_DOLLAR,
    MODES,
    SELL,
    UP,
    AgentState,
    HistoryWindow,
    Population,
    Strategy,
    encode_history,
)

# Integer tags for seed derivation (entropy tuples must be ints).
_TAG_RUN = 0
_TAG_BOOTSTRAP = 1
_TAG_WARMUP = 2


def rng_for(*entropy: int) -> np.random.Generator:
    """A PCG64 generator keyed by a tuple of integers."""
    return np.random.default_rng(np.random.SeedSequence(tuple(entropy)))


def derive_seed(*entropy: int) -> int:
    """A 64-bit child seed deterministically derived from integer tags."""
    return int(np.random.SeedSequence(tuple(entropy)).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class EnsembleConfig:
    """Parameters of one slaved Monte Carlo ensemble."""

    n_agents: int = 10
    s_max: int = 10
    m_max: int = 6
    runs: int = 1000
    mode: str = MODE_DOLLAR
    q: int = 1
    seed: int = 0
    sign_returns: bool = False
    census: bool = False

    def __post_init__(self):
        if self.n_agents < 1:
            raise InvalidInputError("n_agents must be >= 1")
        if self.s_max < 1 or self.m_max < 1:
            raise InvalidInputError("s_max and m_max must be >= 1")
        if self.runs < 1:
            raise InvalidInputError("runs must be >= 1")
        if self.mode not in MODES:
            raise InvalidInputError(f"mode must be one of {MODES}")
        if self.q < 0:
            raise InvalidInputError("q must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise InvalidInputError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class PriceSeries:
    """Prices with derived log returns and direction bits.

    ``returns[k]`` and ``bits[k]`` describe the move from ``prices[k]`` to
    ``prices[k+1]``; both are one entry shorter than ``prices``.  A zero
    return carries the previous bit forward (down for a tie at the start).
    """

    prices: np.ndarray
    returns: np.ndarray
    bits: np.ndarray

    @classmethod
    def from_prices(
        cls, prices: Sequence[float], tie_default: int = DOWN
    ) -> "PriceSeries":
        p = np.asarray(prices, dtype=float)
        if p.ndim != 1 or len(p) < 1:
            raise InvalidInputError("prices must be a non-empty 1-d sequence")
        if np.any(p <= 0) or not np.all(np.isfinite(p)):
            raise InvalidInputError("prices must be positive and finite")
        returns = np.log(p[1:] / p[:-1])
        bits = np.empty(len(returns), dtype=np.int8)
        prev = tie_default
        for k, r in enumerate(returns):
            if r > 0:
                prev = UP
            elif r < 0:
                prev = DOWN
            bits[k] = prev
        return cls(prices=p, returns=returns, bits=bits)

    def __len__(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class DecouplingTrajectory:
    """Per-period decoupled fractions, single run or ensemble mean."""

    periods: np.ndarray
    d_plus: np.ndarray
    d_minus: np.ndarray
    provenance: str = "single-run"
    runs: int = 1

    @property
    def delta_d(self) -> np.ndarray:
        return np.abs(self.d_plus - self.d_minus)

    def __len__(self) -> int:
        return len(self.periods)


@dataclass(frozen=True)
class SuccessRow:
    threshold: float
    success_rate: float | None
    n_events: int

    def __post_init__(self):
        if (self.success_rate is None) != (self.n_events == 0):
            raise InvalidInputError("success_rate is absent iff n_events == 0")


@dataclass(frozen=True)
class SuccessTable:
    rows: tuple[SuccessRow, ...]

    def __post_init__(self):
        thresholds = [r.threshold for r in self.rows]
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise InvalidInputError("thresholds must be strictly increasing")


@dataclass(frozen=True)
class BootstrapBands:
    """Per-period 10%/90% replica bands around each outer realization."""

    periods: np.ndarray
    d_plus: np.ndarray  # (outer, periods)
    d_plus_low10: np.ndarray
    d_plus_high90: np.ndarray
    d_minus: np.ndarray
    d_minus_low10: np.ndarray
    d_minus_high90: np.ndarray
    outer: int
    inner: int


def threshold_grid(start: float = 0.20, stop: float = 0.40, step: float = 0.02) -> list[float]:
    """Inclusive threshold grid with decimal-safe rounding."""
    if step <= 0 or stop < start or start <= 0:
        raise InvalidInputError("need start > 0, step > 0 and stop >= start")
    count = int(round((stop - start) / step)) + 1
    grid = [round(start + i * step, 10) for i in range(count)]
    return [g for g in grid if g <= stop + 1e-12]


def sample_population(cfg: EnsembleConfig, rng: np.random.Generator) -> Population:
    """Draw one population: per agent, uniform memory, strategy count and tables."""
    agents = []
    for _ in range(cfg.n_agents):
        m = int(rng.integers(1, cfg.m_max + 1))
        s = int(rng.integers(1, cfg.s_max + 1))
        strategies = [
            Strategy(m, tuple(int(a) for a in rng.integers(0, 2, size=2**m) * 2 - 1))
            for _ in range(s)
        ]
        agents.append(AgentState(strategies))
    return Population(agents)


class _MemoryGroup:
    """All agents of an ensemble sharing one memory, strategy-padded.

    Padding rows carry a score of -inf so they can never win an argmax;
    their table entries are inert.
    """

    def __init__(self, memory: int, agents: list[AgentState]):
        self.memory = memory
        s_pad = max(a.n_strategies for a in agents)
        g = len(agents)
        self.tables = np.ones((g, s_pad, 2**memory), dtype=np.int8)
        self.scores = np.full((g, s_pad), -np.inf)
        self.valid = np.zeros((g, s_pad), dtype=bool)
        for i, agent in enumerate(agents):
            for j, strat in enumerate(agent.strategies):
                self.tables[i, j, :] = strat.table
            self.scores[i, : agent.n_strategies] = agent.scores
            self.valid[i, : agent.n_strategies] = True
        self.rows = np.arange(g)


class SlavedEnsemble:
    """Incremental slaved engine over one or many populations.

    Feed realized (bit, log return) pairs with :meth:`observe`; once the
    warm-up window is full, :meth:`snapshot` yields the current decoupled
    buy/sell fractions across all agents of all runs.
    """

    def __init__(self, cfg: EnsembleConfig, populations: Iterable[Population] | None = None):
        self.cfg = cfg
        if populations is None:
            populations = [
                sample_population(cfg, rng_for(cfg.seed, _TAG_RUN, i))
                for i in range(cfg.runs)
            ]
        populations = list(populations)
        by_memory: dict[int, list[AgentState]] = {}
        self._n_agents = 0
        self._n_strategies = 0
        for pop in populations:
            for agent in pop.agents:
                if agent.memory > cfg.m_max:
                    raise InvalidInputError(
                        f"agent memory {agent.memory} exceeds m_max {cfg.m_max}"
                    )
                by_memory.setdefault(agent.memory, []).append(agent)
                self._n_agents += 1
                self._n_strategies += agent.n_strategies
        self.n_runs = len(populations)
        self._groups = [_MemoryGroup(m, ags) for m, ags in sorted(by_memory.items())]
        self._bits: list[int] = []
        self._last_magnitude = 1.0 if cfg.sign_returns else 0.0

    @property
    def n_agents(self) -> int:
        return self._n_agents

    @property
    def bits_seen(self) -> int:
        return len(self._bits)

    @property
    def warmed_up(self) -> bool:
        return len(self._bits) >= self.cfg.m_max

    def observe(self, bit: int, log_return: float) -> None:
        """Consume one realized period: credit scores, then append the bit."""
        if bit not in (0, 1):
            raise InvalidInputError(f"direction bits must be 0 or 1, got {bit!r}")
        r = float(log_return)
        if self.cfg.sign_returns:
            r = 1.0 if r > 0 else (-1.0 if r < 0 else 0.0)
        if self.cfg.mode == MODE_DOLLAR:
            ready = len(self._bits) >= self.cfg.m_max + 1
            credit_bits = self._bits[:-1]
            sign = 1.0
        else:
            ready = len(self._bits) >= self.cfg.m_max
            credit_bits = self._bits
            sign = -1.0
        if ready and r != 0.0:
            for g in self._groups:
                h = encode_history(credit_bits[-g.memory :])
                g.scores += (sign * r) * g.tables[:, :, h]
        self._bits.append(bit)
        # Branch walks gauge hypothetical returns off the latest real one,
        # keeping every verdict invariant under rescaling of the series.
        self._last_magnitude = abs(r)

    def snapshot(self, census: bool | None = None) -> tuple[float, float]:
        """Current decoupled fractions (d+, d-) over all agents.

        With ``census`` (default from the config) the unit counted is the
        held strategy rather than the agent actually playing it.
        """
        if len(self._bits) < self.cfg.m_max:
            raise NotWarmedUpError("warm-up incomplete")
        if census is None:
            census = self.cfg.census
        if census:
            return self._census_snapshot()
        q = self.cfg.q
        dollar = self.cfg.mode == MODE_DOLLAR
        magnitude = self._last_magnitude
        bits = tuple(self._bits)
        n_buy = 0
        n_sell = 0
        for g in self._groups:
            m = g.memory
            root_h = encode_history(bits[-m:])
            best = np.argmax(g.scores, axis=1)
            root_action = g.tables[g.rows, best, root_h]
            agree = np.ones(len(g.rows), dtype=bool)
            stack = [(g.scores, bits, q)]
            while stack:
                scores, node_bits, depth = stack.pop()
                if depth == 0:
                    continue
                for b in (0, 1):
                    ret = magnitude if b == 1 else -magnitude
                    credit = node_bits[:-1] if dollar else node_bits
                    if len(credit) >= m:
                        h = encode_history(credit[-m:])
                        sign = 1.0 if dollar else -1.0
                        new_scores = scores + (sign * ret) * g.tables[:, :, h]
                    else:
                        new_scores = scores
                    nb = node_bits + (b,)
                    nbest = np.argmax(new_scores, axis=1)
                    act = g.tables[g.rows, nbest, encode_history(nb[-m:])]
                    agree &= act == root_action
                    stack.append((new_scores, nb, depth - 1))
            n_buy += int(np.sum(agree & (root_action == BUY)))
            n_sell += int(np.sum(agree & (root_action == SELL)))
        return n_buy / self._n_agents, n_sell / self._n_agents

    def _census_snapshot(self) -> tuple[float, float]:
        bits = tuple(self._bits)
        n_buy = 0
        n_sell = 0
        for g in self._groups:
            windows = reachable_windows(bits, g.memory, self.cfg.q)
            idx = sorted(encode_history(w) for w in windows)
            sub = g.tables[:, :, idx]
            const = np.all(sub == sub[:, :, :1], axis=2) & g.valid
            n_buy += int(np.sum(const & (sub[:, :, 0] == BUY)))
            n_sell += int(np.sum(const & (sub[:, :, 0] == SELL)))
        return n_buy / self._n_strategies, n_sell / self._n_strategies

    def aggregate_action(self, decision_bits: Sequence[int]) -> int:
        """Net buy-minus-sell of every agent's best strategy on a window.

        Used by the self-coupled simulator, which may supply a decision
        window that extends the realized history with pre-game bits.
        """
        bits = tuple(decision_bits)
        total = 0
        for g in self._groups:
            if len(bits) < g.memory:
                raise NotWarmedUpError(
                    f"decision window holds {len(bits)} bits, {g.memory} needed"
                )
            h = encode_history(bits[-g.memory :])
            best = np.argmax(g.scores, axis=1)
            total += int(g.tables[g.rows, best, h].sum())
        return total

    def window(self, capacity: int | None = None) -> HistoryWindow:
        """The realized history as a HistoryWindow (for the reference API)."""
        cap = capacity if capacity is not None else self.cfg.m_max + 1
        return HistoryWindow(cap, self._bits[-cap:])


def _feed(engine: SlavedEnsemble, series: PriceSeries) -> tuple[np.ndarray, ...]:
    n = len(series)
    m_max = engine.cfg.m_max
    if n < m_max:
        raise InvalidInputError(
            f"series provides {n} periods, warm-up needs {m_max}"
        )
    periods, dps, dms = [], [], []
    for k in range(n):
        t = k + 1
        engine.observe(int(series.bits[k]), float(series.returns[k]))
        if m_max <= t <= n - 1:
            dp, dm = engine.snapshot()
            periods.append(t)
            dps.append(dp)
            dms.append(dm)
    return np.asarray(periods, dtype=int), np.asarray(dps), np.asarray(dms)


def run_slaved(
    pop: Population, series: PriceSeries, cfg: EnsembleConfig
) -> DecouplingTrajectory:
    """Slave one population to the series and record per-period snapshots.

    The snapshot at period t is computed on the window ending with bit t,
    before the period t+1 return is credited; the last period is excluded
    because it has no successor to predict.
    """
    engine = SlavedEnsemble(cfg, [pop])
    periods, dp, dm = _feed(engine, series)
    return DecouplingTrajectory(periods, dp, dm, provenance="single-run", runs=1)


def ensemble_mean(cfg: EnsembleConfig, series: PriceSeries) -> DecouplingTrajectory:
    """Mean trajectory over ``cfg.runs`` independently sampled populations."""
    engine = SlavedEnsemble(cfg)
    periods, dp, dm = _feed(engine, series)
    return DecouplingTrajectory(
        periods, dp, dm, provenance="ensemble-mean", runs=cfg.runs
    )


def predict(
    traj: DecouplingTrajectory, threshold: float, target_offset: int = 1
) -> list[tuple[int, int]]:
    """Predictions (target period, direction bit) where the gap clears the bar.

    A period with ``|d+ - d-|`` strictly above the threshold predicts the
    bit ``target_offset`` periods ahead: up when d+ leads, down when d-
    leads.  Nothing is emitted at or below the threshold.
    """
    if threshold <= 0:
        raise InvalidInputError("threshold must be > 0")
    out = []
    delta = traj.delta_d
    for i, t in enumerate(traj.periods):
        if delta[i] > threshold:
            bit = UP if traj.d_plus[i] > traj.d_minus[i] else DOWN
            out.append((int(t) + target_offset, bit))
    return out


def success_table(
    traj: DecouplingTrajectory,
    series: PriceSeries,
    thresholds: Sequence[float] | None = None,
    target_offset: int = 1,
) -> SuccessTable:
    """Hit rate of threshold predictions against the realized bits.

    Predictions whose target period lies beyond the series are not
    counted.  Rows with no events carry an absent rate.
    """
    if thresholds is None:
        thresholds = threshold_grid()
    n = len(series)
    rows = []
    for theta in thresholds:
        preds = predict(traj, theta, target_offset)
        evaluable = [(t, b) for t, b in preds if 1 <= t <= n]
        n_events = len(evaluable)
        if n_events == 0:
            rows.append(SuccessRow(theta, None, 0))
        else:
            hits = sum(1 for t, b in evaluable if series.bits[t - 1] == b)
            rows.append(SuccessRow(theta, hits / n_events, n_events))
    return SuccessTable(tuple(rows))


def bootstrap_bands(
    cfg: EnsembleConfig, series: PriceSeries, outer: int, inner: int
) -> BootstrapBands:
    """Replica confidence bands around independent ensemble realizations.

    For each of ``outer`` fresh-seeded realizations of the ensemble-mean
    trajectory, ``inner`` replica realizations are run and their
    per-period empirical 10th/90th percentiles recorded, so that only one
    replica in ten should fall below (above) the band.
    """
    if outer < 2:
        raise InvalidInputError("outer must be >= 2")
    if inner < 10:
        raise InvalidInputError("inner must be >= 10")
    dp_real, dp_lo, dp_hi = [], [], []
    dm_real, dm_lo, dm_hi = [], [], []
    periods = None
    for o in range(outer):
        real_cfg = replace(cfg, seed=derive_seed(cfg.seed, _TAG_BOOTSTRAP, o, 0))
        real = ensemble_mean(real_cfg, series)
        periods = real.periods
        rep_dp = np.empty((inner, len(real)))
        rep_dm = np.empty((inner, len(real)))
        for r in range(inner):
            rep_cfg = replace(
                cfg, seed=derive_seed(cfg.seed, _TAG_BOOTSTRAP, o, 1 + r)
            )
            rep = ensemble_mean(rep_cfg, series)
            rep_dp[r] = rep.d_plus
            rep_dm[r] = rep.d_minus
        dp_real.append(real.d_plus)
        dm_real.append(real.d_minus)
        # Outward-rounded empirical quantiles: with few replicas the
        # interpolated estimator narrows the band well below its nominal
        # 10%/90% levels, so round the order statistic outward instead.
        dp_lo.append(np.quantile(rep_dp, 0.1, axis=0, method="lower"))
        dp_hi.append(np.quantile(rep_dp, 0.9, axis=0, method="higher"))
        dm_lo.append(np.quantile(rep_dm, 0.1, axis=0, method="lower"))
        dm_hi.append(np.quantile(rep_dm, 0.9, axis=0, method="higher"))
    return BootstrapBands(
        periods=periods,
        d_plus=np.vstack(dp_real),
        d_plus_low10=np.vstack(dp_lo),
        d_plus_high90=np.vstack(dp_hi),
        d_minus=np.vstack(dm_real),
        d_minus_low10=np.vstack(dm_lo),
        d_minus_high90=np.vstack(dm_hi),
        outer=outer,
        inner=inner,
    )
