import itertools

import numpy as np
import pytest

from marketlab import (
    AgentState,
    HistoryWindow,
    Population,
    Strategy,
    agent_decoupled,
    encode_history,
    sample_population,
    snapshot,
    split_imbalance,
    strategy_decoupled,
    EnsembleConfig,
    rng_for,
    select_best_strategy,
)

from oracles import naive_agent_decoupled, naive_strategy_decoupled


def all_tables(memory):
    return list(itertools.product((-1, 1), repeat=2**memory))


def all_windows(memory):
    return list(itertools.product((0, 1), repeat=memory))


class TestStrategyDecoupled:
    def test_constant_always_decoupled(self):
        strat = Strategy.constant(3, +1)
        for bits in all_windows(3):
            for q in (1, 2, 5):
                v = strategy_decoupled(strat, HistoryWindow(3, bits), q)
                assert v.decoupled and v.action == +1

    def test_disagreeing_successors(self):
        # Window ends (1, 0); its two successors (0,0) and (0,1) map to
        # different actions, so one unrealized bit already matters.
        table = [0] * 4
        table[encode_history([0, 0])] = +1
        table[encode_history([0, 1])] = -1
        table[encode_history([1, 0])] = +1
        table[encode_history([1, 1])] = +1
        strat = Strategy(2, tuple(table))
        v = strategy_decoupled(strat, HistoryWindow(2, [1, 0]), 1)
        assert not v.decoupled and v.action is None

    def test_memory_one_constant_table(self):
        strat = Strategy(1, (-1, -1))
        v = strategy_decoupled(strat, HistoryWindow(1, [1]), 1)
        assert v.decoupled and v.action == -1

    @pytest.mark.parametrize("memory", [1, 2])
    def test_oracle_equivalence_exhaustive(self, memory):
        for table in all_tables(memory):
            strat = Strategy(memory, table)
            for bits in all_windows(memory):
                window = HistoryWindow(memory, bits)
                for q in (0, 1, 2, 3):
                    got = strategy_decoupled(strat, window, q)
                    want_dec, want_act = naive_strategy_decoupled(
                        table, memory, bits, q
                    )
                    assert got.decoupled == want_dec
                    assert got.action == want_act

    def test_oracle_equivalence_memory_three_sample(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            table = tuple(int(x) for x in rng.integers(0, 2, 8) * 2 - 1)
            bits = tuple(int(b) for b in rng.integers(0, 2, 3))
            q = int(rng.integers(0, 4))
            got = strategy_decoupled(Strategy(3, table), HistoryWindow(3, bits), q)
            want_dec, want_act = naive_strategy_decoupled(table, 3, bits, q)
            assert (got.decoupled, got.action) == (want_dec, want_act)

    @pytest.mark.parametrize("memory", [1, 2, 3])
    def test_monotone_in_q(self, memory):
        for table in all_tables(memory):
            strat = Strategy(memory, table)
            for bits in all_windows(memory):
                window = HistoryWindow(memory, bits)
                verdicts = [strategy_decoupled(strat, window, q).decoupled for q in range(4)]
                # Once coupling appears it cannot vanish at larger q.
                for lo, hi in zip(verdicts, verdicts[1:]):
                    assert lo or not hi


class TestAgentDecoupled:
    def test_all_constant_strategies(self):
        agent = AgentState([Strategy.constant(2, +1)] * 3)
        v = agent_decoupled(agent, HistoryWindow(2, [0, 1]), 2)
        assert v.decoupled and v.action == +1

    def test_single_strategy_matches_strategy_level(self):
        rng = np.random.default_rng(17)
        for _ in range(10_000):
            m = int(rng.integers(1, 4))
            table = tuple(int(x) for x in rng.integers(0, 2, 2**m) * 2 - 1)
            strat = Strategy(m, table)
            n_bits = int(rng.integers(m, 8))
            bits = [int(b) for b in rng.integers(0, 2, n_bits)]
            window = HistoryWindow(8, bits)
            q = int(rng.integers(0, 4))
            mode = "dollar" if rng.integers(0, 2) else "minority"
            a = agent_decoupled(AgentState([strat]), window, q, mode)
            s = strategy_decoupled(strat, window, q)
            assert (a.decoupled, a.action) == (s.decoupled, s.action)

    def test_branch_divergent_switching(self):
        # Strategy 0 buys everywhere, strategy 1 sells everywhere; with a
        # slight lead for the buyer, the down branch hands the lead to the
        # seller, so the two branches play different actions.
        agent = AgentState(
            [Strategy.constant(2, +1), Strategy.constant(2, -1)],
            scores=[0.5, 0.0],
        )
        window = HistoryWindow(3, [1, 1, 1])
        v = agent_decoupled(agent, window, 1, mode="dollar")
        assert not v.decoupled

    def test_oracle_equivalence_random(self):
        rng = np.random.default_rng(29)
        for _ in range(800):
            m = int(rng.integers(1, 4))
            s = int(rng.integers(1, 5))
            tables = [
                tuple(int(x) for x in rng.integers(0, 2, 2**m) * 2 - 1)
                for _ in range(s)
            ]
            scores = [float(x) for x in rng.normal(size=s)]
            agent = AgentState(
                [Strategy(m, t) for t in tables], scores=scores
            )
            n_bits = int(rng.integers(m, 9))
            bits = [int(b) for b in rng.integers(0, 2, n_bits)]
            q = int(rng.integers(0, 4))
            mode = "dollar" if rng.integers(0, 2) else "minority"
            got = agent_decoupled(agent, HistoryWindow(9, bits), q, mode)
            want_dec, want_act = naive_agent_decoupled(
                tables, scores, m, bits, q, mode
            )
            assert (got.decoupled, got.action) == (want_dec, want_act)


def _never_decoupled_agent():
    # M=1, single strategy with opposing entries: the two branch windows
    # always disagree.
    return AgentState([Strategy(1, (+1, -1))])


class TestSplitImbalance:
    def test_unanimous_decoupled(self):
        pop = Population([AgentState([Strategy.constant(1, +1)]) for _ in range(10)])
        split = split_imbalance(pop, HistoryWindow(1, [1]), q=1)
        assert (split.coupled, split.decoupled, split.certain) == (0, 10, True)

    def test_no_decoupled(self):
        pop = Population([_never_decoupled_agent() for _ in range(4)])
        window = HistoryWindow(1, [1])
        split = split_imbalance(pop, window, q=1)
        # Everyone plays table entry for bit 1, i.e. -1.
        assert (split.coupled, split.decoupled, split.certain) == (-4, 0, False)

    def test_six_of_ten_certain(self):
        pop = Population(
            [AgentState([Strategy.constant(1, +1)]) for _ in range(6)]
            + [_never_decoupled_agent() for _ in range(4)]
        )
        split = split_imbalance(pop, HistoryWindow(1, [0]), q=1)
        assert split.decoupled == 6
        assert split.certain  # 6 > 10/2

    def test_identity_on_random_populations(self):
        rng = np.random.default_rng(31)
        for i in range(500):
            cfg = EnsembleConfig(
                n_agents=int(rng.integers(1, 12)),
                s_max=4,
                m_max=3,
                runs=1,
                seed=int(rng.integers(0, 2**32)),
            )
            pop = sample_population(cfg, rng_for(cfg.seed, 0, 0))
            for agent in pop.agents:
                agent.scores += rng.normal(size=agent.n_strategies)
            bits = [int(b) for b in rng.integers(0, 2, int(rng.integers(3, 8)))]
            window = HistoryWindow(8, bits)
            q = int(rng.integers(0, 3))
            mode = "dollar" if rng.integers(0, 2) else "minority"
            split = split_imbalance(pop, window, q, mode)
            total = sum(
                a.strategies[select_best_strategy(a)].action(
                    window.encode_last(a.memory)
                )
                for a in pop.agents
            )
            assert split.coupled + split.decoupled == total
            assert split.certain == (abs(split.decoupled) > pop.N / 2)


class TestSnapshot:
    def test_seven_buyers(self):
        pop = Population(
            [AgentState([Strategy.constant(1, +1)]) for _ in range(7)]
            + [_never_decoupled_agent() for _ in range(3)]
        )
        snap = snapshot(pop, HistoryWindow(1, [1]), q=1)
        assert (snap.d_plus, snap.d_minus, snap.delta_d) == (0.7, 0.0, 0.7)

    def test_none_decoupled(self):
        pop = Population([_never_decoupled_agent() for _ in range(5)])
        snap = snapshot(pop, HistoryWindow(1, [0]), q=1)
        assert (snap.d_plus, snap.d_minus, snap.delta_d) == (0.0, 0.0, 0.0)

    def test_symmetric_cancellation(self):
        pop = Population(
            [AgentState([Strategy.constant(1, +1)]) for _ in range(5)]
            + [AgentState([Strategy.constant(1, -1)]) for _ in range(5)]
        )
        snap = snapshot(pop, HistoryWindow(1, [1]), q=1)
        assert (snap.d_plus, snap.d_minus, snap.delta_d) == (0.5, 0.5, 0.0)

    def test_census_counts_strategies(self):
        # One agent holding a constant buyer and a never-decoupled table:
        # agent-level it is not decoupled once the seller leads, but the
        # census sees exactly one decoupled strategy out of two.
        agent = AgentState(
            [Strategy.constant(1, +1), Strategy(1, (+1, -1))],
            scores=[0.0, 1.0],
        )
        pop = Population([agent])
        window = HistoryWindow(1, [1])
        census = snapshot(pop, window, q=1, census=True)
        assert (census.d_plus, census.d_minus) == (0.5, 0.0)

    def test_fraction_bounds_random(self):
        rng = np.random.default_rng(37)
        for i in range(200):
            cfg = EnsembleConfig(
                n_agents=10, s_max=5, m_max=3, runs=1, seed=int(rng.integers(0, 2**32))
            )
            pop = sample_population(cfg, rng_for(cfg.seed, 0, 0))
            bits = [int(b) for b in rng.integers(0, 2, 4)]
            snap = snapshot(pop, HistoryWindow(4, bits), q=1)
            assert 0.0 <= snap.d_plus <= 1.0
            assert 0.0 <= snap.d_minus <= 1.0
            assert snap.d_plus + snap.d_minus <= 1.0
