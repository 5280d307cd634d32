import itertools

import numpy as np
import pytest

from marketlab import (
    AgentState,
    HistoryWindow,
    InvalidInputError,
    NotWarmedUpError,
    Population,
    Strategy,
    count_minority_nash,
    dollar_payoff,
    encode_history,
    mg_payoff,
    select_best_strategy,
    step_aggregate,
    update_scores,
    verify_constant_profile_absorbing,
)

from oracles import brute_force_minority_equilibria


class TestEncodeHistory:
    def test_all_zero(self):
        assert encode_history([0, 0, 0], memory=3) == 0

    def test_mixed_window(self):
        # Oldest first: [1, 0, 1]; newest bit weighs 1, oldest weighs 4.
        assert encode_history([1, 0, 1], memory=3) == 5

    def test_all_one(self):
        assert encode_history([1, 1, 1], memory=3) == 7

    def test_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            encode_history([1, 0], memory=3)

    def test_bad_bit(self):
        with pytest.raises(InvalidInputError):
            encode_history([0, 2])

    @pytest.mark.parametrize("memory", range(1, 7))
    def test_bijection(self, memory):
        seen = {
            encode_history(bits)
            for bits in itertools.product((0, 1), repeat=memory)
        }
        assert seen == set(range(2**memory))


class TestPayoffs:
    def test_mg(self):
        assert mg_payoff(+1, 3) == -3
        assert mg_payoff(-1, 3) == +3
        assert mg_payoff(+1, 0) == 0

    def test_dollar(self):
        assert dollar_payoff(+1, 0.02) == pytest.approx(0.02)
        assert dollar_payoff(-1, 0.02) == pytest.approx(-0.02)
        assert dollar_payoff(+1, 0.0) == 0.0

    def test_bad_action(self):
        with pytest.raises(InvalidInputError):
            mg_payoff(0, 1)
        with pytest.raises(InvalidInputError):
            dollar_payoff(2, 0.5)


class TestSelectBest:
    def test_tie_goes_low(self):
        agent = AgentState([Strategy.constant(1, +1), Strategy.constant(1, -1)])
        assert select_best_strategy(agent) == 0

    def test_strict_max(self):
        agent = AgentState(
            [Strategy.constant(1, +1), Strategy.constant(1, -1)],
            scores=[1.0, 2.0],
        )
        assert select_best_strategy(agent) == 1

    def test_tie_among_leaders(self):
        agent = AgentState(
            [Strategy.constant(1, +1)] * 3, scores=[3.0, 3.0, 2.0]
        )
        assert select_best_strategy(agent) == 0


def _agent(tables, scores=None):
    strategies = [Strategy(len(t).bit_length() - 1, tuple(t)) for t in tables]
    return AgentState(strategies, scores=scores)


class TestStepAggregate:
    def test_unanimous_buy(self):
        pop = Population([_agent([[1, 1]]) for _ in range(10)])
        window = HistoryWindow(1, [1])
        assert step_aggregate(pop, window) == (10, 1)

    def test_unanimous_sell(self):
        pop = Population([_agent([[-1, -1]]) for _ in range(10)])
        window = HistoryWindow(1, [1])
        assert step_aggregate(pop, window) == (-10, 0)

    def test_hand_simulated_three_agents(self):
        # Worked by hand: with window bit 1 every agent's best strategy
        # buys; with window bit 0 agent 2 and 3 sell.
        a1 = _agent([[1, 1], [-1, -1]], scores=[1.0, 0.0])
        a2 = _agent([[1, -1], [-1, 1]], scores=[0.0, 2.0])
        a3 = _agent([[-1, 1]])
        pop = Population([a1, a2, a3])
        assert step_aggregate(pop, HistoryWindow(1, [1])) == (3, 1)
        assert step_aggregate(pop, HistoryWindow(1, [0])) == (-1, 0)

    def test_zero_imbalance_carries_previous_bit(self):
        pop = Population([_agent([[1, 1]]), _agent([[-1, -1]])])
        assert step_aggregate(pop, HistoryWindow(1, [1])) == (0, 1)
        assert step_aggregate(pop, HistoryWindow(1, [0])) == (0, 0)

    def test_not_warmed_up(self):
        pop = Population([_agent([[1, 1, 1, 1]])])
        with pytest.raises(NotWarmedUpError):
            step_aggregate(pop, HistoryWindow(2, [1]))

    def test_bounds_and_parity(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(1, 12))
            agents = []
            for _ in range(n):
                m = int(rng.integers(1, 4))
                s = int(rng.integers(1, 4))
                tables = [rng.integers(0, 2, 2**m) * 2 - 1 for _ in range(s)]
                agents.append(
                    AgentState(
                        [Strategy(m, tuple(int(x) for x in t)) for t in tables],
                        scores=rng.normal(size=s),
                    )
                )
            pop = Population(agents)
            window = HistoryWindow(3, rng.integers(0, 2, 3))
            a_total, bit = step_aggregate(pop, window)
            assert abs(a_total) <= n
            assert (a_total - n) % 2 == 0
            assert bit in (0, 1)


class TestUpdateScores:
    def test_dollar_credit(self):
        agent = _agent([[1, 1]])
        pop = Population([agent])
        update_scores(pop, HistoryWindow(1, [0]), 0.05, mode="dollar")
        assert agent.scores[0] == pytest.approx(0.05)

    def test_minority_credit(self):
        agent = _agent([[1, 1]])
        pop = Population([agent])
        update_scores(pop, HistoryWindow(1, [0]), 0.0, mode="minority", imbalance=4)
        assert agent.scores[0] == pytest.approx(-4.0)

    def test_same_action_leaves_difference_unchanged(self):
        agent = _agent([[1, -1], [1, 1]], scores=[0.3, 0.7])
        pop = Population([agent])
        update_scores(pop, HistoryWindow(1, [0]), 0.25, mode="dollar")
        # Both strategies buy after a down bit, so the gap cannot move.
        assert agent.scores[1] - agent.scores[0] == pytest.approx(0.4)

    def test_difference_tracking_matches_cumulative_scores(self):
        # For two strategies, accumulating the payoff difference directly
        # must agree with the difference of the cumulative scores.
        rng = np.random.default_rng(11)
        t1 = tuple(int(x) for x in rng.integers(0, 2, 4) * 2 - 1)
        t2 = tuple(int(x) for x in rng.integers(0, 2, 4) * 2 - 1)
        agent = AgentState([Strategy(2, t1), Strategy(2, t2)])
        pop = Population([agent])
        window = HistoryWindow(2, [0, 1])
        q_direct = 0.0
        for _ in range(1000):
            ret = float(rng.normal(scale=0.05))
            h = window.encode_last(2)
            q_direct += (t2[h] - t1[h]) * ret
            update_scores(pop, window, ret, mode="dollar")
            window.push(int(rng.integers(0, 2)))
        assert agent.scores[1] - agent.scores[0] == pytest.approx(q_direct, abs=1e-9)

    @pytest.mark.parametrize("factor", [0.5, 3.0])
    def test_positive_scaling_preserves_selection(self, factor):
        # Dyadic returns make the scaled accumulation exact, so the argmax
        # sequence must match bit for bit.
        rng = np.random.default_rng(23)
        returns = rng.choice([0.5, 0.25, -0.25, -0.125, -0.5], size=400)
        bits = rng.integers(0, 2, size=400)

        def run(scale):
            r2 = np.random.default_rng(5)
            agents = [
                AgentState(
                    [Strategy(2, tuple(int(x) for x in r2.integers(0, 2, 4) * 2 - 1))
                     for _ in range(3)]
                )
                for _ in range(5)
            ]
            pop = Population(agents)
            window = HistoryWindow(2, [0, 1])
            picks = []
            for ret, bit in zip(returns, bits):
                update_scores(pop, window, ret * scale, mode="dollar")
                picks.append([select_best_strategy(a) for a in pop.agents])
                window.push(int(bit))
            return picks

        assert run(1.0) == run(factor)


class TestNashCount:
    def test_formula_values(self):
        assert count_minority_nash(3) == 3
        assert count_minority_nash(5) == 10
        assert count_minority_nash(1) == 1

    def test_even_rejected(self):
        with pytest.raises(InvalidInputError):
            count_minority_nash(4)

    @pytest.mark.parametrize("n", [3, 5, 7])
    def test_brute_force_oracle(self, n):
        up_to_relabeling, raw = brute_force_minority_equilibria(n)
        assert count_minority_nash(n) == up_to_relabeling
        # Every stable profile pairs with its mirror image.
        assert raw == 2 * up_to_relabeling


class TestAbsorbing:
    def test_memory_one_up(self):
        cert = verify_constant_profile_absorbing(1, 10, "up")
        assert cert.holds
        assert cert.constant_score == 10.0
        assert cert.best_score == 10.0

    def test_memory_two(self):
        assert verify_constant_profile_absorbing(2, 50, "both").holds

    def test_memory_three_down(self):
        cert = verify_constant_profile_absorbing(3, 50, "down")
        assert cert.holds
        assert cert.constant_score == 50.0

    @pytest.mark.parametrize("memory", [1, 2, 3])
    @pytest.mark.parametrize("periods", [10, 50, 200])
    def test_grid(self, memory, periods):
        assert verify_constant_profile_absorbing(memory, periods).holds

    def test_memory_cap(self):
        with pytest.raises(InvalidInputError):
            verify_constant_profile_absorbing(5, 10)


class TestTypes:
    def test_strategy_validation(self):
        with pytest.raises(InvalidInputError):
            Strategy(2, (1, -1, 1))
        with pytest.raises(InvalidInputError):
            Strategy(1, (1, 0))

    def test_agent_validation(self):
        with pytest.raises(InvalidInputError):
            AgentState([])
        with pytest.raises(InvalidInputError):
            AgentState([Strategy.constant(1, 1), Strategy.constant(2, 1)])
        with pytest.raises(InvalidInputError):
            AgentState([Strategy.constant(1, 1)], scores=[1.0, 2.0])

    def test_window_rolls(self):
        w = HistoryWindow(3, [1, 0])
        assert len(w) == 2
        w.push(1)
        w.push(1)
        assert w.bits == (0, 1, 1)
        assert w.encode_last(2) == 3
        with pytest.raises(NotWarmedUpError):
            w.last_bits(4)
