"""Acceptance suite: one test per criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines alongside the pytest output.
"""

import asyncio
import itertools
import json
import math
import time
from contextlib import contextmanager
from decimal import Decimal
from pathlib import Path

import mpmath
import numpy as np
import pytest

from marketlab import (
    AgentState,
    EnsembleConfig,
    HistoryWindow,
    Population,
    PriceSeries,
    Strategy,
    bootstrap_bands,
    count_minority_nash,
    ensemble_mean,
    predict,
    rng_for,
    sample_population,
    select_best_strategy,
    settle_payout,
    split_imbalance,
    strategy_decoupled,
    success_table,
    threshold_grid,
    to_money,
    update_price,
    verify_constant_profile_absorbing,
)
from marketlab.cli import main as cli_main
from marketlab.io import load_series, sha256_file, write_success_csv, write_trajectory_csv
from marketlab.session import SessionConfig, load_news, replay
from marketlab.session.server import serve_session

from oracles import brute_force_minority_equilibria, naive_strategy_decoupled

NEWS_PATH = (
    Path(__file__).resolve().parents[1] / "src" / "marketlab" / "data" / "news_default.json"
)

PAPER_CFG = dict(n_agents=10, s_max=10, m_max=6, runs=1000)


@contextmanager
def criterion(number: int, description: str):
    t0 = time.monotonic()
    try:
        yield
    except BaseException:
        print(f"\nACCEPTANCE {number:2d} FAIL  {description}")
        raise
    print(f"\nACCEPTANCE {number:2d} PASS  {description}  ({time.monotonic() - t0:.1f}s)")


def all_up_series(periods=60, step=0.1):
    return PriceSeries.from_prices([5.0 * math.exp(step * t) for t in range(periods + 1)])


def coin_flip_series(seed, periods=60, step=0.05):
    rng = np.random.default_rng(seed)
    moves = rng.choice([step, -step], size=periods)
    return PriceSeries.from_prices(5.0 * np.exp(np.concatenate([[0.0], np.cumsum(moves)])))


def wilson_interval(hits: int, n: int, z: float = 1.959963984540054):
    if n == 0:
        return (0.0, 1.0)
    p = hits / n
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (center - half, center + half)


def test_criterion_1_nash_count_oracle():
    with criterion(1, "brute-force Nash enumeration equals the closed-form count"):
        t0 = time.monotonic()
        for n in (3, 5, 7):
            up_to_relabeling, _raw = brute_force_minority_equilibria(n)
            assert count_minority_nash(n) == up_to_relabeling
        assert time.monotonic() - t0 < 1.0


def test_criterion_2_constant_profile_absorbing():
    with criterion(2, "constant trends are absorbing for every strategy, exhaustively"):
        t0 = time.monotonic()
        for memory in (1, 2, 3):
            for periods in (10, 50, 200):
                for direction in ("up", "down"):
                    cert = verify_constant_profile_absorbing(memory, periods, direction)
                    assert cert.holds, (memory, periods, direction)
        assert time.monotonic() - t0 < 10.0


def test_criterion_3_decoupling_oracle_equivalence():
    with criterion(3, "decoupling verdicts match naive full-future enumeration"):
        t0 = time.monotonic()
        for memory in (1, 2, 3):
            tables = list(itertools.product((-1, 1), repeat=2**memory))
            windows = list(itertools.product((0, 1), repeat=memory))
            for table in tables:
                strat = Strategy(memory, table)
                for bits in windows:
                    window = HistoryWindow(memory, bits)
                    for q in (1, 2, 3):
                        got = strategy_decoupled(strat, window, q)
                        want_dec, want_act = naive_strategy_decoupled(
                            table, memory, bits, q
                        )
                        assert got.decoupled == want_dec
                        assert got.action == want_act
        assert time.monotonic() - t0 < 30.0


def test_criterion_4_constant_strategy_frequency():
    with criterion(4, "all-buy tables appear at rate 1/16 among uniform M=2 strategies"):
        n = 10**6
        rng = rng_for(2024, 4)
        tables = rng.integers(0, 2, size=(n, 4)) * 2 - 1
        hits = int(np.sum(np.all(tables == 1, axis=1)))
        p = 1 / 16
        tol = 3 * math.sqrt(p * (1 - p) / n)
        assert abs(hits / n - p) <= tol


def test_criterion_5_imbalance_split_identity():
    with criterion(5, "imbalance split identity and certainty flag on 10^4 populations"):
        rng = np.random.default_rng(505)
        for i in range(10_000):
            n_agents = int(rng.integers(1, 11))
            cfg = EnsembleConfig(
                n_agents=n_agents, s_max=4, m_max=3, runs=1,
                seed=int(rng.integers(0, 2**63)),
            )
            pop = sample_population(cfg, rng_for(cfg.seed, 0, 0))
            for agent in pop.agents:
                agent.scores += rng.normal(size=agent.n_strategies)
            bits = [int(b) for b in rng.integers(0, 2, int(rng.integers(3, 5)))]
            window = HistoryWindow(4, bits)
            q = int(rng.integers(1, 3))
            mode = "dollar" if rng.integers(0, 2) else "minority"
            magnitude = float(rng.choice([0.05, 1.0]))
            split = split_imbalance(pop, window, q, mode, branch_magnitude=magnitude)
            total = sum(
                a.strategies[select_best_strategy(a)].action(window.encode_last(a.memory))
                for a in pop.agents
            )
            assert split.coupled + split.decoupled == total
            assert split.certain == (abs(split.decoupled) > pop.N / 2)


def test_criterion_6_synthetic_bubble_success_table():
    with criterion(6, "all-up series: perfect success wherever events fire, events at 0.2"):
        t0 = time.monotonic()
        series = all_up_series(60)
        cfg = EnsembleConfig(**PAPER_CFG, seed=606)
        traj = ensemble_mean(cfg, series)
        table = success_table(traj, series)
        assert table.rows[0].threshold == pytest.approx(0.2)
        assert table.rows[0].n_events > 0
        for row in table.rows:
            if row.n_events > 0:
                assert row.success_rate == 1.0, row
        assert time.monotonic() - t0 < 300.0


def test_criterion_7_null_series_success_is_chance():
    with criterion(7, "coin-flip series: no events, or success statistically near 1/2"):
        cfg_base = EnsembleConfig(**PAPER_CFG, seed=0)
        pooled: dict[float, list[int]] = {}
        for s in range(20):
            series = coin_flip_series(seed=700 + s)
            cfg = EnsembleConfig(**PAPER_CFG, seed=7000 + s)
            traj = ensemble_mean(cfg, series)
            table = success_table(traj, series)
            for row in table.rows:
                hits_events = pooled.setdefault(row.threshold, [0, 0])
                if row.n_events:
                    hits_events[0] += round(row.success_rate * row.n_events)
                    hits_events[1] += row.n_events
        assert cfg_base.runs == 1000
        for theta, (hits, events) in sorted(pooled.items()):
            if events == 0:
                continue
            lo, hi = wilson_interval(hits, events)
            # The 95% interval for the pooled rate must meet [0.3, 0.7].
            assert lo <= 0.7 and hi >= 0.3, (theta, hits, events, lo, hi)


def test_criterion_8_determinism_and_scaling(tmp_path):
    with criterion(8, "same seed gives identical bytes; doubling returns changes nothing"):
        series = coin_flip_series(seed=808)
        cfg = EnsembleConfig(n_agents=10, s_max=10, m_max=6, runs=200, seed=88)
        paths = []
        for name in ("a", "b"):
            traj = ensemble_mean(cfg, series)
            table = success_table(traj, series)
            tdir = tmp_path / name
            tdir.mkdir()
            write_trajectory_csv(traj, tdir / "trajectory.csv")
            write_success_csv(table, tdir / "success.csv")
            paths.append(tdir)
        assert sha256_file(paths[0] / "trajectory.csv") == sha256_file(paths[1] / "trajectory.csv")
        assert sha256_file(paths[0] / "success.csv") == sha256_file(paths[1] / "success.csv")

        doubled = PriceSeries(
            prices=series.prices, returns=series.returns * 2.0, bits=series.bits
        )
        traj_1 = ensemble_mean(cfg, series)
        traj_2 = ensemble_mean(cfg, doubled)
        assert np.array_equal(traj_1.d_plus, traj_2.d_plus)
        assert np.array_equal(traj_1.d_minus, traj_2.d_minus)
        for theta in threshold_grid():
            assert predict(traj_1, theta) == predict(traj_2, theta)
        t1 = success_table(traj_1, series)
        t2 = success_table(traj_2, doubled)
        assert t1 == t2


def test_criterion_9_bootstrap_bands_desk_scale():
    with criterion(9, "bootstrap bands ordered and covering the realizations"):
        t0 = time.monotonic()
        series = coin_flip_series(seed=909)
        cfg = EnsembleConfig(n_agents=10, s_max=10, m_max=6, runs=100, seed=99)
        bands = bootstrap_bands(cfg, series, outer=10, inner=10)
        assert np.all(bands.d_plus_low10 <= bands.d_plus_high90)
        assert np.all(bands.d_minus_low10 <= bands.d_minus_high90)
        inside_p = (bands.d_plus >= bands.d_plus_low10) & (bands.d_plus <= bands.d_plus_high90)
        inside_m = (bands.d_minus >= bands.d_minus_low10) & (bands.d_minus <= bands.d_minus_high90)
        coverage = float(np.mean(np.concatenate([inside_p.ravel(), inside_m.ravel()])))
        assert 0.65 <= coverage <= 0.95, coverage
        assert time.monotonic() - t0 < 600.0


def test_criterion_10_price_formation():
    with criterion(10, "price impact matches the exponential rule to 1e-12"):
        rng = np.random.default_rng(1010)
        for _ in range(100_000):
            prev = float(rng.uniform(0.1, 100.0))
            a = int(rng.integers(-15, 16))
            b = float(rng.uniform(1.0, 1000.0))
            got = update_price(prev, a, b)
            want = prev * math.exp(a / b)
            assert got == want  # same formula, same floats
        # Spot-check against high-precision arithmetic.
        for _ in range(2000):
            prev = float(rng.uniform(0.1, 100.0))
            a = int(rng.integers(-15, 16))
            b = float(rng.uniform(1.0, 1000.0))
            want = float(mpmath.mpf(prev) * mpmath.exp(mpmath.mpf(a) / mpmath.mpf(b)))
            assert update_price(prev, a, b) == pytest.approx(want, rel=1e-12)
        n = 10
        assert n / (10.0 * n) == 0.1
        assert math.log(update_price(5.0, n, 10.0 * n) / 5.0) == pytest.approx(0.1, abs=1e-12)
        assert math.log(update_price(5.0, -n, 10.0 * n) / 5.0) == pytest.approx(-0.1, abs=1e-12)


def test_criterion_11_settlement_exactness():
    with criterion(11, "pro-rata settlement sums to the pool with exact weights"):
        rng = np.random.default_rng(1111)
        for _ in range(5000):
            n = int(rng.integers(1, 12))
            pnls = [to_money(float(rng.uniform(-10, 10))) for _ in range(n)]
            pool = to_money(float(rng.uniform(0, 500)))
            payouts = settle_payout(pnls, pool)
            assert all(p >= 0 for p in payouts)
            gainers = [p for p in pnls if p > 0]
            if gainers and pool > 0:
                assert sum(payouts) == pool
                total = sum(gainers)
                for pnl, pay in zip(pnls, payouts):
                    if pnl > 0:
                        exact = pool * pnl / total
                        assert abs(pay - exact) <= Decimal("0.0001")
                    else:
                        assert pay == 0
            else:
                assert all(p == 0 for p in payouts)


async def _headless_session(cfg):
    import websockets

    port_future = asyncio.get_running_loop().create_future()
    server_task = asyncio.create_task(
        serve_session(cfg, port=0, on_port=port_future.set_result)
    )
    port = await asyncio.wait_for(port_future, timeout=10)

    async def client(name, action):
        async with websockets.connect(f"ws://127.0.0.1:{port}/ws") as ws:
            await ws.send(json.dumps({"type": "join", "name": name}))
            while True:
                msg = json.loads(await ws.recv())
                if msg["type"] == "period_open":
                    await ws.send(json.dumps(
                        {"type": "order", "period": msg["period"], "action": action}
                    ))
                elif msg["type"] == "settlement":
                    return msg

    actions = ["buy", "buy", "buy", "sell", "hold", "buy", "sell", "buy", "hold", "buy"]
    results = await asyncio.gather(
        *[client(f"bot-{i}", actions[i]) for i in range(10)]
    )
    log = await asyncio.wait_for(server_task, timeout=120)
    return log, results


def test_criterion_12_end_to_end_headless_session(tmp_path):
    with criterion(12, "10 scripted clients, 60 periods, bit-exact replay into analyze"):
        news = load_news(NEWS_PATH, periods=60)
        cfg = SessionConfig(
            n_participants=10,
            period_seconds=15,
            periods=60,
            news=news,
            pool=Decimal("200"),
            close_on_full_book=True,
            live_delta_d=None,
        )
        log, settlements = asyncio.run(_headless_session(cfg))
        assert len(settlements) == 10

        # Replay must reproduce the live path bit for bit.
        log_path = tmp_path / "session.ndjson"
        log.write(log_path)
        closes = [e for e in log.events if e["event"] == "period_close"]
        assert len(closes) == 60
        live_path = [e["price"] for e in sorted(closes, key=lambda e: e["period"])]
        series = replay(log)
        assert [float(p) for p in series.prices[1:]] == live_path

        # The replayed series feeds the analysis pipeline unmodified.
        out = tmp_path / "replayed"
        assert cli_main(["replay", str(log_path), "--out-dir", str(out)]) == 0
        code = cli_main([
            "analyze", str(out / "series.csv"), "--runs", "100", "--seed", "12",
            "--out-dir", str(tmp_path / "analysis"), "--no-figures",
        ])
        assert code == 0
        rows = (tmp_path / "analysis" / "success_table.csv").read_text().splitlines()
        assert rows[0] == "threshold,success_rate,n_events"
        assert len(rows) == 1 + len(threshold_grid())
