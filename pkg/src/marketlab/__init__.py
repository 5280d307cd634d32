"""Market game laboratory.

A library and CLI for binary-choice market games: the agent engine with
virtual-scored lookup-table strategies, detection of decoupled strategies
and agents, slaved Monte Carlo ensembles that turn the decoupled buy/sell
gap into direction predictions, synthetic self-play, and a live
experiment-session server whose recorded sessions replay straight into
the analysis pipeline.
"""

from .decoupling import (
    DecoupledVerdict,
    DecouplingSnapshot,
    ImbalanceSplit,
    agent_decoupled,
    reachable_windows,
    snapshot,
    split_imbalance,
    strategy_decoupled,
)
from .errors import (
    InvalidInputError,
    MarketLabError,
    NewsLoadError,
    NotWarmedUpError,
    ReplayError,
    SeriesParseError,
)
from .game import (
    BUY,
    DOWN,
    MODE_DOLLAR,
    MODE_MINORITY,
    SELL,
    UP,
    AgentState,
    HistoryWindow,
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
from .market import (
    MarketParams,
    ParticipantAccount,
    apply_order,
    mark_to_market,
    money_str,
    settle_payout,
    to_money,
    update_price,
)
from .selfplay import constant_population, run_selfplay
from .slaved import (
    BootstrapBands,
    DecouplingTrajectory,
    EnsembleConfig,
    PriceSeries,
    SlavedEnsemble,
    SuccessRow,
    SuccessTable,
    bootstrap_bands,
    derive_seed,
    ensemble_mean,
    predict,
    rng_for,
    run_slaved,
    sample_population,
    success_table,
    threshold_grid,
)

__version__ = "0.1.0"
