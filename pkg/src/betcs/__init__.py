"""Time-uniform confidence sequences for bounded means via betting.

A wealth process is run against every candidate mean; candidates whose
wealth ever reaches 1/delta are excluded forever.  The package provides
the exact mixture-portfolio wealth, a constant-memory lower-bound
envelope on it, a hybrid of the two, and simpler baselines, all behind a
scikit-learn style streaming estimator API and a CLI.
"""

__version__ = "0.1.0"

from .confseq import (
    CoinBettingCS,
    HorseRaceCS,
    HybridUPCS,
    InfeasibleSeedError,
    LowerBoundUPCS,
    UniversalPortfolioCS,
    find_sublevel_interval,
    load_checkpoint,
    make_estimator,
)
from .game import (
    WealthTable,
    check_achievability,
    kt_bet,
    kt_strategy,
    simulate_strategy_wealth,
    strategy_from_wealth,
)
from .horserace import log_kt_potential, pinsker_interval
from .lowerbound import (
    MomentAccumulator,
    PriorHyper,
    hybrid_log_wealth,
    lbup_interval,
    lbup_log_wealth,
    log_gain_lower_bound,
)
from .portfolio import BetaPrior, PartitionPoly, up_log_wealth
from .sampling import StreamSpec
from .special import QuadratureSpec, log_integrate_unit

__all__ = [
    "__version__",
    "BetaPrior",
    "CoinBettingCS",
    "HorseRaceCS",
    "HybridUPCS",
    "InfeasibleSeedError",
    "LowerBoundUPCS",
    "MomentAccumulator",
    "PartitionPoly",
    "PriorHyper",
    "QuadratureSpec",
    "StreamSpec",
    "UniversalPortfolioCS",
    "WealthTable",
    "check_achievability",
    "find_sublevel_interval",
    "hybrid_log_wealth",
    "kt_bet",
    "kt_strategy",
    "lbup_interval",
    "lbup_log_wealth",
    "load_checkpoint",
    "log_gain_lower_bound",
    "log_integrate_unit",
    "log_kt_potential",
    "make_estimator",
    "pinsker_interval",
    "simulate_strategy_wealth",
    "strategy_from_wealth",
    "up_log_wealth",
]
