"""Functionally generated trading strategies on daily market data.

The package turns a generating function of market weights (optionally driven
by an auxiliary finite-variation process) into fully specified self-financing
trading strategies, runs them through an exact daily backtest, and reports
the decomposition of strategy wealth into the function level plus an earned
cumulative term.
"""

from __future__ import annotations

from .diagnostics import (
    DiagnosticsSeries,
    assemble_report,
    compute_diagnostics,
    cumulative_e,
    direction_indicator,
    diversity_capped,
    max_drawdown,
)
from .engine import (
    ArbitrageVerdict,
    GammaPath,
    NormalizedGen,
    StrategyLedger,
    arbitrage_check,
    gamma_closed,
    gamma_defect,
    g_values,
    normalize,
    run_backtest,
    self_financing_convert,
    theta_additive,
    theta_multiplicative,
)
from .errors import (
    ConfigError,
    DomainError,
    FungenError,
    ParseError,
    SimulationError,
    StrategyError,
    ValidationError,
)
from .genfun import (
    CATALOG,
    ConditionReport,
    GenFunction,
    catalog,
    rank_weights,
    spot_check_conditions,
)
from .lambdas import (
    KINDS,
    LambdaPath,
    QVPath,
    build_lambda,
    realized_qv,
    realized_qv_path,
)
from .marketdata import (
    MarketPath,
    begin_weights,
    end_of_day,
    from_arrays,
    load_market_csv,
    membership_changes,
    validate,
    write_market_csv,
)
from .simulate import SimConfig, diversification_scenario, simulate_market
from .verify import CheckResult, VerificationReport, run_verification

__version__ = "0.1.0"

__all__ = [
    "ArbitrageVerdict",
    "CATALOG",
    "CheckResult",
    "ConditionReport",
    "ConfigError",
    "DiagnosticsSeries",
    "DomainError",
    "FungenError",
    "GammaPath",
    "GenFunction",
    "KINDS",
    "LambdaPath",
    "MarketPath",
    "NormalizedGen",
    "ParseError",
    "QVPath",
    "SimConfig",
    "SimulationError",
    "StrategyError",
    "StrategyLedger",
    "ValidationError",
    "VerificationReport",
    "arbitrage_check",
    "assemble_report",
    "begin_weights",
    "build_lambda",
    "catalog",
    "compute_diagnostics",
    "cumulative_e",
    "direction_indicator",
    "diversification_scenario",
    "diversity_capped",
    "end_of_day",
    "from_arrays",
    "g_values",
    "gamma_closed",
    "gamma_defect",
    "load_market_csv",
    "max_drawdown",
    "membership_changes",
    "normalize",
    "rank_weights",
    "realized_qv",
    "realized_qv_path",
    "run_backtest",
    "run_verification",
    "self_financing_convert",
    "simulate_market",
    "spot_check_conditions",
    "theta_additive",
    "theta_multiplicative",
    "validate",
    "write_market_csv",
]
