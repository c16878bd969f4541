"""Budgeted optimisation loops, baselines, cost accounting and regret."""

from .cbo import CboConfig, run_cbo
from .costs import CostModel
from .cucb import run_cucb
from .policies import TradeoffPolicy, select_tradeoff_baseline
from .trace import TRACE_HEADER, Trace, TraceRow, simple_regret

__all__ = [
    "CboConfig",
    "CostModel",
    "TRACE_HEADER",
    "Trace",
    "TraceRow",
    "TradeoffPolicy",
    "run_cbo",
    "run_cucb",
    "select_tradeoff_baseline",
    "simple_regret",
]
