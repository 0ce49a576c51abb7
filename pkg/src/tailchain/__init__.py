"""Estimation and simulation of spectral tail chains of heavy-tailed Markov chains."""

from __future__ import annotations

__version__ = "0.1.0"

from .core import (
    TailBalanceEstimate,
    TailIndexEstimate,
    Threshold,
    TimeSeries,
    estimate_p,
    hill_alpha,
    log_returns,
    rank_transform,
    threshold_from_quantile,
)
from .estimators import (
    CdfEstimate,
    backward_cdf,
    estimate_cdf,
    estimate_from_quantile,
    estimate_reversed,
    forward_cdf,
    mixture_cdf,
    monotonize,
)
from .laws import DiscreteLaw, ParametricLaw, TailChainSpec

__all__ = [
    "__version__",
    "TimeSeries",
    "Threshold",
    "TailIndexEstimate",
    "TailBalanceEstimate",
    "threshold_from_quantile",
    "estimate_p",
    "hill_alpha",
    "rank_transform",
    "log_returns",
    "CdfEstimate",
    "forward_cdf",
    "backward_cdf",
    "mixture_cdf",
    "monotonize",
    "estimate_cdf",
    "estimate_reversed",
    "estimate_from_quantile",
    "DiscreteLaw",
    "ParametricLaw",
    "TailChainSpec",
]
