"""securakit: reliability and securability modeling for critical infrastructure.

Submodules:

* :mod:`securakit.weibull` - two-parameter Weibull failure law and fitting
* :mod:`securakit.markov` - continuous-time Markov chain availability engine
* :mod:`securakit.montecarlo` - reproducible Monte Carlo estimation
* :mod:`securakit.securability` - MS/DR chain, attacks, r-out-of-n composition
* :mod:`securakit.model_io` - model documents and report serialization
* :mod:`securakit.rng` - counter-based random streams
* :mod:`securakit.cli` - the ``securakit`` command
"""

from . import cli, errors, markov, model_io, montecarlo, report, rng, securability, weibull
from .markov import Ctmc, StateSpace
from .montecarlo import Estimate, MonteCarloConfig, Trajectory
from .report import TOOL_VERSION, AnalysisReport
from .securability import MsDrRates, RoutOfNSystem, ThreatProfile
from .weibull import FailureSample, WeibullModel

__version__ = TOOL_VERSION

__all__ = [
    "AnalysisReport",
    "Ctmc",
    "Estimate",
    "FailureSample",
    "MonteCarloConfig",
    "MsDrRates",
    "RoutOfNSystem",
    "StateSpace",
    "ThreatProfile",
    "Trajectory",
    "WeibullModel",
    "cli",
    "errors",
    "markov",
    "model_io",
    "montecarlo",
    "report",
    "rng",
    "securability",
    "weibull",
]
