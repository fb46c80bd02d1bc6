"""Average-guesswork analysis of biased hash functions.

Library layout:

* infotheory: entropy, divergence, Renyi entropy, type-class machinery
* rates: closed-form growth rates and finite-size expectations
* hashmodel: keyed segmented hash and explicit table models
* allocation: least-likely-first bin assignment and backdoor planting
* attack: guessing strategies and guess-counting simulations
* experiments: Monte Carlo orchestration, sweeps, panels
* cli: the guesswork-lab command line front end
"""

from .attack import EstimateWithCI
from .hashmodel import BinLabel, KeyedHashModel, TableHash
from .rates import RateReport, ScenarioParams

__version__ = "0.1.0"

__all__ = [
    "BinLabel",
    "EstimateWithCI",
    "KeyedHashModel",
    "RateReport",
    "ScenarioParams",
    "TableHash",
    "__version__",
]
