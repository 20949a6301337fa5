"""Multi-output ensembles for multi-step time series forecasting."""

__version__ = "0.1.0"

from .combiner import Combiner, all_methods, combine, init_state  # noqa: E402
from .ensemble import EnsembleConfig, fit_with_pruning, rolling_evaluate  # noqa: E402
from .learners import LearnerSpec, default_pool, fit_learner  # noqa: E402
from .series import TimeSeries, difference, embed, invert_forecast, load_catalog  # noqa: E402

__all__ = [
    "Combiner", "EnsembleConfig", "LearnerSpec", "TimeSeries", "all_methods", "combine",
    "default_pool", "difference", "embed", "fit_learner", "fit_with_pruning", "init_state",
    "invert_forecast", "load_catalog", "rolling_evaluate",
]
