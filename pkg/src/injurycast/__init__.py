"""Injury-risk forecasting from daily athlete monitoring data.

Pipeline stages: ingest raw monitoring/injury CSVs, derive training-load
features on a daily panel, impute missing values, build supervised samples,
train a discrete-time survival network (or tree/linear baselines), evaluate
with concordance/classification metrics, and attribute predictions with
Shapley values. `injurycast.cli` orchestrates the stages; `injurycast.synth`
generates verification cohorts with a known injury hazard.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DataError, PipelineError, TrainingError

__all__ = ["ConfigError", "DataError", "PipelineError", "TrainingError", "__version__"]
