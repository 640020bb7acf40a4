"""Figures over injurycast run artifacts.

A pure consumer: everything is rendered from the documented files of a
completed run directory (`risk_curves.json`, `shap.json`, `injuries.csv`);
no model code is imported and nothing is recomputed.
"""

__version__ = "0.1.0"

from .artifacts import ArtifactError, load_injuries, load_risk_curves, load_shap
from .render import plot_attribution, plot_risk_timeline, save_figure

__all__ = [
    "ArtifactError",
    "load_injuries",
    "load_risk_curves",
    "load_shap",
    "plot_attribution",
    "plot_risk_timeline",
    "save_figure",
]
