"""Dual polynomial regression density estimation and its benchmark harness."""

from .baseline import DistributionSpec, Grid, GriddedDensity, make_baseline
from .dpr import DPRConfig, DPRModel, dpr_eval, dpr_pdf_handle, dpr_train, load_model, save_model
from .estimators import hde_fit, kde_eval, kde_fit
from .metrics import MetricRow, auc, jsd, mse, pearson_corr
from .sampling import inverse_transform_sample, sample_family

__all__ = [
    "DistributionSpec", "Grid", "GriddedDensity", "make_baseline",
    "DPRConfig", "DPRModel", "dpr_eval", "dpr_pdf_handle", "dpr_train", "load_model", "save_model",
    "hde_fit", "kde_eval", "kde_fit",
    "MetricRow", "auc", "jsd", "mse", "pearson_corr",
    "inverse_transform_sample", "sample_family",
]
