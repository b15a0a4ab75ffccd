"""Sparse Cox Subgrouping: latent-class Cox mixtures for treatment-effect heterogeneity."""

from .data import Dataset, SubjectRecord, load_csv, stratified_split, write_csv
from .scs import FitConfig, LatentSpec, ScsParams, fit, predict_gating, select_sparsity

__all__ = [
    "Dataset",
    "SubjectRecord",
    "load_csv",
    "write_csv",
    "stratified_split",
    "FitConfig",
    "LatentSpec",
    "ScsParams",
    "fit",
    "predict_gating",
    "select_sparsity",
]
