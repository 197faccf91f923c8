"""Zero-inflated logistic regression with shared design.

Library surface: likelihood and gradients (`model`), exact double
separation certificates and margin estimation (`separation`),
maximum-likelihood fitting with relabeling (`fit`), Polya-Gamma draws
(`polya_gamma`), tempered Gibbs sampling with replica exchange
(`sampler`), posterior mode analysis (`analysis`), experiment drivers
(`experiments`), and CSV / manifest plumbing (`data_io`, `cli`).
"""

from .analysis import ClusterReport, PcaProjection, export_traces, kmeans2, pca2
from .data_io import Bindings, ColumnSpec, RunManifest, load_csv, save_dataset_csv
from .fit import (FitConfig, FitResult, fit_logistic, fit_zilr, relabel,
                  screen_reasonable)
from .model import (Dataset, EquivClass, ParamPair, canonicalize, grad_loglik,
                    inv_logit, loglik)
from .polya_gamma import pg_mean, sample_pg
from .sampler import PosteriorDraws, SamplerConfig, run_sampler
from .separation import (SeparationCertificate, SeparationStatus,
                         detect_double_separation, estimate_margin)

__version__ = "0.1.0"

__all__ = [
    "Bindings",
    "ClusterReport",
    "ColumnSpec",
    "Dataset",
    "EquivClass",
    "FitConfig",
    "FitResult",
    "ParamPair",
    "PcaProjection",
    "PosteriorDraws",
    "RunManifest",
    "SamplerConfig",
    "SeparationCertificate",
    "SeparationStatus",
    "canonicalize",
    "detect_double_separation",
    "estimate_margin",
    "export_traces",
    "fit_logistic",
    "fit_zilr",
    "grad_loglik",
    "inv_logit",
    "kmeans2",
    "load_csv",
    "loglik",
    "pca2",
    "pg_mean",
    "relabel",
    "run_sampler",
    "sample_pg",
    "save_dataset_csv",
    "screen_reasonable",
    "__version__",
]
