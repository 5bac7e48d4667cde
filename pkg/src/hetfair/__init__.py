"""Fair oversampling over class x group clusters, baselines, metrics and a CV harness."""

from hetfair.dataset import (
    ClusterKey,
    Dataset,
    DatasetSchema,
    imbalance_degrees,
    load_csv,
    make_synthetic_dataset,
    partition_clusters,
)
from hetfair.oversample import OversamplerConfig, SyntheticBatch, Technique, oversample

__all__ = [
    "ClusterKey",
    "Dataset",
    "DatasetSchema",
    "OversamplerConfig",
    "SyntheticBatch",
    "Technique",
    "imbalance_degrees",
    "load_csv",
    "make_synthetic_dataset",
    "oversample",
    "partition_clusters",
]

__version__ = "0.1.0"
