"""RSSI fingerprinting localization on LoRaWAN data.

Three regressors map a message's per-gateway RSSI readings to a position:
exhaustive k-nearest neighbours (:mod:`lorafp.knn`), extremely randomized
trees (:mod:`lorafp.etrees`) and a batch-normalized MLP
(:mod:`lorafp.neural`). :mod:`lorafp.represent` holds the four RSSI
representations and :mod:`lorafp.harness` the sweeps and report tables.
"""

from lorafp.eval import ErrorStats, error_stats, haversine
from lorafp.ingest import (
    ColumnMapping,
    Dataset,
    Fingerprint,
    SplitManifest,
    gateway_histogram,
    load_dataset,
    load_split,
    rssi_histogram,
    save_split,
    split_dataset,
)
from lorafp.represent import RepresentationConfig

__version__ = "0.1.0"

__all__ = [
    "ColumnMapping",
    "Dataset",
    "ErrorStats",
    "Fingerprint",
    "RepresentationConfig",
    "SplitManifest",
    "error_stats",
    "gateway_histogram",
    "haversine",
    "load_dataset",
    "load_split",
    "rssi_histogram",
    "save_split",
    "split_dataset",
]
