"""Time-series clustering with weighted DTW graphs and a mixture-prior graph autoencoder."""

import json

from ._core import (
    Dataset,
    GaussianMixture,
    TimeSeries,
    TsgcError,
    adjacency_from_density,
    config_keys,
    distance_matrix,
    elbow_select_k,
    fit_gmm,
    gen_synthetic,
    load_prices,
    load_ucr,
    nmi,
    normalize_adjacency,
    rand_index,
    threshold_from_density,
    train_embeddings,
    wdtw_distance,
    znormalize,
)
from ._core import run_stocks as _run_stocks
from ._core import run_train as _run_train

__all__ = [
    "Dataset",
    "GaussianMixture",
    "TimeSeries",
    "TsgcError",
    "adjacency_from_density",
    "config_keys",
    "distance_matrix",
    "elbow_select_k",
    "fit_gmm",
    "gen_synthetic",
    "load_prices",
    "load_ucr",
    "nmi",
    "normalize_adjacency",
    "rand_index",
    "run_stocks",
    "run_train",
    "threshold_from_density",
    "train_embeddings",
    "wdtw_distance",
    "znormalize",
]


def run_train(**config):
    """Run the full pipeline. Keyword names match the CLI flags; returns the report as a dict."""
    return json.loads(_run_train(config))


def run_stocks(**config):
    """Price-CSV workflow. Returns (report dict, assignments, elbow curve)."""
    report, assignments, curve = _run_stocks(config)
    return json.loads(report), assignments, curve
