"""Hyperspectral pixel clustering on sparse-coding features."""

from ._core import (
    DataError,
    HsicError,
    NumericError,
    ParameterError,
    ami,
    ami_report,
    encode,
    kmeans,
    load_cube,
    load_dictionary,
    load_labels,
    nmf,
    omp,
    pca,
    run_cluster,
    run_train,
    save_cube,
    save_dictionary,
    save_labels,
    spectral_cluster,
    train,
)

__all__ = [
    "DataError",
    "HsicError",
    "NumericError",
    "ParameterError",
    "ami",
    "ami_report",
    "encode",
    "kmeans",
    "load_cube",
    "load_dictionary",
    "load_labels",
    "nmf",
    "omp",
    "pca",
    "run_cluster",
    "run_train",
    "save_cube",
    "save_dictionary",
    "save_labels",
    "spectral_cluster",
    "train",
]
