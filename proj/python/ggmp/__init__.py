"""Multimodal distribution-valued regression with aligned Gaussian mixtures."""

from ._ggmp import (
    Dataset,
    Model,
    PredictiveMixture,
    energy_distance,
    fit,
    generate_benchmark,
    load,
    load_samples_csv,
    save_samples_csv,
    split_train_test,
)

__all__ = [
    "Dataset",
    "Model",
    "PredictiveMixture",
    "energy_distance",
    "fit",
    "generate_benchmark",
    "load",
    "load_samples_csv",
    "save_samples_csv",
    "split_train_test",
]
