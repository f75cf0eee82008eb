"""Active Sampler SGD: gradient-norm importance sampling for mini-batch SGD."""

from ._assgd import (
    ArgumentError,
    Dataset,
    Error,
    ModelParams,
    NumericError,
    UnsupportedError,
    WeightIndex,
    batch_backward,
    check,
    full_gradient,
    grad_norm_explicit,
    load_libsvm,
    optimal_distribution,
    per_instance_grad_norms,
    predict,
    stage_subset,
    synth_biased,
    train,
    variance,
)

__all__ = [
    "ArgumentError",
    "Dataset",
    "Error",
    "ModelParams",
    "NumericError",
    "UnsupportedError",
    "WeightIndex",
    "batch_backward",
    "check",
    "full_gradient",
    "grad_norm_explicit",
    "load_libsvm",
    "optimal_distribution",
    "per_instance_grad_norms",
    "predict",
    "stage_subset",
    "synth_biased",
    "train",
    "variance",
]
