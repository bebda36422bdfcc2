"""VC generalization bounds and double-descent experiments (Python bindings)."""

from ._vcdd import (
    BoundResult,
    SvmResult,
    __version__,
    confidence_eta,
    epsilon,
    fit_linear_svm,
    fit_min_norm_ls,
    linear_vc_dim,
    relu_features,
    rff_features,
    second_descent_bound,
    synth_gaussians,
    sweep_width,
    vc_bound,
)

__all__ = [
    "BoundResult",
    "SvmResult",
    "__version__",
    "confidence_eta",
    "epsilon",
    "fit_linear_svm",
    "fit_min_norm_ls",
    "linear_vc_dim",
    "relu_features",
    "rff_features",
    "second_descent_bound",
    "synth_gaussians",
    "sweep_width",
    "vc_bound",
]
