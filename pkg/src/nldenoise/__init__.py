"""Matrix-free nonlocal image denoising.

The toolkit evaluates an ANOVA Gaussian kernel with NFFT-based fast Gauss
transforms, solves the shifted graph-Laplacian denoising system with a
deflated preconditioned conjugate gradient method, verifies the underlying
spectral bounds on dense desk-scale problems, and learns the fidelity
weight by bilevel optimization.
"""

from ._kernels import backend_name
from .bilevel import TrainingSet, brent_minimize, train, validate
from .imaging import GrayImage, NoiseSpec, add_gaussian_noise, load_pgm, \
    save_pgm, ssim, synthetic_image
from .features import extract_patches, feature_windows, \
    mutual_information_scores, split_windows
from .kernel import AnovaOperator
from .linops import DeflatingBasis, ShiftedSystem, SolveResult, \
    deflated_solve, pcg, plain_solve
from .spectral import bounds_report, complete_graph_check, \
    condition_estimate, leverage_check
from .transform import FastsumPlan, NfftPlan, NodeSet, \
    gauss_transform_direct, gauss_transform_fast, ndft, ndft_adjoint, \
    nfft, nfft_adjoint

__version__ = "0.1.0"

__all__ = [
    "AnovaOperator", "DeflatingBasis", "FastsumPlan", "GrayImage",
    "NfftPlan", "NodeSet", "NoiseSpec", "ShiftedSystem", "SolveResult",
    "TrainingSet", "add_gaussian_noise", "backend_name", "bounds_report",
    "brent_minimize", "complete_graph_check", "condition_estimate",
    "deflated_solve", "extract_patches", "feature_windows",
    "gauss_transform_direct", "gauss_transform_fast", "leverage_check",
    "load_pgm", "mutual_information_scores", "ndft", "ndft_adjoint",
    "nfft", "nfft_adjoint", "pcg", "plain_solve", "save_pgm",
    "split_windows", "ssim", "synthetic_image", "train", "validate",
]
