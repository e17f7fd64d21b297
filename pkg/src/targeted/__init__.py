"""Targeted low-rank matrix completion: find low-rank submatrices, complete them apart."""
__version__ = "0.1.0"

from .completion import CompletionConfig, CompletionOutput, complete, estimate_rank
from .errors import ConvergenceWarning, TargetedError
from .evaluation import SweepSpec, f_score, rank1_lambda_oracle, rel_err, rel_err_over, run_sweep
from .incsvd import IncSvdConfig, estimate_singular_vectors
from .linalg import SingularBasis, spectral_norm, truncated_svd
from .observed import ObservedMatrix, SubmatrixDescriptor, mask_uniform
from .pipeline import TargetedConfig, TargetedResult, targeted_complete
from .svp import SeparationReport, SvpConfig, discover_all, separation_params, svp_discover
from .synthgen import PlantSpec, SynthInstance, generate

__all__ = [
    "CompletionConfig", "CompletionOutput", "complete", "estimate_rank",
    "ConvergenceWarning", "TargetedError",
    "SweepSpec", "f_score", "rank1_lambda_oracle", "rel_err", "rel_err_over", "run_sweep",
    "IncSvdConfig", "estimate_singular_vectors",
    "SingularBasis", "spectral_norm", "truncated_svd",
    "ObservedMatrix", "SubmatrixDescriptor", "mask_uniform",
    "TargetedConfig", "TargetedResult", "targeted_complete",
    "SeparationReport", "SvpConfig", "discover_all", "separation_params", "svp_discover",
    "PlantSpec", "SynthInstance", "generate",
]
