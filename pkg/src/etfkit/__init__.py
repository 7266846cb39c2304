"""Equiangular tight frames through hermitian signature unitaries."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    FrameSpec,
    GramMatrix,
    SignatureUnitary,
    SynthesisMatrix,
    fickus_check,
    frame_from_gram,
    gram_from_frame,
    gram_from_signature,
    naimark_complement,
    signature_from_gram,
    spec_from_dn,
    verify_etf,
    welch_bound,
)
from .solver import SolverConfig, SeedStatus, solve_signature  # noqa: E402

__all__ = [
    "__version__",
    "FrameSpec",
    "GramMatrix",
    "SignatureUnitary",
    "SynthesisMatrix",
    "SolverConfig",
    "SeedStatus",
    "fickus_check",
    "frame_from_gram",
    "gram_from_frame",
    "gram_from_signature",
    "naimark_complement",
    "signature_from_gram",
    "solve_signature",
    "spec_from_dn",
    "verify_etf",
    "welch_bound",
]
