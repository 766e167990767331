"""Desk-scale simulator of the block-Markov key-generation coding scheme."""

from .codebook import BlockCodebook, Codebook, build_codebook
from .leakage import LeakageResult, exact_leakage_tiny, monte_carlo_leakage
from .otp import otp_decrypt, otp_encrypt, otp_joint, otp_leakage
from .rates import CodeSizes, SchemeRates, code_count, derive_scheme_rates
from .session import (
    BlockRecord,
    ErrorEstimate,
    SessionTrace,
    decode_key,
    decode_r,
    describe_feedback,
    encode_block,
    estimate_error,
    run_session,
)
from .typicality import conditionally_typical_mask, is_typical, typical_mask

__all__ = [
    "BlockCodebook",
    "BlockRecord",
    "CodeSizes",
    "Codebook",
    "ErrorEstimate",
    "LeakageResult",
    "SchemeRates",
    "SessionTrace",
    "build_codebook",
    "code_count",
    "conditionally_typical_mask",
    "decode_key",
    "decode_r",
    "derive_scheme_rates",
    "describe_feedback",
    "encode_block",
    "estimate_error",
    "exact_leakage_tiny",
    "is_typical",
    "monte_carlo_leakage",
    "otp_decrypt",
    "otp_encrypt",
    "otp_joint",
    "otp_leakage",
    "run_session",
    "typical_mask",
]
