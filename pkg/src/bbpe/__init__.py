"""Byte-level BPE tokenization toolkit.

Learning merges over UTF-8 bytes keeps the vocabulary compact (the 256-byte
base covers any input with no out-of-vocabulary tokens) at the price of
tokens that may split characters apart; the codec recovers the maximum
possible number of whole characters from arbitrary byte sequences. The
analysis module measures the resulting tokenizations: partial-character
ratios, sequence lengths, frequency histograms, and cross-language sharing.
"""

from .analysis import (
    CorpusReport,
    SharingReport,
    bucket_counts,
    freq_histogram,
    is_partial,
    length_stats,
    partial_ratio,
    sharing,
)
from .bpe import (
    WORD_MARKER,
    DecodeResult,
    MergeRule,
    OutOfVocabularyError,
    Symbol,
    TokenizerModel,
    apply_merges_reference,
    decode,
    denormalize,
    encode,
    learn,
    normalize,
)
from .codec import (
    RecoveryResult,
    is_valid_char,
    recover,
    recover_unique_check,
    text_to_bytes,
)
from .model_io import (
    ModelFormatError,
    load_model,
    model_to_text,
    parse_rendered_token,
    render_token,
    save_model,
)

__version__ = "0.1.0"

__all__ = [
    "CorpusReport",
    "DecodeResult",
    "MergeRule",
    "ModelFormatError",
    "OutOfVocabularyError",
    "RecoveryResult",
    "SharingReport",
    "Symbol",
    "TokenizerModel",
    "WORD_MARKER",
    "apply_merges_reference",
    "bucket_counts",
    "decode",
    "denormalize",
    "encode",
    "freq_histogram",
    "is_partial",
    "is_valid_char",
    "learn",
    "length_stats",
    "load_model",
    "model_to_text",
    "normalize",
    "parse_rendered_token",
    "partial_ratio",
    "recover",
    "recover_unique_check",
    "render_token",
    "save_model",
    "sharing",
    "text_to_bytes",
    "__version__",
]
