"""Corpus measurements over a tokenizer.

Covers partial-character token ratios, tokenized sentence lengths, symbol
frequency histograms (log2-bucketed), and cross-language symbol sharing.
Averages and ratios are computed in exact rational arithmetic and only
formatted to decimals at output time, so reports are bit-reproducible.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

from .bpe import TokenizerModel, encode
from .codec import recover


@dataclass(frozen=True)
class CorpusReport:
    """Aggregated per-corpus tokenization statistics."""

    total_sentences: int
    total_tokens: int
    avg_tokens_per_sentence: Fraction
    partial_ratio_by_occurrence: Fraction
    partial_ratio_by_type: Fraction
    freq: dict[int, int]
    skipped_lines: int


@dataclass(frozen=True)
class SharingReport:
    """How many language corpora each symbol occurs in."""

    languages: tuple[str, ...]
    per_symbol_language_count: dict[int, int]
    histogram: dict[int, int]
    warnings: tuple[str, ...]


def is_partial(symbol: bytes) -> bool:
    """True iff the byte string is not a concatenation of whole characters.

    A symbol that mixes complete characters with stray lead or continuation
    bytes counts as partial; the word-marker prefix is itself a whole
    character, so it never makes a symbol partial on its own.
    """
    return recover(bytes(symbol)).dropped_byte_count > 0


def _iter_lines(corpus: Iterable[str | bytes], sample_size: int | None = None) -> Iterator[str | None]:
    """Yield decoded lines, or None for lines that fail UTF-8 decoding."""
    for i, line in enumerate(corpus):
        if sample_size is not None and i >= sample_size:
            break
        if isinstance(line, (bytes, bytearray)):
            try:
                line = bytes(line).decode("utf-8")
            except UnicodeDecodeError:
                yield None
                continue
        yield line.removesuffix("\n").removesuffix("\r")


def _partial_flags(model: TokenizerModel, ids: Iterable[int]) -> dict[int, bool]:
    if model.level != "byte":
        return {i: False for i in ids}
    return {i: is_partial(model.symbols[i].data) for i in ids}


def length_stats(
    model: TokenizerModel,
    corpus: Iterable[str | bytes],
    sample_size: int | None = None,
) -> CorpusReport:
    """Tokenize every line and accumulate exact counts.

    No sampling happens unless ``sample_size`` caps the number of lines read.
    Lines that fail UTF-8 decoding are skipped and counted in
    ``skipped_lines``; all other statistics cover the processed lines only.
    """
    freq: Counter[int] = Counter()
    sentences = 0
    tokens = 0
    skipped = 0
    for line in _iter_lines(corpus, sample_size):
        if line is None:
            skipped += 1
            continue
        ids = encode(model, line)
        sentences += 1
        tokens += len(ids)
        freq.update(ids)

    flags = _partial_flags(model, freq.keys())
    partial_occ = sum(c for i, c in freq.items() if flags[i])
    partial_types = sum(1 for i in freq if flags[i])
    by_occ = Fraction(partial_occ, tokens) if tokens else Fraction(0)
    by_type = Fraction(partial_types, len(freq)) if freq else Fraction(0)
    avg = Fraction(tokens, sentences) if sentences else Fraction(0)
    return CorpusReport(
        total_sentences=sentences,
        total_tokens=tokens,
        avg_tokens_per_sentence=avg,
        partial_ratio_by_occurrence=by_occ,
        partial_ratio_by_type=by_type,
        freq=dict(freq),
        skipped_lines=skipped,
    )


def partial_ratio(
    model: TokenizerModel, corpus: Iterable[str | bytes]
) -> tuple[Fraction, Fraction]:
    """Fraction of tokens whose symbol is a partial character.

    Returns ``(by_occurrence, by_type)``: occurrence-weighted over all token
    occurrences, and type-weighted over the distinct symbols used. Both are
    0 by definition for char-level models.
    """
    report = length_stats(model, corpus)
    return report.partial_ratio_by_occurrence, report.partial_ratio_by_type


def bucket_counts(model: TokenizerModel, freq: dict[int, int]) -> dict[int, int]:
    """Bucket per-symbol occurrence counts by floor(log2(count)).

    Symbols of the model that never occur go into the separate bucket ``-1``
    (log2 is undefined at zero). Buckets are returned in ascending order and
    their sizes sum to the vocabulary size.
    """
    buckets: Counter[int] = Counter()
    for c in freq.values():
        if c > 0:
            buckets[c.bit_length() - 1] += 1
    buckets[-1] = model.vocab_size - sum(buckets.values())
    return dict(sorted(buckets.items()))


def freq_histogram(
    model: TokenizerModel,
    corpus: Iterable[str | bytes],
    sample_size: int | None = None,
) -> dict[int, int]:
    """Histogram of symbol frequencies in log2 buckets (bucket -1 = unused)."""
    report = length_stats(model, corpus, sample_size)
    return bucket_counts(model, report.freq)


def sharing(
    model: TokenizerModel, corpora: dict[str, Iterable[str | bytes]]
) -> SharingReport:
    """Count, per symbol, how many language corpora it occurs in.

    Presence means at least one occurrence after tokenizing with the shared
    model. Empty corpora contribute no presences and produce a warning.
    Requires at least two language corpora.
    """
    if len(corpora) < 2:
        raise ValueError("sharing requires at least two language corpora")
    languages = tuple(corpora)
    presence: dict[int, int] = {}
    warnings: list[str] = []
    for tag, stream in corpora.items():
        seen: set[int] = set()
        for line in _iter_lines(stream):
            if line is None:
                continue
            seen.update(encode(model, line))
        if not seen:
            warnings.append(f"language {tag!r}: empty corpus, no symbol presences")
        for i in seen:
            presence[i] = presence.get(i, 0) + 1
    histogram = {n: 0 for n in range(1, len(languages) + 1)}
    for n in presence.values():
        histogram[n] += 1
    return SharingReport(
        languages=languages,
        per_symbol_language_count=presence,
        histogram=histogram,
        warnings=tuple(warnings),
    )
