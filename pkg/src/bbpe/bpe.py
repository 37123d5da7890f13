"""Merge learning and merge-order encoding over byte- or character-level units.

Two unit levels share one machinery. At byte level the base alphabet is all
256 octets, so any input (including binary noise) encodes without
out-of-vocabulary tokens; at character level the base alphabet is the set of
characters observed in the training corpus, and unseen characters raise
``OutOfVocabularyError``. Learning greedily merges the most frequent adjacent
pair until the vocabulary target is reached or no pair occurs twice.

Normalization is SentencePiece-style: with the word marker on, lines split on
whitespace runs and each word gets a U+2581 prefix; with it off, the whole
line is a single pretoken and its bytes pass through verbatim. Merges never
cross pretoken boundaries.
"""

from __future__ import annotations

import heapq
from typing import Iterable

import numpy as np

from dataclasses import dataclass

from . import _kernels
from .codec import RecoveryResult, recover

WORD_MARKER = "▁"

_KEY_MASK = 0xFFFFFFFF
_MAX_SYMBOL_ID = 1 << 31
_PRETOKEN_CACHE_LIMIT = 1 << 20


class OutOfVocabularyError(ValueError):
    """A character-level model met a character outside its symbol table."""


@dataclass(frozen=True)
class Symbol:
    """One vocabulary entry: an immutable byte string with a model-unique id."""

    id: int
    data: bytes


@dataclass(frozen=True)
class MergeRule:
    """An ordered symbol pair and the symbol it produces, at a given rank."""

    left: int
    right: int
    result: int
    rank: int


@dataclass(frozen=True)
class DecodeResult:
    """Decoded text plus the byte-recovery diagnostics that produced it."""

    text: str
    recovery: RecoveryResult


class TokenizerModel:
    """Immutable tokenizer: level, ranked merges, and the derived symbol table.

    Base symbols get ids ``0..base_size-1`` (byte value at byte level,
    first-appearance order at character level); the symbol produced by the
    merge at rank ``r`` gets id ``base_size + r``. Construction validates
    that every merge operand is a base symbol or an earlier merge result and
    that no two symbols share a byte string, which keeps the model file
    format and token rendering unambiguous.
    """

    def __init__(
        self,
        level: str,
        word_marker: bool,
        merges: Iterable[tuple[int, int]] = (),
        base_symbols: Iterable[bytes] | None = None,
    ) -> None:
        if level not in ("byte", "char"):
            raise ValueError(f"unknown level {level!r}; expected 'byte' or 'char'")
        self.level = level
        self.word_marker = bool(word_marker)

        if level == "byte":
            if base_symbols is not None:
                raise ValueError("byte-level models have a fixed 256-byte base alphabet")
            base = [bytes([b]) for b in range(256)]
        else:
            base = [bytes(b) for b in base_symbols or ()]
            if not base:
                raise ValueError("char-level models need a nonempty base alphabet")

        symbols: dict[int, Symbol] = {}
        data_to_id: dict[bytes, int] = {}
        char_to_id: dict[str, int] = {}
        for i, b in enumerate(base):
            if b in data_to_id:
                raise ValueError(f"duplicate base symbol {b!r}")
            symbols[i] = Symbol(i, b)
            data_to_id[b] = i
            if level == "char":
                ch = b.decode("utf-8")
                if len(ch) != 1:
                    raise ValueError(f"char-level base symbol {b!r} is not a single character")
                char_to_id[ch] = i

        rules: list[MergeRule] = []
        seen_pairs: set[tuple[int, int]] = set()
        for rank, (left, right) in enumerate(merges):
            result = len(base) + rank
            if not (0 <= left < result and 0 <= right < result):
                raise ValueError(f"merge {rank}: operands ({left}, {right}) not yet defined")
            if (left, right) in seen_pairs:
                raise ValueError(f"merge {rank}: duplicate pair ({left}, {right})")
            seen_pairs.add((left, right))
            data = symbols[left].data + symbols[right].data
            if data in data_to_id:
                raise ValueError(f"merge {rank}: result byte string {data!r} already a symbol")
            symbols[result] = Symbol(result, data)
            data_to_id[data] = result
            rules.append(MergeRule(left, right, result, rank))
        if len(symbols) > _MAX_SYMBOL_ID:
            raise ValueError("vocabulary too large for packed pair keys")

        self.base_size = len(base)
        self.merges = rules
        self.symbols = symbols
        self._data_to_id = data_to_id
        self._char_to_id = char_to_id
        self._pair_tables: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
        self._pretoken_cache: dict[str, tuple[int, ...]] = {}

    @property
    def vocab_size(self) -> int:
        return len(self.symbols)

    def symbol_id(self, data: bytes) -> int | None:
        """Id of the symbol with this exact byte string, or None."""
        return self._data_to_id.get(bytes(data))

    def _pair_lookup(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._pair_tables is None:
            keys = np.array(
                [(np.int64(r.left) << 32) | np.int64(r.right) for r in self.merges],
                dtype=np.int64,
            )
            ranks = np.array([r.rank for r in self.merges], dtype=np.int32)
            results = np.array([r.result for r in self.merges], dtype=np.int32)
            order = np.argsort(keys)
            self._pair_tables = (keys[order], ranks[order], results[order])
        return self._pair_tables

    def _base_units(self, pretoken: str) -> np.ndarray:
        if self.level == "byte":
            return np.frombuffer(pretoken.encode("utf-8"), dtype=np.uint8).astype(np.int32)
        try:
            ids = [self._char_to_id[c] for c in pretoken]
        except KeyError as exc:
            raise OutOfVocabularyError(
                f"character {exc.args[0]!r} not in the model's symbol table"
            ) from None
        return np.array(ids, dtype=np.int32)

    def _encode_pretoken(self, pretoken: str) -> tuple[int, ...]:
        cached = self._pretoken_cache.get(pretoken)
        if cached is not None:
            return cached
        units = self._base_units(pretoken)
        if units.size >= 2 and self.merges:
            keys, ranks, results = self._pair_lookup()
            m = int(_kernels.apply_merges(units, units.size, keys, ranks, results))
            out = tuple(units[:m].tolist())
        else:
            out = tuple(units.tolist())
        if len(self._pretoken_cache) >= _PRETOKEN_CACHE_LIMIT:
            self._pretoken_cache.clear()
        self._pretoken_cache[pretoken] = out
        return out


def normalize(text: str, word_marker: bool) -> list[str]:
    """Split ``text`` into pretokens.

    With the marker on, whitespace runs delimit words and each word is
    prefixed with U+2581; runs collapse, so multi-space input is lossy by
    design. With the marker off the whole line is one pretoken, verbatim.
    """
    if word_marker:
        return [WORD_MARKER + w for w in text.split()]
    return [text] if text else []


def denormalize(text: str, word_marker: bool) -> str:
    """Invert :func:`normalize`: markers become spaces, one leading space drops."""
    if not word_marker:
        return text
    out = text.replace(WORD_MARKER, " ")
    if out.startswith(" "):
        out = out[1:]
    return out


def encode(model: TokenizerModel, text: str) -> list[int]:
    """Tokenize ``text`` into symbol ids.

    Normalizes, maps each pretoken to base units, then applies merges in
    rank order (left to right within a pretoken) until none applies. The
    concatenated byte strings of the output symbols reproduce the normalized
    input exactly. Byte-level models accept any input; char-level models
    raise :class:`OutOfVocabularyError` for unseen characters.
    """
    ids: list[int] = []
    for pretoken in normalize(text, model.word_marker):
        ids.extend(model._encode_pretoken(pretoken))
    return ids


def decode(model: TokenizerModel, ids: Iterable[int]) -> DecodeResult:
    """Turn symbol ids back into text.

    Byte level concatenates symbol bytes and runs byte recovery, so invalid
    sequences lose only unrecoverable bytes (reported in the diagnostics);
    char level concatenates directly. Unknown ids raise ``ValueError``.
    """
    parts: list[bytes] = []
    for i in ids:
        sym = model.symbols.get(int(i))
        if sym is None:
            raise ValueError(f"unknown token id {i}")
        parts.append(sym.data)
    raw = b"".join(parts)
    if model.level == "byte":
        rec = recover(raw)
    else:
        s = raw.decode("utf-8")
        rec = RecoveryResult(s, len(s), 0, ())
    return DecodeResult(denormalize(rec.text, model.word_marker), rec)


def apply_merges_reference(units: Iterable[int], merges: Iterable[MergeRule]) -> list[int]:
    """Slow, obviously-correct merge application used as the encoder oracle.

    One full left-to-right scan per rule, in rank order. A single pass per
    rule suffices: applying a merge can only create pairs whose merge rank is
    higher than the one just applied.
    """
    seq = [int(u) for u in units]
    for rule in merges:
        out: list[int] = []
        i = 0
        while i < len(seq):
            if i + 1 < len(seq) and seq[i] == rule.left and seq[i + 1] == rule.right:
                out.append(rule.result)
                i += 2
            else:
                out.append(seq[i])
                i += 1
        seq = out
    return seq


def _count_pretokens(
    corpus: Iterable[str | bytes], level: str, word_marker: bool
) -> tuple[dict[str, int], list[str]]:
    """One streaming pass: pretoken counts plus, for char level, the
    first-appearance order of characters (which fixes base symbol ids)."""
    counts: dict[str, int] = {}
    char_order: dict[str, None] = {}
    for line in corpus:
        if isinstance(line, (bytes, bytearray)):
            line = line.decode("utf-8")
        line = line.removesuffix("\n").removesuffix("\r")
        for pt in normalize(line, word_marker):
            counts[pt] = counts.get(pt, 0) + 1
            if level == "char":
                for c in pt:
                    char_order.setdefault(c, None)
    return counts, list(char_order)


def _learn_merges(
    word_counts: dict[str, int],
    base_bytes: list[bytes],
    to_units,
    vocab_size: int,
) -> list[tuple[int, int]]:
    """Greedy merge learning with incremental pair counts.

    Pair counts live in a dict keyed by packed ``(left << 32) | right`` and
    are kept current by folding in the exact adjacency deltas the merge
    kernel emits per affected word, so they always equal what a full recount
    would give. Selection uses a max-heap with lazy invalidation: entries
    record the count they were pushed with and are skipped when stale.

    Ties break toward the lexicographically smallest ``(left bytes, right
    bytes)``; a candidate whose concatenation equals an existing symbol's
    byte string is skipped (banned) to keep symbol byte strings unique.
    Learning stops at the vocabulary target or when no pair occurs twice.
    """
    words: list[np.ndarray] = []
    lengths: list[int] = []
    wcounts: list[int] = []
    max_len = 2
    for pt, c in word_counts.items():
        arr = to_units(pt)
        words.append(arr)
        lengths.append(arr.size)
        wcounts.append(c)
        if arr.size > max_len:
            max_len = int(arr.size)

    pair_counts: dict[int, int] = {}
    pair_words: dict[int, set[int]] = {}
    for idx, arr in enumerate(words):
        if arr.size < 2:
            continue
        keys = (arr[:-1].astype(np.int64) << 32) | arr[1:]
        c = wcounts[idx]
        for k in keys.tolist():
            pair_counts[k] = pair_counts.get(k, 0) + c
            pair_words.setdefault(k, set()).add(idx)

    sym_bytes = list(base_bytes)
    sym_seen = set(sym_bytes)
    heap = [
        (-c, sym_bytes[k >> 32], sym_bytes[k & _KEY_MASK], k)
        for k, c in pair_counts.items()
        if c >= 2
    ]
    heapq.heapify(heap)
    banned: set[int] = set()
    merges: list[tuple[int, int]] = []
    ev_keys = np.empty(2 * max_len + 4, dtype=np.int64)
    ev_signs = np.empty(2 * max_len + 4, dtype=np.int8)

    while len(sym_bytes) < vocab_size:
        key = -1
        while heap:
            negc, _lb, _rb, cand = heapq.heappop(heap)
            if cand in banned or pair_counts.get(cand, 0) != -negc:
                continue
            key = cand
            break
        if key < 0:
            break
        left = key >> 32
        right = key & _KEY_MASK
        new_bytes = sym_bytes[left] + sym_bytes[right]
        if new_bytes in sym_seen:
            banned.add(key)
            continue
        new_id = len(sym_bytes)
        sym_bytes.append(new_bytes)
        sym_seen.add(new_bytes)
        merges.append((left, right))

        changed: set[int] = set()
        for w in pair_words.pop(key, ()):
            n = lengths[w]
            if n < 2:
                continue
            new_len, ne = _kernels.merge_word(
                words[w], n, left, right, new_id, ev_keys, ev_signs
            )
            if ne == 0:
                continue
            lengths[w] = int(new_len)
            c = wcounts[w]
            for ek, es in zip(ev_keys[:ne].tolist(), ev_signs[:ne].tolist()):
                cur = pair_counts.get(ek, 0) + es * c
                if cur <= 0:
                    pair_counts.pop(ek, None)
                else:
                    pair_counts[ek] = cur
                changed.add(ek)
                if es > 0:
                    pair_words.setdefault(ek, set()).add(w)
        for ek in sorted(changed):
            c2 = pair_counts.get(ek, 0)
            if c2 >= 2 and ek not in banned:
                heapq.heappush(
                    heap, (-c2, sym_bytes[ek >> 32], sym_bytes[ek & _KEY_MASK], ek)
                )
    return merges


def learn(
    corpus: Iterable[str | bytes],
    vocab_size: int,
    level: str = "byte",
    word_marker: bool = True,
) -> TokenizerModel:
    """Learn a tokenizer from a stream of text lines.

    ``vocab_size`` counts the whole symbol table, base alphabet included, so
    a byte-level target of 4096 yields at most 3840 merges. Deterministic
    for a fixed corpus and settings. Raises ``ValueError`` when the target is
    below the base alphabet size or the corpus yields no pretokens.
    """
    if level not in ("byte", "char"):
        raise ValueError(f"unknown level {level!r}; expected 'byte' or 'char'")
    word_counts, char_order = _count_pretokens(corpus, level, word_marker)
    if not word_counts:
        raise ValueError("empty corpus: no pretokens to learn from")

    if level == "byte":
        if vocab_size < 256:
            raise ValueError(f"vocab_size {vocab_size} below the 256-byte base alphabet")
        base_bytes = [bytes([b]) for b in range(256)]
        base_symbols = None

        def to_units(pt: str) -> np.ndarray:
            return np.frombuffer(pt.encode("utf-8"), dtype=np.uint8).astype(np.int32)

    else:
        base_bytes = [c.encode("utf-8") for c in char_order]
        base_symbols = base_bytes
        if vocab_size < len(base_bytes):
            raise ValueError(
                f"vocab_size {vocab_size} below base alphabet size {len(base_bytes)}"
            )
        char_ids = {c: i for i, c in enumerate(char_order)}

        def to_units(pt: str) -> np.ndarray:
            return np.array([char_ids[c] for c in pt], dtype=np.int32)

    merges = _learn_merges(word_counts, base_bytes, to_units, vocab_size)
    return TokenizerModel(level, word_marker, merges, base_symbols)
