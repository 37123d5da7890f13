"""UTF-8 byte representation of text and recovery of broken byte strings.

Any text maps to a byte sequence, but not every byte sequence maps back to
text. ``recover`` extracts the maximum possible number of whole characters
from an arbitrary byte string by dynamic programming over character
boundaries, dropping only the bytes that fit no valid character. The
validity predicate is strict Unicode well-formedness: correct lead and
continuation structure, shortest form only, no surrogates, and nothing above
U+10FFFF. Strictness matters because it is what makes the recovery choice at
every position unique (the trailing bytes of a valid multi-byte character
can never themselves end a valid character).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels


@dataclass(frozen=True)
class RecoveryResult:
    """Outcome of recovering text from a byte string.

    ``dropped_ranges`` are 0-based half-open ``(start, end)`` byte spans, in
    ascending order, covering exactly ``dropped_byte_count`` bytes.
    """

    text: str
    recovered_chars: int
    dropped_byte_count: int
    dropped_ranges: tuple[tuple[int, int], ...]


def text_to_bytes(text: str) -> bytes:
    """UTF-8 encode ``text`` (1-4 bytes per character)."""
    return text.encode("utf-8")


def is_valid_char(data: bytes, start: int = 0, end: int | None = None) -> bool:
    """True iff ``data[start:end]`` is exactly one well-formed character.

    Checks full Unicode well-formedness via the standard codec: overlong
    encodings, surrogates, and code points above U+10FFFF all fail. Indices
    are 0-based with ``end`` exclusive; out-of-range indices raise
    ``IndexError``.
    """
    if end is None:
        end = len(data)
    if start < 0 or end > len(data) or start > end:
        raise IndexError(f"byte range [{start}, {end}) out of bounds for length {len(data)}")
    chunk = data[start:end]
    if not 1 <= len(chunk) <= 4:
        return False
    try:
        decoded = chunk.decode("utf-8")
    except UnicodeDecodeError:
        return False
    return len(decoded) == 1


def _dp_tables(data: bytes) -> tuple[np.ndarray, np.ndarray, int]:
    """Run the recovery DP; returns (scores, choices, candidate visits)."""
    arr = np.frombuffer(data, dtype=np.uint8)
    n = arr.shape[0]
    f = np.empty(n + 1, dtype=np.int64)
    choice = np.empty(n + 1, dtype=np.int8)
    visits = _kernels.recover_dp(
        arr, _kernels.LEAD_LEN, _kernels.CONT2_LO, _kernels.CONT2_HI, f, choice
    )
    return f, choice, int(visits)


def recover(data: bytes) -> RecoveryResult:
    """Recover as many whole characters as possible from ``data``.

    Runs in time linear in the input length: each position considers at most
    four character lengths ending there. Bytes not covered by any chosen
    character are dropped from the text but reported in ``dropped_ranges``.
    The worst case drops everything and returns empty text.
    """
    data = bytes(data)
    if not data:
        return RecoveryResult("", 0, 0, ())
    f, choice, _ = _dp_tables(data)
    n = len(data)
    spans: list[tuple[int, int]] = []
    dropped: list[int] = []
    k = n
    while k > 0:
        t = int(choice[k])
        if t == 0:
            dropped.append(k - 1)
            k -= 1
        else:
            spans.append((k - t, k))
            k -= t
    spans.reverse()
    kept = b"".join(data[s:e] for s, e in spans)
    text = kept.decode("utf-8")
    ranges: list[tuple[int, int]] = []
    for idx in reversed(dropped):
        if ranges and ranges[-1][1] == idx:
            ranges[-1] = (ranges[-1][0], idx + 1)
        else:
            ranges.append((idx, idx + 1))
    return RecoveryResult(text, int(f[n]), len(dropped), tuple(ranges))


def recover_unique_check(bdata: bytes) -> bool:
    """True iff the recovery decision is unique at every position.

    Re-derives the DP in plain Python on top of ``is_valid_char`` and counts,
    for each prefix length, how many character lengths both end in a valid
    character and attain the optimum. UTF-8's structure guarantees at most
    one; this is a diagnostic hook for property tests, not a hot path.
    """
    data = bytes(bdata)
    n = len(data)
    f = [0] * (n + 1)
    for k in range(1, n + 1):
        best = f[k - 1]
        for t in range(1, min(4, k) + 1):
            if is_valid_char(data, k - t, k):
                best = max(best, f[k - t] + 1)
        f[k] = best
        attaining = 0
        for t in range(1, min(4, k) + 1):
            if is_valid_char(data, k - t, k) and f[k - t] + 1 == f[k]:
                attaining += 1
        if attaining > 1:
            return False
    return True
