"""Integer kernels for the codec and tokenizer hot paths.

Every kernel is a plain loop over numpy arrays, written so the exact same
function body runs either JIT-compiled or as ordinary Python. JIT compilation
is used when numba imports cleanly and the ``BBPE_JIT`` environment variable
is not set to ``0``/``off``/``false``/``no``. The un-jitted bodies stay
reachable under ``*_py`` names for equivalence tests and for the benchmark in
``benchmarks/bench_kernels.py``.

Symbol pairs are packed into a single int64 key as ``(left << 32) | right``,
which is why vocabulary ids must stay below 2**31.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "JIT_ENABLED",
    "LEAD_LEN",
    "CONT2_LO",
    "CONT2_HI",
    "recover_dp",
    "recover_dp_py",
    "apply_merges",
    "apply_merges_py",
    "merge_word",
    "merge_word_py",
]


def _jit_requested() -> bool:
    flag = os.environ.get("BBPE_JIT", "").strip().lower()
    return flag not in ("0", "off", "false", "no")


def _load_numba():
    if not _jit_requested():
        return None
    try:
        import numba
    except ImportError:
        return None
    return numba


_NUMBA = _load_numba()
JIT_ENABLED = _NUMBA is not None


def _build_utf8_tables() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Byte-class tables encoding UTF-8 well-formedness.

    ``LEAD_LEN[b]`` is the total sequence length a lead byte ``b`` opens
    (0 for bytes that can never start a character: continuations, the
    overlong leads 0xC0/0xC1, and 0xF5-0xFF). ``CONT2_LO``/``CONT2_HI``
    bound the second byte for each multi-byte lead; the narrowed ranges for
    0xE0/0xED/0xF0/0xF4 reject overlong forms, surrogates, and code points
    above U+10FFFF. Third and fourth bytes are always 0x80-0xBF.
    """
    lead_len = np.zeros(256, dtype=np.uint8)
    cont_lo = np.zeros(256, dtype=np.uint8)
    cont_hi = np.zeros(256, dtype=np.uint8)
    lead_len[0x00:0x80] = 1
    lead_len[0xC2:0xE0] = 2
    lead_len[0xE0:0xF0] = 3
    lead_len[0xF0:0xF5] = 4
    cont_lo[0xC2:0xF5] = 0x80
    cont_hi[0xC2:0xF5] = 0xBF
    cont_lo[0xE0] = 0xA0
    cont_hi[0xED] = 0x9F
    cont_lo[0xF0] = 0x90
    cont_hi[0xF4] = 0x8F
    return lead_len, cont_lo, cont_hi


LEAD_LEN, CONT2_LO, CONT2_HI = _build_utf8_tables()


def _recover_dp(data, lead_len, cont2_lo, cont2_hi, f, choice):
    """Fill the recovery tables for a byte string.

    ``f[k]`` is the maximum number of whole characters recoverable from the
    first ``k`` bytes; ``choice[k]`` records the decision at ``k``: the
    length (1-4) of the character ending at byte ``k``, or 0 when byte ``k``
    is dropped. Candidates are tried shortest-first and only strictly better
    scores win, so among tied drop branches the single-byte drop is kept.
    Returns the number of candidate extensions examined (at most ``4 * n``).
    """
    n = data.shape[0]
    visits = 0
    f[0] = 0
    choice[0] = 0
    for k in range(1, n + 1):
        best = -1
        best_t = 0
        tmax = k if k < 4 else 4
        for t in range(1, tmax + 1):
            visits += 1
            i = k - t
            b0 = data[i]
            g = 0
            if lead_len[b0] == t:
                g = 1
                if t >= 2:
                    b1 = data[i + 1]
                    if b1 < cont2_lo[b0] or b1 > cont2_hi[b0]:
                        g = 0
                    else:
                        for m in range(i + 2, k):
                            bm = data[m]
                            if bm < 0x80 or bm > 0xBF:
                                g = 0
                                break
            cand = f[i] + g
            if cand > best:
                best = cand
                best_t = t if g == 1 else 0
        f[k] = best
        choice[k] = best_t
    return visits


def _apply_merges(units, n, keys, key_ranks, key_results):
    """Apply ranked merges to ``units[:n]`` in place; returns the new length.

    ``keys`` is a sorted array of packed pairs with ``key_ranks`` and
    ``key_results`` aligned to it. Repeatedly finds the lowest-ranked pair
    present and replaces its occurrences left to right, which is equivalent
    to applying the merge list in rank order: a merge can only create pairs
    whose own merge rank is higher.
    """
    nkeys = keys.shape[0]
    length = n
    while length >= 2:
        best_rank = 2147483647
        best_pos = -1
        for i in range(length - 1):
            key = (np.int64(units[i]) << 32) | np.int64(units[i + 1])
            lo = 0
            hi = nkeys
            while lo < hi:
                mid = (lo + hi) >> 1
                if keys[mid] < key:
                    lo = mid + 1
                else:
                    hi = mid
            if lo < nkeys and keys[lo] == key and key_ranks[lo] < best_rank:
                best_rank = key_ranks[lo]
                best_pos = lo
        if best_pos < 0:
            break
        bkey = keys[best_pos]
        left = np.int32(bkey >> 32)
        right = np.int32(bkey & 0xFFFFFFFF)
        new_id = key_results[best_pos]
        j = 0
        i = 0
        while i < length:
            if i + 1 < length and units[i] == left and units[i + 1] == right:
                units[j] = new_id
                i += 2
            else:
                units[j] = units[i]
                i += 1
            j += 1
        length = j
    return length


def _merge_word(units, n, left, right, new_id, ev_keys, ev_signs):
    """Replace ``(left, right)`` with ``new_id`` in ``units[:n]`` in place.

    Emits the exact adjacency-count delta as packed-pair events with signs
    -1/+1: the merged pair itself for each replacement, plus the boundary
    pairs that change around it. Unchanged adjacencies emit nothing, so the
    event count is proportional to the number of replacements, not to the
    word length. Returns ``(new_length, n_events)``.

    In-place writing is safe: the write index never passes the read index,
    and until the first replacement both indices address identical values.
    Reading ``units[i - 1]`` therefore always yields the original adjacency.
    """
    i = 0
    j = 0
    ne = 0
    while i < n:
        if i + 1 < n and units[i] == left and units[i + 1] == right:
            x = new_id
            take = 2
        else:
            x = units[i]
            take = 1
        if j > 0:
            old_l = units[i - 1]
            old_r = units[i]
            new_l = units[j - 1]
            if old_l != new_l or old_r != x:
                ev_keys[ne] = (np.int64(old_l) << 32) | np.int64(old_r)
                ev_signs[ne] = -1
                ne += 1
                ev_keys[ne] = (np.int64(new_l) << 32) | np.int64(x)
                ev_signs[ne] = 1
                ne += 1
        if take == 2:
            ev_keys[ne] = (np.int64(left) << 32) | np.int64(right)
            ev_signs[ne] = -1
            ne += 1
        units[j] = x
        j += 1
        i += take
    return j, ne


recover_dp_py = _recover_dp
apply_merges_py = _apply_merges
merge_word_py = _merge_word

if JIT_ENABLED:
    _njit = _NUMBA.njit(cache=True)
    recover_dp = _njit(_recover_dp)
    apply_merges = _njit(_apply_merges)
    merge_word = _njit(_merge_word)
else:
    recover_dp = recover_dp_py
    apply_merges = apply_merges_py
    merge_word = merge_word_py
