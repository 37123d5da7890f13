"""Model file serialization and human-readable token rendering.

The model format is plain UTF-8 text with LF line endings: a tab-separated
header line ``BBPE<tab>1<tab><level><tab><on|off>``, then one line per merge
in rank order, ``<left_hex> <right_hex>``, where each operand is the
symbol's byte string as uppercase hex with no separators. Ranks are implied
by line order. Char-level models carry a fifth header field listing the
base alphabet (space-separated hex, in id order); the byte-level base
alphabet is implicit. Loading then saving reproduces the file byte for byte.
"""

from __future__ import annotations

import os
import re
import tempfile
from pathlib import Path

from .bpe import WORD_MARKER, TokenizerModel
from .codec import recover

_MAGIC = "BBPE"
_VERSION = "1"


class ModelFormatError(ValueError):
    """A model file failed validation; the message carries the line number."""


def _atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a temp file in the same directory, then rename over."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def model_to_text(model: TokenizerModel) -> str:
    """Canonical text form of a model."""
    marker = "on" if model.word_marker else "off"
    fields = [_MAGIC, _VERSION, model.level, marker]
    if model.level == "char":
        alphabet = " ".join(
            model.symbols[i].data.hex().upper() for i in range(model.base_size)
        )
        fields.append(alphabet)
    lines = ["\t".join(fields)]
    for rule in model.merges:
        left = model.symbols[rule.left].data.hex().upper()
        right = model.symbols[rule.right].data.hex().upper()
        lines.append(f"{left} {right}")
    return "\n".join(lines) + "\n"


def save_model(model: TokenizerModel, destination: str | Path) -> str:
    """Write the model file atomically; returns the canonical text written."""
    text = model_to_text(model)
    try:
        _atomic_write_text(destination, text)
    except OSError as exc:
        raise OSError(f"cannot write model file {destination}: {exc}") from exc
    return text


def _parse_hex(token: str, lineno: int) -> bytes:
    try:
        data = bytes.fromhex(token)
    except ValueError:
        raise ModelFormatError(f"line {lineno}: invalid hex symbol {token!r}") from None
    if not data:
        raise ModelFormatError(f"line {lineno}: empty symbol")
    return data


def load_model(source: str | Path) -> TokenizerModel:
    """Parse and validate a model file.

    Every merge operand must be a base symbol or the result of an earlier
    line, so files whose merges are out of rank order are rejected, as are
    duplicate merges, duplicate result strings, malformed hex, and bad
    headers. Errors name the offending line.
    """
    text = Path(source).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ModelFormatError("line 1: empty model file")

    fields = lines[0].split("\t")
    if len(fields) < 4 or fields[0] != _MAGIC or fields[1] != _VERSION:
        raise ModelFormatError(f"line 1: bad header {lines[0]!r}")
    level, marker = fields[2], fields[3]
    if level not in ("byte", "char"):
        raise ModelFormatError(f"line 1: unknown level {level!r}")
    if marker not in ("on", "off"):
        raise ModelFormatError(f"line 1: unknown marker setting {marker!r}")

    base_symbols: list[bytes] | None = None
    if level == "byte":
        if len(fields) != 4:
            raise ModelFormatError("line 1: unexpected extra header fields")
        data_to_id = {bytes([b]): b for b in range(256)}
    else:
        if len(fields) != 5:
            raise ModelFormatError("line 1: char-level header must list the base alphabet")
        base_symbols = [_parse_hex(tok, 1) for tok in fields[4].split(" ") if tok]
        if not base_symbols:
            raise ModelFormatError("line 1: empty base alphabet")
        data_to_id = {}
        for i, b in enumerate(base_symbols):
            if b in data_to_id:
                raise ModelFormatError(f"line 1: duplicate base symbol {b.hex().upper()}")
            data_to_id[b] = i

    merges: list[tuple[int, int]] = []
    seen_pairs: set[tuple[int, int]] = set()
    next_id = len(data_to_id)
    for lineno, raw in enumerate(lines[1:], start=2):
        parts = raw.split(" ")
        if len(parts) != 2:
            raise ModelFormatError(f"line {lineno}: expected '<left_hex> <right_hex>'")
        left_b = _parse_hex(parts[0], lineno)
        right_b = _parse_hex(parts[1], lineno)
        left = data_to_id.get(left_b)
        right = data_to_id.get(right_b)
        if left is None or right is None:
            missing = parts[0] if left is None else parts[1]
            raise ModelFormatError(
                f"line {lineno}: operand {missing} is not a base symbol or earlier merge result"
            )
        if (left, right) in seen_pairs:
            raise ModelFormatError(f"line {lineno}: duplicate merge")
        seen_pairs.add((left, right))
        result_b = left_b + right_b
        if result_b in data_to_id:
            raise ModelFormatError(
                f"line {lineno}: merge result {result_b.hex().upper()} duplicates an existing symbol"
            )
        data_to_id[result_b] = next_id
        next_id += 1
        merges.append((left, right))

    return TokenizerModel(level, marker == "on", merges, base_symbols)


def render_token(data: bytes) -> str:
    """Human-readable form of a symbol's byte string.

    Maximal well-formed stretches render as text; bytes that fit no whole
    character render as ``<0xHH>`` escapes. The word marker displays as an
    underscore, and literal underscore bytes escape to ``<0x5F>`` so the two
    cannot be confused: rendering stays injective over a model's symbols.
    """
    data = bytes(data)
    rec = recover(data)
    out: list[str] = []
    pos = 0
    for start, end in rec.dropped_ranges:
        if start > pos:
            out.append(_render_text(data[pos:start]))
        out.extend(f"<0x{b:02X}>" for b in data[start:end])
        pos = end
    if pos < len(data):
        out.append(_render_text(data[pos:]))
    return "".join(out)


def _render_text(chunk: bytes) -> str:
    return chunk.decode("utf-8").replace("_", "<0x5F>").replace(WORD_MARKER, "_")


_RENDER_PART = re.compile(r"<0x([0-9A-Fa-f]{2})>|_|[^_<]+|<")


def parse_rendered_token(token: str) -> bytes:
    """Invert :func:`render_token` for one displayed token."""
    out = bytearray()
    for m in _RENDER_PART.finditer(token):
        if m.group(1) is not None:
            out.append(int(m.group(1), 16))
        elif m.group(0) == "_":
            out.extend(WORD_MARKER.encode("utf-8"))
        else:
            out.extend(m.group(0).encode("utf-8"))
    return bytes(out)
