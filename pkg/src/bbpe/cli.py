"""Command-line surface: learn, encode, decode, recover, stats, share.

All text I/O is UTF-8 with LF line endings. Subcommands stream line by line
with bounded memory (only ``learn`` holds corpus-derived structures), write
declared outputs via temp-file-then-rename so failures leave nothing partial,
and are deterministic for identical inputs and flags. Failures exit nonzero
after a single ``error: ...`` line on stderr.

``BBPE_THREADS`` caps the worker count (0 or unset means the implementation
default). The current implementation processes sequentially with one worker
regardless of the cap; the hot loops are JIT-compiled instead (see
``BBPE_JIT`` in the kernels module), so results cannot depend on scheduling.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, TextIO

from . import analysis, bpe, model_io
from .codec import recover


def _worker_count() -> int:
    raw = os.environ.get("BBPE_THREADS", "").strip()
    if not raw:
        return 1
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"BBPE_THREADS must be an integer, got {raw!r}") from None
    if cap < 0:
        raise ValueError(f"BBPE_THREADS must be >= 0, got {cap}")
    return 1 if cap == 0 else min(cap, 1)


def _read_lines(path: str) -> Iterator[bytes]:
    with open(path, "rb") as fh:
        for line in fh:
            yield line


def _decode_line(raw: bytes, lineno: int, path: str) -> str:
    try:
        return raw.decode("utf-8").removesuffix("\n").removesuffix("\r")
    except UnicodeDecodeError:
        raise ValueError(f"{path}:{lineno}: line is not valid UTF-8") from None


class _AtomicOutput:
    """Stream lines to the declared output path, or stdout when absent.

    File output goes to a temp file in the destination directory and is
    renamed into place only on success, so a failing run never leaves a
    partial file behind.
    """

    def __init__(self, path: str | None) -> None:
        self._path = path
        self._tmp: str | None = None
        self._fh: TextIO

    def __enter__(self) -> "_AtomicOutput":
        if self._path is None:
            self._fh = sys.stdout
        else:
            dest = Path(self._path)
            fd, self._tmp = tempfile.mkstemp(dir=dest.parent or Path("."), prefix=dest.name + ".")
            self._fh = os.fdopen(fd, "w", encoding="utf-8", newline="\n")
        return self

    def write_line(self, line: str) -> None:
        self._fh.write(line + "\n")

    def __exit__(self, exc_type, exc, tb) -> None:
        if self._path is None:
            self._fh.flush()
            return
        self._fh.close()
        if exc_type is None:
            os.replace(self._tmp, self._path)
        else:
            try:
                os.unlink(self._tmp)
            except OSError:
                pass


def _check_paths(inputs: Iterable[str], output: str | None) -> None:
    if output is None:
        return
    out = Path(output).resolve()
    for p in inputs:
        if Path(p).resolve() == out:
            raise ValueError(f"output path {output} must differ from input {p}")


def cmd_learn(args: argparse.Namespace) -> int:
    _worker_count()
    _check_paths(args.input, args.output)
    if args.level == "byte" and args.vocab_size < 256:
        raise ValueError(f"vocab-size {args.vocab_size} below the 256-byte base alphabet")

    def lines() -> Iterator[bytes]:
        for path in args.input:
            yield from _read_lines(path)

    model = bpe.learn(lines(), args.vocab_size, args.level, args.marker == "on")
    model_io.save_model(model, args.output)
    reached = model.vocab_size >= args.vocab_size
    stop = "target-reached" if reached else "frequency-floor"
    print(f"vocab_size={model.vocab_size} merges={len(model.merges)} stop={stop}")
    return 0


def cmd_encode(args: argparse.Namespace) -> int:
    _worker_count()
    _check_paths([args.input, args.model], args.output)
    model = model_io.load_model(args.model)
    with _AtomicOutput(args.output) as out:
        for lineno, raw in enumerate(_read_lines(args.input), start=1):
            line = _decode_line(raw, lineno, args.input)
            try:
                ids = bpe.encode(model, line)
            except bpe.OutOfVocabularyError as exc:
                raise ValueError(f"{args.input}:{lineno}: {exc}") from None
            if args.ids:
                out.write_line(" ".join(str(i) for i in ids))
            else:
                out.write_line(
                    " ".join(model_io.render_token(model.symbols[i].data) for i in ids)
                )
    return 0


def _parse_token_line(model: bpe.TokenizerModel, line: str, where: str) -> list[int]:
    ids: list[int] = []
    for tok in line.split(" "):
        if not tok:
            continue
        data = model_io.parse_rendered_token(tok)
        sym = model.symbol_id(data)
        if sym is None:
            raise ValueError(f"{where}: unknown token {tok!r}")
        ids.append(sym)
    return ids


def cmd_decode(args: argparse.Namespace) -> int:
    _worker_count()
    _check_paths([args.input, args.model], args.output)
    model = model_io.load_model(args.model)
    with _AtomicOutput(args.output) as out:
        for lineno, raw in enumerate(_read_lines(args.input), start=1):
            line = _decode_line(raw, lineno, args.input)
            where = f"{args.input}:{lineno}"
            if args.ids:
                try:
                    ids = [int(tok) for tok in line.split()]
                except ValueError:
                    raise ValueError(f"{where}: token ids must be decimal integers") from None
            else:
                ids = _parse_token_line(model, line, where)
            try:
                result = bpe.decode(model, ids)
            except ValueError as exc:
                raise ValueError(f"{where}: {exc}") from None
            if result.recovery.dropped_byte_count > 0:
                print(
                    f"line {lineno}: dropped={result.recovery.dropped_byte_count}",
                    file=sys.stderr,
                )
            out.write_line(result.text)
    return 0


def cmd_recover(args: argparse.Namespace) -> int:
    _worker_count()
    _check_paths([args.input] if args.input else [], args.output)
    if args.input:
        stream: Iterable[bytes] = _read_lines(args.input)
    else:
        stream = sys.stdin.buffer
    with _AtomicOutput(args.output) as out:
        for lineno, raw in enumerate(stream, start=1):
            raw = raw.removesuffix(b"\n").removesuffix(b"\r")
            if args.hex:
                try:
                    data = bytes(int(tok, 16) for tok in raw.decode("ascii").split())
                except (UnicodeDecodeError, ValueError):
                    raise ValueError(
                        f"line {lineno}: expected whitespace-separated hex octets"
                    ) from None
                if any(b > 0xFF for b in data):
                    raise ValueError(f"line {lineno}: hex octet out of range")
            else:
                data = raw
            rec = recover(data)
            if rec.dropped_byte_count > 0:
                print(f"line {lineno}: dropped={rec.dropped_byte_count}", file=sys.stderr)
            out.write_line(rec.text)
    return 0


def _format_fraction(x: Fraction, places: int) -> str:
    return f"{float(x):.{places}f}"


def cmd_stats(args: argparse.Namespace) -> int:
    _worker_count()
    _check_paths([args.input, args.model], args.output)
    model = model_io.load_model(args.model)
    selectors = [s for s in ("length", "partial_ratio", "freq_hist") if getattr(args, s)]
    if not selectors:
        selectors = ["length", "partial_ratio", "freq_hist"]
    report = analysis.length_stats(model, _read_lines(args.input), args.sample)

    rows: list[tuple[str, str, str]] = []
    if "length" in selectors:
        rows.append(("length", "total_sentences", str(report.total_sentences)))
        rows.append(("length", "total_tokens", str(report.total_tokens)))
        rows.append(
            ("length", "avg_tokens_per_sentence",
             _format_fraction(report.avg_tokens_per_sentence, 2))
        )
        rows.append(("length", "skipped_lines", str(report.skipped_lines)))
    if "partial_ratio" in selectors:
        rows.append(
            ("partial", "by_occurrence",
             _format_fraction(report.partial_ratio_by_occurrence, 4))
        )
        rows.append(
            ("partial", "by_type", _format_fraction(report.partial_ratio_by_type, 4))
        )
    if "freq_hist" in selectors:
        for i in range(model.vocab_size):
            rows.append(("freq", str(i), str(report.freq.get(i, 0))))
        for bucket, count in analysis.bucket_counts(model, report.freq).items():
            key = "zero" if bucket == -1 else str(bucket)
            rows.append(("freq_hist", key, str(count)))

    with _AtomicOutput(args.output) as out:
        out.write_line("report\tkey\tvalue")
        for row in rows:
            out.write_line("\t".join(row))
    return 0


def cmd_share(args: argparse.Namespace) -> int:
    _worker_count()
    corpora: dict[str, str] = {}
    for spec in args.lang:
        tag, sep, path = spec.partition("=")
        if not sep or not tag or not path:
            raise ValueError(f"--lang expects TAG=FILE, got {spec!r}")
        if tag in corpora:
            raise ValueError(f"duplicate language tag {tag!r}")
        corpora[tag] = path
    missing = [tag for tag, path in corpora.items() if not os.path.exists(path)]
    if missing:
        raise ValueError(f"missing corpus files for tags: {', '.join(sorted(missing))}")
    _check_paths(list(corpora.values()) + [args.model], args.output)
    model = model_io.load_model(args.model)
    report = analysis.sharing(
        model, {tag: _read_lines(path) for tag, path in corpora.items()}
    )
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    with _AtomicOutput(args.output) as out:
        out.write_line("report\tkey\tvalue")
        for i, tag in enumerate(report.languages):
            out.write_line(f"languages\t{i}\t{tag}")
        for sym in sorted(report.per_symbol_language_count):
            out.write_line(f"sharing\t{sym}\t{report.per_symbol_language_count[sym]}")
        for bucket in sorted(report.histogram):
            out.write_line(f"sharing_hist\t{bucket}\t{report.histogram[bucket]}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bbpe", description="Byte-level BPE tokenization toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="learn a vocabulary from one or more corpora")
    p.add_argument("--input", nargs="+", required=True,
                   help="corpus files; multiple files are concatenated for joint learning")
    p.add_argument("--vocab-size", type=int, required=True,
                   help="total symbol count, base alphabet included")
    p.add_argument("--level", choices=("byte", "char"), default="byte")
    p.add_argument("--marker", choices=("on", "off"), default="on",
                   help="prefix each whitespace-delimited word with the word marker")
    p.add_argument("--output", required=True, help="model file to write")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("encode", help="tokenize a corpus with a learned model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="default: stdout")
    p.add_argument("--ids", action="store_true", help="emit decimal ids instead of rendered tokens")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="detokenize a token stream back to text")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="default: stdout")
    p.add_argument("--ids", action="store_true", help="input is decimal ids instead of rendered tokens")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("recover", help="recover text from arbitrary byte sequences")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--hex", action="store_true",
                      help="input lines are whitespace-separated hex octets")
    mode.add_argument("--raw", action="store_true", help="input lines are raw bytes")
    p.add_argument("--input", help="default: stdin")
    p.add_argument("--output", help="default: stdout")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("stats", help="corpus statistics report (TSV)")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--length", action="store_true", help="sentence length section only")
    p.add_argument("--partial-ratio", dest="partial_ratio", action="store_true",
                   help="partial-character ratio section only")
    p.add_argument("--freq-hist", dest="freq_hist", action="store_true",
                   help="symbol frequency section only")
    p.add_argument("--sample", type=int, help="process only the first N lines")
    p.add_argument("--output", help="default: stdout")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("share", help="cross-language symbol sharing report (TSV)")
    p.add_argument("--model", required=True)
    p.add_argument("--lang", action="append", required=True, metavar="TAG=FILE",
                   help="language corpus; give at least twice")
    p.add_argument("--output", help="default: stdout")
    p.set_defaults(func=cmd_share)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except (OSError, ValueError, bpe.OutOfVocabularyError, model_io.ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
