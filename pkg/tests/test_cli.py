"""End-to-end tests of the command-line surface."""

import subprocess
import sys

import pytest

import corpusgen
from bbpe import TokenizerModel, save_model
from bbpe.cli import main


def _write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


@pytest.fixture()
def small_setup(tmp_path):
    src = _write_lines(tmp_path / "src.txt", corpusgen.ascii_lines(21, 120))
    tgt = _write_lines(tmp_path / "tgt.txt", corpusgen.mixed_script_lines(22, 120))
    model = str(tmp_path / "model.bbpe")
    rc = main(["learn", "--input", src, tgt, "--vocab-size", "400", "--output", model])
    assert rc == 0
    return tmp_path, src, tgt, model


def test_learn_summary_line(tmp_path, capsys):
    src = _write_lines(tmp_path / "src.txt", ["aa bb aa", "bb aa bb"])
    rc = main(["learn", "--input", src, "--vocab-size", "300",
               "--output", str(tmp_path / "m.bbpe")])
    assert rc == 0
    out = capsys.readouterr().out.strip()
    assert out.startswith("vocab_size=")
    assert "merges=" in out and "stop=" in out


def test_learn_joint_inputs_concatenate(tmp_path):
    a = _write_lines(tmp_path / "a.txt", ["xy xy"])
    b = _write_lines(tmp_path / "b.txt", ["xy xy"])
    joint = str(tmp_path / "joint.bbpe")
    single = str(tmp_path / "single.bbpe")
    both = _write_lines(tmp_path / "both.txt", ["xy xy", "xy xy"])
    assert main(["learn", "--input", a, b, "--vocab-size", "300", "--output", joint]) == 0
    assert main(["learn", "--input", both, "--vocab-size", "300", "--output", single]) == 0
    assert (tmp_path / "joint.bbpe").read_bytes() == (tmp_path / "single.bbpe").read_bytes()


def test_learn_vocab_below_base_fails(tmp_path, capsys):
    src = _write_lines(tmp_path / "src.txt", ["ab"])
    rc = main(["learn", "--input", src, "--vocab-size", "100",
               "--output", str(tmp_path / "m.bbpe")])
    assert rc == 1
    err = capsys.readouterr().err
    assert err.startswith("error:")
    assert not (tmp_path / "m.bbpe").exists()


def test_learn_rejects_output_equal_to_input(tmp_path, capsys):
    src = _write_lines(tmp_path / "src.txt", ["ab"])
    rc = main(["learn", "--input", src, "--vocab-size", "300", "--output", src])
    assert rc == 1
    assert "must differ" in capsys.readouterr().err


def test_learn_determinism(tmp_path, monkeypatch):
    src = _write_lines(tmp_path / "src.txt", corpusgen.mixed_script_lines(23, 300))
    m1, m2, m3 = (str(tmp_path / f"m{i}.bbpe") for i in (1, 2, 3))
    assert main(["learn", "--input", src, "--vocab-size", "350", "--output", m1]) == 0
    assert main(["learn", "--input", src, "--vocab-size", "350", "--output", m2]) == 0
    monkeypatch.setenv("BBPE_THREADS", "4")
    assert main(["learn", "--input", src, "--vocab-size", "350", "--output", m3]) == 0
    data = (tmp_path / "m1.bbpe").read_bytes()
    assert data == (tmp_path / "m2.bbpe").read_bytes() == (tmp_path / "m3.bbpe").read_bytes()


def test_encode_decode_roundtrip_files(small_setup):
    tmp_path, src, _, model = small_setup
    enc = str(tmp_path / "enc.txt")
    dec = str(tmp_path / "dec.txt")
    assert main(["encode", "--model", model, "--input", src, "--output", enc]) == 0
    assert main(["decode", "--model", model, "--input", enc, "--output", dec]) == 0
    assert (tmp_path / "dec.txt").read_bytes() == (tmp_path / "src.txt").read_bytes()


def test_encode_decode_roundtrip_ids(small_setup):
    tmp_path, _, tgt, model = small_setup
    enc = str(tmp_path / "enc.txt")
    dec = str(tmp_path / "dec.txt")
    assert main(["encode", "--model", model, "--input", tgt, "--output", enc, "--ids"]) == 0
    first = (tmp_path / "enc.txt").read_text(encoding="utf-8").splitlines()[0]
    assert all(tok.isdigit() for tok in first.split())
    assert main(["decode", "--model", model, "--input", enc, "--output", dec, "--ids"]) == 0
    assert (tmp_path / "dec.txt").read_bytes() == (tmp_path / "tgt.txt").read_bytes()


def test_decode_single_merged_id(tmp_path, capsys):
    model_path = tmp_path / "m.bbpe"
    save_model(TokenizerModel("byte", False, [(0x61, 0x62)]), model_path)
    ids = _write_lines(tmp_path / "ids.txt", ["256"])
    rc = main(["decode", "--model", str(model_path), "--input", ids, "--ids"])
    assert rc == 0
    assert capsys.readouterr().out == "ab\n"


def test_decode_unknown_id_names_line(tmp_path, capsys):
    model_path = tmp_path / "m.bbpe"
    save_model(TokenizerModel("byte", False), model_path)
    ids = _write_lines(tmp_path / "ids.txt", ["97 98", "97 9999"])
    out = str(tmp_path / "out.txt")
    rc = main(["decode", "--model", str(model_path), "--input", ids, "--ids",
               "--output", out])
    assert rc == 1
    err = capsys.readouterr().err
    assert err.startswith("error:") and ":2" in err
    assert not (tmp_path / "out.txt").exists()  # nothing partial on failure


def test_decode_reports_dropped_bytes(tmp_path, capsys):
    model_path = tmp_path / "m.bbpe"
    save_model(TokenizerModel("byte", False), model_path)
    ids = _write_lines(tmp_path / "ids.txt", ["227 129 130 130"])
    rc = main(["decode", "--model", str(model_path), "--input", ids, "--ids"])
    assert rc == 0
    captured = capsys.readouterr()
    assert captured.out == "あ\n"
    assert "line 1: dropped=1" in captured.err


def test_recover_hex(tmp_path, capsys):
    src = _write_lines(tmp_path / "hex.txt", ["E3 81 82 82", "61 62"])
    rc = main(["recover", "--hex", "--input", src])
    assert rc == 0
    captured = capsys.readouterr()
    assert captured.out == "あ\nab\n"
    assert "line 1: dropped=1" in captured.err


def test_recover_raw(tmp_path, capsys):
    (tmp_path / "raw.bin").write_bytes(b"ab\x80cd\n\xe3\x81\x82\n")
    rc = main(["recover", "--raw", "--input", str(tmp_path / "raw.bin")])
    assert rc == 0
    captured = capsys.readouterr()
    assert captured.out == "abcd\nあ\n"
    assert "line 1: dropped=1" in captured.err


def test_recover_bad_hex(tmp_path, capsys):
    src = _write_lines(tmp_path / "hex.txt", ["ZZ"])
    rc = main(["recover", "--hex", "--input", src])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_stats_length_exact_average(tmp_path, capsys):
    lines = ["abc", "de", "f"]
    src = _write_lines(tmp_path / "src.txt", lines)
    model_path = tmp_path / "m.bbpe"
    save_model(TokenizerModel("byte", False), model_path)
    rc = main(["stats", "--model", str(model_path), "--input", src, "--length"])
    assert rc == 0
    out = capsys.readouterr().out
    rows = dict()
    for line in out.splitlines()[1:]:
        _, key, value = line.split("\t")
        rows[key] = value
    assert rows["total_sentences"] == "3"
    assert rows["total_tokens"] == "6"
    assert rows["avg_tokens_per_sentence"] == "2.00"


def test_stats_full_report_schema(small_setup, capsys):
    tmp_path, src, _, model = small_setup
    rc = main(["stats", "--model", model, "--input", src])
    assert rc == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0] == "report\tkey\tvalue"
    sections = {line.split("\t")[0] for line in lines[1:]}
    assert sections == {"length", "partial", "freq", "freq_hist"}


def test_stats_determinism(small_setup, monkeypatch):
    tmp_path, src, _, model = small_setup
    out1, out2 = str(tmp_path / "r1.tsv"), str(tmp_path / "r2.tsv")
    assert main(["stats", "--model", model, "--input", src, "--output", out1]) == 0
    monkeypatch.setenv("BBPE_THREADS", "8")
    assert main(["stats", "--model", model, "--input", src, "--output", out2]) == 0
    assert (tmp_path / "r1.tsv").read_bytes() == (tmp_path / "r2.tsv").read_bytes()


def test_stats_sample(small_setup, capsys):
    tmp_path, src, _, model = small_setup
    rc = main(["stats", "--model", model, "--input", src, "--length", "--sample", "10"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "length\ttotal_sentences\t10" in out


def test_share_two_languages(tmp_path, capsys):
    a = _write_lines(tmp_path / "ar.txt", ["abc ab"])
    b = _write_lines(tmp_path / "he.txt", ["abd db"])
    model_path = tmp_path / "m.bbpe"
    save_model(TokenizerModel("byte", False), model_path)
    rc = main(["share", "--model", str(model_path),
               "--lang", f"ar={a}", "--lang", f"he={b}"])
    assert rc == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0] == "report\tkey\tvalue"
    hist = {k: v for _, k, v in (l.split("\t") for l in lines if l.startswith("sharing_hist"))}
    assert set(hist) == {"1", "2"}
    assert int(hist["2"]) >= 1  # 'a', 'b' and the space occur in both


def test_share_missing_file_lists_tags(tmp_path, capsys):
    a = _write_lines(tmp_path / "a.txt", ["x"])
    model_path = tmp_path / "m.bbpe"
    save_model(TokenizerModel("byte", False), model_path)
    rc = main(["share", "--model", str(model_path),
               "--lang", f"a={a}", "--lang", f"b={tmp_path / 'missing.txt'}"])
    assert rc == 1
    err = capsys.readouterr().err
    assert "missing corpus files" in err and "b" in err


def test_share_bad_lang_spec(tmp_path, capsys):
    model_path = tmp_path / "m.bbpe"
    save_model(TokenizerModel("byte", False), model_path)
    rc = main(["share", "--model", str(model_path), "--lang", "nofile"])
    assert rc == 1
    assert "TAG=FILE" in capsys.readouterr().err


def test_bad_threads_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("BBPE_THREADS", "many")
    src = _write_lines(tmp_path / "src.txt", ["ab"])
    rc = main(["learn", "--input", src, "--vocab-size", "300",
               "--output", str(tmp_path / "m.bbpe")])
    assert rc == 1
    assert "BBPE_THREADS" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    src = tmp_path / "hex.txt"
    src.write_text("61\n", encoding="utf-8")
    out = subprocess.run(
        [sys.executable, "-m", "bbpe.cli", "recover", "--hex", "--input", str(src)],
        capture_output=True,
        text=True,
    )
    assert out.returncode == 0
    assert out.stdout == "a\n"
