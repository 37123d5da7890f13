"""Unit tests for model serialization and token rendering."""

import pytest

from bbpe import (
    ModelFormatError,
    TokenizerModel,
    learn,
    load_model,
    model_to_text,
    parse_rendered_token,
    render_token,
    save_model,
)


def test_save_single_merge(tmp_path):
    model = TokenizerModel("byte", False, [(0x61, 0x62)])
    text = save_model(model, tmp_path / "m.bbpe")
    assert text == "BBPE\t1\tbyte\toff\n61 62\n"
    assert (tmp_path / "m.bbpe").read_bytes() == text.encode("utf-8")


def test_save_empty_model_is_header_only(tmp_path):
    model = TokenizerModel("byte", True)
    text = save_model(model, tmp_path / "m.bbpe")
    assert text == "BBPE\t1\tbyte\ton\n"


def test_multibyte_merge_hex(tmp_path):
    model = TokenizerModel(
        "byte", False, [(0xE3, 0x81), (256, 0x82), (257, 257)]
    )
    text = save_model(model, tmp_path / "m.bbpe")
    assert text.splitlines()[1:] == ["E3 81", "E381 82", "E38182 E38182"]


def test_roundtrip_is_canonical(tmp_path, learned_models):
    model = learned_models(512)
    path = tmp_path / "m.bbpe"
    first = save_model(model, path)
    loaded = load_model(path)
    second = save_model(loaded, path)
    assert first == second
    assert [ (r.left, r.right) for r in loaded.merges ] == [
        (r.left, r.right) for r in model.merges
    ]
    assert loaded.word_marker == model.word_marker


def test_char_level_roundtrip(tmp_path):
    model = learn(["あい ab ab あい"], 8, "char")
    path = tmp_path / "m.bbpe"
    first = save_model(model, path)
    header = first.splitlines()[0].split("\t")
    assert header[:4] == ["BBPE", "1", "char", "on"]
    assert len(header) == 5  # base alphabet travels in the header
    loaded = load_model(path)
    second = model_to_text(loaded)
    assert first == second
    assert [loaded.symbols[i].data for i in range(loaded.base_size)] == [
        model.symbols[i].data for i in range(model.base_size)
    ]


def _write(tmp_path, text):
    path = tmp_path / "m.bbpe"
    path.write_text(text, encoding="utf-8")
    return path


def test_load_simple(tmp_path):
    path = _write(tmp_path, "BBPE\t1\tbyte\toff\n61 62\n")
    model = load_model(path)
    assert len(model.merges) == 1
    assert model.symbols[256].data == b"ab"


def test_load_rejects_bad_hex(tmp_path):
    path = _write(tmp_path, "BBPE\t1\tbyte\toff\n61 GG\n")
    with pytest.raises(ModelFormatError, match="line 2"):
        load_model(path)


def test_load_rejects_rank_order_violation(tmp_path, learned_models):
    model = learned_models(512)
    lines = model_to_text(model).splitlines()
    # swap a merge with a later merge that consumes its result, so the
    # earlier line now references a not-yet-defined composite
    swapped = False
    for rule in model.merges:
        users = [r for r in model.merges if rule.result in (r.left, r.right)]
        if users:
            a, b = rule.rank + 1, users[0].rank + 1
            lines[a], lines[b] = lines[b], lines[a]
            swapped = True
            break
    assert swapped, "fixture model has no chained merges to swap"
    path = _write(tmp_path, "\n".join(lines) + "\n")
    with pytest.raises(ModelFormatError, match="not a base symbol or earlier merge"):
        load_model(path)


def test_load_rejects_duplicate_merge(tmp_path):
    path = _write(tmp_path, "BBPE\t1\tbyte\toff\n61 62\n61 62\n")
    with pytest.raises(ModelFormatError, match="line 3: duplicate merge"):
        load_model(path)


def test_load_rejects_bad_headers(tmp_path):
    for header in (
        "XXXX\t1\tbyte\ton",
        "BBPE\t2\tbyte\ton",
        "BBPE\t1\tword\ton",
        "BBPE\t1\tbyte\tmaybe",
        "BBPE\t1\tbyte",
        "BBPE\t1\tchar\ton",  # char level without its alphabet field
    ):
        path = _write(tmp_path, header + "\n")
        with pytest.raises(ModelFormatError, match="line 1"):
            load_model(path)


def test_load_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_model(tmp_path / "nope.bbpe")


def test_save_unwritable_destination(tmp_path):
    model = TokenizerModel("byte", False)
    with pytest.raises(OSError, match="no-such-dir"):
        save_model(model, tmp_path / "no-such-dir" / "m.bbpe")


def test_render_token_examples():
    assert render_token(b"ab") == "ab"
    assert render_token(bytes([0xE3])) == "<0xE3>"
    assert render_token(bytes([0xE3, 0x81, 0x82, 0xE3])) == "あ<0xE3>"
    assert render_token("▁ab".encode("utf-8")) == "_ab"
    # literal underscores escape so they cannot impersonate the word marker
    assert render_token(b"_") == "<0x5F>"
    assert render_token(b"a_b") == "a<0x5F>b"


def test_render_token_injective_over_model(learned_models):
    model = learned_models(512)
    rendered = [render_token(model.symbols[i].data) for i in range(model.vocab_size)]
    assert len(set(rendered)) == model.vocab_size


def test_parse_rendered_token_inverts_render(learned_models):
    model = learned_models(512)
    for i in range(model.vocab_size):
        data = model.symbols[i].data
        assert parse_rendered_token(render_token(data)) == data
