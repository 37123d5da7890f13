import pytest

import corpusgen
from bbpe import TokenizerModel, learn

SEED = 20240811


@pytest.fixture(scope="session")
def mixed_corpus() -> list[str]:
    return corpusgen.mixed_script_lines(SEED, 10_000)


@pytest.fixture(scope="session")
def cjk_corpus() -> list[str]:
    return corpusgen.cjk_heavy_lines(SEED + 1, 8_000)


@pytest.fixture(scope="session")
def ascii_corpus() -> list[str]:
    return corpusgen.ascii_lines(SEED + 2, 2_000)


@pytest.fixture(scope="session")
def hiragana_corpus() -> list[str]:
    import random

    return corpusgen.char_run_lines(random.Random(SEED + 3), corpusgen.HIRAGANA, 1_500, 15, 40)


@pytest.fixture(scope="session")
def katakana_corpus() -> list[str]:
    import random

    return corpusgen.char_run_lines(random.Random(SEED + 4), corpusgen.KATAKANA, 1_500, 15, 40)


@pytest.fixture(scope="session")
def learned_models(mixed_corpus):
    """Lazy per-size cache of byte-level models learned on the mixed fixture."""
    cache: dict[int, TokenizerModel] = {}

    def get(size: int) -> TokenizerModel:
        if size not in cache:
            cache[size] = learn(mixed_corpus, size)
        return cache[size]

    return get


@pytest.fixture(scope="session")
def pure_byte_model() -> TokenizerModel:
    return TokenizerModel("byte", word_marker=False)
