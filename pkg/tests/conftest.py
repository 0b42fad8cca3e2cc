from pathlib import Path

import numpy as np
import pytest

from hgrnt.data import EmbeddedQuestion, read_wikiqa

FIXTURES = Path(__file__).parent / "fixtures"
TOY_TSV = FIXTURES / "toy.tsv"


@pytest.fixture
def toy_questions():
    return read_wikiqa(TOY_TSV)


TOY_SETTINGS = dict(
    embed_dim=16,
    sent_hidden=16,
    ctx_hidden=8,
    r=8,
    learning_rate=0.01,
    max_epochs=50,
    patience=50,
    seed=7,
)


def write_toy_config(directory, **overrides):
    """Config training small dims on the toy corpus, with the same file as dev and test."""
    values = dict(train=TOY_TSV, dev=TOY_TSV, test=TOY_TSV, checkpoint_dir=Path(directory) / "ckpt")
    values.update(TOY_SETTINGS)
    values.update(overrides)
    path = Path(directory) / "run.cfg"
    lines = ["# toy run"] + [f"{k} = {v}" for k, v in values.items() if v is not None]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def toy_config_file(tmp_path):
    return lambda **overrides: write_toy_config(tmp_path, **overrides)


def random_example(rng, embed_dim, lengths, labels, q_len=3, qid="q"):
    return EmbeddedQuestion(
        qid,
        rng.normal(size=(q_len, embed_dim)),
        [rng.normal(size=(n, embed_dim)) for n in lengths],
        np.asarray(labels, dtype=float),
    )


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
