import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synth import make_world  # noqa: E402


@pytest.fixture(scope="session")
def world():
    return make_world(seed=7)


def make_sentences(texts, doc_id="doc"):
    """Sentence objects straight from text lines, for aligner tests."""
    from clirkit.textprep import Sentence
    return [
        Sentence(text=t, tokens=t.split(), char_length=len(t),
                 origin=(doc_id, 0, i))
        for i, t in enumerate(texts)
    ]
