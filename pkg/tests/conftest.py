import numpy as np
import pytest

from pragmachine import corpus, lexicon
from pragmachine.color import ColorLuv, Condition
from pragmachine.corpus import Round, Split, VocabEntry, Vocabulary


@pytest.fixture
def micro_vocab() -> Vocabulary:
    entries = [VocabEntry(i, t, float(-i)) for i, t in enumerate(["alpha", "bravo", "charlie", "delta"])]
    return Vocabulary(entries=entries)


@pytest.fixture
def micro_costs(micro_vocab):
    return corpus.cost_from_frequency(micro_vocab)


@pytest.fixture
def micro_params(micro_vocab) -> lexicon.LexiconParams:
    return lexicon.init_lexicon_params(micro_vocab, d=3, hidden=4, seed=17)


def random_luv(rng: np.random.Generator) -> ColorLuv:
    return ColorLuv(
        float(rng.uniform(0.0, 100.0)),
        float(rng.uniform(-90.0, 90.0)),
        float(rng.uniform(-90.0, 90.0)),
    )


def make_rounds(rng: np.random.Generator, n: int, vocab: Vocabulary,
                split: Split = Split.TRAIN, game_id: str = "g0") -> list[Round]:
    rounds = []
    for i in range(n):
        ctx = (random_luv(rng), random_luv(rng), random_luv(rng))
        rounds.append(Round(
            context=ctx,
            target_index=int(rng.integers(3)),
            utterance_id=int(rng.integers(len(vocab))),
            listener_choice=int(rng.integers(3)),
            condition=Condition.FAR,
            game_id=game_id,
            split_tag=split,
            round_index=i,
        ))
    return rounds


# Scalar-implicature instance: two meanings, two utterances.
# Lexicon rows are meanings: column 0 = "some"-like utterance true of both,
# column 1 = "all"-like utterance true only of the second meaning.
SCALAR_VALUES = np.array([
    [1.0, 0.0],
    [1.0, 1.0],
])


@pytest.fixture
def scalar_values():
    return SCALAR_VALUES.copy()
