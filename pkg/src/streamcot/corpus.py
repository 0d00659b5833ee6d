"""Deterministic toy corpora and randomized sample/config generators.

The toy corpus keeps question, reasoning, and answer pieces in disjoint id
ranges so the piece-to-text lexicon is collision-free and the bundled judge
can verify simulated transcripts offline.
"""

from __future__ import annotations

import numpy as np

from .arrange import ArrangeConfig
from .types import AnswerWord, Sample, Word

QUESTION_PIECES = tuple(range(0, 6))
REASONING_PIECES = tuple(range(6, 12))
ANSWER_LEXICON = {12: "red", 13: "blue", 14: "green", 15: "gold"}
TOY_VOCAB = tuple(range(0, 16))

_QUESTION_TEXTS = (
    "what", "which", "color", "comes", "after", "mixing", "light", "shade",
    "tone", "hue", "first", "second",
)


def toy_sample(rng: np.random.Generator, idx: int) -> Sample:
    """One synthetic aligned sample with a single-word verifiable answer."""
    n_words = int(rng.integers(2, 7))
    words = []
    frame = int(rng.integers(0, 3))
    for i in range(n_words):
        length = int(rng.integers(1, 4))
        piece = int(rng.choice(QUESTION_PIECES))
        words.append(
            Word(
                # text is a pure function of the piece id so the piece-to-word
                # lexicon stays collision-free across a corpus
                text=_QUESTION_TEXTS[piece],
                start=frame,
                end=frame + length - 1,
                pieces=(piece,),
            )
        )
        frame += length + int(rng.integers(0, 2))
    q_end = words[-1].end

    n_reason = int(rng.integers(2, 7))
    reasoning = tuple(int(rng.choice(REASONING_PIECES)) for _ in range(n_reason))

    answer_piece = int(rng.choice(list(ANSWER_LEXICON)))
    answer_text = ANSWER_LEXICON[answer_piece]
    a_start = q_end + int(rng.integers(8, 16))
    answer = (AnswerWord(text=answer_text, start=a_start, end=a_start + 1, pieces=(answer_piece,)),)

    sample = Sample(
        question_words=tuple(words),
        reasoning_pieces=reasoning,
        answer_words=answer,
        gold_answer=answer_text,
    )
    sample.validate()
    return sample


def toy_corpus(n: int = 25, seed: int = 0) -> list[Sample]:
    rng = np.random.default_rng(seed)
    return [toy_sample(rng, i) for i in range(n)]


def random_sample(
    rng: np.random.Generator,
    max_words: int = 6,
    max_pieces_per_word: int = 3,
    piece_limit: int = 500,
) -> Sample:
    """A structurally valid sample with varied spans and multi-piece words."""
    n_words = int(rng.integers(1, max_words + 1))
    words = []
    frame = int(rng.integers(0, 4))
    for i in range(n_words):
        length = int(rng.integers(1, 5))
        n_pieces = int(rng.integers(1, max_pieces_per_word + 1))
        words.append(
            Word(
                text=f"q{i}",
                start=frame,
                end=frame + length - 1,
                pieces=tuple(int(rng.integers(0, piece_limit)) for _ in range(n_pieces)),
            )
        )
        frame += length + int(rng.integers(0, 3))
    q_end = words[-1].end

    reasoning = tuple(
        int(rng.integers(0, piece_limit)) for _ in range(int(rng.integers(0, 9)))
    )

    answers = []
    a_frame = q_end + int(rng.integers(1, 12))
    n_answers = int(rng.integers(0, 4))
    for j in range(n_answers):
        length = int(rng.integers(1, 4))
        n_pieces = int(rng.integers(1, 3))
        answers.append(
            AnswerWord(
                text=f"a{j}",
                start=a_frame,
                end=a_frame + length - 1,
                pieces=tuple(int(rng.integers(0, piece_limit)) for _ in range(n_pieces)),
            )
        )
        a_frame += length + int(rng.integers(0, 3))

    sample = Sample(
        question_words=tuple(words),
        reasoning_pieces=reasoning,
        answer_words=tuple(answers),
        gold_answer=" ".join(a.text for a in answers),
    )
    sample.validate()
    return sample


def random_config(rng: np.random.Generator, n_words: int, interleave: bool | None = None) -> ArrangeConfig:
    """A valid arrangement config for a sample with `n_words` question words."""
    asr_mode = str(rng.choice(["none", "streaming", "offline"]))
    cot_mode = str(rng.choice(["none", "text", "spoken"]))
    lookahead = int(rng.integers(0, 9))

    can_at_word = cot_mode != "none" and n_words >= 2
    if can_at_word and rng.random() < 0.6:
        cot_onset = "at_word"
        onset_word = int(rng.integers(1, n_words))
    else:
        cot_onset = "end_of_question"
        onset_word = None

    if interleave is None:
        interleave = (
            asr_mode == "streaming"
            and cot_onset == "at_word"
            and cot_mode == "text"
            and rng.random() < 0.7
        )
    elif interleave:
        asr_mode = "streaming"
        cot_mode = "text"
        if cot_onset != "at_word":
            if n_words < 2:
                raise ValueError("interleave needs at least two question words")
            cot_onset = "at_word"
            onset_word = int(rng.integers(1, n_words))

    config = ArrangeConfig(
        asr_mode=asr_mode,
        lookahead=lookahead,
        cot_mode=cot_mode,
        cot_onset=cot_onset,
        onset_word=onset_word,
        interleave=bool(interleave),
        max_frames=8192,
    )
    config.validate(n_words)
    return config
