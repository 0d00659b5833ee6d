"""Arrangement compiler: placement rules, round trips, and validation."""

import numpy as np
import pytest

from streamcot.arrange import ArrangeConfig, arrange, classify_frames, parse, validate
from streamcot.corpus import random_config, random_sample
from streamcot.errors import (
    ConfigError,
    MalformedStream,
    OnsetBeforeInformation,
    SequenceBudgetError,
)
from streamcot.tokens import (
    END_COT,
    EPAD,
    PAD,
    SILENCE,
    START_COT,
    SWITCH_ASR,
    SWITCH_COT,
    Piece,
    Speech,
)
from streamcot.types import AnswerWord, Arrangement, Landmarks, Sample, StreamFrame, Word


def _mk_sample(word_specs, reasoning=(), answer_specs=(), gold=""):
    words = tuple(Word(t, s, e, tuple(p)) for t, s, e, p in word_specs)
    answers = tuple(AnswerWord(t, s, e, tuple(p)) for t, s, e, p in answer_specs)
    return Sample(words, tuple(reasoning), answers, gold)


def test_single_word_lookahead_placement():
    # one word ending at frame 10, k=6: the piece lands at frame 16 and the
    # pad run in front of it terminates with an [EPAD] at 15
    sample = _mk_sample([("hi", 10, 10, [5])])
    arr = arrange(sample, ArrangeConfig(asr_mode="streaming", lookahead=6, cot_mode="none"))
    mono = arr.monologue()
    assert mono[16] == Piece(5)
    assert all(mono[t] is PAD for t in range(15))
    assert mono[15] is EPAD
    assert validate(arr) == []


def test_all_off_is_pure_padding():
    sample = _mk_sample([("hi", 0, 3, [5])])
    arr = arrange(sample, ArrangeConfig(asr_mode="none", cot_mode="none"))
    assert all(tok is PAD for tok in arr.monologue())


def test_offline_asr_starts_after_question():
    sample = _mk_sample([("a", 0, 2, [1, 2]), ("b", 4, 6, [3])])
    arr = arrange(sample, ArrangeConfig(asr_mode="offline", cot_mode="none"))
    decoded = parse(arr)
    assert decoded.asr_tokens == ((1, 7), (2, 8), (3, 9))


def test_parse_single_word_inverse():
    sample = _mk_sample([("hi", 10, 10, [5])])
    arr = arrange(sample, ArrangeConfig(asr_mode="streaming", lookahead=6, cot_mode="none"))
    decoded = parse(arr)
    assert decoded.asr_tokens == ((5, 16),)
    assert decoded.cot_tokens == ()
    assert decoded.response_tokens == ()


def test_dense_words_push_later_without_reorder():
    # both words want frame ~6 but placement stays order-preserving
    sample = _mk_sample([("a", 0, 0, [1, 2, 3]), ("b", 1, 1, [4])])
    arr = arrange(sample, ArrangeConfig(asr_mode="streaming", lookahead=6, cot_mode="none"))
    decoded = parse(arr)
    assert [p for p, _ in decoded.asr_tokens] == [1, 2, 3, 4]
    frames = [f for _, f in decoded.asr_tokens]
    assert frames == sorted(frames)
    assert frames[3] >= 9


def test_config_invariants():
    with pytest.raises(ConfigError):
        ArrangeConfig(cot_mode="none", cot_onset="at_word", onset_word=1).validate()
    with pytest.raises(ConfigError):
        ArrangeConfig(interleave=True).validate()
    with pytest.raises(ConfigError):
        ArrangeConfig(
            asr_mode="offline", cot_onset="at_word", onset_word=1, interleave=True
        ).validate()
    with pytest.raises(OnsetBeforeInformation):
        ArrangeConfig(cot_onset="at_word", onset_word=3).validate(n_words=3)
    with pytest.raises(OnsetBeforeInformation):
        ArrangeConfig(cot_onset="at_word", onset_word=0).validate(n_words=3)


def test_sequence_budget_enforced():
    sample = _mk_sample([("hi", 0, 0, [5])], reasoning=range(20))
    with pytest.raises(SequenceBudgetError):
        arrange(sample, ArrangeConfig(max_frames=10))


def test_interleave_preserves_asr_timing():
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 50:
        sample = random_sample(rng)
        if sample.n_words < 2:
            continue
        base = random_config(rng, sample.n_words, interleave=True)
        off = ArrangeConfig(
            **{**base.__dict__, "interleave": False}
        )
        with_i = parse(arrange(sample, base))
        without = parse(arrange(sample, off))
        assert with_i.asr_tokens == without.asr_tokens
        checked += 1


def test_interleave_switch_parity_and_region():
    sample = _mk_sample(
        [(f"w{i}", 4 * i, 4 * i, [i]) for i in range(4)],
        reasoning=[10, 11, 12, 13],
        answer_specs=[("ans", 13, 14, [20])],
        gold="ans",
    )
    config = ArrangeConfig(
        asr_mode="streaming", lookahead=2, cot_mode="text",
        cot_onset="at_word", onset_word=1, interleave=True,
    )
    arr = arrange(sample, config)
    decoded = parse(arr)
    directions = [d for _, d in decoded.switch_events]
    for a, b in zip(directions, directions[1:]):
        assert a != b
    if directions:
        assert directions[0] == "to_asr"
    assert [p for p, _ in decoded.cot_tokens] == [10, 11, 12, 13]
    assert [p for p, _ in decoded.asr_tokens] == [0, 1, 2, 3]
    assert [p for p, _ in decoded.response_tokens] == [20]
    assert validate(arr) == []


def test_round_trip_property():
    rng = np.random.default_rng(11)
    for _ in range(150):
        sample = random_sample(rng)
        config = random_config(rng, sample.n_words)
        arr = arrange(sample, config)
        assert validate(arr) == []
        decoded = parse(arr)
        expected_asr = (
            list(sample.question_pieces()) if config.asr_mode != "none" else []
        )
        assert [p for p, _ in decoded.asr_tokens] == expected_asr
        expected_cot = (
            list(sample.reasoning_pieces) if config.cot_mode != "none" else []
        )
        assert [p for p, _ in decoded.cot_tokens] == expected_cot
        assert [p for p, _ in decoded.response_tokens] == list(sample.answer_pieces())


def test_spoken_cot_length_dominance():
    rng = np.random.default_rng(13)
    for _ in range(25):
        sample = random_sample(rng)
        if not sample.reasoning_pieces:
            continue
        base = dict(asr_mode="streaming", lookahead=4, cot_onset="end_of_question",
                    max_frames=8192)
        text_len = len(arrange(sample, ArrangeConfig(cot_mode="text", **base)))
        spoken_len = len(arrange(sample, ArrangeConfig(cot_mode="spoken", **base)))
        assert spoken_len >= text_len


def test_spoken_cot_reasoning_carries_speech():
    sample = _mk_sample(
        [("q", 0, 1, [1])], reasoning=[10, 11, 12],
        answer_specs=[("a", 10, 10, [20])], gold="a",
    )
    arr = arrange(sample, ArrangeConfig(asr_mode="streaming", lookahead=2, cot_mode="spoken"))
    decoded = parse(arr)
    for _, t in decoded.cot_tokens:
        assert isinstance(arr.frames[t].system_audio, Speech)
    assert validate(arr) == []


def test_landmarks_match_markers():
    sample = _mk_sample(
        [("q", 0, 1, [1])], reasoning=[10], answer_specs=[("a", 8, 8, [20])], gold="a"
    )
    arr = arrange(sample, ArrangeConfig(asr_mode="streaming", lookahead=2))
    mono = arr.monologue()
    lm = arr.landmarks
    assert mono[lm.start_cot_frame] is START_COT
    assert mono[lm.end_cot_frame] is END_COT
    assert mono[lm.response_start_frame] == Piece(20)
    assert lm.question_end_frame == 1


def _raw(tokens, q_end=0):
    frames = tuple(StreamFrame(SILENCE, SILENCE, tok) for tok in tokens)
    return Arrangement(frames=frames, meta=None, landmarks=Landmarks(q_end))


def test_parse_rejects_dangling_switch():
    with pytest.raises(MalformedStream):
        parse(_raw([SWITCH_COT, Piece(1)]))
    with pytest.raises(MalformedStream):
        parse(_raw([SWITCH_ASR, Piece(1)]))


def test_parse_rejects_duplicate_or_unterminated_cot():
    with pytest.raises(MalformedStream):
        parse(_raw([START_COT, END_COT, START_COT]))
    with pytest.raises(MalformedStream):
        parse(_raw([START_COT, Piece(1)]))
    with pytest.raises(MalformedStream):
        parse(_raw([END_COT]))


def test_validate_reports_violations():
    dup = _raw([START_COT, END_COT, START_COT, END_COT])
    problems = validate(dup)
    assert any("start_cot" in v for v in problems)

    missing_epad = _raw([PAD, Piece(1)])
    assert any("EPAD" in v for v in validate(missing_epad))

    trailing = _raw([Piece(1), EPAD])
    assert any("trailing" in v for v in validate(trailing))


def test_classify_frames_matches_parse_on_clean_streams():
    rng = np.random.default_rng(17)
    for _ in range(30):
        sample = random_sample(rng)
        config = random_config(rng, sample.n_words)
        arr = arrange(sample, config)
        labels = classify_frames(arr.frames)
        decoded = parse(arr)
        assert {t for _, t in decoded.asr_tokens} == {
            t for t, lb in enumerate(labels) if lb == "asr"
        }
        assert {t for _, t in decoded.cot_tokens} == {
            t for t, lb in enumerate(labels) if lb == "cot"
        }
        assert {t for _, t in decoded.response_tokens} == {
            t for t, lb in enumerate(labels) if lb == "response"
        }
