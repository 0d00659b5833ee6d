"""Judge verdicts, rejection sampling, and preference-pair curation."""

import pytest

from streamcot.arrange import ArrangeConfig, arrange
from streamcot.corpus import toy_corpus
from streamcot.judge import CORRECT, INCORRECT, NO_ANSWER, judge, normalize_words
from streamcot.prefs import (
    GenerationRecord,
    PreferencePair,
    curate_correctness,
    curate_length,
    onset_frame_for_word,
    sample_generations,
)
from streamcot.simulate import NoisyReplay, ScriptedReplay
from streamcot.types import Arrangement, Landmarks


def test_judge_examples():
    assert judge("It's Paris.", "Paris") == CORRECT
    assert judge("", "Paris") == NO_ANSWER
    assert judge("The answer is 7.", "7") == CORRECT
    assert judge("The answer is seven.", "7") == CORRECT
    assert judge("London maybe", "Paris") == INCORRECT


def test_judge_multiword_gold_needs_contiguous_match():
    assert judge("the red fox ran", "red fox") == CORRECT
    assert judge("the red dog and a fox", "red fox") == INCORRECT


def test_normalize_words():
    assert normalize_words("Twenty-one, GO!") == ["20", "1", "go"]


def _rec(idx, correctness, cot_length=0):
    arr = Arrangement(frames=(), meta=None, landmarks=Landmarks(0))
    return GenerationRecord(
        prompt_id="p", arrangement=arr, cot_length=cot_length,
        latency_tokens=None, transcript="", correctness=correctness,
        sample_index=idx,
    )


def test_curate_correctness_rule():
    records = [_rec(0, CORRECT), _rec(1, INCORRECT), _rec(2, CORRECT), _rec(3, INCORRECT)]
    pair = curate_correctness(records)
    assert pair.chosen.sample_index == 0
    assert pair.rejected.sample_index == 1
    assert pair.basis == "correctness"


def test_curate_correctness_needs_contrast():
    assert curate_correctness([_rec(0, CORRECT), _rec(1, CORRECT)]) is None
    assert curate_correctness([_rec(0, NO_ANSWER), _rec(1, INCORRECT)]) is None
    assert curate_correctness([]) is None


def test_curate_correctness_no_answer_counts_as_failed():
    pair = curate_correctness([_rec(0, NO_ANSWER), _rec(1, CORRECT)])
    assert pair.chosen.sample_index == 1
    assert pair.rejected.sample_index == 0


def test_curate_length_min_max_with_ties():
    records = [
        _rec(0, CORRECT, cot_length=40),
        _rec(1, CORRECT, cot_length=12),
        _rec(2, CORRECT, cot_length=40),
    ]
    pair = curate_length(records)
    assert pair.chosen.sample_index == 1
    assert pair.rejected.sample_index == 0
    assert pair.chosen.cot_length < pair.rejected.cot_length


def test_curate_length_falls_back_to_failed():
    records = [_rec(0, CORRECT, cot_length=5), _rec(1, INCORRECT, cot_length=9)]
    pair = curate_length(records)
    assert pair.chosen.sample_index == 0
    assert pair.rejected.sample_index == 1

    # equal-length correct records with no failed trace: no contrast
    same = [_rec(0, CORRECT, cot_length=5), _rec(1, CORRECT, cot_length=5)]
    assert curate_length(same) is None
    assert curate_length([_rec(0, INCORRECT)]) is None


def test_pair_invariants_enforced_on_serialization():
    bad = PreferencePair("p", _rec(0, INCORRECT), _rec(1, CORRECT), "correctness")
    with pytest.raises(ValueError):
        bad.to_dict()


def test_onset_frame_for_word():
    sample = toy_corpus(1, seed=8)[0]
    n = sample.n_words
    assert onset_frame_for_word(sample, n) == sample.question_end_frame + 1
    if n >= 2:
        early = onset_frame_for_word(sample, 1, lookahead=6)
        assert early <= onset_frame_for_word(sample, n - 1, lookahead=6)
    with pytest.raises(ValueError):
        onset_frame_for_word(sample, 0)


def test_scripted_generations_identical_across_seeds():
    sample = toy_corpus(1, seed=9)[0]
    arr = arrange(sample, ArrangeConfig(asr_mode="streaming", cot_mode="text"))
    records = sample_generations(
        ScriptedReplay(arr), sample, k=3, onset_word=sample.n_words, prompt_id="x"
    )
    assert [r.sample_index for r in records] == [0, 1, 2]
    first = records[0]
    for r in records[1:]:
        assert r.arrangement == first.arrangement
        assert r.correctness == first.correctness
        assert r.transcript == first.transcript


def test_noisy_generations_reproducible():
    sample = toy_corpus(3, seed=10)[2]
    arr = arrange(sample, ArrangeConfig(asr_mode="streaming", cot_mode="text"))
    vocab = sorted(set(sample.reasoning_pieces) | set(sample.answer_pieces()))

    def gen():
        policy = NoisyReplay(arr, vocab, p_extend=0.2, p_skip=0.2, p_corrupt=0.3)
        return sample_generations(
            policy, sample, k=4, onset_word=sample.n_words, prompt_id="x", base_seed=5
        )

    a, b = gen(), gen()
    assert a == b


def test_sample_generations_requires_k_at_least_two():
    sample = toy_corpus(1, seed=11)[0]
    arr = arrange(sample, ArrangeConfig())
    with pytest.raises(ValueError):
        sample_generations(ScriptedReplay(arr), sample, k=1, onset_word=sample.n_words)
