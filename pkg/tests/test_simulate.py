"""Duplex decoding simulator: fidelity, forcing, metrics, and sweeps."""

import numpy as np
import pytest

from streamcot.arrange import ArrangeConfig, arrange, classify_frames
from streamcot.corpus import toy_corpus
from streamcot.errors import EmptyReference, MissingStartCot, NoResponse
from streamcot.judge import CORRECT, NO_ANSWER
from streamcot.oracle import ToyTabularLm
from streamcot.simulate import (
    ForceDecodeConfig,
    NoisyReplay,
    ScriptedReplay,
    SimRun,
    ToyStochastic,
    fitted_policy,
    latency,
    run,
    start_cot_gap,
    sweep,
    sweep_csv,
    wer,
)
from streamcot.tokens import PAD, START_COT, Piece
from streamcot.types import AnswerWord, Arrangement, Landmarks, Sample, Word

from _bruteforce import bf_wer


def _gapped_sample():
    """Four 1-frame words spaced 4 frames apart; answer right after the question."""
    words = tuple(Word(f"w{i}", 4 * i, 4 * i, (i,)) for i in range(4))
    answer = (AnswerWord("red", 13, 14, (20,)),)
    return Sample(words, (10, 11, 12, 13), answer, "red")


def test_scripted_replay_is_bit_exact():
    for sample in toy_corpus(5, seed=12):
        arr = arrange(sample, ArrangeConfig(asr_mode="streaming", cot_mode="text"))
        result = run(sample, ScriptedReplay(arr), ForceDecodeConfig(lookahead=6))
        assert result.arrangement.frames == arr.frames
        assert result.metrics.correctness == CORRECT
        assert result.metrics.wer == 0.0
        assert latency(result.arrangement) == latency(arr)


def test_forced_tokens_recorded_and_override():
    sample = _gapped_sample()

    class NeverCot:
        open_ended = True

        def reset(self):
            pass

        def next_token(self, frames, t, rng):
            return Piece(20) if t > 25 else PAD

    hooks = ForceDecodeConfig(lookahead=2, force_cot_at_end=True, budget=64)
    result = run(sample, NeverCot(), hooks)
    q_end = sample.question_end_frame
    assert result.arrangement.frames[q_end + 1].monologue is START_COT
    assert (q_end + 1, START_COT) in result.forced_frames
    for t, tok in result.forced_frames:
        assert result.arrangement.frames[t].monologue is tok


def test_lookahead_window_forces_padding():
    sample = _gapped_sample()

    class Eager:
        open_ended = True

        def reset(self):
            pass

        def next_token(self, frames, t, rng):
            return Piece(9)

    result = run(sample, Eager(), ForceDecodeConfig(lookahead=3, budget=20))
    for t in range(3):
        assert result.arrangement.frames[t].monologue is PAD


def test_budget_exhaustion_reports_no_answer():
    sample = _gapped_sample()

    class Silent:
        open_ended = True

        def reset(self):
            pass

        def next_token(self, frames, t, rng):
            return PAD

    result = run(sample, Silent(), ForceDecodeConfig(lookahead=2, budget=30))
    assert result.budget_exceeded
    assert result.metrics.correctness == NO_ANSWER
    assert result.metrics.latency_tokens is None


def test_latency_and_gap_arithmetic():
    lm = Landmarks(question_end_frame=50, response_start_frame=90)
    arr = Arrangement(frames=(), meta=None, landmarks=lm)
    assert latency(arr) == 40
    with pytest.raises(NoResponse):
        latency(Arrangement(frames=(), meta=None, landmarks=Landmarks(50)))

    pred = Arrangement(frames=(), landmarks=Landmarks(0, start_cot_frame=30))
    gt = Arrangement(frames=(), landmarks=Landmarks(0, start_cot_frame=36))
    assert start_cot_gap(pred, gt) == -6
    assert start_cot_gap(gt, gt) == 0
    with pytest.raises(MissingStartCot):
        start_cot_gap(pred, Arrangement(frames=(), landmarks=Landmarks(0)))


def test_wer_examples():
    assert wer(["a", "b", "c"], ["a", "b", "c"]) == 0.0
    assert wer(["a", "c"], ["a", "b", "c"]) == pytest.approx(1 / 3)
    assert wer(["x", "y", "z"], ["a", "b"]) == pytest.approx(3 / 2)
    assert wer(["A!", "b"], ["a", "B?"]) == 0.0
    with pytest.raises(EmptyReference):
        wer(["a"], [])


def test_wer_matches_reference_dp():
    rng = np.random.default_rng(71)
    alphabet = ["a", "b", "c", "d"]
    for _ in range(100):
        ref = [alphabet[i] for i in rng.integers(0, 4, size=rng.integers(1, 8))]
        hyp = [alphabet[i] for i in rng.integers(0, 4, size=rng.integers(0, 8))]
        assert wer(hyp, ref) == pytest.approx(bf_wer(hyp, ref))


def test_early_onset_latency_constants():
    sample = _gapped_sample()
    late = ArrangeConfig(asr_mode="streaming", lookahead=2, cot_mode="text")
    early = ArrangeConfig(
        asr_mode="streaming", lookahead=2, cot_mode="text",
        cot_onset="at_word", onset_word=1, interleave=True,
    )
    arr_late = arrange(sample, late)
    arr_early = arrange(sample, early)
    assert latency(arr_late) == 9
    assert latency(arr_early) == 6

    # exact accounting: the latency difference equals the difference in
    # CoT/switch/padding frames between question end and response start
    # (ASR frames cancel because interleaving preserves their timing)
    def overhead(arr):
        labels = classify_frames(arr.frames)
        q_end = arr.landmarks.question_end_frame
        resp = arr.landmarks.response_start_frame
        window = labels[q_end + 1 : resp]
        return {
            "cot": sum(lb in ("cot", "start_cot", "end_cot") for lb in window),
            "switch": sum(lb == "switch" for lb in window),
            "pad": sum(lb in ("pad", "epad") for lb in window),
            "asr": sum(lb == "asr" for lb in window),
        }

    late_o, early_o = overhead(arr_late), overhead(arr_early)
    assert late_o["asr"] == early_o["asr"]
    assert latency(arr_late) - latency(arr_early) == (
        (late_o["cot"] - early_o["cot"])
        + (late_o["switch"] - early_o["switch"])
        + (late_o["pad"] - early_o["pad"])
    )

    # the simulator measures the same numbers as the static arrangements
    for arr, expect in ((arr_late, 9), (arr_early, 6)):
        result = run(sample, ScriptedReplay(arr), ForceDecodeConfig(lookahead=2))
        assert result.metrics.latency_tokens == expect


def test_toy_stochastic_seed_determinism():
    sample = _gapped_sample()
    arr = arrange(sample, ArrangeConfig(asr_mode="streaming", lookahead=2, cot_mode="text"))
    policy = fitted_policy(arr)
    hooks = ForceDecodeConfig(lookahead=2, force_cot_at_end=True, budget=256)
    a = run(sample, policy, hooks, seed=5)
    b = run(sample, policy, hooks, seed=5)
    assert a == b
    assert isinstance(a, SimRun)


def test_fitted_policy_rows_normalized():
    sample = _gapped_sample()
    arr = arrange(sample, ArrangeConfig(asr_mode="streaming", lookahead=2))
    policy = fitted_policy(arr)
    assert np.allclose(policy.probs.sum(axis=1), 1.0)


def test_noisy_replay_varies_with_seed():
    sample = _gapped_sample()
    arr = arrange(sample, ArrangeConfig(asr_mode="streaming", lookahead=2, cot_mode="text"))
    hooks = ForceDecodeConfig(lookahead=2, budget=256)
    lengths = set()
    for seed in range(8):
        policy = NoisyReplay(arr, [10, 11, 12, 13], p_extend=0.3, p_skip=0.3)
        lengths.add(run(sample, policy, hooks, seed=seed).metrics.cot_length)
    assert len(lengths) > 1


def test_sweep_rows_and_csv():
    samples = toy_corpus(6, seed=14)
    vocab = sorted(
        {p for s in samples for p in s.question_pieces() + s.reasoning_pieces + s.answer_pieces()}
    )
    oracle = ToyTabularLm.random(vocab, np.random.default_rng(2))
    rows = sweep(samples, oracle, thetas=[0.95, 0.65], ws_counts=[2])
    assert [(r.method, r.param) for r in rows] == [("qc", 0.95), ("qc", 0.65), ("ws", 2.0)]
    assert all(r.n == len(samples) for r in rows)
    csv = sweep_csv(rows)
    assert csv.splitlines()[0] == "method,param,mean_latency_tokens,accuracy,mean_cot_len,n"
    assert len(csv.strip().splitlines()) == 4
    with pytest.raises(ValueError):
        sweep(samples, oracle, thetas=[])
