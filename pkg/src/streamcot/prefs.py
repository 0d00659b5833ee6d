"""Rejection-sampling candidate generation and preference-pair curation.

K seeded simulator runs per prompt, force-decoding the CoT opener at the
chosen onset, are judged for correctness and reduced to a single contrastive
pair: correctness-based (correct vs failed) or length-based (shortest correct
vs longest correct, falling back to a failed trace).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

from .arrange import ArrangeConfig, _place_asr
from .io import arrangement_from_dict, arrangement_to_dict
from .judge import CORRECT, NO_ANSWER, judge
from .simulate import ForceDecodeConfig, SimRun, run
from .types import Arrangement, Landmarks, Sample

BASES = ("correctness", "length")


@dataclass(frozen=True)
class GenerationRecord:
    """One judged candidate generation for a prompt."""

    prompt_id: str
    arrangement: Arrangement
    cot_length: int
    latency_tokens: Optional[int]
    transcript: str
    correctness: str
    sample_index: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "prompt_id": self.prompt_id,
            "arrangement": arrangement_to_dict(self.arrangement),
            "cot_length": self.cot_length,
            "latency_tokens": self.latency_tokens,
            "transcript": self.transcript,
            "correctness": self.correctness,
            "sample_index": self.sample_index,
        }

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "GenerationRecord":
        return cls(
            prompt_id=str(obj["prompt_id"]),
            arrangement=arrangement_from_dict(obj["arrangement"]),
            cot_length=int(obj["cot_length"]),
            latency_tokens=obj.get("latency_tokens"),
            transcript=str(obj.get("transcript", "")),
            correctness=str(obj["correctness"]),
            sample_index=int(obj["sample_index"]),
        )


@dataclass(frozen=True)
class PreferencePair:
    prompt_id: str
    chosen: GenerationRecord
    rejected: GenerationRecord
    basis: str

    def validate(self) -> None:
        if self.basis not in BASES:
            raise ValueError(f"unknown basis {self.basis!r}")
        if self.chosen.correctness != CORRECT:
            raise ValueError("chosen record must be correct")
        if self.basis == "correctness":
            if self.rejected.correctness == CORRECT:
                raise ValueError("correctness-based rejected record must not be correct")
        else:
            if (
                self.rejected.correctness == CORRECT
                and self.rejected.cot_length <= self.chosen.cot_length
            ):
                raise ValueError("length-based rejected record must have a longer CoT")

    def to_dict(self) -> dict[str, Any]:
        self.validate()
        return {
            "prompt_id": self.prompt_id,
            "basis": self.basis,
            "chosen": self.chosen.to_dict(),
            "rejected": self.rejected.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "PreferencePair":
        pair = cls(
            prompt_id=str(obj["prompt_id"]),
            basis=str(obj["basis"]),
            chosen=GenerationRecord.from_dict(obj["chosen"]),
            rejected=GenerationRecord.from_dict(obj["rejected"]),
        )
        pair.validate()
        return pair


def onset_frame_for_word(sample: Sample, onset_word: int, lookahead: int = 6) -> int:
    """Frame at which to force the CoT opener: one past the onset word's last
    streaming-ASR piece, or one past the question end for onset at N."""
    if not 1 <= onset_word <= sample.n_words:
        raise ValueError(f"onset word {onset_word} outside [1, {sample.n_words}]")
    if onset_word == sample.n_words:
        return sample.question_end_frame + 1
    config = ArrangeConfig(asr_mode="streaming", lookahead=lookahead, cot_mode="none")
    _, word_last = _place_asr(sample, config)
    return word_last[onset_word - 1] + 1


def _failed_record(prompt_id: str, index: int, sample: Sample) -> GenerationRecord:
    empty = Arrangement(frames=(), meta=None, landmarks=Landmarks(sample.question_end_frame))
    return GenerationRecord(
        prompt_id=prompt_id,
        arrangement=empty,
        cot_length=0,
        latency_tokens=None,
        transcript="",
        correctness=NO_ANSWER,
        sample_index=index,
    )


def sample_generations(
    policy,
    sample: Sample,
    k: int,
    onset_word: int,
    prompt_id: str = "",
    lookahead: int = 6,
    base_seed: int = 0,
    budget: int = 2048,
    judge_fn: Callable[[str, str], str] = judge,
) -> list[GenerationRecord]:
    """Run K seeded simulations with the CoT opener forced at the onset word."""
    if k < 2:
        raise ValueError("k must be >= 2")
    onset_frame = onset_frame_for_word(sample, onset_word, lookahead)
    hooks = ForceDecodeConfig(lookahead=lookahead, onset_frame=onset_frame, budget=budget)
    records: list[GenerationRecord] = []
    for i in range(k):
        try:
            result: SimRun = run(sample, policy, hooks, seed=base_seed + i, judge_fn=judge_fn)
        except Exception:
            records.append(_failed_record(prompt_id, i, sample))
            continue
        records.append(
            GenerationRecord(
                prompt_id=prompt_id,
                arrangement=result.arrangement,
                cot_length=result.metrics.cot_length,
                latency_tokens=result.metrics.latency_tokens,
                transcript=result.transcript,
                correctness=result.metrics.correctness,
                sample_index=i,
            )
        )
    return records


def _first_with(records: Sequence[GenerationRecord], pred) -> Optional[GenerationRecord]:
    for r in records:
        if pred(r):
            return r
    return None


def curate_correctness(records: Sequence[GenerationRecord]) -> Optional[PreferencePair]:
    """Lowest-index correct vs lowest-index failed record; None without contrast."""
    if not records:
        return None
    chosen = _first_with(records, lambda r: r.correctness == CORRECT)
    rejected = _first_with(records, lambda r: r.correctness != CORRECT)
    if chosen is None or rejected is None:
        return None
    pair = PreferencePair(records[0].prompt_id, chosen, rejected, "correctness")
    pair.validate()
    return pair


def curate_length(records: Sequence[GenerationRecord]) -> Optional[PreferencePair]:
    """Shortest-CoT correct vs longest-CoT correct, falling back to a failed
    record when there is no length contrast among the correct ones."""
    if not records:
        return None
    correct = [r for r in records if r.correctness == CORRECT]
    if not correct:
        return None
    chosen = min(correct, key=lambda r: (r.cot_length, r.sample_index))
    rejected: Optional[GenerationRecord] = None
    if len(correct) >= 2:
        longest = min(correct, key=lambda r: (-r.cot_length, r.sample_index))
        if longest.cot_length > chosen.cot_length:
            rejected = longest
    if rejected is None:
        rejected = _first_with(records, lambda r: r.correctness != CORRECT)
    if rejected is None:
        return None
    pair = PreferencePair(records[0].prompt_id, chosen, rejected, "length")
    pair.validate()
    return pair
