"""Core value types: samples, frames, and compiled multi-stream arrangements.

All timing is in absolute frame indices at 12.5 Hz; frame 0 is the first
frame of the sample.  Values are immutable after construction and safe to
share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .tokens import (
    AudioFrameSymbol,
    MonologueToken,
    word_piece,
)


@dataclass(frozen=True)
class Word:
    """A question word with its audio span (inclusive frame indices)."""

    text: str
    start: int
    end: int
    pieces: tuple[int, ...] = ()

    def resolved_pieces(self) -> tuple[int, ...]:
        """Explicit pieces if supplied, else a single deterministic fallback id."""
        if self.pieces:
            return self.pieces
        return (word_piece(self.text),)


@dataclass(frozen=True)
class AnswerWord:
    """An answer word with its audio span and aligned text pieces."""

    text: str
    start: int
    end: int
    pieces: tuple[int, ...]


@dataclass(frozen=True)
class Sample:
    """A (question, reasoning, answer) triple with word-level frame alignments."""

    question_words: tuple[Word, ...]
    reasoning_pieces: tuple[int, ...]
    answer_words: tuple[AnswerWord, ...]
    gold_answer: str

    def validate(self) -> None:
        if not self.question_words:
            raise ValueError("sample must have at least one question word")
        prev_start = -1
        prev_end = -1
        for w in self.question_words:
            if w.end < w.start:
                raise ValueError(f"word {w.text!r} has end < start")
            if w.start <= prev_start or w.start <= prev_end:
                raise ValueError("question word spans must be non-overlapping and increasing")
            prev_start, prev_end = w.start, w.end
        prev_end = -1
        for w in self.answer_words:
            if w.end < w.start:
                raise ValueError(f"answer word {w.text!r} has end < start")
            if w.start <= prev_end:
                raise ValueError("answer word spans must be non-overlapping and increasing")
            prev_end = w.end
            if not w.pieces:
                raise ValueError(f"answer word {w.text!r} has no pieces")

    @property
    def n_words(self) -> int:
        return len(self.question_words)

    @property
    def question_end_frame(self) -> int:
        return self.question_words[-1].end

    def question_pieces(self, upto: Optional[int] = None) -> tuple[int, ...]:
        """Concatenated piece ids of the first `upto` question words (all by default)."""
        words = self.question_words if upto is None else self.question_words[:upto]
        out: list[int] = []
        for w in words:
            out.extend(w.resolved_pieces())
        return tuple(out)

    def answer_pieces(self) -> tuple[int, ...]:
        out: list[int] = []
        for w in self.answer_words:
            out.extend(w.pieces)
        return tuple(out)


@dataclass(frozen=True)
class StreamFrame:
    """One time step across the three streams."""

    user_audio: AudioFrameSymbol
    system_audio: AudioFrameSymbol
    monologue: MonologueToken


@dataclass(frozen=True)
class Landmarks:
    question_end_frame: int
    start_cot_frame: Optional[int] = None
    end_cot_frame: Optional[int] = None
    response_start_frame: Optional[int] = None


@dataclass(frozen=True)
class Arrangement:
    """A compiled training sequence: L time-aligned frames plus landmarks.

    `meta` is the configuration the arrangement was compiled with (None for
    arrangements reconstructed from simulator output).
    """

    frames: tuple[StreamFrame, ...]
    meta: object = None
    landmarks: Landmarks = field(default_factory=lambda: Landmarks(0))

    def __len__(self) -> int:
        return len(self.frames)

    def monologue(self) -> tuple[MonologueToken, ...]:
        return tuple(f.monologue for f in self.frames)
