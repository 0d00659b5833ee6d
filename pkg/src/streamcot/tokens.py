"""Token vocabulary and frame-time constants for the three-stream data model.

The text monologue carries sentence-piece ids interleaved with a small set of
special tokens (padding, CoT delimiters, mode switches).  Special ids occupy
the top of the text vocabulary so that encode/decode is a bijection over the
full range.  Audio is symbolic: a frame either carries silence, a position
inside a speech segment, or an opaque 8-codebook code vector.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from enum import Enum

FRAME_RATE_HZ = 12.5
AUDIO_CODEBOOK_SIZE = 2048
NUM_CODEBOOKS = 8
TEXT_VOCAB_SIZE = 32000
DEFAULT_LOOKAHEAD = 6


class Special(Enum):
    """Reserved monologue tokens, pinned to the top of the text vocabulary."""

    PAD = TEXT_VOCAB_SIZE - 6
    EPAD = TEXT_VOCAB_SIZE - 5
    START_COT = TEXT_VOCAB_SIZE - 4
    END_COT = TEXT_VOCAB_SIZE - 3
    SWITCH_COT = TEXT_VOCAB_SIZE - 2
    SWITCH_ASR = TEXT_VOCAB_SIZE - 1


PAD = Special.PAD
EPAD = Special.EPAD
START_COT = Special.START_COT
END_COT = Special.END_COT
SWITCH_COT = Special.SWITCH_COT
SWITCH_ASR = Special.SWITCH_ASR

# Piece ids live strictly below the reserved block.
PIECE_ID_LIMIT = TEXT_VOCAB_SIZE - len(Special)


@dataclass(frozen=True)
class Piece:
    """An ordinary text piece on the monologue stream."""

    piece_id: int

    def __post_init__(self) -> None:
        if not 0 <= self.piece_id < PIECE_ID_LIMIT:
            raise ValueError(f"piece id {self.piece_id} outside [0, {PIECE_ID_LIMIT})")


MonologueToken = Piece | Special


def encode_token(tok: MonologueToken) -> int:
    """Map a monologue token to its integer id."""
    if isinstance(tok, Special):
        return tok.value
    return tok.piece_id


def decode_token(token_id: int) -> MonologueToken:
    """Inverse of :func:`encode_token`."""
    if not 0 <= token_id < TEXT_VOCAB_SIZE:
        raise ValueError(f"token id {token_id} outside [0, {TEXT_VOCAB_SIZE})")
    if token_id >= PIECE_ID_LIMIT:
        return Special(token_id)
    return Piece(token_id)


def is_padding(tok: MonologueToken) -> bool:
    return tok is PAD or tok is EPAD


def is_piece(tok: MonologueToken) -> bool:
    return isinstance(tok, Piece)


class _AudioSpecial(Enum):
    SILENCE = 0


SILENCE = _AudioSpecial.SILENCE


@dataclass(frozen=True)
class Speech:
    """One frame of a speech segment; offsets count up from 0 within a segment."""

    segment: int
    offset: int

    def __post_init__(self) -> None:
        if self.offset < 0:
            raise ValueError("speech offset must be non-negative")


@dataclass(frozen=True)
class Opaque:
    """Escape hatch for real codec codes (one integer per codebook)."""

    codes: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.codes) != NUM_CODEBOOKS:
            raise ValueError(f"expected {NUM_CODEBOOKS} codes, got {len(self.codes)}")
        for c in self.codes:
            if not 0 <= c < AUDIO_CODEBOOK_SIZE:
                raise ValueError(f"code {c} outside [0, {AUDIO_CODEBOOK_SIZE})")


AudioFrameSymbol = Speech | Opaque | _AudioSpecial


def frames_to_seconds(n: int) -> float:
    """Convert a frame count to seconds at the fixed 12.5 Hz frame rate."""
    if n < 0:
        raise ValueError("frame count must be non-negative")
    return n / FRAME_RATE_HZ


def word_piece(text: str) -> int:
    """Deterministic fallback piece id for a word without an explicit piece list."""
    return zlib.crc32(text.encode("utf-8")) % PIECE_ID_LIMIT
