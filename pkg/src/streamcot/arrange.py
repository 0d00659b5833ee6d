"""Compile samples into three-stream arrangements and parse them back.

The compiler places streaming (or offline) ASR pieces on the text monologue,
inserts a reasoning block delimited by start/end CoT markers, optionally
interleaving it into the padding gaps between ASR tokens with explicit mode
switch tokens, and aligns the spoken response.  ASR placement never depends
on the CoT configuration, so interleaving is guaranteed to preserve ASR
timing frame-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from .errors import (
    ConfigError,
    MalformedStream,
    OnsetBeforeInformation,
    SequenceBudgetError,
)
from .tokens import (
    END_COT,
    EPAD,
    PAD,
    SILENCE,
    START_COT,
    SWITCH_ASR,
    SWITCH_COT,
    MonologueToken,
    Piece,
    Special,
    Speech,
)
from .types import Arrangement, Landmarks, Sample, StreamFrame

ASR_MODES = ("none", "streaming", "offline")
COT_MODES = ("none", "text", "spoken")
ONSETS = ("end_of_question", "at_word")

DEFAULT_MAX_FRAMES = 4096


@dataclass(frozen=True)
class ArrangeConfig:
    """How a sample is compiled into an arrangement."""

    asr_mode: str = "streaming"
    lookahead: int = 6
    cot_mode: str = "text"
    cot_onset: str = "end_of_question"
    onset_word: Optional[int] = None
    interleave: bool = False
    max_frames: int = DEFAULT_MAX_FRAMES

    def validate(self, n_words: Optional[int] = None) -> None:
        if self.asr_mode not in ASR_MODES:
            raise ConfigError(f"unknown asr_mode {self.asr_mode!r}")
        if self.cot_mode not in COT_MODES:
            raise ConfigError(f"unknown cot_mode {self.cot_mode!r}")
        if self.cot_onset not in ONSETS:
            raise ConfigError(f"unknown cot_onset {self.cot_onset!r}")
        if self.asr_mode == "streaming" and self.lookahead < 0:
            raise ConfigError("lookahead must be >= 0")
        if self.cot_onset == "at_word":
            if self.cot_mode == "none":
                raise ConfigError("cot_mode 'none' forbids an at_word onset")
            if self.onset_word is None:
                raise ConfigError("at_word onset requires onset_word")
        if self.interleave:
            if self.asr_mode != "streaming" or self.cot_onset != "at_word":
                raise ConfigError("interleave requires streaming ASR and an at_word onset")
            if self.cot_mode == "spoken":
                raise ConfigError("spoken CoT cannot be interleaved")
        if self.max_frames <= 0:
            raise ConfigError("max_frames must be positive")
        if n_words is not None and self.cot_onset == "at_word":
            assert self.onset_word is not None
            if not 1 <= self.onset_word < n_words:
                raise OnsetBeforeInformation(
                    f"onset word {self.onset_word} outside [1, {n_words})"
                )


@dataclass(frozen=True)
class DecodedSample:
    """Structured view of an arrangement's monologue stream."""

    asr_tokens: tuple[tuple[int, int], ...]
    cot_tokens: tuple[tuple[int, int], ...]
    response_tokens: tuple[tuple[int, int], ...]
    switch_events: tuple[tuple[int, str], ...]
    landmarks: Landmarks


def _place_asr(sample: Sample, config: ArrangeConfig) -> tuple[dict[int, int], list[int]]:
    """Place question pieces; returns {frame: piece} and per-word last frames.

    For words without ASR the "last frame" falls back to the word's span end so
    at_word onsets stay meaningful in asr_mode 'none'.
    """
    placed: dict[int, int] = {}
    word_last: list[int] = []
    if config.asr_mode == "streaming":
        nxt = 0
        for w in sample.question_words:
            f = max(w.start + config.lookahead, nxt)
            for p in w.resolved_pieces():
                placed[f] = p
                f += 1
            word_last.append(f - 1)
            nxt = f
    elif config.asr_mode == "offline":
        f = sample.question_end_frame + 1
        for w in sample.question_words:
            for p in w.resolved_pieces():
                placed[f] = p
                f += 1
            word_last.append(f - 1)
    else:
        word_last = [w.end for w in sample.question_words]
    return placed, word_last


def _fill_gaps(
    occupied: set[int], start: int, seq: list[MonologueToken]
) -> dict[int, MonologueToken]:
    """Distribute `seq` over the free frames >= start, bracketing every excursion
    into occupied (ASR) territory with switch tokens in their own frames.

    Gaps too small to hold the switch overhead plus at least one token of
    content are left as padding.
    """
    later = sorted(f for f in occupied if f >= start)
    gaps: list[tuple[int, Optional[int]]] = []
    a = start
    for o in later:
        if o > a:
            gaps.append((a, o - 1))
        a = o + 1
    gaps.append((a, None))

    out: dict[int, MonologueToken] = {}
    i = 0
    for ga, gb in gaps:
        if i >= len(seq):
            break
        remaining = len(seq) - i
        entry = 1 if i > 0 else 0  # resuming CoT needs a <switch_cot>
        f = ga
        if gb is None or remaining <= (gb - ga + 1) - entry:
            if entry:
                out[f] = SWITCH_COT
                f += 1
            for tok in seq[i:]:
                out[f] = tok
                f += 1
            i = len(seq)
            break
        usable = (gb - ga + 1) - entry - 1  # reserve the last slot for <switch_asr>
        if usable <= 0:
            continue
        if entry:
            out[f] = SWITCH_COT
            f += 1
        for tok in seq[i : i + usable]:
            out[f] = tok
            f += 1
        out[f] = SWITCH_ASR
        i += usable
    return out


def arrange(sample: Sample, config: ArrangeConfig) -> Arrangement:
    """Compile a sample into a full three-stream arrangement."""
    sample.validate()
    config.validate(sample.n_words)
    q_end = sample.question_end_frame

    asr_placed, word_last = _place_asr(sample, config)
    mono: dict[int, MonologueToken] = {f: Piece(p) for f, p in asr_placed.items()}
    last_asr = max(asr_placed) if asr_placed else -1

    start_cot_frame: Optional[int] = None
    end_cot_frame: Optional[int] = None
    cot_reasoning_frames: list[int] = []
    if config.cot_mode != "none":
        seq: list[MonologueToken] = [START_COT]
        seq += [Piece(p) for p in sample.reasoning_pieces]
        seq.append(END_COT)
        if config.cot_onset == "end_of_question":
            onset_from = q_end + 1
        else:
            assert config.onset_word is not None
            onset_from = word_last[config.onset_word - 1] + 1
        while onset_from in mono:
            onset_from += 1
        if config.interleave:
            block = _fill_gaps(set(mono), onset_from, seq)
        else:
            f = onset_from
            while True:
                hit = next((f + i for i in range(len(seq)) if (f + i) in mono), None)
                if hit is None:
                    break
                f = hit + 1
                while f in mono:
                    f += 1
            block = {f + i: tok for i, tok in enumerate(seq)}
        for f, tok in block.items():
            mono[f] = tok
            if tok is START_COT:
                start_cot_frame = f
            elif tok is END_COT:
                end_cot_frame = f
            elif isinstance(tok, Piece):
                cot_reasoning_frames.append(f)

    sys_speech: dict[int, Speech] = {}
    next_segment = 0
    if config.cot_mode == "spoken":
        for off, f in enumerate(sorted(cot_reasoning_frames)):
            sys_speech[f] = Speech(next_segment, off)
        if cot_reasoning_frames:
            next_segment += 1

    response_start: Optional[int] = None
    if sample.answer_words:
        floor = 1 + max(last_asr, end_cot_frame if end_cot_frame is not None else -1)
        delta = max(0, floor - sample.answer_words[0].start)
        nxt = 0
        for w in sample.answer_words:
            f0 = max(w.start + delta, nxt)
            while f0 in mono:
                f0 += 1
            for j, p in enumerate(w.pieces):
                mono[f0 + j] = Piece(p)
            if response_start is None:
                response_start = f0
            span = max(w.end - w.start + 1, len(w.pieces))
            for off in range(span):
                sys_speech[f0 + off] = Speech(next_segment, off)
            next_segment += 1
            nxt = f0 + span

    user_speech: dict[int, Speech] = {}
    for seg, w in enumerate(sample.question_words):
        for off in range(w.end - w.start + 1):
            user_speech[w.start + off] = Speech(seg, off)

    length = 1 + max(
        max(mono) if mono else -1,
        max(sys_speech) if sys_speech else -1,
        q_end,
    )
    if length > config.max_frames:
        raise SequenceBudgetError(
            f"arrangement needs {length} frames, budget is {config.max_frames}"
        )

    tokens: list[MonologueToken] = [mono.get(t, PAD) for t in range(length)]
    for t in range(length - 1):
        if tokens[t] is PAD and tokens[t + 1] is not PAD:
            tokens[t] = EPAD

    frames = tuple(
        StreamFrame(
            user_audio=user_speech.get(t, SILENCE),
            system_audio=sys_speech.get(t, SILENCE),
            monologue=tokens[t],
        )
        for t in range(length)
    )
    landmarks = Landmarks(
        question_end_frame=q_end,
        start_cot_frame=start_cot_frame,
        end_cot_frame=end_cot_frame,
        response_start_frame=response_start,
    )
    return Arrangement(frames=frames, meta=config, landmarks=landmarks)


def parse(arr: Arrangement) -> DecodedSample:
    """Classify every monologue token into ASR / CoT / response regions.

    Raises MalformedStream on dangling or non-alternating switch tokens, a
    missing CoT delimiter, or CoT content outside the delimited region.
    """
    asr: list[tuple[int, int]] = []
    cot: list[tuple[int, int]] = []
    resp: list[tuple[int, int]] = []
    switches: list[tuple[int, str]] = []
    start_f: Optional[int] = None
    end_f: Optional[int] = None
    mode = "pre"
    for t, frame in enumerate(arr.frames):
        tok = frame.monologue
        if tok is PAD or tok is EPAD:
            continue
        if tok is START_COT:
            if start_f is not None:
                raise MalformedStream(f"duplicate <start_cot> at frame {t}")
            if mode != "pre":
                raise MalformedStream(f"<start_cot> at frame {t} after CoT region")
            start_f = t
            mode = "cot"
        elif tok is END_COT:
            if mode == "asr_sub":
                raise MalformedStream(f"<end_cot> at frame {t} inside ASR sub-mode")
            if mode != "cot":
                raise MalformedStream(f"<end_cot> at frame {t} without <start_cot>")
            end_f = t
            mode = "post"
        elif tok is SWITCH_ASR:
            if mode != "cot":
                raise MalformedStream(f"dangling <switch_asr> at frame {t}")
            switches.append((t, "to_asr"))
            mode = "asr_sub"
        elif tok is SWITCH_COT:
            if mode != "asr_sub":
                raise MalformedStream(f"dangling <switch_cot> at frame {t}")
            switches.append((t, "to_cot"))
            mode = "cot"
        elif isinstance(tok, Piece):
            if mode == "cot":
                cot.append((tok.piece_id, t))
            elif mode == "asr_sub":
                asr.append((tok.piece_id, t))
            else:
                # Outside the CoT region response pieces are the ones with
                # aligned system speech; everything else is streaming ASR.
                if isinstance(frame.system_audio, Speech):
                    resp.append((tok.piece_id, t))
                else:
                    asr.append((tok.piece_id, t))
    if mode == "asr_sub":
        raise MalformedStream("stream ends inside ASR sub-mode")
    if start_f is not None and end_f is None:
        raise MalformedStream("<start_cot> without matching <end_cot>")
    landmarks = Landmarks(
        question_end_frame=arr.landmarks.question_end_frame,
        start_cot_frame=start_f,
        end_cot_frame=end_f,
        response_start_frame=resp[0][1] if resp else None,
    )
    return DecodedSample(
        asr_tokens=tuple(asr),
        cot_tokens=tuple(cot),
        response_tokens=tuple(resp),
        switch_events=tuple(switches),
        landmarks=landmarks,
    )


def classify_frames(frames) -> list[str]:
    """Lenient per-frame labels: pad/epad/asr/cot/response/start_cot/end_cot/switch.

    Unlike :func:`parse` this never raises; malformed switch patterns degrade
    to best-effort labels.  Pieces outside the CoT region count as response
    when they carry aligned system speech and as ASR otherwise.
    """
    labels: list[str] = []
    mode = "pre"
    for frame in frames:
        tok = frame.monologue
        if tok is PAD:
            labels.append("pad")
        elif tok is EPAD:
            labels.append("epad")
        elif tok is START_COT:
            if mode == "pre":
                mode = "cot"
            labels.append("start_cot")
        elif tok is END_COT:
            if mode in ("cot", "asr_sub"):
                mode = "post"
            labels.append("end_cot")
        elif tok is SWITCH_ASR:
            if mode == "cot":
                mode = "asr_sub"
            labels.append("switch")
        elif tok is SWITCH_COT:
            if mode == "asr_sub":
                mode = "cot"
            labels.append("switch")
        else:
            if mode == "cot":
                labels.append("cot")
            elif mode == "asr_sub":
                labels.append("asr")
            else:
                labels.append(
                    "response" if isinstance(frame.system_audio, Speech) else "asr"
                )
    return labels


def validate(arr: Arrangement) -> list[str]:
    """Return a list of invariant violations (empty when the arrangement is clean)."""
    violations: list[str] = []
    mono = arr.monologue()
    n = len(mono)

    starts = [t for t, tok in enumerate(mono) if tok is START_COT]
    ends = [t for t, tok in enumerate(mono) if tok is END_COT]
    if len(starts) > 1:
        violations.append(f"duplicate <start_cot> at frames {starts}")
    if len(ends) > 1:
        violations.append(f"duplicate <end_cot> at frames {ends}")
    if starts and ends and starts[0] >= ends[0]:
        violations.append("<start_cot> does not precede <end_cot>")

    for t in range(n - 1):
        tok, nxt = mono[t], mono[t + 1]
        if tok is PAD and not (nxt is PAD or nxt is EPAD):
            violations.append(f"pad run ending at frame {t} lacks a terminal [EPAD]")
        if tok is EPAD and (nxt is PAD or nxt is EPAD):
            violations.append(f"[EPAD] at frame {t} does not terminate a pad run")
    if n and mono[-1] is EPAD:
        violations.append("trailing [EPAD] at sequence end")

    lm = arr.landmarks
    def _check_landmark(name: str, frame: Optional[int], expect: Special) -> None:
        if frame is None:
            return
        if not 0 <= frame < n:
            violations.append(f"{name} landmark {frame} out of range")
        elif mono[frame] is not expect:
            violations.append(f"{name} landmark {frame} does not point at the marker")

    _check_landmark("start_cot", lm.start_cot_frame, START_COT)
    _check_landmark("end_cot", lm.end_cot_frame, END_COT)
    if lm.response_start_frame is not None:
        f = lm.response_start_frame
        if not (0 <= f < n and isinstance(mono[f], Piece)):
            violations.append(f"response_start landmark {f} does not point at a piece")

    for stream in ("user_audio", "system_audio"):
        offsets: dict[int, list[int]] = {}
        for frame in arr.frames:
            sym = getattr(frame, stream)
            if isinstance(sym, Speech):
                offsets.setdefault(sym.segment, []).append(sym.offset)
        for seg, offs in offsets.items():
            if offs != list(range(len(offs))):
                violations.append(f"{stream} segment {seg} offsets are not consecutive")

    try:
        parse(arr)
    except MalformedStream as exc:
        violations.append(f"malformed stream: {exc}")
    return violations


def with_onset(config: ArrangeConfig, onset_word: Optional[int], n_words: int) -> ArrangeConfig:
    """Derive a config whose CoT starts at `onset_word` (None or N => end of question)."""
    if onset_word is None or onset_word >= n_words:
        return replace(config, cot_onset="end_of_question", onset_word=None, interleave=False)
    return replace(
        config,
        cot_onset="at_word",
        onset_word=onset_word,
        interleave=config.asr_mode == "streaming" and config.cot_mode == "text",
    )
