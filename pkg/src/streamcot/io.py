"""JSON Lines codecs and atomic file plumbing for the toolkit's wire formats."""

from __future__ import annotations

import json
import os
import tempfile
from typing import Any, Iterable, Iterator, Optional

from .arrange import ArrangeConfig
from .errors import SchemaError
from .tokens import (
    SILENCE,
    AudioFrameSymbol,
    Opaque,
    Speech,
    decode_token,
    encode_token,
)
from .types import AnswerWord, Arrangement, Landmarks, Sample, StreamFrame, Word

FORMAT_VERSION = 1
_HEADER_KEY = "_format"


def header_record(kind: str) -> dict[str, Any]:
    return {_HEADER_KEY: {"kind": kind, "version": FORMAT_VERSION}}


def is_header(obj: dict[str, Any]) -> bool:
    return _HEADER_KEY in obj


def sample_to_dict(sample: Sample) -> dict[str, Any]:
    def word(w: Word) -> dict[str, Any]:
        d: dict[str, Any] = {"w": w.text, "s": w.start, "e": w.end}
        if w.pieces:
            d["p"] = list(w.pieces)
        return d

    return {
        "question": [word(w) for w in sample.question_words],
        "reasoning": list(sample.reasoning_pieces),
        "answer": [
            {"w": w.text, "s": w.start, "e": w.end, "p": list(w.pieces)}
            for w in sample.answer_words
        ],
        "gold": sample.gold_answer,
    }


def sample_from_dict(obj: dict[str, Any]) -> Sample:
    try:
        question = tuple(
            Word(w["w"], int(w["s"]), int(w["e"]), tuple(w.get("p", ())))
            for w in obj["question"]
        )
        answer = tuple(
            AnswerWord(w["w"], int(w["s"]), int(w["e"]), tuple(w["p"]))
            for w in obj["answer"]
        )
        sample = Sample(
            question_words=question,
            reasoning_pieces=tuple(int(p) for p in obj["reasoning"]),
            answer_words=answer,
            gold_answer=str(obj["gold"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed sample record: {exc}") from exc
    sample.validate()
    return sample


def config_to_dict(config: ArrangeConfig) -> dict[str, Any]:
    return {
        "asr_mode": config.asr_mode,
        "lookahead": config.lookahead,
        "cot_mode": config.cot_mode,
        "cot_onset": config.cot_onset,
        "onset_word": config.onset_word,
        "interleave": config.interleave,
        "max_frames": config.max_frames,
    }


def config_from_dict(obj: dict[str, Any]) -> ArrangeConfig:
    try:
        config = ArrangeConfig(
            asr_mode=obj.get("asr_mode", "streaming"),
            lookahead=int(obj.get("lookahead", 6)),
            cot_mode=obj.get("cot_mode", "text"),
            cot_onset=obj.get("cot_onset", "end_of_question"),
            onset_word=obj.get("onset_word"),
            interleave=bool(obj.get("interleave", False)),
            max_frames=int(obj.get("max_frames", 4096)),
        )
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"malformed config: {exc}") from exc
    config.validate()
    return config


def _audio_to_json(sym: AudioFrameSymbol) -> Any:
    if sym is SILENCE:
        return None
    if isinstance(sym, Speech):
        return [sym.segment, sym.offset]
    if isinstance(sym, Opaque):
        return {"c": list(sym.codes)}
    raise SchemaError(f"unknown audio symbol {sym!r}")


def _audio_from_json(obj: Any) -> AudioFrameSymbol:
    if obj is None:
        return SILENCE
    if isinstance(obj, list) and len(obj) == 2:
        return Speech(int(obj[0]), int(obj[1]))
    if isinstance(obj, dict) and "c" in obj:
        return Opaque(tuple(int(c) for c in obj["c"]))
    raise SchemaError(f"malformed audio symbol {obj!r}")


def arrangement_to_dict(arr: Arrangement) -> dict[str, Any]:
    return {
        "frames": [
            {
                "u": _audio_to_json(f.user_audio),
                "a": _audio_to_json(f.system_audio),
                "m": encode_token(f.monologue),
            }
            for f in arr.frames
        ],
        "meta": config_to_dict(arr.meta) if isinstance(arr.meta, ArrangeConfig) else None,
        "landmarks": {
            "question_end_frame": arr.landmarks.question_end_frame,
            "start_cot_frame": arr.landmarks.start_cot_frame,
            "end_cot_frame": arr.landmarks.end_cot_frame,
            "response_start_frame": arr.landmarks.response_start_frame,
        },
    }


def arrangement_from_dict(obj: dict[str, Any]) -> Arrangement:
    try:
        frames = tuple(
            StreamFrame(
                user_audio=_audio_from_json(f["u"]),
                system_audio=_audio_from_json(f["a"]),
                monologue=decode_token(int(f["m"])),
            )
            for f in obj["frames"]
        )
        lm = obj["landmarks"]
        landmarks = Landmarks(
            question_end_frame=int(lm["question_end_frame"]),
            start_cot_frame=lm.get("start_cot_frame"),
            end_cot_frame=lm.get("end_cot_frame"),
            response_start_frame=lm.get("response_start_frame"),
        )
        meta = config_from_dict(obj["meta"]) if obj.get("meta") else None
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed arrangement record: {exc}") from exc
    return Arrangement(frames=frames, meta=meta, landmarks=landmarks)


def read_jsonl(path: str) -> Iterator[tuple[int, dict[str, Any]]]:
    """Yield (1-based line number, record) pairs, skipping header lines."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"line {lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise SchemaError(f"line {lineno}: expected a JSON object")
            if is_header(obj):
                continue
            yield lineno, obj


def write_jsonl(path: str, records: Iterable[dict[str, Any]], kind: Optional[str] = None) -> int:
    """Atomically write records as JSON Lines; returns the data-record count.

    The file is written to a temp sibling and renamed into place so failures
    never leave partial outputs behind.
    """
    directory = os.path.dirname(os.path.abspath(path)) or "."
    count = 0
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".jsonl")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            if kind is not None:
                fh.write(json.dumps(header_record(kind)) + "\n")
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
                count += 1
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return count


def write_text(path: str, text: str) -> None:
    """Atomic whole-file text write (used for CSV outputs)."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".txt")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
