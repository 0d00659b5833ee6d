"""Frame-synchronous duplex decoding with force-decoding hooks and metrics.

A policy emits one monologue token per frame while the user's audio plays
into the first stream.  Force-decoding can pin padding during the streaming
ASR look-ahead window and inject the CoT opener at a chosen frame.  Metrics
are token-count based: latency is the number of frames between the end of
the user question and the first response token.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .arrange import ArrangeConfig, arrange, classify_frames
from .errors import (
    EmptyReference,
    MissingStartCot,
    NoResponse,
    TokenNotInVocab,
)
from .judge import NO_ANSWER, judge
from .qc import completeness_curve, shift_sample, ws_baseline
from .tokens import (
    END_COT,
    PAD,
    SILENCE,
    START_COT,
    MonologueToken,
    Piece,
    Speech,
    is_padding,
)
from .types import Arrangement, Landmarks, Sample, StreamFrame


@dataclass(frozen=True)
class ForceDecodeConfig:
    """Inference-time overrides applied on top of the policy."""

    lookahead: int = 6
    onset_frame: Optional[int] = None
    force_cot_at_end: bool = False
    budget: int = 2048


@dataclass(frozen=True)
class MetricSet:
    latency_tokens: Optional[int]
    cot_length: int
    wer: float
    correctness: str
    start_cot_gap: Optional[int] = None


@dataclass(frozen=True)
class SimRun:
    """A decoded run: the reconstructed arrangement plus derived metrics."""

    arrangement: Arrangement
    forced_frames: tuple[tuple[int, MonologueToken], ...]
    metrics: MetricSet
    asr_pieces: tuple[int, ...]
    cot_pieces: tuple[int, ...]
    response_pieces: tuple[int, ...]
    transcript: str = ""
    budget_exceeded: bool = False


class ScriptedReplay:
    """Replays a fixed arrangement's monologue (and its system audio)."""

    open_ended = False

    def __init__(self, arrangement: Arrangement):
        self.arrangement = arrangement

    def reset(self) -> None:
        pass

    def next_token(self, frames: list[StreamFrame], t: int, rng: np.random.Generator):
        if t >= len(self.arrangement.frames):
            return None
        return self.arrangement.frames[t].monologue

    def system_audio(self, t: int):
        if t >= len(self.arrangement.frames):
            return None
        return self.arrangement.frames[t].system_audio


class ToyStochastic:
    """Tabular next-token policy with seeded sampling.

    `vocab` lists monologue tokens; `probs[i, j]` is the probability of
    emitting vocab[j] after vocab[i].  The previous token of the first frame
    is [PAD].
    """

    open_ended = True

    def __init__(self, vocab: Sequence[MonologueToken], probs: np.ndarray):
        probs = np.asarray(probs, dtype=float)
        if probs.shape != (len(vocab), len(vocab)):
            raise ValueError("probs must be square over the vocab")
        if np.any(np.abs(probs.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("probability rows must sum to 1")
        self.vocab = list(vocab)
        self.probs = probs
        self._index = {tok: i for i, tok in enumerate(self.vocab)}

    def reset(self) -> None:
        pass

    def next_token(self, frames: list[StreamFrame], t: int, rng: np.random.Generator):
        prev = frames[-1].monologue if frames else PAD
        if prev not in self._index:
            raise TokenNotInVocab(f"previous token {prev!r} not in policy vocabulary")
        j = int(rng.choice(len(self.vocab), p=self.probs[self._index[prev]]))
        return self.vocab[j]


class NoisyReplay:
    """A scripted policy with seeded mutations in the CoT and response regions.

    Used to generate contrastive candidates for rejection sampling: the CoT
    may stretch or shrink, and response pieces may be corrupted.
    """

    open_ended = False

    def __init__(
        self,
        arrangement: Arrangement,
        piece_vocab: Sequence[int],
        p_extend: float = 0.1,
        p_skip: float = 0.1,
        p_corrupt: float = 0.05,
    ):
        self.arrangement = arrangement
        self.piece_vocab = list(piece_vocab)
        self.p_extend = p_extend
        self.p_skip = p_skip
        self.p_corrupt = p_corrupt
        self._cursor = 0
        self._region = "pre"

    def reset(self) -> None:
        self._cursor = 0
        self._region = "pre"

    def next_token(self, frames: list[StreamFrame], t: int, rng: np.random.Generator):
        script = self.arrangement.frames
        if self._cursor >= len(script):
            return None
        tok = script[self._cursor].monologue
        if tok is START_COT:
            self._region = "cot"
        elif tok is END_COT:
            self._region = "post"
        if self._region == "cot" and isinstance(tok, Piece):
            r = rng.random()
            if r < self.p_extend:
                # emit an extra reasoning piece without consuming the script
                return Piece(int(rng.choice(self.piece_vocab)))
            if r < self.p_extend + self.p_skip:
                self._cursor += 2
                return tok
        if self._region == "post" and isinstance(tok, Piece):
            if rng.random() < self.p_corrupt:
                self._cursor += 1
                return Piece(int(rng.choice(self.piece_vocab)))
        self._cursor += 1
        return tok

    def system_audio(self, t: int):
        return None


def fitted_policy(arr: Arrangement, smoothing: float = 0.05) -> ToyStochastic:
    """Stochastic policy with bigram transition probabilities counted from an
    arrangement's monologue (Laplace-smoothed, [PAD] always in vocabulary)."""
    from .tokens import encode_token

    tokens = list(arr.monologue())
    vocab = sorted({PAD, *tokens}, key=encode_token)
    index = {tok: i for i, tok in enumerate(vocab)}
    counts = np.full((len(vocab), len(vocab)), smoothing)
    prev = PAD
    for tok in tokens:
        counts[index[prev], index[tok]] += 1.0
        prev = tok
    return ToyStochastic(vocab, counts / counts.sum(axis=1, keepdims=True))


def build_lexicon(sample: Sample) -> dict[int, str]:
    """Map piece ids back to word text (first piece carries the word)."""
    lex: dict[int, str] = {}
    for w in list(sample.question_words) + list(sample.answer_words):
        pieces = w.resolved_pieces() if hasattr(w, "resolved_pieces") else w.pieces
        for i, p in enumerate(pieces):
            lex.setdefault(p, w.text if i == 0 else "")
    return lex


def pieces_to_text(pieces: Sequence[int], lexicon: Optional[dict[int, str]]) -> str:
    if lexicon is None:
        return " ".join(str(p) for p in pieces)
    words = [lexicon.get(p, str(p)) for p in pieces]
    return " ".join(w for w in words if w)


def extract_regions(
    frames: Sequence[StreamFrame],
) -> tuple[list[tuple[int, int]], list[tuple[int, int]], list[tuple[int, int]], Optional[int], Optional[int]]:
    """Lenient ASR/CoT/response split of a frame sequence.

    Returns (asr, cot, response) piece placements plus start/end CoT frames.
    """
    labels = classify_frames(frames)
    asr: list[tuple[int, int]] = []
    cot: list[tuple[int, int]] = []
    resp: list[tuple[int, int]] = []
    start_f: Optional[int] = None
    end_f: Optional[int] = None
    for t, (frame, label) in enumerate(zip(frames, labels)):
        tok = frame.monologue
        if label == "start_cot" and start_f is None:
            start_f = t
        elif label == "end_cot" and end_f is None:
            end_f = t
        elif isinstance(tok, Piece):
            if label == "cot":
                cot.append((tok.piece_id, t))
            elif label == "asr":
                asr.append((tok.piece_id, t))
            elif label == "response":
                resp.append((tok.piece_id, t))
    return asr, cot, resp, start_f, end_f


def run(
    sample: Sample,
    policy,
    hooks: ForceDecodeConfig,
    seed: int = 0,
    lexicon: Optional[dict[int, str]] = None,
    judge_fn: Callable[[str, str], str] = judge,
) -> SimRun:
    """Advance frame by frame, applying force-decoding, and compute metrics."""
    sample.validate()
    policy.reset()
    rng = np.random.default_rng(seed)
    q_start = sample.question_words[0].start
    q_end = sample.question_end_frame
    user_speech: dict[int, Speech] = {}
    for seg, w in enumerate(sample.question_words):
        for off in range(w.end - w.start + 1):
            user_speech[w.start + off] = Speech(seg, off)
    if lexicon is None:
        lexicon = build_lexicon(sample)

    frames: list[StreamFrame] = []
    forced: list[tuple[int, MonologueToken]] = []
    start_seen = False
    end_seen = False
    response_count = 0
    budget_exceeded = False
    open_ended = bool(getattr(policy, "open_ended", False))

    t = 0
    while True:
        if t >= hooks.budget:
            budget_exceeded = response_count == 0
            break
        candidate = policy.next_token(frames, t, rng)
        if candidate is None:
            break
        tok: MonologueToken
        if q_start <= t < q_start + hooks.lookahead and not start_seen:
            # look-ahead window: only padding may pass
            tok = candidate if is_padding(candidate) else PAD
            forced.append((t, tok))
        elif hooks.onset_frame is not None and t == hooks.onset_frame and not start_seen:
            tok = START_COT
            forced.append((t, tok))
        elif hooks.force_cot_at_end and t == q_end + 1 and not start_seen:
            tok = START_COT
            forced.append((t, tok))
        else:
            tok = candidate
        if tok is START_COT:
            start_seen = True
        elif tok is END_COT and start_seen:
            end_seen = True
        if open_ended and end_seen and response_count > 0 and is_padding(tok):
            break
        sys_audio = None
        provider = getattr(policy, "system_audio", None)
        if provider is not None:
            sys_audio = provider(t)
        if sys_audio is None:
            if end_seen and isinstance(tok, Piece):
                sys_audio = Speech(0, response_count)
            else:
                sys_audio = SILENCE
        if end_seen and isinstance(tok, Piece):
            response_count += 1
        frames.append(
            StreamFrame(
                user_audio=user_speech.get(t, SILENCE),
                system_audio=sys_audio,
                monologue=tok,
            )
        )
        t += 1

    asr, cot, resp, start_f, end_f = extract_regions(frames)
    response_start = resp[0][1] if resp else None
    landmarks = Landmarks(
        question_end_frame=q_end,
        start_cot_frame=start_f,
        end_cot_frame=end_f,
        response_start_frame=response_start,
    )
    arrangement = Arrangement(frames=tuple(frames), meta=None, landmarks=landmarks)

    transcript = pieces_to_text([p for p, _ in resp], lexicon)
    asr_words = pieces_to_text([p for p, _ in asr], lexicon).split()
    ref_words = [w.text for w in sample.question_words]
    try:
        asr_wer = wer(asr_words, ref_words)
    except EmptyReference:
        asr_wer = 0.0
    if response_start is None:
        verdict = NO_ANSWER
        latency_tokens = None
    else:
        verdict = judge_fn(transcript, sample.gold_answer)
        latency_tokens = response_start - q_end
    metrics = MetricSet(
        latency_tokens=latency_tokens,
        cot_length=len(cot),
        wer=asr_wer,
        correctness=verdict,
    )
    return SimRun(
        arrangement=arrangement,
        forced_frames=tuple(forced),
        metrics=metrics,
        asr_pieces=tuple(p for p, _ in asr),
        cot_pieces=tuple(p for p, _ in cot),
        response_pieces=tuple(p for p, _ in resp),
        transcript=transcript,
        budget_exceeded=budget_exceeded,
    )


def latency(arr: Arrangement) -> int:
    """Token count between question end and first response token."""
    if arr.landmarks.response_start_frame is None:
        raise NoResponse("arrangement has no response")
    return arr.landmarks.response_start_frame - arr.landmarks.question_end_frame


def start_cot_gap(pred: Arrangement, gt: Arrangement) -> int:
    """Predicted minus ground-truth CoT-opener frame; negative means earlier."""
    if pred.landmarks.start_cot_frame is None or gt.landmarks.start_cot_frame is None:
        raise MissingStartCot("both arrangements must contain <start_cot>")
    return pred.landmarks.start_cot_frame - gt.landmarks.start_cot_frame


def _norm_word(w: str) -> str:
    return "".join(c for c in w.lower() if c.isalnum())


def wer(hyp: Sequence[str], ref: Sequence[str]) -> float:
    """Levenshtein word error rate (unit costs) over normalized words."""
    ref_n = [_norm_word(w) for w in ref]
    hyp_n = [_norm_word(w) for w in hyp]
    if not ref_n:
        raise EmptyReference("reference word list is empty")
    prev = list(range(len(hyp_n) + 1))
    for i in range(1, len(ref_n) + 1):
        cur = [i] + [0] * len(hyp_n)
        for j in range(1, len(hyp_n) + 1):
            sub = prev[j - 1] + (0 if ref_n[i - 1] == hyp_n[j - 1] else 1)
            cur[j] = min(sub, prev[j] + 1, cur[j - 1] + 1)
        prev = cur
    return prev[-1] / len(ref_n)


@dataclass(frozen=True)
class SweepRow:
    method: str
    param: float
    mean_latency_tokens: float
    accuracy: float
    mean_cot_len: float
    n: int


def _summarize(runs: list[SimRun], method: str, param: float) -> SweepRow:
    latencies = [r.metrics.latency_tokens for r in runs if r.metrics.latency_tokens is not None]
    correct = sum(1 for r in runs if r.metrics.correctness == "correct")
    return SweepRow(
        method=method,
        param=param,
        mean_latency_tokens=statistics.fmean(latencies) if latencies else float("nan"),
        accuracy=correct / len(runs) if runs else float("nan"),
        mean_cot_len=statistics.fmean(r.metrics.cot_length for r in runs) if runs else float("nan"),
        n=len(runs),
    )


def sweep(
    samples: Sequence[Sample],
    oracle,
    thetas: Sequence[float],
    ws_counts: Sequence[int] = (),
    lookahead: int = 6,
    kl_mode: str = "positionwise",
    judge_fn: Callable[[str, str], str] = judge,
    budget: int = 2048,
) -> list[SweepRow]:
    """Accuracy/latency/CoT-length table over completeness thresholds and
    fixed word-shift baselines, using scripted replay of the shifted data."""
    if not thetas:
        raise ValueError("thetas must be non-empty")

    def _run_config(sample: Sample, config: ArrangeConfig) -> SimRun:
        arr = arrange(sample, config)
        hooks = ForceDecodeConfig(
            lookahead=config.lookahead if config.asr_mode == "streaming" else 0,
            budget=max(budget, len(arr) + 1),
        )
        return run(sample, ScriptedReplay(arr), hooks, judge_fn=judge_fn)

    rows: list[SweepRow] = []
    for theta in thetas:
        runs = []
        for sample in samples:
            curve = completeness_curve(sample, oracle, theta=theta, kl_mode=kl_mode)
            config = shift_sample(sample, curve, lookahead=lookahead)
            runs.append(_run_config(sample, config))
        rows.append(_summarize(runs, "qc", theta))
    for n_shift in ws_counts:
        runs = []
        for sample in samples:
            config = ws_baseline(sample, n_shift, lookahead=lookahead)
            runs.append(_run_config(sample, config))
        rows.append(_summarize(runs, "ws", float(n_shift)))
    return rows


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    lines = ["method,param,mean_latency_tokens,accuracy,mean_cot_len,n"]
    for r in rows:
        lines.append(
            f"{r.method},{r.param:g},{r.mean_latency_tokens:.6g},"
            f"{r.accuracy:.6g},{r.mean_cot_len:.6g},{r.n}"
        )
    return "\n".join(lines) + "\n"
