"""Masked sequence scoring, length-normalized preference loss, and a
desk-scale trainer over a tabular softmax policy.

Sequence log-probabilities are taken on the text monologue only, with every
streaming-ASR frame (and the mode-switch frames that bracket ASR excursions)
excluded from the mask.  The preference loss is -log sigmoid of the scaled
reference-relative log-ratio margin, optionally dividing each sequence's
log-ratio by its own masked length, plus an NLL term on the chosen sequence.
Gradients for the tabular policy are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .arrange import classify_frames
from .errors import DivergenceError, EmptyMask, TokenNotInVocab
from .tokens import PAD, MonologueToken, encode_token
from .types import Arrangement

_CONTENT_LABELS = frozenset({"cot", "response", "start_cot", "end_cot"})
_PADDING_LABELS = frozenset({"pad", "epad"})


@dataclass(frozen=True)
class ScoringMask:
    """Frame indices of an arrangement that contribute to sequence scoring."""

    frames: tuple[int, ...]
    include_padding: bool = False

    @classmethod
    def from_arrangement(cls, arr: Arrangement, include_padding: bool = False) -> "ScoringMask":
        labels = classify_frames(arr.frames)
        keep = _CONTENT_LABELS | (_PADDING_LABELS if include_padding else frozenset())
        frames = tuple(t for t, label in enumerate(labels) if label in keep)
        return cls(frames=frames, include_padding=include_padding)


class TabularPolicy:
    """Bigram softmax policy over an explicit monologue-token vocabulary."""

    def __init__(self, vocab: Sequence[MonologueToken], logits: np.ndarray, temperature: float = 1.0):
        if temperature <= 0:
            raise ValueError("temperature must be positive")
        logits = np.asarray(logits, dtype=float)
        if logits.shape != (len(vocab), len(vocab)):
            raise ValueError(f"logits shape {logits.shape} does not match vocab size {len(vocab)}")
        self.vocab = list(vocab)
        self.logits = logits
        self.temperature = temperature
        self._index = {encode_token(tok): i for i, tok in enumerate(self.vocab)}
        if len(self._index) != len(self.vocab):
            raise ValueError("vocab contains duplicate tokens")

    @classmethod
    def uniform(cls, vocab: Sequence[MonologueToken]) -> "TabularPolicy":
        return cls(vocab, np.zeros((len(vocab), len(vocab))))

    @classmethod
    def random(cls, vocab: Sequence[MonologueToken], rng: np.random.Generator, scale: float = 1.0) -> "TabularPolicy":
        return cls(vocab, rng.normal(scale=scale, size=(len(vocab), len(vocab))))

    def clone(self) -> "TabularPolicy":
        return TabularPolicy(self.vocab, self.logits.copy(), self.temperature)

    def index_of(self, tok: MonologueToken) -> int:
        key = encode_token(tok)
        if key not in self._index:
            raise TokenNotInVocab(f"token {tok!r} not in policy vocabulary")
        return self._index[key]

    def log_probs(self) -> np.ndarray:
        """Row-wise log-softmax of the (temperature-scaled) logits."""
        z = self.logits / self.temperature
        z = z - z.max(axis=1, keepdims=True)
        return z - np.log(np.exp(z).sum(axis=1, keepdims=True))

    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs())

    def transition_probs(self) -> np.ndarray:
        """Alias used by the simulator's stochastic policy."""
        return self.probs()


def observed_vocab(arrangements: Iterable[Arrangement]) -> list[MonologueToken]:
    """All monologue tokens appearing in the arrangements (plus [PAD]), sorted by id."""
    seen = {encode_token(PAD): PAD}
    for arr in arrangements:
        for frame in arr.frames:
            seen[encode_token(frame.monologue)] = frame.monologue
    return [seen[k] for k in sorted(seen)]


@dataclass(frozen=True)
class _SeqStats:
    """Sufficient statistics of one masked sequence for the bigram policy."""

    counts: np.ndarray  # (V, V) transition counts over masked frames
    row_totals: np.ndarray  # (V,) counts per conditioning token
    length: int


def _seq_stats(policy: TabularPolicy, arr: Arrangement, mask: ScoringMask) -> _SeqStats:
    if not mask.frames:
        raise EmptyMask("scoring mask selects no frames")
    v = len(policy.vocab)
    counts = np.zeros((v, v))
    tokens = arr.monologue()
    for t in mask.frames:
        prev = tokens[t - 1] if t > 0 else PAD
        counts[policy.index_of(prev), policy.index_of(tokens[t])] += 1.0
    return _SeqStats(counts=counts, row_totals=counts.sum(axis=1), length=len(mask.frames))


def _stats_logprob(stats: _SeqStats, log_rows: np.ndarray) -> float:
    return float((stats.counts * log_rows).sum())


def _stats_grad(stats: _SeqStats, policy: TabularPolicy) -> np.ndarray:
    """Exact gradient of the masked log-probability w.r.t. the policy logits."""
    return (stats.counts - stats.row_totals[:, None] * policy.probs()) / policy.temperature


def masked_logprob(
    policy: TabularPolicy, arr: Arrangement, mask: Optional[ScoringMask] = None
) -> tuple[float, int]:
    """Sum of log pi(token_t | token_{t-1}) over masked frames, plus the count."""
    if mask is None:
        mask = ScoringMask.from_arrangement(arr)
    stats = _seq_stats(policy, arr, mask)
    return _stats_logprob(stats, policy.log_probs()), stats.length


def _check_shared_vocab(policy: TabularPolicy, reference: TabularPolicy) -> None:
    if [encode_token(t) for t in policy.vocab] != [encode_token(t) for t in reference.vocab]:
        raise ValueError("policy and reference must share the same vocabulary")


def _pair_arrangements(pair) -> tuple[Arrangement, Arrangement]:
    chosen = pair.chosen.arrangement if hasattr(pair.chosen, "arrangement") else pair.chosen
    rejected = pair.rejected.arrangement if hasattr(pair.rejected, "arrangement") else pair.rejected
    return chosen, rejected


@dataclass(frozen=True)
class DpoBatchResult:
    loss: float
    per_pair_margin: tuple[float, ...]
    reward_accuracy: float
    gradient: np.ndarray


def _softplus(x: float) -> float:
    # -log sigmoid(-x) without overflow
    return float(np.logaddexp(0.0, x))


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return float(e / (1.0 + e))


def dpo_loss(
    policy: TabularPolicy,
    reference: TabularPolicy,
    pair,
    beta: float = 0.1,
    length_normalized: bool = True,
    include_padding: bool = False,
) -> float:
    """Preference loss for one pair: -log sigmoid(beta * (r_w - r_l))."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    result = total_loss(
        policy, reference, [pair], beta=beta, lam=0.0,
        length_normalized=length_normalized, include_padding=include_padding,
    )
    return result.loss


def total_loss(
    policy: TabularPolicy,
    reference: TabularPolicy,
    pairs: Sequence[object],
    beta: float = 0.1,
    lam: float = 0.1,
    length_normalized: bool = True,
    include_padding: bool = False,
) -> DpoBatchResult:
    """Mean preference loss plus lam * mean NLL of the chosen sequences,
    with the exact logits gradient."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    if lam < 0:
        raise ValueError("lam must be non-negative")
    if not pairs:
        raise ValueError("batch must be non-empty")
    _check_shared_vocab(policy, reference)
    prepared = []
    for pair in pairs:
        chosen, rejected = _pair_arrangements(pair)
        mask_w = ScoringMask.from_arrangement(chosen, include_padding)
        mask_l = ScoringMask.from_arrangement(rejected, include_padding)
        prepared.append(
            (_seq_stats(policy, chosen, mask_w), _seq_stats(policy, rejected, mask_l))
        )
    return _loss_from_stats(policy, reference, prepared, beta, lam, length_normalized)


def _loss_from_stats(
    policy: TabularPolicy,
    reference: TabularPolicy,
    prepared: Sequence[tuple[_SeqStats, _SeqStats]],
    beta: float,
    lam: float,
    length_normalized: bool,
) -> DpoBatchResult:
    pol_rows = policy.log_probs()
    ref_rows = reference.log_probs()
    n = len(prepared)
    grad = np.zeros_like(policy.logits)
    losses = []
    margins = []
    wins = 0
    for stats_w, stats_l in prepared:
        norm_w = stats_w.length if length_normalized else 1
        norm_l = stats_l.length if length_normalized else 1
        r_w = (_stats_logprob(stats_w, pol_rows) - _stats_logprob(stats_w, ref_rows)) / norm_w
        r_l = (_stats_logprob(stats_l, pol_rows) - _stats_logprob(stats_l, ref_rows)) / norm_l
        margin = beta * (r_w - r_l)
        losses.append(_softplus(-margin))
        margins.append(margin)
        if margin > 0:
            wins += 1
        # d loss / d margin = -sigmoid(-margin)
        coeff = -beta * _sigmoid(-margin)
        grad += coeff * (_stats_grad(stats_w, policy) / norm_w - _stats_grad(stats_l, policy) / norm_l)
        if lam > 0:
            nll_grad = -_stats_grad(stats_w, policy) / norm_w
            grad += lam * nll_grad
    loss = float(np.mean(losses))
    if lam > 0:
        nlls = []
        for stats_w, _ in prepared:
            norm_w = stats_w.length if length_normalized else 1
            nlls.append(-_stats_logprob(stats_w, pol_rows) / norm_w)
        loss += lam * float(np.mean(nlls))
    grad /= n
    return DpoBatchResult(
        loss=loss,
        per_pair_margin=tuple(margins),
        reward_accuracy=wins / n,
        gradient=grad,
    )


@dataclass(frozen=True)
class TraceStep:
    step: int
    loss: float
    reward_accuracy: float
    mean_margin: float


def train(
    policy: TabularPolicy,
    reference: TabularPolicy,
    pairs: Sequence[object],
    beta: float = 0.1,
    lam: float = 0.1,
    lr: float = 0.1,
    steps: int = 500,
    length_normalized: bool = True,
    include_padding: bool = False,
) -> list[TraceStep]:
    """Plain gradient descent on the batch loss; the reference stays frozen.

    Returns one trace entry per step, evaluated before that step's update.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    _check_shared_vocab(policy, reference)
    prepared = []
    for pair in pairs:
        chosen, rejected = _pair_arrangements(pair)
        mask_w = ScoringMask.from_arrangement(chosen, include_padding)
        mask_l = ScoringMask.from_arrangement(rejected, include_padding)
        prepared.append(
            (_seq_stats(policy, chosen, mask_w), _seq_stats(policy, rejected, mask_l))
        )
    trace: list[TraceStep] = []
    for step in range(steps):
        result = _loss_from_stats(policy, reference, prepared, beta, lam, length_normalized)
        if not np.isfinite(result.loss):
            raise DivergenceError(f"loss became non-finite at step {step}")
        trace.append(
            TraceStep(
                step=step,
                loss=result.loss,
                reward_accuracy=result.reward_accuracy,
                mean_margin=float(np.mean(result.per_pair_margin)),
            )
        )
        policy.logits = policy.logits - lr * result.gradient
    return trace


def trace_csv(trace: Sequence[TraceStep]) -> str:
    lines = ["step,loss,reward_accuracy,mean_margin"]
    for t in trace:
        lines.append(f"{t.step},{t.loss:.8g},{t.reward_accuracy:.6g},{t.mean_margin:.8g}")
    return "\n".join(lines) + "\n"
