"""Question-completeness curves and reasoning-onset selection.

The curve value at word index p is one minus the KL divergence between the
full-question and p-word-prefix conditionals of the fixed reasoning+answer
continuation, normalized by the no-question divergence.  The selected onset
is the smallest p whose value reaches the threshold.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .arrange import ArrangeConfig
from .errors import EmptyTarget, SupportMismatch
from .oracle import Oracle, PrefixScore, sequence_logprob
from .tokens import DEFAULT_LOOKAHEAD
from .types import Sample

DEGENERATE_EPS = 1e-12
KL_MODES = ("positionwise", "bernoulli")


@dataclass(frozen=True)
class QcCurve:
    """Completeness values for p = 0..N plus the selected onset index."""

    zeta: tuple[float, ...]
    kl_to_full: tuple[float, ...]
    theta: float
    inflection: int

    @property
    def n_words(self) -> int:
        return len(self.zeta) - 1


def _position_kl(p_dist: dict[int, float], q_dist: dict[int, float]) -> float:
    """KL between two truncated distributions, residual mass lumped per side.

    Explicit terms are taken on the intersection of supports; everything else
    on each side (declared residual plus off-support tokens) forms that side's
    "other" bucket.
    """
    common = p_dist.keys() & q_dist.keys()
    acc = 0.0
    p_sum = 0.0
    q_sum = 0.0
    for v in common:
        lp, lq = p_dist[v], q_dist[v]
        p = math.exp(lp)
        q = math.exp(lq)
        p_sum += p
        q_sum += q
        if p > 0.0:
            if q <= 0.0:
                return math.inf
            acc += p * (lp - lq)
    p_res = max(0.0, 1.0 - p_sum)
    q_res = max(0.0, 1.0 - q_sum)
    if p_res > DEGENERATE_EPS:
        if q_res <= 0.0:
            return math.inf
        acc += p_res * (math.log(p_res) - math.log(q_res))
    return max(0.0, acc)


def kl_positionwise(full: PrefixScore, partial: PrefixScore) -> float:
    """Sum of per-position KL(full || partial) over a shared target sequence."""
    if len(full.positions) != len(partial.positions):
        raise SupportMismatch(
            f"target length mismatch: {len(full.positions)} vs {len(partial.positions)}"
        )
    total = 0.0
    for fp, pp in zip(full.positions, partial.positions):
        total += _position_kl(fp.dist, pp.dist)
    return total


def _bernoulli_kl(p: float, q: float) -> float:
    """KL(Bernoulli(p) || Bernoulli(q)); 0*log(0) terms vanish."""
    out = 0.0
    if p > 0.0:
        if q <= 0.0:
            return math.inf
        out += p * math.log(p / q)
    if p < 1.0:
        if q >= 1.0:
            return math.inf
        out += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return max(0.0, out)


def select_inflection(zeta: tuple[float, ...], theta: float) -> int:
    """Smallest word index p >= 1 whose completeness reaches theta."""
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must be in (0, 1]")
    n = len(zeta) - 1
    for p in range(1, n + 1):
        if zeta[p] >= theta:
            return p
    return n


def completeness_curve(
    sample: Sample, oracle: Oracle, theta: float = 0.95, kl_mode: str = "positionwise"
) -> QcCurve:
    """Score every question prefix against the full question and build the curve."""
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must be in (0, 1]")
    if kl_mode not in KL_MODES:
        raise ValueError(f"unknown kl_mode {kl_mode!r}")
    target = tuple(sample.reasoning_pieces) + sample.answer_pieces()
    if not target:
        raise EmptyTarget("sample has neither reasoning nor answer pieces")
    n = sample.n_words
    scores = [oracle.score(sample.question_pieces(p), target) for p in range(n + 1)]
    full = scores[n]
    kl: list[float] = []
    for p in range(n + 1):
        if p == n:
            kl.append(0.0)
        elif kl_mode == "positionwise":
            kl.append(kl_positionwise(full, scores[p]))
        else:
            q_full = math.exp(sequence_logprob(full))
            q_part = math.exp(sequence_logprob(scores[p]))
            kl.append(_bernoulli_kl(q_full, q_part))
    if kl[0] < DEGENERATE_EPS:
        # The question carries no information for this oracle; treat the
        # sample as complete from the first word.
        zeta = tuple(1.0 for _ in range(n + 1))
        return QcCurve(zeta=zeta, kl_to_full=tuple(kl), theta=theta, inflection=1)
    zeta = tuple(1.0 - kl[p] / kl[0] for p in range(n + 1))
    zeta = (0.0,) + zeta[1:n] + (1.0,)
    return QcCurve(
        zeta=zeta,
        kl_to_full=tuple(kl),
        theta=theta,
        inflection=select_inflection(zeta, theta),
    )


def shift_sample(sample: Sample, curve: QcCurve, lookahead: int = DEFAULT_LOOKAHEAD) -> ArrangeConfig:
    """Arrangement config that starts the CoT at the curve's selected onset."""
    n = sample.n_words
    if not 1 <= curve.inflection <= n:
        raise ValueError(f"inflection {curve.inflection} outside [1, {n}]")
    if curve.inflection < n:
        return ArrangeConfig(
            asr_mode="streaming",
            lookahead=lookahead,
            cot_mode="text",
            cot_onset="at_word",
            onset_word=curve.inflection,
            interleave=True,
        )
    return ArrangeConfig(
        asr_mode="streaming", lookahead=lookahead, cot_mode="text",
        cot_onset="end_of_question",
    )


def ws_baseline(sample: Sample, n_words: int, lookahead: int = DEFAULT_LOOKAHEAD) -> ArrangeConfig:
    """Fixed word-shift baseline: start the CoT n_words before the question ends."""
    if n_words < 0:
        raise ValueError("n_words must be >= 0")
    n = sample.n_words
    p = max(1, n - n_words)
    if n_words == 0 or p >= n:
        return ArrangeConfig(
            asr_mode="streaming", lookahead=lookahead, cot_mode="text",
            cot_onset="end_of_question",
        )
    return ArrangeConfig(
        asr_mode="streaming",
        lookahead=lookahead,
        cot_mode="text",
        cot_onset="at_word",
        onset_word=p,
        interleave=True,
    )


def completeness_batch(
    samples: list[Sample],
    oracle: Oracle,
    theta: float = 0.95,
    kl_mode: str = "positionwise",
    jobs: int = 1,
) -> list[QcCurve]:
    """Curve per sample, order-stable by input index."""
    if jobs <= 1:
        return [completeness_curve(s, oracle, theta, kl_mode) for s in samples]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda s: completeness_curve(s, oracle, theta, kl_mode), samples))
