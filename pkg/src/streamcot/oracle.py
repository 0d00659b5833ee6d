"""Per-position predictive distributions for scoring (R, A) continuations.

Two oracles sit behind the same `score` interface: an in-process tabular
bigram model used for deterministic tests and desk-scale pipelines, and a
client for a remote scoring service that returns truncated top-K supports
with the residual mass lumped into one bucket.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import numpy as np
import requests

from .errors import OracleUnavailable, ResidualTarget, SchemaError, TokenNotInVocab

NEG_INF = float("-inf")


@dataclass(frozen=True)
class PositionScore:
    """Predictive distribution at one target position (log domain)."""

    target_token: int
    dist: dict[int, float]
    other_mass: float = NEG_INF

    def logprob_of_target(self) -> float:
        if self.target_token in self.dist:
            return self.dist[self.target_token]
        raise ResidualTarget(f"target token {self.target_token} fell in the residual bucket")


@dataclass(frozen=True)
class PrefixScore:
    positions: tuple[PositionScore, ...]


class Oracle(Protocol):
    def score(self, context: Sequence[int], target: Sequence[int]) -> PrefixScore: ...


def sequence_logprob(ps: PrefixScore) -> float:
    """Total log-probability of the target under the per-position distributions."""
    return sum(p.logprob_of_target() for p in ps.positions)


class ToyTabularLm:
    """First-order tabular language model over a small piece vocabulary.

    `table` has one row per conditioning token plus a final begin-marker row;
    every row is a distribution over `vocab`.  Scoring is bit-deterministic.
    """

    def __init__(self, vocab: Sequence[int], table: np.ndarray):
        vocab = tuple(int(v) for v in vocab)
        table = np.asarray(table, dtype=float)
        if table.shape != (len(vocab) + 1, len(vocab)):
            raise ValueError(
                f"table shape {table.shape} does not match vocab of {len(vocab)} "
                f"(expected {(len(vocab) + 1, len(vocab))})"
            )
        if np.any(table < 0):
            raise ValueError("table entries must be non-negative")
        if np.any(np.abs(table.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("every table row must sum to 1")
        self.vocab = vocab
        self.table = table
        self._index = {v: i for i, v in enumerate(vocab)}

    @property
    def begin_row(self) -> int:
        return len(self.vocab)

    @classmethod
    def uniform(cls, vocab: Sequence[int]) -> "ToyTabularLm":
        v = len(vocab)
        return cls(vocab, np.full((v + 1, v), 1.0 / v))

    @classmethod
    def random(cls, vocab: Sequence[int], rng: np.random.Generator) -> "ToyTabularLm":
        v = len(vocab)
        table = rng.dirichlet(np.ones(v), size=v + 1)
        return cls(vocab, table)

    def _row(self, prev: Optional[int]) -> np.ndarray:
        if prev is None:
            return self.table[self.begin_row]
        if prev not in self._index:
            raise TokenNotInVocab(f"token {prev} not in toy vocabulary")
        return self.table[self._index[prev]]

    def score(self, context: Sequence[int], target: Sequence[int]) -> PrefixScore:
        if not target:
            raise ValueError("target must be non-empty")
        prev = context[-1] if context else None
        positions = []
        for tok in target:
            row = self._row(prev)
            with np.errstate(divide="ignore"):
                logs = np.log(row)
            dist = {v: float(logs[j]) for j, v in enumerate(self.vocab)}
            positions.append(PositionScore(target_token=int(tok), dist=dist))
            prev = int(tok)
        return PrefixScore(positions=tuple(positions))


class RemoteOracle:
    """Client for the HTTP scoring protocol.

    Request: {"context": [int], "target": [int], "top_k": int}
    Response: {"positions": [{"token": int, "dist": {"<id>": logprob}, "other": logprob}]}
    """

    def __init__(
        self,
        url: Optional[str] = None,
        top_k: int = 32,
        max_attempts: int = 3,
        backoff_s: float = 0.1,
        timeout_s: float = 10.0,
    ):
        self.url = url or os.environ.get("ORACLE_URL")
        if not self.url:
            raise OracleUnavailable("no oracle URL configured (set ORACLE_URL)")
        self.top_k = top_k
        self.max_attempts = max_attempts
        self.backoff_s = backoff_s
        self.timeout_s = timeout_s

    def score(self, context: Sequence[int], target: Sequence[int]) -> PrefixScore:
        if not target:
            raise ValueError("target must be non-empty")
        payload = {
            "context": [int(t) for t in context],
            "target": [int(t) for t in target],
            "top_k": self.top_k,
        }
        last_err: Optional[Exception] = None
        for attempt in range(self.max_attempts):
            try:
                resp = requests.post(self.url, json=payload, timeout=self.timeout_s)
                resp.raise_for_status()
                return _parse_response(resp.json(), len(target))
            except (requests.RequestException, ValueError) as exc:
                last_err = exc
                if attempt + 1 < self.max_attempts:
                    time.sleep(self.backoff_s * (2**attempt))
        raise OracleUnavailable(f"scoring service failed after {self.max_attempts} attempts: {last_err}")


def _parse_response(obj: object, n_target: int) -> PrefixScore:
    if not isinstance(obj, dict) or "positions" not in obj:
        raise SchemaError("scoring response missing 'positions'")
    raw = obj["positions"]
    if not isinstance(raw, list) or len(raw) != n_target:
        raise SchemaError(f"expected {n_target} positions, got {raw!r}")
    positions = []
    for entry in raw:
        try:
            dist = {int(k): float(v) for k, v in entry["dist"].items()}
            other = float(entry.get("other", NEG_INF))
            positions.append(
                PositionScore(target_token=int(entry["token"]), dist=dist, other_mass=other)
            )
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise SchemaError(f"malformed position entry {entry!r}: {exc}") from exc
    ps = PrefixScore(positions=tuple(positions))
    for pos in ps.positions:
        total = math.fsum(math.exp(lp) for lp in pos.dist.values())
        if pos.other_mass > NEG_INF:
            total += math.exp(pos.other_mass)
        if abs(total - 1.0) > 1e-9:
            raise SchemaError(f"position distribution sums to {total}, not 1")
    return ps
