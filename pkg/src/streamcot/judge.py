"""Answer verdicts: a deterministic offline reference judge plus a remote client.

The reference judge normalizes case, punctuation, and small number words,
then checks whether the gold answer appears as a token subsequence of the
transcript.  Real LLM judges can be plugged in through the remote protocol:
request {"question", "gold", "transcript"} -> response {"verdict"}.
"""

from __future__ import annotations

import re
import string
import time
from typing import Optional

import requests

from .errors import JudgeUnavailable, SchemaError

CORRECT = "correct"
INCORRECT = "incorrect"
NO_ANSWER = "no_answer"
VERDICTS = (CORRECT, INCORRECT, NO_ANSWER)

_NUMBER_WORDS = {
    "zero": "0", "one": "1", "two": "2", "three": "3", "four": "4",
    "five": "5", "six": "6", "seven": "7", "eight": "8", "nine": "9",
    "ten": "10", "eleven": "11", "twelve": "12", "thirteen": "13",
    "fourteen": "14", "fifteen": "15", "sixteen": "16", "seventeen": "17",
    "eighteen": "18", "nineteen": "19", "twenty": "20", "thirty": "30",
    "forty": "40", "fifty": "50", "sixty": "60", "seventy": "70",
    "eighty": "80", "ninety": "90", "hundred": "100", "thousand": "1000",
}

_PUNCT = re.compile(f"[{re.escape(string.punctuation)}]")


def normalize_words(text: str) -> list[str]:
    """Lowercase, strip punctuation, and fold number words onto digits."""
    words = _PUNCT.sub(" ", text.lower()).split()
    return [_NUMBER_WORDS.get(w, w) for w in words]


def judge(transcript: str, gold: str) -> str:
    """Reference verdict: gold containment in the normalized transcript."""
    if not transcript.strip():
        return NO_ANSWER
    hyp = normalize_words(transcript)
    ref = normalize_words(gold)
    if not ref:
        return NO_ANSWER
    n = len(ref)
    for i in range(len(hyp) - n + 1):
        if hyp[i : i + n] == ref:
            return CORRECT
    return INCORRECT


class RemoteJudge:
    """HTTP judge client with bounded retries."""

    def __init__(self, url: str, max_attempts: int = 3, backoff_s: float = 0.1, timeout_s: float = 10.0):
        self.url = url
        self.max_attempts = max_attempts
        self.backoff_s = backoff_s
        self.timeout_s = timeout_s

    def __call__(self, transcript: str, gold: str, question: str = "") -> str:
        payload = {"question": question, "gold": gold, "transcript": transcript}
        last_err: Optional[Exception] = None
        for attempt in range(self.max_attempts):
            try:
                resp = requests.post(self.url, json=payload, timeout=self.timeout_s)
                resp.raise_for_status()
                obj = resp.json()
                verdict = obj.get("verdict") if isinstance(obj, dict) else None
                if verdict not in VERDICTS:
                    raise SchemaError(f"bad verdict in judge response: {obj!r}")
                return verdict
            except SchemaError:
                raise
            except (requests.RequestException, ValueError) as exc:
                last_err = exc
                if attempt + 1 < self.max_attempts:
                    time.sleep(self.backoff_s * (2**attempt))
        raise JudgeUnavailable(f"judge failed after {self.max_attempts} attempts: {last_err}")
