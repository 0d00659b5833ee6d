"""Independent reference computations used as test oracles.

These deliberately avoid the library's own code paths: the completeness
curve is rebuilt from joint-product enumeration over the explicit toy
tables, and word error rate from a straightforward full-matrix edit
distance.
"""

import math


def bf_predictive_dists(lm, context, target):
    """Per-position next-token distributions via joint-product expansion.

    For position j, P(v | context, target_<j) is computed by enumerating the
    joint probability of (target_<j, v) as an explicit product of table rows
    and normalizing, rather than reading the conditional row directly.
    """
    idx = {v: i for i, v in enumerate(lm.vocab)}

    def row(prev):
        return lm.table[-1] if prev is None else lm.table[idx[prev]]

    dists = []
    for j in range(len(target)):
        joint = {}
        for v in lm.vocab:
            p = 1.0
            prev = context[-1] if context else None
            for tok in list(target[:j]) + [v]:
                p *= row(prev)[idx[tok]]
                prev = tok
            joint[v] = p
        z = sum(joint.values())
        dists.append({v: joint[v] / z for v in lm.vocab})
    return dists


def bf_kl(p_dist, q_dist):
    acc = 0.0
    for v, p in p_dist.items():
        if p == 0.0:
            continue
        q = q_dist[v]
        if q == 0.0:
            return math.inf
        acc += p * math.log(p / q)
    return acc


def bf_zeta(lm, sample):
    """Completeness values for p = 0..N from first principles."""
    target = list(sample.reasoning_pieces) + list(sample.answer_pieces())
    n = sample.n_words
    all_dists = [
        bf_predictive_dists(lm, list(sample.question_pieces(p)), target)
        for p in range(n + 1)
    ]
    full = all_dists[n]
    kl = [
        sum(bf_kl(f, d) for f, d in zip(full, dists))
        for dists in all_dists
    ]
    return [1.0 - kl[p] / kl[0] for p in range(n + 1)], kl


def bf_wer(hyp, ref):
    """Full-matrix Levenshtein word error rate with unit costs."""
    m, n = len(ref), len(hyp)
    d = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        d[i][0] = i
    for j in range(n + 1):
        d[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            cost = 0 if ref[i - 1] == hyp[j - 1] else 1
            d[i][j] = min(d[i - 1][j - 1] + cost, d[i - 1][j] + 1, d[i][j - 1] + 1)
    return d[m][n] / m
