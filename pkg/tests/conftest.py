"""Shared fixtures and independent oracles for the test suite.

Oracles here deliberately avoid the library's own probability evaluators:
set partitions are enumerated recursively over index blocks, sequential
urn path probabilities multiply the one-step rule directly, and marginal
likelihoods use the conjugate closed form.
"""

import math
import numpy as np
import pytest
from scipy.special import betaln, comb

from dptrans.model import ModelSpec


@pytest.fixture
def toy_y():
    return np.array([1, 1, 0])


@pytest.fixture
def toy_model():
    return ModelSpec(alpha=1.0, base_a=1.0, base_b=1.0, trials=1)


def all_set_partitions(n):
    """All partitions of {0..n-1} as tuples of index blocks."""
    if n == 1:
        return [((0,),)]
    out = []
    for smaller in all_set_partitions(n - 1):
        item = n - 1
        for i in range(len(smaller)):
            out.append(smaller[:i] + (smaller[i] + (item,),) + smaller[i + 1:])
        out.append(smaller + ((item,),))
    return out


def partition_to_labels(blocks, n):
    """Canonical appearance-order labels of an index-block partition."""
    label = {}
    order = sorted(blocks, key=min)
    for j, block in enumerate(order, start=1):
        for i in block:
            label[i] = j
    return tuple(label[i] for i in range(n))


def polya_path_logprob(s, alpha):
    """Log probability of a specific label path under the sequential urn."""
    s = list(s)
    assert s[0] == 1
    counts = {1: 1}
    lp = 0.0
    for i, lab in enumerate(s[1:], start=2):
        denom = alpha + i - 1
        if lab in counts:
            lp += math.log(counts[lab] / denom)
            counts[lab] += 1
        else:
            assert lab == len(counts) + 1
            lp += math.log(alpha / denom)
            counts[lab] = 1
    return lp


def cluster_log_marginal(ys, model):
    """Log marginal likelihood of one cluster's counts, atom integrated out."""
    ys = np.asarray(ys)
    sy = int(ys.sum())
    sf = len(ys) * model.trials - sy
    lp = betaln(model.base_a + sy, model.base_b + sf) - betaln(model.base_a,
                                                               model.base_b)
    for y in ys:
        lp += math.log(comb(model.trials, int(y), exact=True))
    return float(lp)


def exact_partition_posterior(y, model):
    """Posterior probability of every canonical labeling, by enumeration."""
    y = np.asarray(y)
    n = len(y)
    entries = []
    for blocks in all_set_partitions(n):
        labels = partition_to_labels(blocks, n)
        sizes = [len(b) for b in sorted(blocks, key=min)]
        lp = (len(sizes) * math.log(model.alpha)
              + math.lgamma(model.alpha) - math.lgamma(model.alpha + n)
              + sum(math.lgamma(sz) for sz in sizes))
        for block in blocks:
            lp += cluster_log_marginal(y[list(block)], model)
        entries.append((labels, lp))
    mx = max(lp for _, lp in entries)
    weights = {lab: math.exp(lp - mx) for lab, lp in entries}
    total = sum(weights.values())
    return {lab: w / total for lab, w in weights.items()}


def freq(draws):
    """Empirical frequencies of hashable draws."""
    out = {}
    for d in draws:
        out[d] = out.get(d, 0) + 1
    n = len(draws)
    return {k: v / n for k, v in out.items()}


def binom_sigma(p, n):
    return math.sqrt(p * (1.0 - p) / n)
