"""Cluster label encodings and exact partition probabilities.

Two integer encodings of the same partition are used throughout:

* order of appearance (``s``): cluster j is the j-th distinct cluster seen
  while scanning the data; canonical in the restricted-growth sense
  (s_1 = 1, s_i <= 1 + max of the prefix).
* stick order (``r``): each observation carries the index of the stick it
  was drawn from; any positive integer may appear first.

``r`` determines ``s`` deterministically (r_to_s).  The extra information
in ``r`` is exactly the vector of distinct stick indices in appearance
order (``r_star``), so ``compose(s, r_star)`` inverts the collapse.  The
appearance-rank map ``t`` (t[h-1] = appearance rank of stick h) is the
inverse permutation of ``r_star`` on the observed ranks.

The probability evaluators (EPPF, Ewens sampling formula, appearance-order
composition probability) are computed in log space; linear-scale wrappers
exponentiate at the last step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy.special import gammaln


def _as_labels(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.int64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("labels must be a nonempty 1-d integer sequence")
    if arr.min() < 1:
        raise ValueError("labels must be positive integers")
    return arr


def is_canonical(s) -> bool:
    """True when s is a valid order-of-appearance labeling."""
    arr = _as_labels(s)
    if arr[0] != 1:
        return False
    if len(arr) == 1:
        return True
    tops = np.maximum.accumulate(arr)
    return bool(np.all(arr[1:] <= tops[:-1] + 1))


def r_to_s(r) -> np.ndarray:
    """Relabel stick-order labels into order of appearance."""
    arr = _as_labels(r)
    _, first, inverse = np.unique(arr, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(1, len(first) + 1)
    return rank[inverse]


def distinct_in_order(r) -> np.ndarray:
    """Distinct values of r in the order they first appear (r_star)."""
    arr = _as_labels(r)
    _, first = np.unique(arr, return_index=True)
    return arr[np.sort(first)]


def compose(s, r_star) -> np.ndarray:
    """Rebuild stick-order labels: r_i = r_star[s_i - 1].

    Inverse of (r_to_s, distinct_in_order): composing their outputs returns
    the original r.
    """
    s_arr = _as_labels(s)
    stars = _as_labels(r_star)
    if not is_canonical(s_arr):
        raise ValueError("s must be canonical (order of appearance)")
    if len(set(stars.tolist())) != len(stars):
        raise ValueError("r_star entries must be pairwise distinct")
    k = int(s_arr.max())
    if len(stars) != k:
        raise ValueError(f"r_star has {len(stars)} entries but s has {k} clusters")
    return stars[s_arr - 1]


def t_to_rstar(t, k: int) -> np.ndarray:
    """Invert the appearance-rank map on the observed ranks 1..k.

    t[h-1] is the appearance rank of stick h; the result maps rank j to the
    unique stick holding it.  Raises if some rank in 1..k is missing from
    the prefix.
    """
    arr = _as_labels(t)
    if len(set(arr.tolist())) != len(arr):
        raise ValueError("appearance ranks must be injective")
    r_star = np.zeros(k, dtype=np.int64)
    for stick, rank in enumerate(arr, start=1):
        if 1 <= rank <= k:
            r_star[rank - 1] = stick
    if np.any(r_star == 0):
        missing = [j + 1 for j in range(k) if r_star[j] == 0]
        raise ValueError(f"prefix too short: appearance ranks {missing} unassigned")
    return r_star


@dataclass(frozen=True)
class PartitionSummary:
    """Cluster count and sizes in order of appearance."""

    k: int
    sizes_ooa: tuple
    n: int

    def __post_init__(self):
        if self.k < 1 or any(sz < 1 for sz in self.sizes_ooa):
            raise ValueError("cluster sizes must be positive")
        if len(self.sizes_ooa) != self.k or sum(self.sizes_ooa) != self.n:
            raise ValueError("inconsistent partition summary")

    @classmethod
    def from_labels(cls, s) -> "PartitionSummary":
        arr = _as_labels(s)
        if not is_canonical(arr):
            raise ValueError("labels must be canonical (order of appearance)")
        sizes = np.bincount(arr)[1:]
        return cls(int(arr.max()), tuple(int(x) for x in sizes), len(arr))


def ooa_sizes(labels) -> np.ndarray:
    """Cluster sizes in order of first appearance, for arbitrary labels."""
    arr = _as_labels(labels)
    return np.bincount(r_to_s(arr))[1:]


def log_eppf(sizes: Sequence[int], alpha: float) -> float:
    """Log probability of one set partition with the given block sizes."""
    sizes = np.asarray(sizes, dtype=np.int64)
    if sizes.size == 0 or sizes.min() < 1:
        raise ValueError("block sizes must be positive")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    n = int(sizes.sum())
    k = len(sizes)
    return float(k * np.log(alpha) + gammaln(alpha) - gammaln(alpha + n)
                 + gammaln(sizes).sum())


def eppf(sizes: Sequence[int], alpha: float) -> float:
    return float(np.exp(log_eppf(sizes, alpha)))


def log_ewens_prob(multiplicities: Sequence[int], alpha: float) -> float:
    """Ewens sampling formula: probability of a block-size multiplicity profile.

    multiplicities[i-1] = number of blocks of size i, for i = 1..n.
    """
    m = np.asarray(multiplicities, dtype=np.int64)
    if m.size == 0 or m.min() < 0:
        raise ValueError("multiplicities must be non-negative")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    sizes = np.arange(1, len(m) + 1)
    n = int((sizes * m).sum())
    if n != len(m):
        raise ValueError("multiplicities must satisfy sum(i * M_i) = n = len(M)")
    return float(gammaln(n + 1) + gammaln(alpha) - gammaln(alpha + n)
                 + (m * np.log(alpha) - m * np.log(sizes) - gammaln(m + 1)).sum())


def ewens_prob(multiplicities: Sequence[int], alpha: float) -> float:
    return float(np.exp(log_ewens_prob(multiplicities, alpha)))


def log_p_ooa(sizes_ooa: Sequence[int], alpha: float) -> float:
    """Log probability of the cluster-size composition in order of appearance.

    n! / (n_k (n_k + n_{k-1}) ... (n_k + ... + n_1)) * alpha^k
    * Gamma(alpha) / Gamma(alpha + n).
    """
    sizes = np.asarray(sizes_ooa, dtype=np.int64)
    if sizes.size == 0 or sizes.min() < 1:
        raise ValueError("composition parts must be positive")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    n = int(sizes.sum())
    k = len(sizes)
    suffix = np.cumsum(sizes[::-1])  # n_k, n_k+n_{k-1}, ..., n
    return float(gammaln(n + 1) - np.log(suffix).sum()
                 + k * np.log(alpha) + gammaln(alpha) - gammaln(alpha + n))


def p_ooa(sizes_ooa: Sequence[int], alpha: float) -> float:
    return float(np.exp(log_p_ooa(sizes_ooa, alpha)))


def all_partition_labelings(n: int) -> Iterator[tuple]:
    """All canonical order-of-appearance labelings of n items.

    Enumerates restricted growth strings; yields Bell(n) tuples.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    s = [1] * n

    def rec(i: int, top: int):
        if i == n:
            yield tuple(s)
            return
        for v in range(1, top + 2):
            s[i] = v
            yield from rec(i + 1, max(top, v))

    yield from rec(1, 1) if n > 1 else iter([(1,)])


def size_multiplicities(sizes: Sequence[int], n: int) -> tuple:
    """Multiplicity profile (M_1..M_n) of a block-size multiset."""
    m = [0] * n
    for sz in sizes:
        m[sz - 1] += 1
    return tuple(m)
