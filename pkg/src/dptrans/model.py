"""Mixture model specification and beta-binomial conjugate machinery.

The observation model is y ~ Binomial(trials, p) with p drawn from a
Beta(base_a, base_b) base measure.  Everything downstream (collapsed Gibbs,
sequential importance sampling, atom recovery) only needs three conjugate
primitives: the prior/posterior predictive of a count given a cluster's
sufficient statistics, the posterior atom draw, and the binomial
log-likelihood at a fixed atom.  All beta functions are evaluated through
log-gamma and exponentiated last, so cluster sizes in the hundreds cannot
overflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betaln, comb, gammaln


@dataclass(frozen=True)
class ModelSpec:
    """DP precision, Beta base-measure shapes, binomial trial count."""

    alpha: float
    base_a: float = 1.0
    base_b: float = 1.0
    trials: int = 1

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not (self.base_a > 0 and self.base_b > 0):
            raise ValueError("base measure shapes must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass(frozen=True)
class ClusterSuffStats:
    """Per-cluster tallies: observation count, success and failure sums."""

    count: int = 0
    success_sum: int = 0
    failure_sum: int = 0

    def check(self, trials: int) -> None:
        if self.count < 0 or self.success_sum < 0 or self.failure_sum < 0:
            raise ValueError("negative sufficient statistic")
        if self.success_sum + self.failure_sum != self.count * trials:
            raise ValueError("success_sum + failure_sum must equal count * trials")

    def add(self, y: int, trials: int) -> "ClusterSuffStats":
        return ClusterSuffStats(self.count + 1, self.success_sum + y,
                                self.failure_sum + trials - y)

    def remove(self, y: int, trials: int) -> "ClusterSuffStats":
        return ClusterSuffStats(self.count - 1, self.success_sum - y,
                                self.failure_sum - (trials - y))

    @classmethod
    def from_counts(cls, ys, trials: int) -> "ClusterSuffStats":
        ys = np.asarray(ys)
        total = int(ys.sum())
        return cls(len(ys), total, len(ys) * trials - total)


EMPTY_STATS = ClusterSuffStats()


def validate_observations(y, model: ModelSpec) -> np.ndarray:
    """Return y as an int array, checking 0 <= y_i <= trials."""
    arr = np.asarray(y, dtype=np.int64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("observations must be a nonempty 1-d sequence")
    if arr.min() < 0 or arr.max() > model.trials:
        raise ValueError(f"counts must lie in [0, {model.trials}]")
    return arr


def marginal_predictive(y: int, stats: ClusterSuffStats, model: ModelSpec) -> float:
    """p(y | cluster) with the atom integrated out.

    Equals C(J, y) * B(a + Sy + y, b + Sf + J - y) / B(a + Sy, b + Sf); for
    empty stats this is the prior predictive under the base measure.  The
    beta ratio telescopes into J rising factors, so it is evaluated as a
    short exact product (large-count gammaln differences lose ~1e-12 of
    relative accuracy, which the normalization guarantee does not allow);
    a betaln fallback covers very large trial counts.
    """
    if not (0 <= y <= model.trials):
        raise ValueError("count outside [0, trials]")
    j = model.trials
    a = model.base_a + stats.success_sum
    b = model.base_b + stats.failure_sum
    if a <= 0 or b <= 0:
        raise ValueError("posterior shape parameters must be positive")
    if j > 64:
        lchoose = gammaln(j + 1) - gammaln(y + 1) - gammaln(j - y + 1)
        return float(np.exp(lchoose + betaln(a + y, b + j - y) - betaln(a, b)))
    out = float(comb(j, y, exact=True))
    for i in range(y):
        out *= a + i
    for i in range(j - y):
        out *= b + i
    for i in range(j):
        out /= a + b + i
    return out


def log_marginal_predictive(y: int, stats: ClusterSuffStats, model: ModelSpec) -> float:
    return float(np.log(marginal_predictive(y, stats, model)))


def sample_atom_posterior(stats: ClusterSuffStats, model: ModelSpec,
                          rng: np.random.Generator) -> float:
    """Draw from Beta(a + Sy, b + Sf); empty stats gives a base-measure draw."""
    return float(rng.beta(model.base_a + stats.success_sum,
                          model.base_b + stats.failure_sum))


def log_binom_pmf(y, trials: int, p) -> np.ndarray:
    """Binomial log-likelihood at a fixed success probability (vectorized)."""
    y = np.asarray(y, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("success probability must lie strictly in (0, 1)")
    lchoose = gammaln(trials + 1) - gammaln(y + 1) - gammaln(trials - y + 1)
    return lchoose + y * np.log(p) + (trials - y) * np.log1p(-p)


class PredictiveCache:
    """Flat lookup table of marginal predictives for the sampler hot loops.

    Indexed by (cluster count, cluster success sum, new count y); covers all
    states reachable from at most ``n_max`` observations.  Stored as a plain
    Python list so the inner per-site loops avoid numpy scalar overhead.
    """

    def __init__(self, model: ModelSpec, n_max: int):
        self.model = model
        self.trials = j = model.trials
        self.n_max = n_max
        # offset[c] = start of the block for clusters of size c (j*c+1 rows each)
        offs = np.zeros(n_max + 2, dtype=np.int64)
        sizes = j * np.arange(n_max + 1) + 1
        offs[1:] = np.cumsum(sizes)
        self._offset = offs.tolist()
        counts = np.repeat(np.arange(n_max + 1), sizes)
        sy = np.concatenate([np.arange(j * c + 1) for c in range(n_max + 1)])
        a_eff = model.base_a + sy
        b_eff = model.base_b + counts * j - sy
        ab_eff = a_eff + b_eff
        rows = []
        for y in range(j + 1):
            val = np.full(len(sy), float(comb(j, y, exact=True)))
            for i in range(y):
                val *= a_eff + i
            for i in range(j - y):
                val *= b_eff + i
            for i in range(j):
                val /= ab_eff + i
            rows.append(val)
        table = np.stack(rows, axis=1).reshape(-1)
        self._table = table.tolist()
        self._stride = j + 1
        self.empty = [self._table[y] for y in range(j + 1)]

    def predictive(self, y: int, count: int, success_sum: int) -> float:
        base = (self._offset[count] + success_sum) * self._stride
        return self._table[base + y]

    def row_base(self, count: int, success_sum: int) -> int:
        """Flat index of (count, success_sum, y=0); add y for the entry."""
        return (self._offset[count] + success_sum) * self._stride
