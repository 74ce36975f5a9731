"""Stochastic inverse of r_to_s: draw stick labels given appearance labels.

Conditioning on canonical labels s with cluster sizes (n~_1, ..., n~_k),
the draw factors into three exact steps:

1. appearance-order break fractions, independently
   v~_i ~ Beta(n~_i, alpha + sum_{l>i} n~_l), which fix the
   appearance-order weights w~ and the residual tail mass;
2. a size-biased permutation assigning an appearance rank to stick
   1, 2, ... in turn, each rank drawn proportional to its w~ among unused
   ranks, breaking the tail by Beta(1, alpha) whenever needed, and
   stopping once the observed ranks 1..k are all placed;
3. deterministic recovery: rank j's stick index gives r_star[j], and
   r = compose(s, r_star); the stick-order weight prefix is the
   relabeling w[h] = w~[t[h]].

Every draw is accepted; r_to_s of the output reproduces s by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encodings import PartitionSummary, compose, t_to_rstar
from .priors import BreakFractions, WeightState, _size_biased_draws, _V_HIGH, _V_LOW


@dataclass
class TranscodeDraw:
    """One joint draw of (r, r_star, t, w~, w-prefix, v~) given s."""

    r: np.ndarray
    r_star: np.ndarray
    t_prefix: np.ndarray
    wtilde: WeightState
    w_prefix: WeightState
    vtilde: BreakFractions


def sample_wtilde_given_s(summary: PartitionSummary, alpha: float,
                          rng: np.random.Generator
                          ) -> tuple[BreakFractions, WeightState]:
    """Appearance-order weights conditional on the partition.

    Break fraction i is Beta(n~_i, alpha + sum of later sizes); the implied
    (w~_1, ..., w~_k, residual) is Dirichlet(n~_1, ..., n~_k, alpha).
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    sizes = np.asarray(summary.sizes_ooa, dtype=np.float64)
    tails = np.concatenate([np.cumsum(sizes[::-1])[::-1][1:], [0.0]])
    v = rng.beta(sizes, alpha + tails)
    v = np.clip(v, _V_LOW, _V_HIGH)
    fractions = BreakFractions([float(x) for x in v])
    state = WeightState.from_fractions(fractions.v, "appearance-order", alpha)
    return fractions, state


def sample_t_given_wtilde(wtilde: WeightState, k: int, alpha: float,
                          rng: np.random.Generator) -> np.ndarray:
    """Appearance ranks for sticks 1, 2, ... until ranks 1..k are all placed.

    Ranks are drawn without replacement, proportional to the appearance
    weights; the tail of `wtilde` is extended in place when a draw lands in
    the residual.  Entry h of the result is the rank taken by stick h+1.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(wtilde.weights) < k:
        raise ValueError("wtilde must cover the k observed clusters")
    if wtilde.alpha != alpha:
        raise ValueError("alpha mismatch between state and argument")
    return np.asarray(_size_biased_draws(wtilde, rng, cover_ranks=k),
                      dtype=np.int64)


def transcode(s, alpha: float, rng: np.random.Generator) -> TranscodeDraw:
    """One exact draw of the stick-order encoding given appearance labels."""
    summary = PartitionSummary.from_labels(s)
    vtilde, wtilde = sample_wtilde_given_s(summary, alpha, rng)
    t = sample_t_given_wtilde(wtilde, summary.k, alpha, rng)
    r_star = t_to_rstar(t, summary.k)
    r = compose(s, r_star)
    w_vals = [wtilde.weights[rank - 1] for rank in t]
    w_prefix = WeightState(w_vals, max(1.0 - sum(w_vals), np.finfo(float).tiny),
                           "stick-order", alpha)
    return TranscodeDraw(r=r, r_star=r_star, t_prefix=t, wtilde=wtilde,
                         w_prefix=w_prefix, vtilde=vtilde)
