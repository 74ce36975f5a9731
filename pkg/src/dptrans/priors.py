"""Exact a priori samplers for partitions, sticks and size-biased orders.

The infinite weight sequences are materialized lazily: a ``WeightState``
holds a finite prefix plus the unassigned residual mass, and grows by one
Beta(1, alpha) break whenever a categorical draw lands beyond the prefix.
Draws use inverse-CDF over (prefix, residual), so results are exact and
bit-reproducible under a fixed generator.

Batch variants (``*_paths``) produce matrices of independent label paths
with chunked vectorized arithmetic; they sample from the same laws as the
scalar functions and exist for the million-path experiments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .encodings import compose, t_to_rstar
from .errors import SamplingError

RESIDUAL_FLOOR = 1e-12
MAX_STICKS = 100_000
_V_LOW = 1e-300
_V_HIGH = 1.0 - 1e-16


@dataclass
class BreakFractions:
    """Stick break fractions v; w_h = v_h * prod_{l<h} (1 - v_l)."""

    v: list[float] = field(default_factory=list)


@dataclass
class WeightState:
    """Finite prefix of stick weights plus residual tail mass.

    kind tags whether the prefix is in stick order (w) or appearance order
    (w tilde); alpha fixes the Beta(1, alpha) law used for tail breaks.
    renormalized_breaks counts breaks taken after the residual dropped
    below RESIDUAL_FLOOR (diagnostic only).
    """

    weights: list[float]
    residual: float
    kind: str
    alpha: float
    renormalized_breaks: int = 0

    @classmethod
    def fresh(cls, kind: str, alpha: float) -> "WeightState":
        if kind not in ("stick-order", "appearance-order"):
            raise ValueError("kind must be 'stick-order' or 'appearance-order'")
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        return cls([], 1.0, kind, alpha)

    @classmethod
    def from_fractions(cls, v, kind: str, alpha: float) -> "WeightState":
        state = cls.fresh(kind, alpha)
        for frac in v:
            state.push_fraction(float(frac))
        return state

    def push_fraction(self, v: float) -> int:
        """Append the weight implied by one break fraction; returns its index."""
        if not (0.0 < v < 1.0):
            raise ValueError("break fractions must lie strictly in (0, 1)")
        if self.residual <= 0.0:
            raise SamplingError("stick residual underflowed to zero")
        if self.residual < RESIDUAL_FLOOR:
            self.renormalized_breaks += 1
        w = v * self.residual
        if w <= 0.0 or self.residual - w <= 0.0:
            raise SamplingError("stick residual underflowed to zero")
        self.weights.append(w)
        self.residual -= w
        return len(self.weights)

    def extend(self, rng: np.random.Generator) -> tuple[int, float]:
        """One Beta(1, alpha) tail break; returns (new index, fraction)."""
        if len(self.weights) >= MAX_STICKS:
            raise SamplingError(f"stick prefix exceeded {MAX_STICKS} entries")
        v = float(rng.beta(1.0, self.alpha))
        v = min(max(v, _V_LOW), _V_HIGH)
        return self.push_fraction(v), v

    def assigned(self) -> float:
        return 1.0 - self.residual

    def break_fractions(self) -> BreakFractions:
        """Fractions implied by the prefix (v_h = w_h / remaining mass)."""
        out, rem = [], 1.0
        for w in self.weights:
            out.append(w / rem)
            rem -= w
        return BreakFractions(out)

    def check(self, tol: float = 1e-12) -> None:
        if any(w <= 0.0 for w in self.weights) or self.residual <= 0.0:
            raise ValueError("weights and residual must be positive")
        if abs(sum(self.weights) + self.residual - 1.0) > tol:
            raise ValueError("weights plus residual must sum to one")


def polya_urn_sample(n: int, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """Order-of-appearance labels from the sequential urn scheme.

    Observation i joins existing cluster l with probability
    n_l / (alpha + i - 1) and opens a new cluster with probability
    alpha / (alpha + i - 1).
    """
    if n < 1 or not alpha > 0:
        raise ValueError("need n >= 1 and alpha > 0")
    s = np.empty(n, dtype=np.int64)
    s[0] = 1
    counts = [1]
    for i in range(2, n + 1):
        u = rng.random() * (alpha + i - 1)
        acc = 0.0
        for label, c in enumerate(counts, start=1):
            acc += c
            if u < acc:
                s[i - 1] = label
                counts[label - 1] += 1
                break
        else:
            counts.append(1)
            s[i - 1] = len(counts)
    return s


def _draw_stick_index(state: WeightState, rng: np.random.Generator) -> int:
    """Categorical draw over (prefix, residual), extending the tail on demand."""
    u = rng.random()
    acc = 0.0
    for idx, w in enumerate(state.weights, start=1):
        acc += w
        if u < acc:
            return idx
    while True:
        idx, _ = state.extend(rng)
        acc += state.weights[idx - 1]
        if u < acc:
            return idx


def stick_breaking_sample(n: int, alpha: float, rng: np.random.Generator
                          ) -> tuple[np.ndarray, WeightState, BreakFractions]:
    """Stick-order labels with their weights and break fractions.

    Weights are broken only when a draw lands in the residual, so exactly
    as many sticks are materialized as the sample needs.
    """
    if n < 1 or not alpha > 0:
        raise ValueError("need n >= 1 and alpha > 0")
    state = WeightState.fresh("stick-order", alpha)
    r = np.empty(n, dtype=np.int64)
    for i in range(n):
        r[i] = _draw_stick_index(state, rng)
    return r, state, state.break_fractions()


def size_biased_permutation(state: WeightState, count: int,
                            rng: np.random.Generator) -> np.ndarray:
    """First `count` indices of a size-biased permutation of the state.

    Indices are drawn without replacement, each with probability
    proportional to its weight among the not-yet-drawn ones; the tail is
    extended lazily when a draw lands in the residual.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    return np.asarray(_size_biased_draws(state, rng, count=count), dtype=np.int64)


def _size_biased_draws(state: WeightState, rng: np.random.Generator, *,
                       count: int | None = None,
                       cover_ranks: int | None = None) -> list[int]:
    """Sequential size-biased draws; stop after `count` picks or once every
    index in 1..cover_ranks has been picked."""
    drawn: list[int] = []
    used: set[int] = set()
    remaining = set(range(1, cover_ranks + 1)) if cover_ranks else None
    while True:
        available = state.residual + sum(
            w for idx, w in enumerate(state.weights, start=1) if idx not in used)
        u = rng.random() * available
        acc = 0.0
        pick = None
        for idx, w in enumerate(state.weights, start=1):
            if idx in used:
                continue
            acc += w
            if u < acc:
                pick = idx
                break
        while pick is None:
            idx, _ = state.extend(rng)
            acc += state.weights[idx - 1]
            if u < acc:
                pick = idx
        used.add(pick)
        drawn.append(pick)
        if remaining is not None:
            remaining.discard(pick)
            if not remaining:
                return drawn
        if count is not None and len(drawn) == count:
            return drawn


def weighted_urn_sample(n: int, alpha: float, rng: np.random.Generator
                        ) -> tuple[np.ndarray, WeightState, np.ndarray]:
    """Urn-scheme labels driven by exact appearance-order weights.

    Step 1 assigns each observation to existing cluster j with probability
    equal to that cluster's weight, or to a new cluster with the residual
    mass, breaking the residual once per new cluster.  Step 2 size-biases
    the appearance-order weights back into stick order, yielding stick
    labels r consistent with s.  Returns (s, appearance-order state, r).
    """
    if n < 1 or not alpha > 0:
        raise ValueError("need n >= 1 and alpha > 0")
    state = WeightState.fresh("appearance-order", alpha)
    state.extend(rng)
    s = np.empty(n, dtype=np.int64)
    s[0] = 1
    k = 1
    for i in range(1, n):
        u = rng.random()
        acc = 0.0
        label = None
        for j in range(k):
            acc += state.weights[j]
            if u < acc:
                label = j + 1
                break
        if label is None:
            state.extend(rng)
            k += 1
            label = k
        s[i] = label
    t = _size_biased_draws(state, rng, cover_ranks=k)
    r_star = t_to_rstar(t, k)
    return s, state, compose(s, r_star)


# ----------------------------------------------------------------------
# Batch path generators (vectorized, chunked)
# ----------------------------------------------------------------------

def _clip_v(v: np.ndarray) -> np.ndarray:
    return np.clip(v, _V_LOW, _V_HIGH)


def stick_breaking_paths(n_paths: int, n: int, alpha: float,
                         rng: np.random.Generator,
                         chunk: int = 20_000) -> np.ndarray:
    """Matrix of independent stick-order label paths, shape (n_paths, n)."""
    out = np.empty((n_paths, n), dtype=np.int64)
    done = 0
    while done < n_paths:
        m = min(chunk, n_paths - done)
        u = rng.random((m, n))
        umax = u.max(axis=1)
        cum = np.zeros(m)
        cols = []
        while not np.all(cum > umax):
            if len(cols) >= MAX_STICKS:
                raise SamplingError("stick prefix exceeded cap in batch sampler")
            v = _clip_v(rng.beta(1.0, alpha, size=m))
            cum = cum + v * (1.0 - cum)
            cols.append(cum.copy())
        cmat = np.stack(cols, axis=1)
        out[done:done + m] = 1 + (u[:, :, None] > cmat[:, None, :]).sum(axis=2)
        done += m
    return out


def polya_urn_paths(n_paths: int, n: int, alpha: float,
                    rng: np.random.Generator,
                    chunk: int = 100_000) -> np.ndarray:
    """Matrix of independent order-of-appearance label paths."""
    out = np.empty((n_paths, n), dtype=np.int64)
    done = 0
    while done < n_paths:
        m = min(chunk, n_paths - done)
        s = np.zeros((m, n), dtype=np.int64)
        counts = np.zeros((m, n), dtype=np.int64)
        s[:, 0] = 1
        counts[:, 0] = 1
        k = np.ones(m, dtype=np.int64)
        rows = np.arange(m)
        for i in range(1, n):
            u = rng.random(m) * (alpha + i)
            cum = np.cumsum(counts, axis=1)
            idx = (u[:, None] >= cum).sum(axis=1)
            new = idx >= k
            label = np.where(new, k + 1, idx + 1)
            s[:, i] = label
            counts[rows, label - 1] += 1
            k = np.where(new, k + 1, k)
        out[done:done + m] = s
        done += m
    return out


def weighted_urn_paths(n_paths: int, n: int, alpha: float,
                       rng: np.random.Generator,
                       chunk: int = 100_000) -> np.ndarray:
    """Order-of-appearance paths from the exact-weight urn (step 1 only)."""
    out = np.empty((n_paths, n), dtype=np.int64)
    done = 0
    while done < n_paths:
        m = min(chunk, n_paths - done)
        s = np.zeros((m, n), dtype=np.int64)
        w = np.zeros((m, n), dtype=np.float64)
        s[:, 0] = 1
        w[:, 0] = _clip_v(rng.beta(1.0, alpha, size=m))
        res = 1.0 - w[:, 0]
        k = np.ones(m, dtype=np.int64)
        rows = np.arange(m)
        for i in range(1, n):
            u = rng.random(m)
            cum = np.cumsum(w, axis=1)
            idx = (u[:, None] >= cum).sum(axis=1)
            new = idx >= k
            label = np.where(new, k + 1, idx + 1)
            s[:, i] = label
            v = _clip_v(rng.beta(1.0, alpha, size=m))
            w_new = v * res
            w[rows, k] = np.where(new, w_new, w[rows, k])
            res = np.where(new, res - w_new, res)
            k = np.where(new, k + 1, k)
        out[done:done + m] = s
        done += m
    return out
