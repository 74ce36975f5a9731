"""Partition posterior samplers usable as transcoding cores.

Three samplers over the same beta-binomial mixture posterior:

* ``CollapsedGibbs``: marginal sampler over appearance-order labels; one
  sweep reassigns every observation from its urn-weighted predictive
  conditional, then recanonicalizes labels and refreshes per-cluster atoms.
* ``SliceSampler``: conditional sampler over stick-order labels with
  uniform auxiliary variables truncating the stick set adaptively, plus
  optional label-switching Metropolis moves.
* ``SisS2``: sequential importance sampler with atoms integrated out;
  each call yields one independent weighted draw.

All samplers draw exclusively from the injected generator and emit states
whose labels validate against their encoding's invariants.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import betaln

from .encodings import r_to_s
from .errors import SamplingError
from .model import (ClusterSuffStats, ModelSpec, PredictiveCache,
                    validate_observations)
from .priors import _V_HIGH, _V_LOW

# ----------------------------------------------------------------------
# Collapsed Gibbs (marginal sampler, appearance-order labels)
# ----------------------------------------------------------------------


@dataclass
class CollapsedState:
    """Canonical labels, per-label sufficient statistics, per-obs atoms."""

    s: np.ndarray
    clusters: list[ClusterSuffStats]
    theta: np.ndarray

    def check(self, y, model: ModelSpec) -> None:
        s = np.asarray(self.s)
        k = int(s.max())
        if len(self.clusters) != k:
            raise ValueError("cluster list does not match label range")
        for label in range(1, k + 1):
            members = np.asarray(y)[s == label]
            expect = ClusterSuffStats.from_counts(members, model.trials)
            if expect != self.clusters[label - 1]:
                raise ValueError(f"sufficient statistics stale for label {label}")
            atoms = np.unique(self.theta[s == label])
            if len(atoms) != 1:
                raise ValueError("atoms must be shared within a cluster")


class CollapsedGibbs:
    def __init__(self, y, model: ModelSpec):
        self.model = model
        self.y = validate_observations(y, model)
        self._ylist = [int(v) for v in self.y]
        self.cache = PredictiveCache(model, len(self.y))

    def init_state(self, rng: np.random.Generator) -> CollapsedState:
        """Everything in one cluster; atom drawn from its posterior."""
        stats = ClusterSuffStats.from_counts(self.y, self.model.trials)
        atom = float(rng.beta(self.model.base_a + stats.success_sum,
                              self.model.base_b + stats.failure_sum))
        theta = np.full(len(self.y), atom)
        return CollapsedState(np.ones(len(self.y), dtype=np.int64), [stats], theta)

    def sweep(self, state: CollapsedState, rng: np.random.Generator
              ) -> CollapsedState:
        """One full reassignment pass.

        Site i joins occupied cluster c with probability proportional to
        n_c(without i) times the posterior predictive of y_i under c, or a
        new cluster proportional to alpha times the prior predictive.
        Labels are recanonicalized and atoms refreshed once per sweep.
        """
        model, cache = self.model, self.cache
        trials, alpha = model.trials, model.alpha
        ys = self._ylist
        n = len(ys)
        s = [v - 1 for v in state.s.tolist()]  # 0-based working labels
        counts = [c.count for c in state.clusters]
        sy = [c.success_sum for c in state.clusters]
        table, stride, offset = cache._table, cache._stride, cache._offset
        empty = cache.empty
        us = rng.random(n)
        for i in range(n):
            yi = ys[i]
            c = s[i]
            counts[c] -= 1
            sy[c] -= yi
            if counts[c] == 0:
                counts.pop(c)
                sy.pop(c)
                for j in range(n):
                    if s[j] > c:
                        s[j] -= 1
                s[i] = -1
            k = len(counts)
            total = 0.0
            weights = []
            for j in range(k):
                w = counts[j] * table[(offset[counts[j]] + sy[j]) * stride + yi]
                weights.append(w)
                total += w
            w_new = alpha * empty[yi]
            total += w_new
            u = us[i] * total
            acc = 0.0
            pick = k
            for j in range(k):
                acc += weights[j]
                if u < acc:
                    pick = j
                    break
            if pick == k:
                counts.append(1)
                sy.append(yi)
            else:
                counts[pick] += 1
                sy[pick] += yi
            s[i] = pick
        s_arr = np.asarray(s, dtype=np.int64) + 1
        s_canon = r_to_s(s_arr)
        k = int(s_canon.max())
        # permutation: new label j held the old label of its first member
        old_of_new = np.zeros(k, dtype=np.int64)
        seen = 0
        for i in range(n):
            if s_canon[i] == seen + 1:
                old_of_new[seen] = s_arr[i] - 1
                seen += 1
                if seen == k:
                    break
        new_counts = [counts[o] for o in old_of_new]
        new_sy = [sy[o] for o in old_of_new]
        a, b = model.base_a, model.base_b
        atoms = rng.beta(a + np.asarray(new_sy, dtype=np.float64),
                         b + np.asarray(new_counts, dtype=np.float64) * trials
                         - np.asarray(new_sy, dtype=np.float64))
        clusters = [ClusterSuffStats(new_counts[j], new_sy[j],
                                     new_counts[j] * trials - new_sy[j])
                    for j in range(k)]
        return CollapsedState(s_canon, clusters, atoms[s_canon - 1])


@lru_cache(maxsize=8)
def _collapsed_for(y_key: tuple, model: ModelSpec) -> CollapsedGibbs:
    return CollapsedGibbs(np.asarray(y_key), model)


def collapsed_gibbs_sweep(state: CollapsedState, y, model: ModelSpec,
                          rng: np.random.Generator) -> CollapsedState:
    """One sweep; convenience wrapper around a cached CollapsedGibbs."""
    return _collapsed_for(tuple(int(v) for v in y), model).sweep(state, rng)


# ----------------------------------------------------------------------
# Slice sampler (conditional sampler, stick-order labels)
# ----------------------------------------------------------------------


@dataclass
class SliceState:
    """Stick labels r, break fractions v, weights w, atoms m, slice vars u."""

    r: np.ndarray
    v: np.ndarray
    w: np.ndarray
    m: np.ndarray
    u: np.ndarray

    def check(self) -> None:
        if len(self.v) != len(self.w) or len(self.v) != len(self.m):
            raise ValueError("per-stick arrays disagree in length")
        w = weights_from_fractions(self.v)
        if not np.allclose(w, self.w, rtol=1e-10, atol=1e-14):
            raise ValueError("weights inconsistent with break fractions")
        if np.any(self.u <= 0) or np.any(self.u >= self.w[self.r - 1]):
            raise ValueError("slice variables must satisfy 0 < u_i < w_{r_i}")
        if 1.0 - self.w.sum() >= self.u.min():
            raise ValueError("stick prefix too short for the slice set")


def weights_from_fractions(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    lead = np.concatenate([[1.0], np.cumprod(1.0 - v)[:-1]])
    return v * lead


class SliceSampler:
    """Adaptive-truncation conditional sampler with optional label moves.

    moves is a subset of {1, 2, 3}; each enabled move is attempted once at
    the end of every sweep, in ascending id order.
    """

    def __init__(self, y, model: ModelSpec, moves=(), max_sticks: int = 10_000):
        self.model = model
        self.y = validate_observations(y, model)
        self.moves = tuple(sorted(set(int(m) for m in moves)))
        if any(m not in (1, 2, 3) for m in self.moves):
            raise ValueError("moves must be a subset of {1, 2, 3}")
        self.max_sticks = max_sticks
        self.accepts = {m: 0 for m in self.moves}
        self.proposals = {m: 0 for m in self.moves}

    def init_state(self, rng: np.random.Generator) -> SliceState:
        """All observations on stick 1, fraction drawn from its conditional."""
        model = self.model
        n = len(self.y)
        v1 = float(np.clip(rng.beta(1.0 + n, model.alpha), _V_LOW, _V_HIGH))
        sy = int(self.y.sum())
        m1 = float(rng.beta(model.base_a + sy,
                            model.base_b + n * model.trials - sy))
        r = np.ones(n, dtype=np.int64)
        v = [v1]
        m = [m1]
        u = np.maximum(rng.random(n) * v1, 1e-300)
        rem = 1.0 - v1
        while rem >= u.min():
            vn = float(np.clip(rng.beta(1.0, model.alpha), _V_LOW, _V_HIGH))
            v.append(vn)
            m.append(float(rng.beta(model.base_a, model.base_b)))
            rem *= 1.0 - vn
            if len(v) > self.max_sticks:
                raise SamplingError("slice stick prefix exceeded the cap")
        v_arr = np.asarray(v)
        return SliceState(r, v_arr, weights_from_fractions(v_arr),
                          np.asarray(m), u)

    def sweep(self, state: SliceState, rng: np.random.Generator) -> SliceState:
        model = self.model
        y = self.y
        n = len(y)
        alpha, a, b, trials = (model.alpha, model.base_a, model.base_b,
                               model.trials)
        # break fractions from their conditionals given the allocations (the
        # slice variables integrate out of this conditional), then fresh
        # slice variables under the new weights; drawing u before v would
        # break invariance.
        h_occ = int(state.r.max())
        counts = np.bincount(state.r, minlength=h_occ + 1)[1:].astype(np.float64)
        tails = np.concatenate([np.cumsum(counts[::-1])[::-1][1:], [0.0]])
        v = np.clip(rng.beta(1.0 + counts, alpha + tails), _V_LOW, _V_HIGH)
        v = list(v)
        w_occ = weights_from_fractions(np.asarray(v))
        u = np.maximum(rng.random(n) * w_occ[state.r - 1], 1e-300)
        u_min = float(u.min())
        # grow the prefix with prior breaks until the slice set is covered
        rem = float(np.prod(1.0 - np.asarray(v)))
        while rem >= u_min:
            vn = float(np.clip(rng.beta(1.0, alpha), _V_LOW, _V_HIGH))
            v.append(vn)
            rem *= 1.0 - vn
            if len(v) > self.max_sticks:
                raise SamplingError("slice stick prefix exceeded the cap")
        v = np.asarray(v)
        w = weights_from_fractions(v)
        h = len(v)
        # atoms: posterior for occupied sticks, base measure otherwise
        sy = np.zeros(h)
        cnt = np.zeros(h)
        sy[:h_occ] = np.bincount(state.r, weights=y, minlength=h_occ + 1)[1:]
        cnt[:h_occ] = counts
        m = rng.beta(a + sy, b + cnt * trials - sy)
        m = np.clip(m, 1e-12, 1.0 - 1e-12)
        # labels: among sticks taller than the slice, weight by likelihood
        loglik = (y[:, None] * np.log(m)[None, :]
                  + (trials - y)[:, None] * np.log1p(-m)[None, :])
        probs = np.where(w[None, :] > u[:, None], np.exp(loglik), 0.0)
        cums = np.cumsum(probs, axis=1)
        # draws in (0, total]: zero-probability sticks are never selected
        draws = cums[:, -1] * (1.0 - rng.random(n))
        r = (1 + (draws[:, None] > cums).sum(axis=1)).astype(np.int64)
        new = SliceState(r, v, w, m, u)
        # label-switching Metropolis moves
        for move_id in self.moves:
            self.proposals[move_id] += 1
            new, accepted = _try_move(new, move_id, model, rng)
            if accepted:
                self.accepts[move_id] += 1
        return new


def _score(r: np.ndarray, v: np.ndarray, alpha: float) -> float:
    """Joint log density terms that label moves can change.

    Allocation factor prod_i w_{r_i} plus the Beta(1, alpha) prior on the
    fractions; likelihood and atom-prior terms cancel because atoms always
    travel with their allocation sets.
    """
    w = weights_from_fractions(v)
    return float(np.log(w[r - 1]).sum() + (alpha - 1.0) * np.log1p(-v).sum())


def _beta_logpdf(x: float, a: float, b: float) -> float:
    return float((a - 1.0) * np.log(x) + (b - 1.0) * np.log1p(-x)
                 - betaln(a, b))


def _try_move(state: SliceState, move_id: int, model: ModelSpec,
              rng: np.random.Generator) -> tuple[SliceState, bool]:
    """One Metropolis proposal; returns (state, accepted).

    Degenerate configurations (fewer than two occupied sticks, or a
    one-stick prefix) consume no randomness and count as rejections.
    """
    alpha = model.alpha
    r, v, m = state.r, state.v, state.m
    h = len(v)
    occupied = np.unique(r)
    if move_id == 1:
        if len(occupied) < 2:
            return state, False
        pair = rng.choice(len(occupied), size=2, replace=False)
        h1, h2 = int(occupied[pair[0]]), int(occupied[pair[1]])
        r_new = r.copy()
        r_new[r == h1] = h2
        r_new[r == h2] = h1
        m_new = m.copy()
        m_new[[h1 - 1, h2 - 1]] = m[[h2 - 1, h1 - 1]]
        delta = _score(r_new, v, alpha) - _score(r, v, alpha)
        if np.log1p(-rng.random()) < delta:
            return _refresh_u(SliceState(r_new, v, state.w, m_new, state.u),
                              model, rng), True
        return state, False
    # Moves 2 and 3 swap adjacent stick positions.  Positions are confined
    # to 1..max(r): sticks past the last occupied one are coverage scratch
    # whose law is not the plain prior, so swapping into them would target
    # the wrong density.  A swap that would strand the top position
    # unoccupied has no proposable reverse and is rejected outright.
    top = int(r.max())
    if top < 2:
        return state, False
    pos = int(rng.integers(1, top))  # adjacent pair (pos, pos+1), 1-based
    if pos + 1 == top and not np.any(r == pos):
        return state, False
    i, j = pos - 1, pos
    swap = np.arange(1, h + 1)
    swap[i], swap[j] = swap[j], swap[i]
    r_new = swap[r - 1]
    m_new = m.copy()
    m_new[[i, j]] = m[[j, i]]
    if move_id == 2:
        v_new = v.copy()
        v_new[[i, j]] = v[[j, i]]
        delta = _score(r_new, v_new, alpha) - _score(r, v, alpha)
        if np.log1p(-rng.random()) < delta:
            w_new = weights_from_fractions(v_new)
            return _refresh_u(SliceState(r_new, v_new, w_new, m_new, state.u),
                              model, rng), True
        return state, False
    if move_id == 3:
        counts = np.bincount(r, minlength=h + 1)[1:].astype(np.float64)
        counts_new = np.bincount(r_new, minlength=h + 1)[1:].astype(np.float64)
        tails = np.concatenate([np.cumsum(counts[::-1])[::-1][1:], [0.0]])
        tails_new = np.concatenate([np.cumsum(counts_new[::-1])[::-1][1:], [0.0]])
        v_new = v.copy()
        prop_a = (1.0 + counts_new[i], 1.0 + counts_new[j])
        prop_b = (alpha + tails_new[i], alpha + tails_new[j])
        v_new[i] = float(np.clip(rng.beta(prop_a[0], prop_b[0]), _V_LOW, _V_HIGH))
        v_new[j] = float(np.clip(rng.beta(prop_a[1], prop_b[1]), _V_LOW, _V_HIGH))
        log_fwd = (_beta_logpdf(v_new[i], prop_a[0], prop_b[0])
                   + _beta_logpdf(v_new[j], prop_a[1], prop_b[1]))
        log_rev = (_beta_logpdf(v[i], 1.0 + counts[i], alpha + tails[i])
                   + _beta_logpdf(v[j], 1.0 + counts[j], alpha + tails[j]))
        delta = (_score(r_new, v_new, alpha) - _score(r, v, alpha)
                 + log_rev - log_fwd)
        if np.log1p(-rng.random()) < delta:
            w_new = weights_from_fractions(v_new)
            return _refresh_u(SliceState(r_new, v_new, w_new, m_new, state.u),
                              model, rng), True
        return state, False
    raise ValueError("move_id must be 1, 2 or 3")


def _refresh_u(state: SliceState, model: ModelSpec,
               rng: np.random.Generator) -> SliceState:
    """Redraw u | rest after an accepted move, growing the prefix with
    prior sticks until it covers the new slice set."""
    u = np.maximum(rng.random(len(state.r)) * state.w[state.r - 1], 1e-300)
    u_min = float(u.min())
    v, m = state.v, state.m
    rem = 1.0 - state.w.sum()
    while rem >= u_min:
        vn = float(np.clip(rng.beta(1.0, model.alpha), _V_LOW, _V_HIGH))
        v = np.append(v, vn)
        m = np.append(m, rng.beta(model.base_a, model.base_b))
        rem *= 1.0 - vn
    w = weights_from_fractions(v)
    return SliceState(state.r, v, w, m, u)


def metropolis_label_move(state: SliceState, move_id: int, model: ModelSpec,
                          rng: np.random.Generator) -> SliceState:
    """Apply one label-switching move; rejections return the input state."""
    new, _ = _try_move(state, move_id, model, rng)
    return new


def slice_sweep(state: SliceState, y, model: ModelSpec, moves,
                rng: np.random.Generator) -> SliceState:
    """One slice sweep; convenience wrapper (class form is faster for runs)."""
    return SliceSampler(y, model, moves=moves).sweep(state, rng)


# ----------------------------------------------------------------------
# Sequential importance sampler S2 (atoms integrated out)
# ----------------------------------------------------------------------


@dataclass
class WeightedDraw:
    """One independent weighted posterior draw of (labels, atoms)."""

    s: np.ndarray
    theta: np.ndarray
    log_weight: float


class SisS2:
    def __init__(self, y, model: ModelSpec):
        self.model = model
        self.y = validate_observations(y, model)
        self._ylist = [int(v) for v in self.y]
        self.cache = PredictiveCache(model, len(self.y))

    def draw(self, rng: np.random.Generator) -> WeightedDraw:
        """Sequentially allocate each observation from its urn-weighted
        predictive; the log weight accumulates the one-step predictive
        p(y_i | previous data and labels)."""
        model, cache = self.model, self.cache
        alpha, trials = model.alpha, model.trials
        ys = self._ylist
        n = len(ys)
        table, stride, offset = cache._table, cache._stride, cache._offset
        empty = cache.empty
        s = np.empty(n, dtype=np.int64)
        counts: list[int] = []
        sy: list[int] = []
        log_weight = 0.0
        us = rng.random(n)
        for i in range(n):
            yi = ys[i]
            denom = alpha + i
            total = alpha * empty[yi]
            weights = [total]
            for j in range(len(counts)):
                w = counts[j] * table[(offset[counts[j]] + sy[j]) * stride + yi]
                weights.append(w)
                total += w
            log_weight += float(np.log(total / denom))
            u = us[i] * total
            acc = 0.0
            pick = -1
            for j, w in enumerate(weights):
                acc += w
                if u < acc:
                    pick = j
                    break
            if pick <= 0:
                counts.append(1)
                sy.append(yi)
                s[i] = len(counts)
            else:
                counts[pick - 1] += 1
                sy[pick - 1] += yi
                s[i] = pick
        a, b = model.base_a, model.base_b
        atoms = rng.beta(a + np.asarray(sy, dtype=np.float64),
                         b + np.asarray(counts, dtype=np.float64) * trials
                         - np.asarray(sy, dtype=np.float64))
        return WeightedDraw(s, atoms[s - 1], log_weight)


@lru_cache(maxsize=8)
def _sis_for(y_key: tuple, model: ModelSpec) -> SisS2:
    return SisS2(np.asarray(y_key), model)


def sis_s2(y, model: ModelSpec, rng: np.random.Generator) -> WeightedDraw:
    """One independent weighted draw; wrapper around a cached SisS2."""
    return _sis_for(tuple(int(v) for v in y), model).draw(rng)
