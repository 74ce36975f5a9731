"""Accept-reject transcoders: exact but wasteful baselines.

All three methods propose stick labels from the prior and accept when the
proposal is compatible with the conditioning labels s, under successively
weaker compatibility notions:

* method 1: the proposal relabels exactly to s;
* method 2: the proposal's cluster sizes in order of appearance equal
  those of s, after which the proposal's appearance-ordered stick values
  are grafted onto s's membership pattern;
* method 3: the sorted size multisets match, after which blocks are
  aligned to s's clusters by size (ties broken by appearance order).

These are correctness oracles and acceptance-rate demonstrations, not
production transcoders.  Closed-form acceptance rates are evaluated in
log space.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .encodings import (compose, distinct_in_order, log_eppf, log_ewens_prob,
                        log_p_ooa, ooa_sizes, r_to_s, size_multiplicities)
from .errors import AttemptsExhausted
from .priors import stick_breaking_paths, stick_breaking_sample

logger = logging.getLogger(__name__)

METHODS = (1, 2, 3)


@dataclass
class ArResult:
    r: np.ndarray
    attempts: int


def log_ar_acceptance_rate(sizes_ooa, alpha: float, method: int) -> float:
    """Log acceptance probability for the given appearance-order sizes."""
    sizes = tuple(int(x) for x in sizes_ooa)
    if method == 1:
        return log_eppf(sizes, alpha)
    if method == 2:
        return log_p_ooa(sizes, alpha)
    if method == 3:
        n = sum(sizes)
        return log_ewens_prob(size_multiplicities(sizes, n), alpha)
    raise ValueError("method must be 1, 2 or 3")


def ar_acceptance_rate(sizes_ooa, alpha: float, method: int) -> float:
    return float(np.exp(log_ar_acceptance_rate(sizes_ooa, alpha, method)))


def _accepts(r_hat: np.ndarray, s: np.ndarray, sizes: np.ndarray,
             method: int) -> bool:
    if method == 1:
        return bool(np.array_equal(r_to_s(r_hat), s))
    hat_sizes = ooa_sizes(r_hat)
    if len(hat_sizes) != len(sizes):
        return False
    if method == 2:
        return bool(np.array_equal(hat_sizes, sizes))
    return bool(np.array_equal(np.sort(hat_sizes), np.sort(sizes)))


def _rearrange(r_hat: np.ndarray, s: np.ndarray, sizes: np.ndarray,
               method: int) -> np.ndarray:
    """Graft an accepted proposal onto s's membership pattern."""
    if method == 1:
        return r_hat
    stars = distinct_in_order(r_hat)
    if method == 2:
        return compose(s, stars)
    # method 3: match blocks by size; equal sizes keep their appearance order
    hat_sizes = ooa_sizes(r_hat)
    pool: dict[int, list[int]] = {}
    for value, size in zip(stars, hat_sizes):
        pool.setdefault(int(size), []).append(int(value))
    aligned = [pool[int(size)].pop(0) for size in sizes]
    return compose(s, np.asarray(aligned, dtype=np.int64))


def ar_transcode(s, alpha: float, method: int, rng: np.random.Generator,
                 max_attempts: int = 10**8,
                 progress_every: int | None = None) -> ArResult:
    """Exact draw of stick labels given s, by repeated prior proposals.

    Raises AttemptsExhausted (carrying the attempt count) if no proposal is
    accepted within max_attempts.
    """
    if method not in METHODS:
        raise ValueError("method must be 1, 2 or 3")
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    s = r_to_s(s)  # validates and normalizes input labels
    sizes = ooa_sizes(s)
    n = len(s)
    for attempt in range(1, max_attempts + 1):
        r_hat, _, _ = stick_breaking_sample(n, alpha, rng)
        if _accepts(r_hat, s, sizes, method):
            return ArResult(_rearrange(r_hat, s, sizes, method), attempt)
        if progress_every and attempt % progress_every == 0:
            logger.info("accept-reject method %d: %d proposals, none accepted",
                        method, attempt)
    raise AttemptsExhausted(max_attempts)


# ----------------------------------------------------------------------
# Batched helpers for rate estimation and bulk oracle draws
# ----------------------------------------------------------------------

def _batch_ooa_size_lists(r_mat: np.ndarray,
                          chunk: int = 20_000) -> tuple[np.ndarray, np.ndarray]:
    """Per-row cluster counts and sizes ordered by first appearance.

    Returns (sizes, k) where sizes is (rows, n) with trailing zero padding.
    Processes in row chunks to bound the (rows x n x labels) scratch array.
    """
    m, n = r_mat.shape
    padded = np.zeros((m, n), dtype=np.int64)
    ks = np.zeros(m, dtype=np.int64)
    for lo in range(0, m, chunk):
        part = r_mat[lo:lo + chunk]
        vmax = int(part.max()) + 1
        eq = part[:, :, None] == np.arange(1, vmax)[None, None, :]
        present = eq.any(axis=1)
        first = np.where(present, eq.argmax(axis=1), n)
        counts = eq.sum(axis=1)
        order = np.argsort(first, axis=1, kind="stable")
        sizes = np.take_along_axis(counts, order, axis=1)
        width = min(n, sizes.shape[1])
        padded[lo:lo + chunk, :width] = sizes[:, :width]
        ks[lo:lo + chunk] = present.sum(axis=1)
    return padded, ks


def _batch_pattern_mask(r_mat: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Rows whose membership pattern equals s exactly (method 1)."""
    k = int(s.max())
    firsts = [int(np.argmax(s == j)) for j in range(1, k + 1)]
    ok = np.ones(len(r_mat), dtype=bool)
    for j, f in enumerate(firsts, start=1):
        members = np.nonzero(s == j)[0]
        ok &= np.all(r_mat[:, members] == r_mat[:, f][:, None], axis=1)
    lead = np.sort(r_mat[:, firsts], axis=1)
    if k > 1:
        ok &= np.all(np.diff(lead, axis=1) != 0, axis=1)
    return ok


def batch_accept_mask(r_mat: np.ndarray, sizes_ooa, method: int,
                      s=None) -> np.ndarray:
    """Accept/reject decisions for a matrix of prior proposals.

    Method 1 additionally needs the conditioning labels s.
    """
    target = np.asarray(sizes_ooa, dtype=np.int64)
    k = len(target)
    n = int(target.sum())
    if r_mat.shape[1] != n:
        raise ValueError("proposal length does not match target sizes")
    if method == 1:
        if s is None:
            raise ValueError("method 1 needs the conditioning labels")
        return _batch_pattern_mask(r_mat, np.asarray(s, dtype=np.int64))
    sizes, ks = _batch_ooa_size_lists(r_mat)
    if method == 2:
        want = np.zeros(n, dtype=np.int64)
        want[:k] = target
        return (ks == k) & np.all(sizes == want, axis=1)
    if method == 3:
        want = np.zeros(n, dtype=np.int64)
        want[:k] = np.sort(target)[::-1]
        return (ks == k) & np.all(-np.sort(-sizes, axis=1) == want, axis=1)
    raise ValueError("method must be 1, 2 or 3")


def ar_transcode_batch(s, alpha: float, method: int, n_draws: int,
                       rng: np.random.Generator,
                       max_proposals: int = 10**8) -> tuple[np.ndarray, int]:
    """Bulk accepted draws via vectorized proposal generation.

    Returns (matrix of n_draws stick-label rows, total proposals consumed).
    """
    s = r_to_s(s)
    sizes = ooa_sizes(s)
    n = len(s)
    rate = ar_acceptance_rate(sizes, alpha, method)
    chunk = int(min(max(2_000, 1.5 * n_draws / max(rate, 1e-12)), 50_000))
    rows: list[np.ndarray] = []
    got = 0
    proposals = 0
    while got < n_draws:
        if proposals >= max_proposals:
            raise AttemptsExhausted(proposals)
        r_mat = stick_breaking_paths(chunk, n, alpha, rng)
        proposals += chunk
        mask = batch_accept_mask(r_mat, sizes, method, s=s)
        for row in r_mat[mask]:
            rows.append(_rearrange(row, s, sizes, method))
            got += 1
            if got == n_draws:
                break
    return np.stack(rows), proposals
