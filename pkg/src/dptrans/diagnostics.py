"""Chain-quality metrics: autocorrelation time, ESS, deviance, functionals.

The integrated autocorrelation time uses the self-consistent window rule:
tau_hat = 1/2 + sum_{l=1}^{M} rho_hat_l with M the smallest lag satisfying
M >= 10 * tau_hat(M).  Autocorrelations are the biased (1/N) estimates
against the sample mean, computed by FFT.  An i.i.d. series scores about
0.5; the estimate is floored at zero for anti-correlated series.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DiagnosticsError
from .model import ModelSpec, log_binom_pmf


@dataclass(frozen=True)
class IatResult:
    tau: float
    window: int
    truncated: bool


def autocorrelations(values: np.ndarray) -> np.ndarray:
    """Biased sample autocorrelations rho_hat_0..rho_hat_{N-1} via FFT."""
    x = np.asarray(values, dtype=np.float64)
    n = len(x)
    x = x - x.mean()
    var = float((x * x).sum())
    if var == 0.0:
        raise DiagnosticsError("autocorrelation undefined for a constant series")
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n]
    return acov / var


def _window_scan(rho: np.ndarray) -> IatResult:
    """Apply the self-consistent window to autocorrelations rho_0..rho_max.

    Truncates at the last available lag (flagged) if no lag satisfies
    l >= 10 * tau_hat(l).
    """
    running = 0.5 + np.cumsum(rho[1:])
    lags = np.arange(1, len(rho))
    hits = np.nonzero(lags >= 10.0 * running)[0]
    if len(hits) == 0:
        return IatResult(max(float(running[-1]), 0.0), int(lags[-1]), True)
    m = int(hits[0])
    return IatResult(max(float(running[m]), 0.0), int(lags[m]), False)


def iat_info(series) -> IatResult:
    """Autocorrelation time with the window lag and truncation flag."""
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or len(x) < 2:
        raise DiagnosticsError("need a 1-d series of length >= 2")
    if not np.all(np.isfinite(x)):
        raise DiagnosticsError("series contains non-finite values")
    return _window_scan(autocorrelations(x))


def iat(series) -> float:
    """Integrated autocorrelation time, in iterations."""
    return iat_info(series).tau


def ess(log_weights) -> float:
    """Effective sample size N / (1 + Var of the N-normalized weights)."""
    lw = np.asarray(log_weights, dtype=np.float64)
    if lw.ndim != 1 or len(lw) == 0:
        raise DiagnosticsError("need a 1-d sequence of log weights")
    finite = np.isfinite(lw)
    if not finite.any():
        raise DiagnosticsError("all log weights are -inf")
    n = len(lw)
    w = np.exp(lw - lw[finite].max())
    w = np.where(finite, w, 0.0)
    norm = w * n / w.sum()
    return float(n / (1.0 + norm.var()))


@lru_cache(maxsize=32)
def _value_counts(y_bytes: bytes) -> tuple[np.ndarray, np.ndarray]:
    y = np.frombuffer(y_bytes, dtype=np.int64)
    vals, counts = np.unique(y, return_counts=True)
    return vals.astype(np.float64), counts.astype(np.float64)


def deviance_core(y, sizes, atoms, model: ModelSpec) -> float:
    """-2 * sum_i log of the size-weighted mixture likelihood at y_i."""
    y = np.ascontiguousarray(y, dtype=np.int64)
    sizes = np.asarray(sizes, dtype=np.float64)
    atoms = np.asarray(atoms, dtype=np.float64)
    if np.any(atoms <= 0.0) or np.any(atoms >= 1.0):
        raise DiagnosticsError("cluster atoms must lie strictly in (0, 1)")
    if len(sizes) != len(atoms) or sizes.sum() != len(y):
        raise DiagnosticsError("cluster sizes do not match the data")
    vals, counts = _value_counts(y.tobytes())
    lik = np.exp(log_binom_pmf(vals[:, None], model.trials, atoms[None, :]))
    mix = lik @ (sizes / sizes.sum())
    return float(-2.0 * (counts * np.log(mix)).sum())


def _occupied(draw):
    """(sizes, atoms) over occupied clusters for any supported draw type."""
    from .augment import AugmentedDraw
    from .samplers import CollapsedState, SliceState

    if isinstance(draw, AugmentedDraw):
        r = draw.trans.r
        counts = np.bincount(r)
        occ = np.nonzero(counts[1:])[0] + 1
        return counts[occ], draw.m[occ - 1]
    if isinstance(draw, CollapsedState):
        sizes = np.bincount(draw.s)[1:]
        atoms = np.array([draw.theta[draw.s == j + 1][0]
                          for j in range(len(sizes))])
        return sizes, atoms
    if isinstance(draw, SliceState):
        counts = np.bincount(draw.r)
        occ = np.nonzero(counts[1:])[0] + 1
        return counts[occ], draw.m[occ - 1]
    raise TypeError(f"unsupported draw type {type(draw).__name__}")


def deviance(y, draw, model: ModelSpec) -> float:
    """Deviance of one posterior draw (augmented, collapsed or slice)."""
    sizes, atoms = _occupied(draw)
    return deviance_core(y, sizes, atoms, model)


@dataclass(frozen=True)
class Functionals:
    """Monitored per-iteration quantities."""

    K: int
    D: float
    theta1: float
    r1: int
    w1: float
    m1: float
    w_r1: float

    def as_row(self) -> tuple:
        return (self.K, self.D, self.theta1, self.r1, self.w1, self.m1,
                self.w_r1)


FUNCTIONAL_NAMES = ("K", "D", "theta1", "r1", "w1", "m1", "w_r1")


def extract_functionals(draw, y, model: ModelSpec) -> Functionals:
    """Read the monitored functionals off an augmented or slice draw."""
    from .augment import AugmentedDraw
    from .samplers import SliceState

    d = deviance(y, draw, model)
    if isinstance(draw, AugmentedDraw):
        r1 = int(draw.trans.r[0])
        w = draw.trans.w_prefix.weights
        return Functionals(K=len(draw.trans.r_star), D=d,
                           theta1=float(draw.m[r1 - 1]), r1=r1,
                           w1=float(w[0]), m1=float(draw.m[0]),
                           w_r1=float(w[r1 - 1]))
    if isinstance(draw, SliceState):
        r1 = int(draw.r[0])
        return Functionals(K=len(np.unique(draw.r)), D=d,
                           theta1=float(draw.m[r1 - 1]), r1=r1,
                           w1=float(draw.w[0]), m1=float(draw.m[0]),
                           w_r1=float(draw.w[r1 - 1]))
    raise TypeError("functionals need an augmented or slice draw")
