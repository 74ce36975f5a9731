"""Transcoding sampler: augment a partition core with stick-breaking draws.

Each core iteration supplies appearance-order labels (and usually atoms);
the transcoding step draws the stick-order encoding conditional on those
labels, and atom recovery relabels the per-observation atoms onto stick
indices, filling unoccupied prefix sticks from the base measure.

The core and augmentation consume independent substreams of the chain's
RngStream, so augmenting never perturbs the core trajectory: any
functional of the labels alone has bit-identical values, and therefore
bit-identical autocorrelation times, with or without augmentation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .model import ClusterSuffStats, ModelSpec, validate_observations
from .rng import RngStream
from .samplers import CollapsedGibbs, CollapsedState, SisS2, WeightedDraw
from .transcode import TranscodeDraw, transcode

CORE_IDS = ("collapsed2", "sis_s2")


@dataclass
class AugmentedDraw:
    """Core draw plus its transcode and stick-indexed atoms."""

    core: CollapsedState | WeightedDraw
    trans: TranscodeDraw
    m: np.ndarray

    @property
    def log_weight(self) -> float:
        return self.core.log_weight if isinstance(self.core, WeightedDraw) else 0.0


def recover_atoms(trans: TranscodeDraw, theta, model: ModelSpec,
                  rng: np.random.Generator, y=None) -> np.ndarray:
    """Stick-indexed atoms for the transcoded draw.

    Occupied sticks take the atom of their cluster (theta is aligned with
    the conditioning labels, constant within a cluster); unoccupied sticks
    in the prefix get independent base-measure draws.  Without theta, each
    occupied stick's atom is drawn from its exact conjugate posterior given
    that cluster's observations, which requires y.
    """
    h = len(trans.t_prefix)
    k = len(trans.r_star)
    m = np.empty(h)
    occupied = np.zeros(h, dtype=bool)
    occupied[trans.r_star - 1] = True
    if theta is not None:
        theta = np.asarray(theta, dtype=np.float64)
        if len(theta) != len(trans.r):
            raise ValueError("theta is not aligned with the conditioning labels")
        sticks, first = np.unique(trans.r, return_index=True)
        m[sticks - 1] = theta[first]
    else:
        if y is None:
            raise ValueError("need either theta or y to recover atoms")
        y = validate_observations(y, model)
        for j in range(k):
            stick = int(trans.r_star[j])
            stats = ClusterSuffStats.from_counts(y[trans.r == stick],
                                                 model.trials)
            m[stick - 1] = rng.beta(model.base_a + stats.success_sum,
                                    model.base_b + stats.failure_sum)
    gaps = int(h - k)
    if gaps:
        m[~occupied] = rng.beta(model.base_a, model.base_b, size=gaps)
    return m


def run_transcoding_sampler(core_id: str, y, model: ModelSpec,
                            iterations: int, rng: RngStream,
                            transcode_every: int = 1
                            ) -> Iterator[AugmentedDraw]:
    """Generate augmented posterior draws from the chosen core sampler.

    Yields one AugmentedDraw per core iteration (lazily; a full run of
    draws can be large).  With transcode_every=j, only every j-th
    iteration is augmented and the others are skipped entirely.
    """
    if core_id not in CORE_IDS:
        raise ValueError(f"core_id must be one of {CORE_IDS}")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if transcode_every < 1:
        raise ValueError("transcode_every must be >= 1")
    y = validate_observations(y, model)
    rng_core = rng.child(0).generator()
    rng_aug = rng.child(1).generator()
    if core_id == "collapsed2":
        sampler = CollapsedGibbs(y, model)
        state = sampler.init_state(rng_core)
        for it in range(iterations):
            state = sampler.sweep(state, rng_core)
            if (it + 1) % transcode_every:
                continue
            trans = transcode(state.s, model.alpha, rng_aug)
            m = recover_atoms(trans, state.theta, model, rng_aug)
            yield AugmentedDraw(state, trans, m)
    else:
        sampler = SisS2(y, model)
        for it in range(iterations):
            draw = sampler.draw(rng_core)
            if (it + 1) % transcode_every:
                continue
            trans = transcode(draw.s, model.alpha, rng_aug)
            m = recover_atoms(trans, draw.theta, model, rng_aug)
            yield AugmentedDraw(draw, trans, m)
