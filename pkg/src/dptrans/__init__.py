"""Dirichlet process mixture samplers with encoding transcoding.

Converts between order-of-appearance and stick-breaking cluster label
encodings, augments any partition posterior sampler with full
stick-breaking parameter inference, and benchmarks samplers via
integrated autocorrelation time.
"""

from .acceptreject import ArResult, ar_acceptance_rate, ar_transcode
from .diagnostics import Functionals, deviance, ess, extract_functionals, iat
from .encodings import (PartitionSummary, compose, distinct_in_order, eppf,
                        ewens_prob, p_ooa, r_to_s, t_to_rstar)
from .errors import (AttemptsExhausted, ConfigError, DatasetError,
                     DiagnosticsError, DptransError, SamplingError)
from .model import (ClusterSuffStats, ModelSpec, marginal_predictive,
                    sample_atom_posterior)
from .priors import (BreakFractions, WeightState, polya_urn_sample,
                     size_biased_permutation, stick_breaking_sample,
                     weighted_urn_sample)
from .rng import RngStream
from .samplers import (CollapsedGibbs, CollapsedState, SisS2, SliceSampler,
                       SliceState, WeightedDraw, collapsed_gibbs_sweep,
                       metropolis_label_move, sis_s2, slice_sweep)
from .transcode import (TranscodeDraw, sample_t_given_wtilde,
                        sample_wtilde_given_s, transcode)
from .augment import AugmentedDraw, recover_atoms, run_transcoding_sampler

__version__ = "0.1.0"

__all__ = [
    "ArResult", "ar_acceptance_rate", "ar_transcode",
    "Functionals", "deviance", "ess", "extract_functionals", "iat",
    "PartitionSummary", "compose", "distinct_in_order", "eppf", "ewens_prob",
    "p_ooa", "r_to_s", "t_to_rstar",
    "AttemptsExhausted", "ConfigError", "DatasetError", "DiagnosticsError",
    "DptransError", "SamplingError",
    "ClusterSuffStats", "ModelSpec", "marginal_predictive",
    "sample_atom_posterior",
    "BreakFractions", "WeightState", "polya_urn_sample",
    "size_biased_permutation", "stick_breaking_sample", "weighted_urn_sample",
    "RngStream",
    "CollapsedGibbs", "CollapsedState", "SisS2", "SliceSampler", "SliceState",
    "WeightedDraw", "collapsed_gibbs_sweep", "metropolis_label_move", "sis_s2",
    "slice_sweep",
    "TranscodeDraw", "sample_t_given_wtilde", "sample_wtilde_given_s",
    "transcode",
    "AugmentedDraw", "recover_atoms", "run_transcoding_sampler",
    "__version__",
]
