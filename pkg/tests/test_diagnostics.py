import math

import numpy as np
import pytest

from dptrans.diagnostics import (IatResult, deviance_core, ess,
                                 extract_functionals, iat, iat_info)
from dptrans.errors import DiagnosticsError
from dptrans.model import ModelSpec
from dptrans.rng import RngStream


class TestIat:
    def test_iid_normal(self):
        rng = RngStream(80).generator()
        series = rng.standard_normal(100_000)
        assert 0.45 <= iat(series) <= 0.55

    def test_ar1_half(self):
        # tau = 1/2 + phi/(1-phi) = 1.5 for an AR(1) with phi = 0.5
        rng = RngStream(81).generator()
        n = 1_000_000
        eps = rng.standard_normal(n)
        x = np.empty(n)
        x[0] = eps[0]
        phi = 0.5
        for i in range(1, n):
            x[i] = phi * x[i - 1] + eps[i]
        assert 1.4 <= iat(x) <= 1.6

    def test_alternating_series_floors_at_zero(self):
        series = np.tile([1.0, -1.0], 5000)
        assert iat(series) == pytest.approx(0.0, abs=1e-6)

    def test_constant_series_errors(self):
        with pytest.raises(DiagnosticsError):
            iat(np.ones(100))

    def test_truncation_flag_when_window_never_triggers(self):
        # constant positive correlations keep tau_hat(l) ahead of l/10
        from dptrans.diagnostics import _window_scan
        rho = np.full(40, 0.2)
        rho[0] = 1.0
        info = _window_scan(rho)
        assert isinstance(info, IatResult)
        assert info.truncated
        assert info.window == 39
        assert info.tau == pytest.approx(0.5 + 0.2 * 39)

    def test_window_terminates_on_real_series(self):
        # biased autocorrelations sum to -1/2, so the rule fires even on
        # strongly trending short series
        rng = RngStream(86).generator()
        for n in (10, 40, 200):
            info = iat_info(np.cumsum(rng.standard_normal(n)))
            assert not info.truncated

    def test_window_rule_self_consistent(self):
        rng = RngStream(82).generator()
        info = iat_info(rng.standard_normal(50_000))
        assert not info.truncated
        assert info.window >= 10 * info.tau
        assert info.window >= 1

    def test_iid_calibration_batch(self):
        rng = RngStream(83).generator()
        taus = [iat(rng.standard_normal(100_000)) for _ in range(20)]
        inside = sum(0.4 <= t <= 0.6 for t in taus)
        assert inside == 20


class TestEss:
    def test_equal_weights(self):
        assert ess(np.zeros(777)) == pytest.approx(777.0)

    def test_single_dominant_weight(self):
        lw = np.full(1000, -np.inf)
        lw[3] = 0.0
        assert ess(lw) == pytest.approx(1.0)

    def test_permutation_and_scale_invariance(self):
        rng = RngStream(84).generator()
        lw = rng.standard_normal(500)
        base = ess(lw)
        assert ess(np.random.default_rng(1).permutation(lw)) == pytest.approx(base)
        assert ess(lw + 123.4) == pytest.approx(base)

    def test_all_minus_inf_errors(self):
        with pytest.raises(DiagnosticsError):
            ess(np.full(10, -np.inf))


class TestDeviance:
    def test_single_cluster_half(self):
        model = ModelSpec(alpha=1.0, trials=1)
        d = deviance_core([1, 0], [2], [0.5], model)
        assert d == pytest.approx(-4 * math.log(0.5))

    def test_single_observation(self):
        model = ModelSpec(alpha=1.0, trials=9)
        q = math.exp(-2.0)
        # one cluster, one observation: D = -2 log p(y | atom)
        from dptrans.model import log_binom_pmf
        atom = 0.37
        d = deviance_core([4], [1], [atom], model)
        assert d == pytest.approx(-2 * float(log_binom_pmf(4, 9, atom)))
        assert q  # silence unused

    def test_merging_identical_atoms_invariant(self):
        model = ModelSpec(alpha=1.0, trials=3)
        y = [0, 1, 2, 3, 1]
        merged = deviance_core(y, [5], [0.4], model)
        split = deviance_core(y, [2, 3], [0.4, 0.4], model)
        assert merged == pytest.approx(split)

    def test_moves_toward_empirical_rate_decreases(self):
        model = ModelSpec(alpha=1.0, trials=4)
        y = [2, 2, 3, 1, 2]  # empirical success rate 0.5
        d_close = deviance_core(y, [5], [0.5], model)
        d_far = deviance_core(y, [5], [0.75], model)
        assert d_close < d_far

    def test_atom_domain_error(self):
        model = ModelSpec(alpha=1.0, trials=1)
        with pytest.raises(DiagnosticsError):
            deviance_core([1], [1], [1.0], model)


class TestExtractFunctionals:
    def test_field_reads_on_manual_draw(self):
        from dptrans.augment import AugmentedDraw
        from dptrans.priors import WeightState
        from dptrans.samplers import CollapsedState
        from dptrans.transcode import TranscodeDraw
        from dptrans.model import ClusterSuffStats

        model = ModelSpec(alpha=1.0, trials=1)
        y = np.array([1, 0, 1])
        r = np.array([2, 2, 1])
        trans = TranscodeDraw(
            r=r, r_star=np.array([2, 1]), t_prefix=np.array([2, 1]),
            wtilde=WeightState([0.5, 0.3], 0.2, "appearance-order", 1.0),
            w_prefix=WeightState([0.3, 0.5], 0.2, "stick-order", 1.0),
            vtilde=None)
        core = CollapsedState(np.array([1, 1, 2]),
                              [ClusterSuffStats(2, 2, 0),
                               ClusterSuffStats(1, 1, 0)],
                              np.array([0.4, 0.4, 0.9]))
        draw = AugmentedDraw(core, trans, m=np.array([0.9, 0.4]))
        f = extract_functionals(draw, y, model)
        assert f.K == 2 and f.r1 == 2
        assert f.w1 == pytest.approx(0.3)
        assert f.m1 == pytest.approx(0.9)
        assert f.w_r1 == pytest.approx(0.5)
        assert f.theta1 == pytest.approx(0.4)
        assert f.theta1 == draw.m[f.r1 - 1]

    def test_deviance_dispatch_matches_core(self):
        from dptrans.diagnostics import deviance
        from dptrans.samplers import CollapsedGibbs, SliceSampler
        model = ModelSpec(alpha=1.0, trials=1)
        y = np.array([1, 0, 1])
        rng = RngStream(87).generator()
        cstate = CollapsedGibbs(y, model).init_state(rng)
        sizes = np.bincount(cstate.s)[1:]
        atoms = [cstate.theta[cstate.s == j + 1][0] for j in range(len(sizes))]
        assert deviance(y, cstate, model) == pytest.approx(
            deviance_core(y, sizes, atoms, model))
        sstate = SliceSampler(y, model).init_state(rng)
        occ = np.unique(sstate.r)
        ssizes = np.bincount(sstate.r)[occ]
        satoms = sstate.m[occ - 1]
        assert deviance(y, sstate, model) == pytest.approx(
            deviance_core(y, ssizes, satoms, model))

    def test_slice_state_functionals(self):
        from dptrans.samplers import SliceSampler
        model = ModelSpec(alpha=1.0, trials=1)
        y = np.array([1, 0, 1])
        sampler = SliceSampler(y, model)
        rng = RngStream(85).generator()
        state = sampler.init_state(rng)
        for _ in range(10):
            state = sampler.sweep(state, rng)
        f = extract_functionals(state, y, model)
        assert f.r1 == state.r[0]
        assert f.w1 == pytest.approx(state.w[0])
        assert f.theta1 == pytest.approx(state.m[state.r[0] - 1])
