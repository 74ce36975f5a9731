import numpy as np
import pytest
from scipy.stats import chi2

from conftest import freq
from dptrans.augment import recover_atoms, run_transcoding_sampler
from dptrans.encodings import r_to_s
from dptrans.model import ModelSpec
from dptrans.priors import WeightState
from dptrans.rng import RngStream
from dptrans.samplers import CollapsedGibbs, WeightedDraw
from dptrans.transcode import TranscodeDraw, transcode


def manual_trans(r, t_prefix, alpha=1.0):
    r = np.asarray(r, dtype=np.int64)
    t = np.asarray(t_prefix, dtype=np.int64)
    h = len(t)
    wt = [1.0 / (h + 1)] * h
    from dptrans.encodings import distinct_in_order
    return TranscodeDraw(
        r=r, r_star=distinct_in_order(r), t_prefix=t,
        wtilde=WeightState(list(wt), 1.0 - sum(wt), "appearance-order", alpha),
        w_prefix=WeightState(list(wt), 1.0 - sum(wt), "stick-order", alpha),
        vtilde=None)


class TestRecoverAtoms:
    def test_relabeling(self):
        model = ModelSpec(alpha=1.0, trials=1)
        trans = manual_trans([2, 2, 1], [2, 1])
        rng = RngStream(90).generator()
        m = recover_atoms(trans, [0.3, 0.3, 0.7], model, rng)
        assert m.tolist() == [0.7, 0.3]

    def test_unoccupied_prefix_fill(self):
        model = ModelSpec(alpha=1.0, trials=1)
        # both observations on stick 3; sticks 1 and 2 are unoccupied prefix
        trans = manual_trans([3, 3], [2, 3, 1])
        rng = RngStream(91).generator()
        m = recover_atoms(trans, [0.42, 0.42], model, rng)
        assert m[2] == pytest.approx(0.42)
        assert 0.0 < m[0] < 1.0 and 0.0 < m[1] < 1.0
        assert m[0] != m[1]

    def test_theta_absent_uses_conjugate_posterior(self):
        model = ModelSpec(alpha=1.0, trials=1)
        y = np.array([1, 1, 0])
        trans = manual_trans([1, 1, 2], [1, 2])
        rng = RngStream(92).generator()
        draws = np.array([recover_atoms(trans, None, model, rng, y=y)[0]
                          for _ in range(50_000)])
        # occupied stick 1 holds observations (1, 1): posterior Beta(3, 1)
        assert draws.mean() == pytest.approx(3 / 4, abs=0.005)
        assert draws.var() == pytest.approx(3 / (16 * 5), abs=0.003)

    def test_needs_theta_or_y(self):
        model = ModelSpec(alpha=1.0, trials=1)
        trans = manual_trans([1], [1])
        with pytest.raises(ValueError):
            recover_atoms(trans, None, model, RngStream(93).generator())

    def test_misalignment_error(self):
        model = ModelSpec(alpha=1.0, trials=1)
        trans = manual_trans([1, 2], [1, 2])
        with pytest.raises(ValueError):
            recover_atoms(trans, [0.5], model, RngStream(94).generator())


class TestTranscodingSampler:
    def test_augmentation_never_touches_core(self, toy_y, toy_model):
        stream = RngStream(95)
        draws = list(run_transcoding_sampler("collapsed2", toy_y, toy_model,
                                             400, stream))
        # standalone core with the same substream
        sampler = CollapsedGibbs(toy_y, toy_model)
        rng = stream.child(0).generator()
        state = sampler.init_state(rng)
        for i in range(400):
            state = sampler.sweep(state, rng)
            assert np.array_equal(draws[i].core.s, state.s)
            assert np.allclose(draws[i].core.theta, state.theta)

    def test_draw_invariants(self, toy_y, toy_model):
        stream = RngStream(96)
        for draw in run_transcoding_sampler("collapsed2", toy_y, toy_model,
                                            300, stream):
            assert np.array_equal(r_to_s(draw.trans.r), draw.core.s)
            for i, stick in enumerate(draw.trans.r):
                assert draw.m[stick - 1] == draw.core.theta[i]
            assert len(draw.m) == len(draw.trans.t_prefix)

    def test_sis_core_weight_passthrough(self, toy_y, toy_model):
        stream = RngStream(97)
        draws = list(run_transcoding_sampler("sis_s2", toy_y, toy_model,
                                             200, stream))
        assert all(isinstance(d.core, WeightedDraw) for d in draws)
        assert all(np.isfinite(d.log_weight) for d in draws)
        # toy data admits exactly two weight values, one per second-step
        # branch: products of the one-step predictives 7/72 and 49/432
        lws = {round(d.log_weight, 10) for d in draws}
        assert lws == {round(np.log(7 / 72), 10), round(np.log(49 / 432), 10)}

    def test_transcode_every(self, toy_y, toy_model):
        stream = RngStream(98)
        draws = list(run_transcoding_sampler("collapsed2", toy_y, toy_model,
                                             100, stream, transcode_every=10))
        assert len(draws) == 10

    def test_unknown_core_rejected(self, toy_y, toy_model):
        with pytest.raises(ValueError):
            list(run_transcoding_sampler("slice", toy_y, toy_model, 1,
                                         RngStream(99)))

    def test_augmentations_iid_given_labels(self, toy_y, toy_model):
        """r1 draws for iterations sharing the same labels are exchangeable:
        first and second half should agree in distribution."""
        stream = RngStream(100)
        buckets = {}
        for d in run_transcoding_sampler("collapsed2", toy_y, toy_model,
                                         20_000, stream):
            buckets.setdefault(tuple(d.core.s.tolist()), []).append(
                int(d.trans.r[0]))
        key = max(buckets, key=lambda k: len(buckets[k]))
        vals = buckets[key]
        half = len(vals) // 2
        fa, fb = freq(vals[:half]), freq(vals[half:])
        support = [h for h in set(fa) | set(fb)
                   if max(fa.get(h, 0), fb.get(h, 0)) > 0.01]
        stat = 0.0
        for h in support:
            na, nb = fa.get(h, 0) * half, fb.get(h, 0) * (len(vals) - half)
            pooled = (na + nb) / len(vals)
            stat += (na - pooled * half) ** 2 / (pooled * half)
            stat += (nb - pooled * (len(vals) - half)) ** 2 / (
                pooled * (len(vals) - half))
        p = float(chi2.sf(stat, df=max(len(support) - 1, 1)))
        assert p > 0.001
