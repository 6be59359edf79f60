"""Counter-based random streams and time-pair sampling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from dtofsim.sampling import (KIND_PATH, KIND_TIME, RngStream, TimePair,
                              antithetic_partner, default_time_shift,
                              hash_u64, sample_time, sample_time_periodic,
                              u01_from_bits)


def _splitmix64_reference(words):
    """Independent pure-int reimplementation of the keyed hash."""
    mask = (1 << 64) - 1
    state = 0
    for w in words:
        z = (state + 0x9E3779B97F4A7C15 + (int(w) & mask)) & mask
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        state = z ^ (z >> 31)
    return state


class TestHash:
    def test_matches_reference_implementation(self):
        for words in [(0,), (1, 2, 3), (42, 0, 7, 9, 11),
                      (2 ** 63, 5), (123456789, 987654321)]:
            assert int(hash_u64(*words)) == _splitmix64_reference(words)

    def test_vectorized_matches_scalar(self):
        pix = np.arange(16)
        vec = hash_u64(3, 1, pix, 2, 5)
        for i in range(16):
            assert vec[i] == hash_u64(3, 1, i, 2, 5)

    def test_u01_range_and_precision(self):
        bits = np.array([0, (1 << 64) - 1], dtype=np.uint64)
        u = u01_from_bits(bits)
        assert u[0] == 0.0
        assert 0.0 < u[1] < 1.0

    def test_uniformity_ks(self):
        stream = RngStream(seed=0, kind=KIND_TIME, pixel=np.arange(4096),
                           pair=0)
        u = stream.u01(0)
        assert stats.kstest(u, "uniform").pvalue > 1e-4

    def test_streams_decorrelated_across_kind_and_dim(self):
        pix = np.arange(4096)
        a = RngStream(0, KIND_TIME, pix, 0).u01(0)
        b = RngStream(0, KIND_PATH, pix, 0).u01(0)
        c = RngStream(0, KIND_TIME, pix, 0).u01(1)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.05
        assert abs(np.corrcoef(a, c)[0, 1]) < 0.05

    def test_replay_determinism(self):
        s1 = RngStream(5, KIND_PATH, pixel=17, pair=3)
        s2 = RngStream(5, KIND_PATH, pixel=17, pair=3)
        assert all(s1.u01(d) == s2.u01(d) for d in range(32))

    def test_with_kind(self):
        s = RngStream(1, KIND_TIME, 2, 3).with_kind(KIND_PATH)
        assert (s.seed, s.kind, s.pixel, s.pair) == (1, KIND_PATH, 2, 3)


class TestAntitheticPartner:
    @staticmethod
    def _circular_distance(a, b):
        d = abs(float(np.mod(a - b, 1.0)))
        return min(d, 1.0 - d)

    @given(t=st.floats(0.0, 1.0, exclude_max=True),
           ts=st.floats(0.0, 1.0))
    @settings(max_examples=200, deadline=None)
    def test_mirrored_is_an_involution(self, t, ts):
        once = antithetic_partner("mirrored", t, ts, 1.0)
        twice = antithetic_partner("mirrored", float(once), ts, 1.0)
        assert self._circular_distance(twice, t) < 1e-9

    @given(t=st.floats(0.0, 1.0, exclude_max=True))
    @settings(max_examples=100, deadline=None)
    def test_shifted_half_period_is_an_involution(self, t):
        once = antithetic_partner("shifted", t, 0.5, 1.0)
        twice = antithetic_partner("shifted", float(once), 0.5, 1.0)
        assert self._circular_distance(twice, t) < 1e-9

    def test_unknown_strategy(self):
        with pytest.raises(ValueError):
            antithetic_partner("uniform", 0.1, 0.5, 1.0)

    def test_default_time_shift(self):
        assert default_time_shift("shifted", 2.0) == 1.0
        assert default_time_shift("mirrored", 2.0) == 0.0


class TestSampleTime:
    def _pairs(self, strategy, n_pairs, n_pixels=512, T=1.0, t_s=None,
               seed=0):
        out = []
        pix = np.arange(n_pixels)
        for i in range(n_pairs):
            rng = RngStream(seed, KIND_TIME, pixel=pix, pair=i)
            out.append(sample_time(strategy, i, n_pairs, rng, T, t_s))
        return out

    def test_densities_are_always_uniform(self):
        for strategy in ("uniform", "stratified", "shifted", "mirrored",
                         "decorrelated-stratified"):
            tp = self._pairs(strategy, 4, T=2.0)[0]
            assert np.all(tp.pdf_primal == 0.5)
            assert np.all(tp.pdf_antithetic == 0.5)

    def test_shifted_partner_structure(self):
        # Ignoring the role swap, the two times differ by exactly t_s mod T.
        for tp in self._pairs("shifted", 4, t_s=0.5):
            delta = np.mod(tp.t_antithetic - tp.t_primal, 1.0)
            np.testing.assert_allclose(np.minimum(delta, 1.0 - delta), 0.5,
                                       atol=1e-12)

    def test_mirrored_partner_structure(self):
        for tp in self._pairs("mirrored", 4, t_s=0.0):
            s = np.mod(tp.t_primal + tp.t_antithetic, 1.0)
            s = np.minimum(s, 1.0 - s)
            np.testing.assert_allclose(s, 0.0, atol=1e-12)

    def test_further_stratification_covers_all_strata(self):
        # With n pairs and the half-period shift, the union of all 2n
        # samples must put exactly one sample in each stratum of width
        # T/(2n) for every pixel.
        n = 4
        pairs = self._pairs("shifted", n, n_pixels=256)
        times = np.stack([np.concatenate([tp.t_primal, tp.t_antithetic])
                          for tp in pairs])  # (n, 2*pixels)
        per_pixel = times.reshape(n, 2, 256)
        for p in range(256):
            strata = np.floor(per_pixel[:, :, p].ravel() * 2 * n).astype(int)
            assert sorted(strata) == list(range(2 * n))

    def test_swap_rate_is_half(self):
        tp = self._pairs("shifted", 2, n_pixels=8192)[0]
        assert abs(tp.swapped.mean() - 0.5) < 0.02

    def test_uniform_strategy_is_independent(self):
        tp = self._pairs("uniform", 2, n_pixels=8192)[0]
        assert stats.kstest(tp.t_primal, "uniform").pvalue > 1e-4
        assert stats.kstest(tp.t_antithetic, "uniform").pvalue > 1e-4
        assert abs(np.corrcoef(tp.t_primal, tp.t_antithetic)[0, 1]) < 0.05

    def test_stratified_halves(self):
        tp = self._pairs("stratified", 1, n_pixels=1024)[0]
        lo = np.minimum(tp.t_primal, tp.t_antithetic)
        hi = np.maximum(tp.t_primal, tp.t_antithetic)
        assert np.all(lo < 0.5) and np.all(hi >= 0.5)

    def test_marginal_uniformity_over_pairs(self):
        # Pooled over pairs and the role swap, primal times must be uniform
        # on [0, T] for the estimator to stay unbiased.
        pairs = self._pairs("shifted", 8, n_pixels=1024)
        pooled = np.concatenate([tp.t_primal for tp in pairs])
        assert stats.kstest(pooled, "uniform").pvalue > 1e-4

    def test_validation(self):
        rng = RngStream(0, KIND_TIME, pixel=0, pair=0)
        with pytest.raises(ValueError):
            sample_time("sobol", 0, 2, rng, 1.0)
        with pytest.raises(ValueError):
            sample_time("shifted", 2, 2, rng, 1.0)
        with pytest.raises(ValueError):
            sample_time("shifted", 0, 2, rng, 1.0, t_s=1.5)

    def test_returns_timepair(self):
        rng = RngStream(0, KIND_TIME, pixel=np.arange(4), pair=0)
        tp = sample_time("shifted", 0, 2, rng, 1.0)
        assert isinstance(tp, TimePair)
        assert tp.strategy == "shifted"


class TestPeriodicSamples:
    def test_offsets_are_exact_period_fractions(self):
        rng = RngStream(0, KIND_TIME, pixel=np.arange(64), pair=0)
        times = sample_time_periodic(4, rng, 2.0)
        assert len(times) == 4
        base = times[0]
        for k in range(1, 4):
            np.testing.assert_allclose(np.mod(times[k] - base, 2.0),
                                       k * 0.5, atol=1e-12)

    def test_power_of_two_required(self):
        rng = RngStream(0, KIND_TIME, pixel=0, pair=0)
        for bad in (1, 3, 6):
            with pytest.raises(ValueError):
                sample_time_periodic(bad, rng, 1.0)
