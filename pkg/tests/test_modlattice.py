import numpy as np
import pytest

from rwz.modlattice import mod_distance, mod_reduce, sample_dither

from support import rng_for


class TestModReduce:
    def test_scalar_examples(self):
        cases = [
            (0.0, 3.0, 0.0),
            (1.4, 3.0, 1.4),
            (1.6, 3.0, -1.4),
            (2.0, 3.0, -1.0),
            (-2.0, 3.0, 1.0),
            (4.6, 3.0, -1.4),
            (-4.6, 3.0, 1.4),
            (3.0, 3.0, 0.0),
            (-3.0, 3.0, 0.0),
            (7.5, 3.0, -1.5),
        ]
        for x, a, want in cases:
            got = mod_reduce(x, a)
            assert got == pytest.approx(want, abs=1e-12), (x, a)

    def test_half_boundary_maps_to_negative_edge(self):
        # +A/2 wraps to -A/2; -A/2 is already inside the cell and stays
        assert mod_reduce(1.5, 3.0) == -1.5
        assert mod_reduce(-1.5, 3.0) == -1.5

    def test_array_input_matches_scalar(self):
        x = rng_for(1).normal(0.0, 5.0, 257)
        out = mod_reduce(x, 2.7)
        for xi, oi in zip(x, out):
            assert mod_reduce(float(xi), 2.7) == pytest.approx(oi, abs=0)

    def test_result_in_half_open_cell(self):
        x = rng_for(2).normal(0.0, 50.0, 20000)
        for a in (0.3, 1.0, 3.0, 11.7):
            out = mod_reduce(x, a)
            assert np.all(out >= -a / 2.0)
            assert np.all(out < a / 2.0)

    def test_difference_is_integer_multiple_of_modulo(self):
        x = rng_for(3).normal(0.0, 30.0, 5000)
        a = 2.3
        k = (x - mod_reduce(x, a)) / a
        assert np.allclose(k, np.rint(k), atol=1e-9)

    def test_idempotent(self):
        x = rng_for(4).normal(0.0, 10.0, 1000)
        once = mod_reduce(x, 3.0)
        assert np.array_equal(mod_reduce(once, 3.0), once)

    def test_shift_invariance(self):
        # reducing after adding any multiple of A changes nothing
        x = rng_for(5).normal(0.0, 2.0, 1000)
        a = 3.0
        for mult in (-3, 1, 7):
            assert np.allclose(mod_reduce(x + mult * a, a), mod_reduce(x, a),
                               atol=1e-9)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            mod_reduce(np.array([1.0, np.nan]), 3.0)
        with pytest.raises(ValueError):
            mod_reduce(np.inf, 3.0)

    def test_rejects_bad_modulo(self):
        with pytest.raises(ValueError):
            mod_reduce(1.0, 0.0)
        with pytest.raises(ValueError):
            mod_reduce(1.0, -2.0)


class TestModDistance:
    def test_accumulates_squared_wrapped_differences(self):
        u = np.array([1.4, -1.4, 0.0])
        v = np.array([-1.4, 1.4, 0.5])
        # wrapped differences at A=3: -0.2, +0.2, -0.5
        want = 0.2 ** 2 + 0.2 ** 2 + 0.5 ** 2
        assert mod_distance(u, v, 3.0) == pytest.approx(want, rel=1e-12)

    def test_zero_on_identical_points(self):
        u = rng_for(6).uniform(-1.5, 1.5, 100)
        assert mod_distance(u, u, 3.0) == 0.0

    def test_never_exceeds_plain_distance(self):
        r = rng_for(7)
        u = r.uniform(-1.5, 1.5, 500)
        v = r.uniform(-1.5, 1.5, 500)
        plain = float(np.dot(u - v, u - v))
        assert mod_distance(u, v, 3.0) <= plain + 1e-12


class TestSampleDither:
    def test_shape_and_support(self):
        d = sample_dither(10000, 3.0, rng_for(8))
        assert d.shape == (10000,)
        assert np.all(d >= -1.5) and np.all(d < 1.5)

    def test_deterministic_per_stream(self):
        a = sample_dither(100, 3.0, rng_for(9))
        b = sample_dither(100, 3.0, rng_for(9))
        assert np.array_equal(a, b)

    def test_mean_and_variance_match_uniform_law(self):
        d = sample_dither(200000, 3.0, rng_for(10))
        assert abs(d.mean()) < 0.01
        assert d.var() == pytest.approx(9.0 / 12.0, rel=0.02)
