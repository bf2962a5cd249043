import numpy as np
import pytest

from mmd import (
    MimfExpansion,
    PhaseTrack,
    ShapeSpectrum,
    ShapeTable,
    UniformSignal,
    ValidationError,
    banded_approximation,
    normalize_shape,
    residual_operator,
    shape_norm,
    signal_norm,
    synthesize_mimf,
)
from mmd.model import periodic_interp, table_spectrum

from conftest import linear_phase, random_shape_table, rel_l2, single_mimf


def unit_cosine_table(size):
    theta = 2.0 * np.pi * np.arange(size) / size
    vals = np.cos(theta)
    return ShapeTable(vals / shape_norm(vals), normalized=True)


class TestTypes:
    def test_signal_rejects_short_and_nonfinite(self):
        with pytest.raises(ValidationError):
            UniformSignal(np.ones(8))
        bad = np.ones(32)
        bad[3] = np.nan
        with pytest.raises(ValidationError):
            UniformSignal(bad)

    def test_signal_is_immutable(self):
        sig = UniformSignal(np.zeros(32))
        with pytest.raises(ValueError):
            sig.samples[0] = 1.0

    def test_phase_must_increase_and_span_two_cycles(self):
        t = np.arange(64) / 64.0
        with pytest.raises(ValidationError):
            PhaseTrack(np.ones(64), 4.0)
        with pytest.raises(ValidationError):
            PhaseTrack(1.5 * t, 1.5)  # only 1.5 cycles
        track = PhaseTrack(4.0 * t, 4.0)
        assert track.L == 64

    def test_phase_slope_diagnostic(self):
        t = np.arange(256) / 256.0
        track = PhaseTrack(16.0 * (t + 0.006 * np.sin(2 * np.pi * t)), 16.0)
        assert track.slope_within(2.0)
        assert not track.slope_within(1.0000001)

    def test_shape_requires_zero_mean(self):
        with pytest.raises(ValidationError):
            ShapeTable(np.ones(16))
        tab = ShapeTable(np.cos(2 * np.pi * np.arange(16) / 16))
        assert abs(tab.values.sum()) < 1e-12

    def test_normalized_flag_is_checked(self):
        vals = np.cos(2 * np.pi * np.arange(32) / 32)
        with pytest.raises(ValidationError):
            ShapeTable(vals, normalized=True)
        ShapeTable(vals / shape_norm(vals), normalized=True)

    def test_spectrum_zero_mean_and_symmetry(self):
        coeffs = np.zeros(16, dtype=complex)
        coeffs[9] = 1.0 + 2.0j
        coeffs[7] = 1.0 - 2.0j
        spec = ShapeSpectrum(coeffs)
        assert spec.is_real_symmetric()
        coeffs2 = coeffs.copy()
        coeffs2[8] = 0.5  # frequency 0
        with pytest.raises(ValidationError):
            ShapeSpectrum(coeffs2)
        coeffs3 = coeffs.copy()
        coeffs3[9] = 5.0
        assert not ShapeSpectrum(coeffs3).is_real_symmetric()

    def test_table_spectrum_round_trip(self):
        rng = np.random.default_rng(0)
        tab = random_shape_table(rng, 64)
        back = table_spectrum(tab).table()
        assert rel_l2(back.values, tab.values) < 1e-12

    def test_expansion_rejects_negative_and_denormal(self):
        tab = unit_cosine_table(64)
        with pytest.raises(ValidationError):
            MimfExpansion((0,), {0: -1.0}, {}, {0: tab}, {}, 16.0)
        with pytest.raises(ValidationError):
            MimfExpansion((0,), {0: 1.0}, {}, {0: ShapeTable(2.0 * tab.values)}, {}, 16.0)


class TestSynthesis:
    def test_single_term_identity_warp(self):
        # a0 = 1, shape = normalized cosine, phi(t) = t, N = 16:
        # samples must equal the normalized cos(2 pi 16 t) waveform
        size = 2000
        tab = unit_cosine_table(size)
        normalizer = 1.0 / shape_norm(np.cos(2 * np.pi * np.arange(size) / size))
        phase = linear_phase(16.0, 256)
        exp = MimfExpansion((0,), {0: 1.0}, {}, {0: tab}, {}, 16.0)
        got = synthesize_mimf(exp, phase, 256)
        t = np.arange(256) / 256.0
        want = normalizer * np.cos(2 * np.pi * 16 * t)
        assert np.max(np.abs(got.samples - want)) < 1e-6

    def test_empty_expansion_is_zero(self):
        exp = MimfExpansion((0,), {}, {}, {}, {}, 16.0)
        got = synthesize_mimf(exp, linear_phase(16.0, 64))
        assert np.all(got.samples == 0.0)

    def test_amplitude_modulated_component_matches_direct_formula(self):
        # mixture term alpha(phi) * s(2 pi N phi) assembled from the symmetric
        # +-1 product convention must match direct pointwise evaluation
        rng = np.random.default_rng(7)
        size = 1000
        L = 2**14
        N = 150.0
        s = random_shape_table(rng, size)
        t = np.arange(L) / L
        phi = t + 0.006 * np.sin(2 * np.pi * t)
        phase = PhaseTrack(N * phi, N)
        A, B = 0.2, 0.1
        direct = (1 + A * np.cos(2 * np.pi * phi) + B * np.sin(2 * np.pi * phi)) * s.eval_at(N * phi)

        exp = MimfExpansion(
            (-1, 0, 1),
            {0: 1.0, 1: A / 2, -1: A / 2},
            {1: B / 2, -1: B / 2},
            {0: s, 1: s, -1: s},
            {1: s, -1: ShapeTable(-s.values, normalized=True)},
            N,
        )
        got = synthesize_mimf(exp, phase)
        assert rel_l2(got.samples, direct) < 1e-4

    def test_linearity_over_disjoint_scale_sets(self):
        # invariant suite: >= 100 random cases
        size = 64
        phase = linear_phase(8.0, 512)
        for seed in range(100):
            rng = np.random.default_rng(seed)
            s1 = random_shape_table(rng, size)
            s2 = random_shape_table(rng, size)
            a1 = float(rng.uniform(0.1, 2.0))
            a2 = float(rng.uniform(0.1, 2.0))
            e1 = MimfExpansion((0,), {0: a1}, {}, {0: s1}, {}, 8.0)
            e2 = MimfExpansion((1,), {1: a2}, {}, {1: s2}, {}, 8.0)
            merged = MimfExpansion((0, 1), {0: a1, 1: a2}, {}, {0: s1, 1: s2}, {}, 8.0)
            lhs = synthesize_mimf(merged, phase).samples
            rhs = synthesize_mimf(e1, phase).samples + synthesize_mimf(e2, phase).samples
            assert np.max(np.abs(lhs - rhs)) < 1e-12


class TestBandedApproximation:
    def _rich_expansion(self, rng, max_n=6, size=128):
        idx = tuple(range(-max_n, max_n + 1))
        a = {n: float(np.exp(-0.5 * abs(n))) for n in idx}
        b = {n: float(0.5 * np.exp(-0.5 * abs(n))) for n in idx if n != 0}
        shapes = {n: random_shape_table(rng, size) for n in idx}
        shapes_s = {n: random_shape_table(rng, size) for n in idx if n != 0}
        return MimfExpansion(idx, a, b, shapes, shapes_s, 32.0)

    def test_band_zero_equals_full_when_only_center(self):
        tab = unit_cosine_table(64)
        exp = MimfExpansion((0,), {0: 1.5}, {}, {0: tab}, {}, 16.0)
        phase = linear_phase(16.0, 128)
        assert np.array_equal(banded_approximation(exp, phase, 0).samples,
                              synthesize_mimf(exp, phase).samples)

    def test_max_band_equals_full_synthesis(self):
        rng = np.random.default_rng(3)
        exp = self._rich_expansion(rng)
        phase = linear_phase(32.0, 1024)
        assert np.array_equal(banded_approximation(exp, phase, 6).samples,
                              synthesize_mimf(exp, phase).samples)

    def test_band_exceeding_indices_rejected(self):
        tab = unit_cosine_table(64)
        exp = MimfExpansion((0,), {0: 1.0}, {}, {0: tab}, {}, 16.0)
        with pytest.raises(ValidationError):
            banded_approximation(exp, linear_phase(16.0, 128), 3)

    def test_residual_shrinks_with_band(self):
        # heartbeat-like synthetic: wider bands approximate better
        from mmd import ShapeSpec, gen_shape
        rng = np.random.default_rng(5)
        size = 512
        L = 2**15
        N = 64.0
        shape = gen_shape(ShapeSpec("ecg_like"), size)
        idx = tuple(range(-40, 41))
        a = {n: float(np.exp(-0.12 * abs(n))) for n in idx}
        shapes = {n: shape for n in idx}
        exp = MimfExpansion(idx, a, {}, shapes, {}, N)
        phase = linear_phase(N, L)
        f = synthesize_mimf(exp, phase)
        errs = []
        for band in (0, 20, 40):
            approx = banded_approximation(exp, phase, band)
            errs.append(signal_norm(f.samples - approx.samples))
        assert errs[2] < errs[1] < errs[0]

    def test_nesting_property(self):
        # invariant suite: band restriction is idempotent and nested
        phase = linear_phase(32.0, 512)
        for seed in range(100):
            rng = np.random.default_rng(1000 + seed)
            exp = self._rich_expansion(rng, max_n=4, size=64)
            l1, l2 = sorted(rng.integers(0, 5, size=2).tolist())
            from mmd.model import _restrict
            inner = banded_approximation(_restrict(exp, l2), phase, l1)
            direct = banded_approximation(exp, phase, l1)
            assert np.array_equal(inner.samples, direct.samples)


class TestResidualOperator:
    def test_identities(self):
        rng = np.random.default_rng(11)
        f = UniformSignal(rng.standard_normal(64))
        zero = UniformSignal(np.zeros(64))
        assert np.all(residual_operator(f, f).samples == 0.0)
        assert np.array_equal(residual_operator(f, zero).samples, f.samples)

    def test_linearity_pointwise(self):
        rng = np.random.default_rng(12)
        f, g, h = (UniformSignal(rng.standard_normal(64)) for _ in range(3))
        gh = UniformSignal(g.samples + h.samples)
        lhs = residual_operator(f, gh).samples
        rhs = residual_operator(residual_operator(f, g), h).samples
        assert np.allclose(lhs, rhs, rtol=0, atol=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            residual_operator(UniformSignal(np.zeros(32)), UniformSignal(np.zeros(64)))


class TestNormalizeShape:
    def test_zero_table(self):
        coeff, unit = normalize_shape(np.zeros(64))
        assert coeff == 0.0
        assert np.all(unit.values == 0.0)

    def test_idempotent_on_unit(self):
        rng = np.random.default_rng(2)
        tab = random_shape_table(rng, 128)
        coeff, unit = normalize_shape(tab)
        assert abs(coeff - 1.0) < 1e-12
        assert rel_l2(unit.values, tab.values) < 1e-12

    def test_coefficient_matches_direct_sum(self):
        # oracle: accumulate the norm by an explicit sum
        rng = np.random.default_rng(4)
        unit = random_shape_table(rng, 96)
        raw = 2.0 * unit.values
        direct = np.sqrt(2.0 * np.pi / raw.size * float(sum(v * v for v in raw)))
        coeff, u = normalize_shape(raw)
        assert abs(coeff - direct) < 1e-12
        assert rel_l2(u.values, unit.values) < 1e-12

    def test_floor_branch(self):
        coeff, unit = normalize_shape(1e-12 * np.cos(2 * np.pi * np.arange(32) / 32),
                                      amplitude_floor=1e-6)
        assert coeff == 0.0 and np.all(unit.values == 0.0)


class TestPeriodicInterp:
    def test_exact_on_table_points(self):
        rng = np.random.default_rng(9)
        tab = rng.standard_normal(16)
        pos = np.arange(16) / 16.0
        assert np.allclose(periodic_interp(tab, pos), tab, rtol=0, atol=0)

    def test_wraps_at_period(self):
        tab = np.array([0.0, 1.0, 0.0, -1.0])
        got = periodic_interp(tab, np.array([0.875, -0.125]))
        assert np.allclose(got, [-0.5, -0.5])
