import numpy as np
import pytest

from sicperf.src.channel import (ChannelRealization, ModulationSpec, SystemConfig, draw_symbols,
                                 sample_channels, sample_realization, sample_received)
from sicperf.src.matcore import qr_decompose
from sicperf.src.zf_sic import (ChannelBasis, DegenerateRealizationError, DetectionOrder, Ordering,
                                detection_order, order_permutations, zf_decode_batch, zf_layer_terms,
                                zf_layer_terms_batch, zf_sic_decode, zf_sindr_batch,
                                zf_sindr_profile)


class TestDetectionOrder:

    def test_foschini_strongest_first(self):
        h = np.diag([1.0, 3.0, 2.0]).astype(complex)
        order = detection_order(h, Ordering.FOSCHINI)
        assert order.perm == (1, 2, 0)
        np.testing.assert_array_equal(order.layer_columns, [0, 2, 1])

    def test_ties_go_to_lower_index(self):
        h = np.ones((2, 3), dtype=complex)
        assert detection_order(h, Ordering.FOSCHINI).perm == (0, 1, 2)

    def test_fixed_is_identity(self):
        h = np.diag([1.0, 3.0]).astype(complex)
        assert detection_order(h, Ordering.FIXED).perm == (0, 1)

    def test_invalid(self):
        with pytest.raises(ValueError):
            DetectionOrder((0, 0, 1), Ordering.FOSCHINI)
        with pytest.raises(ValueError):
            DetectionOrder((1, 0), Ordering.FIXED)


class TestSindr:

    def test_ideal_profile_is_scaled_diagonal(self):
        cfg = SystemConfig(n=4, m=3, p=5.0, n0=0.5)
        real = sample_realization(cfg, np.random.default_rng(8))
        order = detection_order(real.h_hat, Ordering.FOSCHINI)
        profile = zf_sindr_profile(cfg, real, order)
        permuted = real.h[:, order.layer_columns]
        diag_sq = qr_decompose(permuted).diag_sq
        for i in range(1, cfg.m + 1):
            assert profile.layer(i) == pytest.approx(cfg.p*diag_sq[i - 1]/cfg.n0, rel=1e-10)
            assert profile.stage(cfg.m - i + 1) == profile.layer(i)

    def test_first_stage_gain_is_largest_column_norm(self):
        cfg = SystemConfig(n=3, m=3)
        real = sample_realization(cfg, np.random.default_rng(9))
        terms = zf_layer_terms(real, detection_order(real.h_hat, Ordering.FOSCHINI))
        assert terms[-1].r_ii_sq <= np.max(np.sum(np.abs(real.h)**2, axis=0)) + 1e-12

    def test_impaired_sindr_is_bounded(self):
        cfg = SystemConfig(n=4, m=4, p=1e6, kappa_t=0.1, kappa_r=0.1, omega=0.01)
        h, delta_h = sample_channels(cfg, np.random.default_rng(10), 500)
        sindr, degenerate = zf_sindr_batch(cfg, h, delta_h, h + delta_h, Ordering.FOSCHINI)
        assert not np.any(degenerate)
        assert np.all(sindr < 1.0/cfg.kappa_t**2)

    def test_crosstalk_is_erlang_in_true_basis(self):
        cfg = SystemConfig(n=4, m=3, omega=0.2)
        h, delta_h = sample_channels(cfg, np.random.default_rng(11), 40000)
        perms = order_permutations(h, Ordering.FOSCHINI)
        _, y = zf_layer_terms_batch(h, delta_h, h + delta_h, perms, ChannelBasis.TRUE)
        # Gamma(m, ω): mean mω, variance mω²
        assert np.mean(y) == pytest.approx(cfg.m*cfg.omega, rel=0.02)
        assert np.var(y) == pytest.approx(cfg.m*cfg.omega**2, rel=0.05)

    def test_batch_matches_profile(self):
        cfg = SystemConfig(n=4, m=2, p=2.0, kappa_t=0.08, kappa_r=0.05, omega=0.05)
        h, delta_h = sample_channels(cfg, np.random.default_rng(12), 4)
        sindr, _ = zf_sindr_batch(cfg, h, delta_h, h + delta_h, Ordering.FOSCHINI)
        for k in range(4):
            real = ChannelRealization.from_estimate_error(h[k], delta_h[k])
            profile = zf_sindr_profile(cfg, real, detection_order(real.h_hat, Ordering.FOSCHINI))
            np.testing.assert_allclose(sindr[k], profile.values, rtol=1e-10)

    def test_ordering_dominates_first_stage(self):
        cfg = SystemConfig(n=4, m=4, p=10.0, kappa_t=0.05, kappa_r=0.05, omega=0.05)
        h, delta_h = sample_channels(cfg, np.random.default_rng(16), 100000)
        ordered, _ = zf_sindr_batch(cfg, h, delta_h, h + delta_h, Ordering.FOSCHINI)
        fixed, _ = zf_sindr_batch(cfg, h, delta_h, h + delta_h, Ordering.FIXED)
        grid = np.quantile(fixed[:, 0], np.linspace(0.01, 0.99, 50))
        ordered_cdf = np.mean(ordered[:, 0, np.newaxis] <= grid, axis=0)
        fixed_cdf = np.mean(fixed[:, 0, np.newaxis] <= grid, axis=0)
        assert np.all(ordered_cdf <= fixed_cdf + 0.01)

    def test_degenerate(self):
        cfg = SystemConfig(n=2, m=2)
        h = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
        real = ChannelRealization.from_estimate_error(h, np.zeros((2, 2)))
        with pytest.raises(DegenerateRealizationError):
            zf_sindr_profile(cfg, real, detection_order(h, Ordering.FIXED))


class TestDecoding:

    @pytest.mark.parametrize('ordering', [Ordering.FOSCHINI, Ordering.FIXED])
    def test_noiseless_recovery(self, ordering):
        cfg = SystemConfig(n=4, m=4, p=2.0)
        rng = np.random.default_rng(13)
        mod = ModulationSpec.qam(16)
        real = sample_realization(cfg, rng)
        _, s = draw_symbols(cfg, mod, rng)
        y = sample_received(cfg, real.h, s, rng, suppress_thermal_noise=True)
        decoded = zf_sic_decode(cfg, y, real, detection_order(real.h_hat, ordering), mod)
        np.testing.assert_allclose(decoded, s, atol=1e-10)

    def test_genie_matches_decisions_at_high_snr(self):
        cfg = SystemConfig(n=4, m=3, p=1e5)
        rng = np.random.default_rng(14)
        mod = ModulationSpec.bpsk()
        h, delta_h = sample_channels(cfg, rng, 200)
        sent, s = draw_symbols(cfg, mod, rng, 200)
        y = sample_received(cfg, h, s, rng)
        perms = order_permutations(h, Ordering.FOSCHINI)
        decided = zf_decode_batch(cfg, y, h, perms, mod)
        genie = zf_decode_batch(cfg, y, h, perms, mod, genie=sent)
        np.testing.assert_array_equal(decided, genie)
        assert np.mean(decided != sent) < 0.01

    def test_order_matches_permuted_columns(self):
        cfg = SystemConfig(n=4, m=3).with_snr_db(6.0)
        rng = np.random.default_rng(15)
        mod = ModulationSpec.qpsk()
        h, delta_h = sample_channels(cfg, rng, 300)
        _, s = draw_symbols(cfg, mod, rng, 300)
        y = sample_received(cfg, h, s, rng)
        perms = order_permutations(h, Ordering.FOSCHINI)
        ordered = zf_decode_batch(cfg, y, h, perms, mod)
        identity = np.broadcast_to(np.arange(cfg.m), perms.shape)
        permuted = np.take_along_axis(h, perms[:, np.newaxis, :], axis=-1)
        plain = zf_decode_batch(cfg, y, permuted, identity, mod)
        np.testing.assert_array_equal(np.take_along_axis(ordered, perms, axis=-1), plain)
