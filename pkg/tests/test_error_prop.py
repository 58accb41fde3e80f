import logging
import math

import numpy as np
import pytest

from sicperf.src.analytic import UnsupportedModeError
from sicperf.src.channel import ModulationSpec, SystemConfig
from sicperf.src.error_prop import (AsepQuery, MmseLimit, asep_profile, conditional_asep, mmse_asep_closed,
                                    overall_asep, stage_asep, total_asep, zf_asep_closed)
from sicperf.src.montecarlo import estimate_ser
from sicperf.src.zf_sic import Ordering, Scheme

BPSK = ModulationSpec.bpsk()


def _rayleigh_bpsk(branches, mean_snr):
    # average Q(√(2γ)) over γ ~ Gamma(branches, mean_snr)
    mu = math.sqrt(mean_snr/(1.0 + mean_snr))
    return ((1.0 - mu)/2.0)**branches*sum(math.comb(branches - 1 + k, k)*((1.0 + mu)/2.0)**k
                                         for k in range(branches))


class TestConditionalAsep:

    def test_certain_outage(self):
        q = AsepQuery(BPSK, Scheme.ZF, SystemConfig(n=2, m=2))
        assert conditional_asep(q, 1, lambda x: 1.0) == pytest.approx(0.5, abs=1e-9)
        assert conditional_asep(q, 1, lambda x: 0.0) == 0.0
        qpsk = AsepQuery(ModulationSpec.qpsk(), Scheme.ZF, SystemConfig(n=2, m=2))
        assert conditional_asep(qpsk, 1, lambda x: 1.0) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize('scheme', [Scheme.ZF, Scheme.MMSE])
    def test_single_stream_is_mrc(self, scheme):
        cfg = SystemConfig(n=2, m=1, p=10.0)
        q = AsepQuery(BPSK, scheme, cfg)
        assert conditional_asep(q, 1) == pytest.approx(_rayleigh_bpsk(2, 10.0), abs=1e-6)

    def test_decreases_with_snr(self):
        cfg = SystemConfig(n=4, m=2, kappa_t=0.08, kappa_r=0.08, omega=0.05)
        for scheme in (Scheme.ZF, Scheme.MMSE):
            values = [conditional_asep(AsepQuery(BPSK, scheme, cfg.with_snr_db(snr)), 1)
                      for snr in (0.0, 5.0, 10.0, 15.0)]
            assert np.all(np.diff(values) < 0.0)
            assert all(0.0 <= v <= 0.5 for v in values)


class TestIntegrationLimit:

    def test_zf(self):
        assert AsepQuery(BPSK, Scheme.ZF, SystemConfig(n=2, m=2, kappa_t=0.1)).z_limit == pytest.approx(100.0)
        assert AsepQuery(BPSK, Scheme.ZF, SystemConfig(n=2, m=2)).z_limit == math.inf

    def test_mmse_choice(self, caplog):
        cfg = SystemConfig(n=4, m=2, kappa_t=0.175, kappa_r=0.1, omega=0.1)
        with caplog.at_level(logging.INFO):
            receiver = AsepQuery(BPSK, Scheme.MMSE, cfg)
        assert 'receiver bound' in caplog.text
        transmitter = AsepQuery(BPSK, Scheme.MMSE, cfg, mmse_limit=MmseLimit.TRANSMITTER)
        assert receiver.z_limit == pytest.approx(1.0/(0.01*1.1 + 0.1))
        assert transmitter.z_limit == pytest.approx(1.0/(0.175**2*1.1 + 0.1))

    def test_default_ordering(self):
        cfg = SystemConfig(n=2, m=2)
        assert AsepQuery(BPSK, Scheme.ZF, cfg).ordering == Ordering.FOSCHINI
        assert AsepQuery(BPSK, Scheme.MMSE, cfg).ordering == Ordering.FIXED


class TestOverallAsep:

    def test_single_layer(self):
        q = AsepQuery(ModulationSpec.qpsk(), Scheme.ZF, SystemConfig(n=2, m=1))
        assert overall_asep(q, [0.2]) == pytest.approx(0.75*0.2)

    def test_error_free(self):
        q = AsepQuery(BPSK, Scheme.ZF, SystemConfig(n=3, m=3))
        assert overall_asep(q, [0.0, 0.0, 0.0]) == 0.0

    def test_two_layers(self):
        q = AsepQuery(BPSK, Scheme.ZF, SystemConfig(n=2, m=2))
        first, second = 0.1, 0.3
        # layer 2 is decoded first and corrupts layer 1 when wrong
        expected = 0.5/2.0*(first*(1.0 - second) + 2.0*second)
        assert overall_asep(q, [first, second]) == pytest.approx(expected)

    def test_invalid(self):
        q = AsepQuery(BPSK, Scheme.ZF, SystemConfig(n=2, m=2))
        with pytest.raises(ValueError):
            overall_asep(q, [0.1, 1.5])


class TestClosedForms:

    def test_zf_matches_quadrature(self):
        cfg = SystemConfig(n=4, m=4, kappa_r=0.1, omega=0.05).with_snr_db(10.0)
        q = AsepQuery(BPSK, Scheme.ZF, cfg)
        closed = zf_asep_closed(cfg, 1, BPSK)
        assert closed == pytest.approx(conditional_asep(q, 4), rel=1e-5, abs=1e-9)

    def test_zf_matches_quadrature_for_qpsk(self):
        mod = ModulationSpec.qpsk()
        cfg = SystemConfig(n=4, m=2, kappa_r=0.08, omega=0.1).with_snr_db(5.0)
        q = AsepQuery(mod, Scheme.ZF, cfg)
        for layer in (1, 2):
            assert zf_asep_closed(cfg, layer, mod) == pytest.approx(conditional_asep(q, 3 - layer),
                                                                    rel=1e-5, abs=1e-9)

    def test_zf_ideal_fixed_order(self):
        cfg = SystemConfig(n=3, m=2, p=10.0)
        for layer in (1, 2):
            expected = _rayleigh_bpsk(cfg.n - layer + 1, cfg.snr)
            assert zf_asep_closed(cfg, layer, BPSK, Ordering.FIXED) == pytest.approx(expected, rel=1e-8)

    def test_mmse_matches_quadrature(self):
        cfg = SystemConfig(n=8, m=4, kappa_r=0.1).with_snr_db(5.0)
        q = AsepQuery(BPSK, Scheme.MMSE, cfg)
        for stage in (1, 3):
            assert mmse_asep_closed(cfg, stage, BPSK) == pytest.approx(conditional_asep(q, stage),
                                                                       rel=1e-6, abs=1e-10)

    def test_mmse_ideal_matches_quadrature(self):
        cfg = SystemConfig(n=3, m=3, p=4.0)
        q = AsepQuery(ModulationSpec.qpsk(), Scheme.MMSE, cfg)
        assert mmse_asep_closed(cfg, 1, q.mod) == pytest.approx(conditional_asep(q, 1), rel=1e-6)

    def test_preconditions(self):
        with pytest.raises(UnsupportedModeError):
            zf_asep_closed(SystemConfig(n=2, m=2, kappa_t=0.1), 1, BPSK)
        with pytest.raises(UnsupportedModeError):
            mmse_asep_closed(SystemConfig(n=4, m=2, omega=0.1), 1, BPSK)
        with pytest.raises(UnsupportedModeError):
            mmse_asep_closed(SystemConfig(n=4, m=2), 2, BPSK)


class TestProfiles:

    def test_layer_order(self):
        cfg = SystemConfig(n=4, m=3, p=10.0)
        q = AsepQuery(BPSK, Scheme.ZF, cfg, Ordering.FIXED)
        profile = asep_profile(q)
        assert len(profile) == 3
        # with fixed order layer i sees diversity n-i+1
        assert np.all(np.diff(profile) > 0.0)
        assert profile[0] == pytest.approx(stage_asep(q, 3))
        assert total_asep(q) == pytest.approx(overall_asep(q, profile))

    def test_stage_dispatch(self):
        cfg = SystemConfig(n=4, m=2, kappa_t=0.08, kappa_r=0.08, omega=0.1).with_snr_db(10.0)
        q = AsepQuery(BPSK, Scheme.MMSE, cfg)
        for stage in (1, 2):
            assert stage_asep(q, stage) == conditional_asep(q, stage)
        clean = AsepQuery(BPSK, Scheme.MMSE, cfg.with_values(kappa_t=0.0, omega=0.0))
        assert stage_asep(clean, 1) == mmse_asep_closed(clean.cfg, 1, BPSK)

    def test_total_is_bounded(self):
        cfg = SystemConfig(n=4, m=4, kappa_r=0.1, omega=0.1).with_snr_db(5.0)
        for scheme in (Scheme.ZF, Scheme.MMSE):
            q = AsepQuery(BPSK, scheme, cfg)
            value = total_asep(q)
            assert 0.0 < value <= 0.5*np.max(asep_profile(q))*(cfg.m + 1)/2.0 + 1e-12

    @pytest.mark.slow
    @pytest.mark.parametrize('snr_db', [5.0, 10.0, 15.0])
    def test_total_tracks_decision_feedback_ser(self, snr_db):
        cfg = SystemConfig(n=4, m=4).with_snr_db(snr_db)
        q = AsepQuery(BPSK, Scheme.ZF, cfg)
        simulated = estimate_ser(cfg, Scheme.ZF, BPSK, trials=200000, seed=11)
        assert overall_asep(q, asep_profile(q)) == pytest.approx(simulated.overall.value, rel=0.25)
