import numpy as np
import pytest
from scipy.optimize import brentq

from sicperf.src.analytic import Indexing, OutageQuery, UnsupportedModeError, mmse_outage
from sicperf.src.channel import ModulationSpec, SystemConfig
from sicperf.src.error_prop import AsepQuery, stage_asep
from sicperf.src.montecarlo import (Feedback, OutageEstimate, SimulationMode, chunk_generator,
                                    estimate_outage, estimate_ser, wilson_interval)
from sicperf.src.zf_sic import Ordering, Scheme


class TestWilsonInterval:

    def test_no_events(self):
        for trials in (1000, 10000, 1000000):
            low, high = wilson_interval(0, trials)
            assert low == 0.0
            assert 0.0 < high <= 3.85/trials

    def test_coverage(self):
        rng = np.random.default_rng(41)
        covered = 0
        for events in rng.binomial(1000, 0.1, size=200):
            low, high = wilson_interval(int(events), 1000)
            covered += low <= 0.1 <= high
        assert 180 <= covered <= 198

    def test_estimate(self):
        estimate = OutageEstimate.from_counts(25, 1000, 3, SimulationMode.FORMULA_SAMPLING)
        assert estimate.value == 0.025
        assert estimate.ci_low < 0.025 < estimate.ci_high
        assert estimate.ci_width == pytest.approx(estimate.ci_high - estimate.ci_low)


def test_chunk_streams_are_independent():
    first = chunk_generator(7, 0).standard_normal(4)
    np.testing.assert_array_equal(first, chunk_generator(7, 0).standard_normal(4))
    assert not np.allclose(first, chunk_generator(7, 1).standard_normal(4))
    assert not np.allclose(first, chunk_generator(7, 0, 1).standard_normal(4))


class TestOutageEstimate:

    def test_tiny_threshold(self):
        cfg = SystemConfig(n=4, m=2, p=10.0, kappa_t=0.08, kappa_r=0.08, omega=0.1)
        q = OutageQuery(1e-9, 1, ordering=Ordering.FOSCHINI)
        estimate = estimate_outage(cfg, q, trials=5000, seed=1)
        assert estimate.value == 0.0
        assert estimate.trials == 5000

    def test_reproducible_across_workers(self):
        cfg = SystemConfig(n=4, m=4, p=10.0, kappa_t=0.1, kappa_r=0.1, omega=0.05)
        q = OutageQuery(2.0, 2, ordering=Ordering.FOSCHINI)
        results = [estimate_outage(cfg, q, trials=35000, seed=11, workers=workers).events
                   for workers in (1, 2, 8)]
        assert results[0] == results[1] == results[2]
        assert estimate_outage(cfg, q, trials=35000, seed=12).events != results[0]

    def test_mmse_median(self):
        cfg = SystemConfig(n=3, m=1, p=5.0)
        q = OutageQuery(1.0, 1, scheme=Scheme.MMSE)
        median = brentq(lambda g: mmse_outage(cfg, q.with_threshold(g)) - 0.5, 1e-3, 1e3, xtol=1e-12)
        estimate = estimate_outage(cfg, q.with_threshold(median), trials=100000, seed=2)
        assert estimate.value == pytest.approx(0.5, abs=estimate.ci_width)

    def test_errors(self):
        cfg = SystemConfig(n=2, m=2)
        with pytest.raises(ValueError):
            estimate_outage(cfg, OutageQuery(1.0, 1), trials=10)
        with pytest.raises(UnsupportedModeError):
            estimate_outage(cfg, OutageQuery(1.0, 1, Indexing.SIC_STAGE, Ordering.FOSCHINI, Scheme.MMSE),
                            trials=1000)
        with pytest.raises(UnsupportedModeError):
            estimate_outage(cfg, OutageQuery(1.0, 1), trials=1000, mode=SimulationMode.LINK_LEVEL)


class TestSymbolErrorRate:

    @pytest.mark.parametrize('scheme', [Scheme.ZF, Scheme.MMSE])
    def test_noiseless(self, scheme):
        cfg = SystemConfig(n=4, m=3, p=1e6)
        ser = estimate_ser(cfg, scheme, ModulationSpec.qpsk(), trials=2000, seed=3,
                           suppress_thermal_noise=True)
        assert ser.overall.value == 0.0
        assert all(stage.value == 0.0 for stage in ser.per_stage)

    @pytest.mark.parametrize('scheme', [Scheme.ZF, Scheme.MMSE])
    def test_no_signal(self, scheme):
        cfg = SystemConfig(n=2, m=2).with_snr_db(-50.0)
        ser = estimate_ser(cfg, scheme, ModulationSpec.bpsk(), trials=20000, seed=4)
        assert ser.overall.value == pytest.approx(0.5, abs=0.01)
        assert ser.overall.trials == 40000

    @pytest.mark.slow
    def test_genie_zf_matches_asep(self):
        mod = ModulationSpec.bpsk()
        cfg = SystemConfig(n=4, m=2, kappa_r=0.1).with_snr_db(5.0)
        ser = estimate_ser(cfg, Scheme.ZF, mod, trials=100000, seed=5, feedback=Feedback.GENIE)
        q = AsepQuery(mod, Scheme.ZF, cfg)
        for stage in (1, 2):
            estimate = ser.stage(stage)
            assert estimate.value == pytest.approx(stage_asep(q, stage), abs=estimate.ci_width + 1e-3)

    def test_mmse_first_stage_beats_zf(self):
        cfg = SystemConfig(n=4, m=2, kappa_t=0.08, omega=0.1).with_snr_db(15.0)
        mod = ModulationSpec.bpsk()
        zf = estimate_ser(cfg, Scheme.ZF, mod, trials=100000, seed=7, ordering=Ordering.FIXED)
        mmse = estimate_ser(cfg, Scheme.MMSE, mod, trials=100000, seed=7)
        assert mmse.stage(1).value <= zf.stage(1).value

    def test_decision_feedback_is_worse(self):
        cfg = SystemConfig(n=4, m=4, kappa_t=0.08, kappa_r=0.08, omega=0.05).with_snr_db(5.0)
        mod = ModulationSpec.bpsk()
        genie = estimate_ser(cfg, Scheme.ZF, mod, trials=20000, seed=6, feedback=Feedback.GENIE)
        decision = estimate_ser(cfg, Scheme.ZF, mod, trials=20000, seed=6)
        assert decision.stage(1).value == genie.stage(1).value
        assert decision.overall.value >= genie.overall.value

    def test_errors(self):
        cfg = SystemConfig(n=2, m=2)
        with pytest.raises(ValueError):
            estimate_ser(cfg, Scheme.ZF, ModulationSpec.bpsk(), trials=100)
        with pytest.raises(UnsupportedModeError):
            estimate_ser(cfg, Scheme.MMSE, ModulationSpec.bpsk(), trials=1000, ordering=Ordering.FOSCHINI)
