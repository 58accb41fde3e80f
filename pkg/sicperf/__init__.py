from sicperf.src.channel import ChannelRealization, ConfigError, ModulationSpec, SystemConfig
from sicperf.src.matcore import QrFactors, col_norms_sq, qr_decompose, solve_hpd
from sicperf.src.zf_sic import (ChannelBasis, DetectionOrder, Ordering, Scheme, SindrProfile,
                                detection_order, zf_sic_decode, zf_sindr_profile)
from sicperf.src.mmse_sic import mmse_sic_decode, mmse_sindr_profile, stage_sindr, stage_sindr_direct

from sicperf.src.analytic import (Indexing, OrderedLayerCoefficients, OutageQuery, mmse_outage,
                                  mmse_outage_floor, rii_tail, xi_coefficients, zf_outage, zf_outage_floor)
from sicperf.src.error_prop import AsepQuery, conditional_asep, overall_asep, zf_asep_closed, mmse_asep_closed
from sicperf.src.montecarlo import Feedback, OutageEstimate, estimate_outage, estimate_ser

from sicperf.src.experiment import ExperimentSpec, SpecError, figure_preset, run_experiment
