#===============================================================================
#
#  SIC receiver performance tools
#
#  Copyright (c) 2026  sicperf developers
#
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.
#
#===============================================================================

"""
Average symbol error probability (ASEP) of SIC receivers.

The conditional ASEP of a stage averages ``𝓐 Q(√(2𝓑x))`` over the stage
SINDR through its outage CDF; the overall ASEP combines the per-layer values
with a model in which an error at layer ``t`` corrupts all ``t`` symbols
decoded from it onwards.
"""

#===============================================================================

from __future__ import annotations
from dataclasses import dataclass
from enum import Enum
import logging as log
import math
from typing import Callable, Sequence
import warnings

#===============================================================================

import numpy as np
import numpy.typing as npt
import scipy.integrate
from scipy.special import gammaln, logsumexp

#===============================================================================

from sicperf.src.analytic import (Indexing, OutageQuery, UnsupportedModeError,
                                  mmse_validity_limit, outage, xi_coefficients)
from sicperf.src.channel import ModulationSpec, SystemConfig
from sicperf.src.specfun import AccuracyError, TricomiParams, log_sum_signed, log_tricomi_u
from sicperf.src.zf_sic import Ordering, Scheme

#===============================================================================

QUADRATURE_TOLERANCE = 1e-8
GAUSSIAN_CUTOFF = 60.0          # e^{-𝓑x} below e^{-60} is dropped

#===============================================================================

class MmseLimit(Enum):
    RECEIVER    = 'receiver'        # 1/(κ_R²(ω+1)+ω)
    TRANSMITTER = 'transmitter'     # 1/(κ_T²(ω+1)+ω), the outage validity limit

#===============================================================================

@dataclass(frozen=True)
class AsepQuery:
    mod: ModulationSpec
    scheme: Scheme
    cfg: SystemConfig
    ordering: Ordering | None = None
    mmse_limit: MmseLimit = MmseLimit.RECEIVER

    def __post_init__(self):
        if self.ordering is None:
            object.__setattr__(self, 'ordering',
                               Ordering.FOSCHINI if self.scheme == Scheme.ZF else Ordering.FIXED)
        if self.scheme == Scheme.MMSE:
            receiver = self.__mmse_limit(MmseLimit.RECEIVER)
            transmitter = self.__mmse_limit(MmseLimit.TRANSMITTER)
            if receiver != transmitter:
                log.info(f'MMSE integration limit uses the {self.mmse_limit.value} bound '
                            f'({self.z_limit:.6g}); the other bound is '
                            f'{transmitter if self.mmse_limit == MmseLimit.RECEIVER else receiver:.6g}')

    def __mmse_limit(self, choice: MmseLimit) -> float:
        if choice == MmseLimit.TRANSMITTER:
            return mmse_validity_limit(self.cfg.kappa_t, self.cfg.omega)
        return mmse_validity_limit(self.cfg.kappa_r, self.cfg.omega)

    @property
    def z_limit(self) -> float:
        """
        Upper SINDR limit of the conditional ASEP integral.
        """
        if self.scheme == Scheme.ZF:
            return 1.0/self.cfg.kappa_t**2 if self.cfg.kappa_t > 0 else math.inf
        return self.__mmse_limit(self.mmse_limit)

    def outage_function(self, stage: int) -> Callable[[float], float]:
    #==================================================================
        query = OutageQuery(1.0, stage, Indexing.SIC_STAGE, self.ordering, self.scheme)
        return lambda threshold: outage(self.cfg, query.with_threshold(threshold))

#===============================================================================

def conditional_asep(q: AsepQuery, i: int, outage_fn: Callable[[float], float] | None = None) -> float:
    """
    ASEP of SIC stage ``i`` given correct earlier decisions:

        (𝓐√𝓑 / 2√π) ∫₀^𝒵 e^{-𝓑x} x^{-1/2} P_out(x) dx

    integrated over ``u = √x``. ``outage_fn`` defaults to the closed-form
    outage CDF of the stage.
    """
    if outage_fn is None:
        outage_fn = q.outage_function(i)
    a_const, b_const = q.mod.a_const, q.mod.b_const
    upper = min(math.sqrt(q.z_limit), math.sqrt(GAUSSIAN_CUTOFF/b_const))

    def integrand(u: float) -> float:
        x = u*u
        if x <= 0.0:
            return 0.0
        return math.exp(-b_const*x)*outage_fn(x)

    with warnings.catch_warnings():
        warnings.simplefilter('ignore', scipy.integrate.IntegrationWarning)
        value, error = scipy.integrate.quad(integrand, 0.0, upper, epsabs=0.01*QUADRATURE_TOLERANCE,
                                            epsrel=1e-10, limit=200)
    scale = a_const*math.sqrt(b_const)/math.sqrt(math.pi)
    if error*scale > QUADRATURE_TOLERANCE:
        log.error(f'ASEP quadrature for stage {i} did not converge: {scale*value} ± {scale*error}')
        raise AccuracyError(f'ASEP quadrature for stage {i} did not converge', scale*value, scale*error)
    return float(np.clip(scale*value, 0.0, a_const/2.0))

def overall_asep(q: AsepQuery, per_layer_asep: Sequence[float]) -> float:
    """
    Combine per-layer ASEPs, listed by decoding layer (layer ``m`` is decoded
    first), into the overall ASEP:

        (1 - 1/𝓜)/m · Σ_t t·P̄_t·Π_{l>t}(1 - P̄_l)
    """
    values = np.asarray(per_layer_asep, dtype=float)
    if np.any(values < 0.0) or np.any(values > 1.0):
        raise ValueError(f'Per-layer ASEP values must lie in [0, 1]: {values}')
    m = len(values)
    survival = np.append(np.cumprod((1.0 - values)[::-1])[::-1][1:], 1.0)
    weighted = np.arange(1, m + 1)*values*survival
    return (1.0 - 1.0/q.mod.states)/m*math.fsum(weighted)

#===============================================================================

def _log_gamma_expectation(nu: int, rate: float, base: float, p: float, omega: float,
                           b_const: float, m: int) -> float:
    # log E_Y[W^ν (𝓑 + rate·W)^{-ν-1/2}], W = base + p·Y, Y ~ Gamma(m, ω)
    if omega == 0:
        return nu*math.log(base) - (nu + 0.5)*math.log(b_const + rate*base)
    slope = rate*p*omega
    shift = (b_const + rate*base)/slope
    logs = []
    for v in range(nu + 1):
        a_param = v + m
        log_u = log_tricomi_u(TricomiParams(a_param, a_param - nu + 0.5, shift))
        logs.append(gammaln(nu + 1) - gammaln(v + 1) - gammaln(nu - v + 1)
                    + (nu - v)*math.log(base) + v*math.log(p*omega)
                    - (nu + 0.5)*math.log(slope) + (a_param - nu - 0.5)*math.log(shift)
                    + gammaln(a_param) - gammaln(m) + log_u)
    return float(logsumexp(logs))

def zf_asep_closed(cfg: SystemConfig, i: int, mod: ModulationSpec,
                   ordering: Ordering = Ordering.FOSCHINI) -> float:
    """
    Closed-form conditional ASEP of ZF-SIC decoding layer ``i`` with a clean
    transmitter (κ_T = 0), imperfect CSI and an impaired receiver.
    """
    if cfg.kappa_t != 0:
        raise UnsupportedModeError('Closed-form ZF-SIC ASEP needs kappa_t = 0')
    coeffs = xi_coefficients(i, cfg.n, cfg.m, cfg.p, ordering)
    base = cfg.p*cfg.kappa_r**2*cfg.m + cfg.n0
    b_const = mod.b_const
    signs = []
    logs = []
    for sign, log_mag, mu, rate in zip(coeffs.signs, coeffs.log_mags, coeffs.mus, coeffs.rates):
        inner = [gammaln(mu + 1) - gammaln(nu + 1) - (mu - nu + 1)*math.log(rate) + gammaln(nu + 0.5)
                 + _log_gamma_expectation(nu, rate, base, cfg.p, cfg.omega, b_const, cfg.m)
                    for nu in range(mu + 1)]
        signs.append(sign)
        logs.append(log_mag + float(logsumexp(inner)))
    covered, ratio = log_sum_signed(signs, logs)
    if ratio > 1e10:
        log.warning(f'Cancellation ratio {ratio:.3g} in ZF-SIC ASEP of layer {i}')
    value = mod.a_const/2.0*(1.0 - math.sqrt(b_const/math.pi)*covered)
    return float(np.clip(value, 0.0, mod.a_const/2.0))

def mmse_asep_closed(cfg: SystemConfig, i: int, mod: ModulationSpec) -> float:
    """
    Closed-form conditional ASEP of MMSE-SIC stage ``i < m`` with a clean
    transmitter, perfect CSI and an impaired receiver.
    """
    if cfg.kappa_t != 0 or cfg.omega != 0:
        raise UnsupportedModeError('Closed-form MMSE-SIC ASEP needs kappa_t = 0 and omega = 0')
    if not 1 <= i < cfg.m:
        raise UnsupportedModeError(f'Closed-form MMSE-SIC ASEP covers stages 1..{cfg.m - 1}, got {i}')
    n = cfg.n
    interferers = cfg.m - i
    b_const = mod.b_const
    d = cfg.receiver_noise
    shift = b_const + d
    direct = math.fsum(math.exp(k*math.log(d) + gammaln(k + 0.5) - gammaln(k + 1) - (k + 0.5)*math.log(shift))
                        for k in range(n))
    correction = []
    for k in range(n - interferers + 1, n + 1):
        for j in range(n - k + 1, interferers + 1):
            alpha = k + j - 0.5
            correction.append(math.comb(interferers, j)*math.exp(
                (k - 1)*math.log(d) - gammaln(k) + gammaln(alpha)
                + log_tricomi_u(TricomiParams(alpha, alpha + 1 - interferers, shift))))
    value = mod.a_const/2.0*(1.0 - math.sqrt(b_const/math.pi)*(direct - math.fsum(correction)))
    return float(np.clip(value, 0.0, mod.a_const/2.0))

#===============================================================================

def _closed_form_applies(q: AsepQuery, stage: int) -> bool:
    cfg = q.cfg
    if q.scheme == Scheme.ZF:
        return cfg.kappa_t == 0
    return cfg.kappa_t == 0 and cfg.omega == 0 and stage < cfg.m

def stage_asep(q: AsepQuery, stage: int) -> float:
    """
    Conditional ASEP of SIC stage ``stage``, from a closed form where one
    applies and by quadrature otherwise.
    """
    if not _closed_form_applies(q, stage):
        return conditional_asep(q, stage)
    if q.scheme == Scheme.ZF:
        return zf_asep_closed(q.cfg, q.cfg.m - stage + 1, q.mod, q.ordering)
    return mmse_asep_closed(q.cfg, stage, q.mod)

def asep_profile(q: AsepQuery) -> npt.NDArray[np.float64]:
    """
    Conditional ASEP of every decoding layer; index ``i-1`` holds layer ``i``.
    """
    m = q.cfg.m
    return np.array([stage_asep(q, m - layer + 1) for layer in range(1, m + 1)])

def total_asep(q: AsepQuery) -> float:
#=====================================
    return overall_asep(q, asep_profile(q))

#===============================================================================
