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
Closed-form outage probabilities of ZF-SIC and MMSE-SIC under transceiver
impairments and imperfect CSI, with their floors and high-SNR asymptotes.

ZF results are indexed by decoding layer ``i`` (layer ``m`` is decoded
first); MMSE results by SIC stage. ``OutageQuery`` converts between the two.
"""

#===============================================================================

from __future__ import annotations
from collections import defaultdict
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
import logging as log
import math

#===============================================================================

import numpy as np
import numpy.typing as npt
from scipy.special import gammainc, gammaincc, gammaln, logsumexp

#===============================================================================

from sicperf.src.channel import SystemConfig
from sicperf.src.specfun import TricomiParams, log_beta, log_sum_signed, log_tricomi_u
from sicperf.src.zf_sic import Ordering, Scheme

#===============================================================================

MAX_ANTENNAS = 8
CANCELLATION_LIMIT = 1e10
FORM_AGREEMENT = 1e-8

#===============================================================================

class QueryError(ValueError):
    pass

class UnsupportedSizeError(ValueError):
    pass

class UnsupportedModeError(ValueError):
    pass

class ConsistencyError(ArithmeticError):
    pass

#===============================================================================

class Indexing(Enum):
    SIC_STAGE      = 'sic_stage'
    DECODING_LAYER = 'decoding_layer'

class ZfOutageMode(str, Enum):
    GENERAL     = 'general'
    PERFECT_CSI = 'perfect_csi'
    IDEAL       = 'ideal'

class ZfFloorMode(str, Enum):
    GENERAL  = 'general'
    CSI_ONLY = 'csi_only'
    HW_ONLY  = 'hw_only'
    EXACT    = 'exact'

class MmseOutageMode(str, Enum):
    GENERAL = 'general'
    IDEAL   = 'ideal'

class MmseFloorMode(str, Enum):
    FLOOR             = 'floor'
    TX_ONLY_ASYMPTOTE = 'tx_only_asymptote'

#===============================================================================

@dataclass(frozen=True)
class OutageQuery:
    gamma_th: float
    index: int
    indexing: Indexing = Indexing.SIC_STAGE
    ordering: Ordering = Ordering.FIXED
    scheme: Scheme = Scheme.ZF

    def __post_init__(self):
        if not self.gamma_th > 0:
            raise QueryError(f'Outage threshold must be positive, got {self.gamma_th}')
        if self.index < 1:
            raise QueryError(f'Stage/layer index must be at least 1, got {self.index}')

    def __check(self, m: int):
        if self.index > m:
            raise QueryError(f'Index {self.index} exceeds the number of streams {m}')

    def layer(self, m: int) -> int:
        self.__check(m)
        return self.index if self.indexing == Indexing.DECODING_LAYER else m - self.index + 1

    def stage(self, m: int) -> int:
        self.__check(m)
        return self.index if self.indexing == Indexing.SIC_STAGE else m - self.index + 1

    def with_threshold(self, gamma_th: float) -> OutageQuery:
        return replace(self, gamma_th=gamma_th)

#===============================================================================

@dataclass(frozen=True)
class DensityTerm:
    sign: float
    log_mag: float
    mu: int
    rate: float

@dataclass(frozen=True)
class OrderedLayerCoefficients:
    """
    Density of ``p r_ii²`` as ``Σ sign·exp(log_mag)·x^mu·exp(-rate·x)``.

    ``expansion_size`` counts the terms of the unmerged expansion; terms
    sharing ``(mu, rate)`` are stored merged.
    """
    signs: npt.NDArray[np.float64]
    log_mags: npt.NDArray[np.float64]
    mus: npt.NDArray[np.int64]
    rates: npt.NDArray[np.float64]
    i: int
    n: int
    m: int
    p: float
    ordering: Ordering
    expansion_size: int

    @property
    def terms(self) -> list[DensityTerm]:
        return [DensityTerm(float(s), float(g), int(u), float(r))
                    for s, g, u, r in zip(self.signs, self.log_mags, self.mus, self.rates)]

    def scaled(self, p: float) -> OrderedLayerCoefficients:
    #=======================================================
        return replace(self, log_mags=self.log_mags - (self.mus + 1)*math.log(p),
                             rates=self.rates/p, p=self.p*p)

    def density(self, x) -> npt.NDArray[np.float64]:
    #===============================================
        x = np.atleast_1d(np.asarray(x, dtype=float))
        with np.errstate(divide='ignore', invalid='ignore'):
            log_x = np.log(x)[:, np.newaxis]
            powers = np.where(self.mus == 0, 0.0, self.mus*log_x)
        values = self.signs*np.exp(self.log_mags + powers - self.rates*x[:, np.newaxis])
        return np.sum(values, axis=-1)

    def total_probability(self) -> float:
    #====================================
        total, _ = log_sum_signed(self.signs, self.__log_moments())
        return total

    def tail(self, z: float) -> float:
    #=================================
        if z < 0:
            raise QueryError(f'Tail argument must be non-negative, got {z}')
        survival = gammaincc(self.mus + 1, self.rates*z)
        with np.errstate(divide='ignore'):
            logs = self.__log_moments() + np.log(survival)
        total, ratio = log_sum_signed(self.signs, logs)
        _check_cancellation(ratio, f'layer {self.i} tail')
        return float(np.clip(total, 0.0, 1.0))

    def small_argument_coefficient(self) -> tuple[float, int]:
        """
        ``(K, N)`` with ``Pr[p r_ii² ≤ t] ≈ K t^N`` as ``t → 0``.
        """
        lowest = int(self.mus.min())
        mask = self.mus == lowest
        value, _ = log_sum_signed(self.signs[mask], self.log_mags[mask])
        return value/(lowest + 1), lowest + 1

    def __log_moments(self) -> npt.NDArray[np.float64]:
        # log of ∫₀^∞ x^mu e^{-rate x} dx for each term
        return self.log_mags + gammaln(self.mus + 1) - (self.mus + 1)*np.log(self.rates)

#===============================================================================

def _check_cancellation(ratio: float, context: str):
    if ratio > CANCELLATION_LIMIT:
        log.warning(f'Cancellation ratio {ratio:.3g} in {context}: result may be inaccurate')

def _log_binomial(n: int, k: int) -> float:
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))

@lru_cache(maxsize=None)
def _truncated_exp_power(q: int, n: int) -> tuple[tuple[int, float, int], ...]:
    """
    Coefficients of ``y^phi`` in ``(Σ_{t<n} y^t/t!)^q`` as ``(phi, log coefficient,
    lattice points)``, enumerated over weakly decreasing sequences
    ``q = ρ₀ ≥ ρ₁ ≥ … ≥ ρ_{n-1} ≥ ρ_n = 0`` with ``phi = Σ ρ_t``.
    """
    log_factorial = gammaln(np.arange(max(q, n) + 1) + 1.0)
    collected = defaultdict(list)

    def walk(t: int, previous: int, phi: int, log_weight: float):
        # ρ_{t-1} - ρ_t factors take exponent t-1
        if t == n:
            collected[phi].append(log_weight - log_factorial[previous] - previous*log_factorial[n - 1])
            return
        for rho in range(previous + 1):
            count = previous - rho
            walk(t + 1, rho, phi + rho,
                 log_weight - log_factorial[count] - count*log_factorial[t - 1])

    walk(1, q, 0, log_factorial[q])
    return tuple((phi, float(logsumexp(weights)), len(weights))
                    for phi, weights in sorted(collected.items()))

@lru_cache(maxsize=None)
def _unit_coefficients(i: int, n: int, m: int, ordering: Ordering) -> OrderedLayerCoefficients:
    if ordering == Ordering.FIXED or m == 1:
        return OrderedLayerCoefficients(np.ones(1), np.array([-float(gammaln(n - i + 1))]),
                                        np.array([n - i]), np.ones(1),
                                        i, n, m, 1.0, ordering, 1)
    # r_ii² is the i-th smallest of m Gamma(n, 1) column norms times an
    # independent Beta(n-i+1, i-1) projection factor (no factor for i = 1)
    log_order = float(gammaln(m + 1) - gammaln(i) - gammaln(m - i + 1) - gammaln(n))
    log_projection = log_beta(n - i + 1, i - 1) if i > 1 else 0.0
    groups = defaultdict(list)
    size = 0
    for l in range(i):
        power = l + m - i
        rate = m - i + 1 + l
        log_l = log_order + _log_binomial(i - 1, l)
        for k, log_s, points in _truncated_exp_power(power, n):
            log_c = log_l + log_s
            if i == 1:
                groups[(n - 1 + k, rate)].append(log_c)
                size += points
                continue
            for r in range(k + 1):
                groups[(n + k - r - i, rate)].append(log_c + _log_binomial(k, r) + gammaln(r + i - 1)
                                                     - (r + i - 1)*math.log(rate) - log_projection)
            size += points*(k + 1)
    keys = sorted(groups)
    return OrderedLayerCoefficients(
        np.array([(-1.0)**(rate - (m - i + 1)) for _, rate in keys]),
        np.array([float(logsumexp(groups[key])) for key in keys]),
        np.array([mu for mu, _ in keys], dtype=np.int64),
        np.array([float(rate) for _, rate in keys]),
        i, n, m, 1.0, ordering, size)

@lru_cache(maxsize=1024)
def xi_coefficients(i: int, n: int, m: int, p: float, ordering: Ordering) -> OrderedLayerCoefficients:
    """
    Density expansion of ``p r_ii²`` for decoding layer ``i``.
    """
    if not 1 <= i <= m <= n:
        raise QueryError(f'Need 1 <= i <= m <= n, got i={i}, m={m}, n={n}')
    if n > MAX_ANTENNAS:
        raise UnsupportedSizeError(f'Layer expansions are limited to n <= {MAX_ANTENNAS}, got n={n}')
    return _unit_coefficients(i, n, m, ordering).scaled(p)

def rii_tail(coeffs: OrderedLayerCoefficients, z: float) -> float:
#=================================================================
    return coeffs.tail(z)

#===============================================================================

def _expected_tail(coeffs: OrderedLayerCoefficients, base: float, slope: float,
                   omega: float, m: int) -> float:
    """
    E_Y[Pr(p r_ii² ≥ base + slope·Y)] for Y ~ Gamma(m, scale ω).

    Each density term's tail is expanded as a polynomial in its argument and
    averaged term by term over Y. With ω = 0 only the Y-free terms survive.
    """
    log_base = math.log(base) if base > 0 else -math.inf
    signs = []
    logs = []
    for sign, log_mag, mu, rate in zip(coeffs.signs, coeffs.log_mags, coeffs.mus, coeffs.rates):
        nu = np.arange(mu + 1)
        outer = gammaln(mu + 1) - gammaln(nu + 1) - (mu - nu + 1)*math.log(rate) - rate*base
        v = nu[np.newaxis, :]
        nu = nu[:, np.newaxis]
        with np.errstate(invalid='ignore'):
            fixed = np.where(nu == v, 0.0, (nu - v)*log_base)
        if omega > 0:
            decay = math.log1p(rate*slope*omega)
            inner = (gammaln(nu + 1) - gammaln(v + 1) - gammaln(np.maximum(nu - v, 0) + 1) + fixed
                     + v*(math.log(slope) + math.log(omega) - decay)
                     + gammaln(v + m) - gammaln(m) - m*decay)
            inner = np.where(v <= nu, inner, -np.inf)
        else:
            inner = np.where(v == 0, fixed, -np.inf)
        signs.append(sign)
        logs.append(log_mag + float(logsumexp(outer + logsumexp(inner, axis=1))))
    total, ratio = log_sum_signed(signs, logs)
    _check_cancellation(ratio, f'layer {coeffs.i} outage')
    return total

def _zf_arguments(cfg: SystemConfig, gamma: float, n0: float) -> tuple[float, float]:
    denominator = 1.0 - cfg.kappa_t**2*gamma
    base = (cfg.p*cfg.kappa_r**2*cfg.m + n0)*gamma/denominator
    slope = cfg.p*(1.0 + cfg.kappa_t**2)*gamma/denominator
    return base, slope

def _zf_coefficients(cfg: SystemConfig, q: OutageQuery) -> OrderedLayerCoefficients:
    if q.scheme != Scheme.ZF:
        raise QueryError('Query is not for ZF-SIC')
    return xi_coefficients(q.layer(cfg.m), cfg.n, cfg.m, cfg.p, q.ordering)

def zf_outage(cfg: SystemConfig, q: OutageQuery, mode: ZfOutageMode | str = ZfOutageMode.GENERAL) -> float:
    """
    Outage probability of one ZF-SIC layer.

    ``ideal`` ignores impairments and CSI error, ``perfect_csi`` ignores only
    the CSI error.
    """
    mode = ZfOutageMode(mode)
    coeffs = _zf_coefficients(cfg, q)
    if mode == ZfOutageMode.IDEAL:
        return 1.0 - coeffs.tail(cfg.n0*q.gamma_th)
    if cfg.kappa_t**2*q.gamma_th >= 1.0:
        return 1.0
    base, slope = _zf_arguments(cfg, q.gamma_th, cfg.n0)
    omega = cfg.omega if mode == ZfOutageMode.GENERAL else 0.0
    return float(np.clip(1.0 - _expected_tail(coeffs, base, slope, omega, cfg.m), 0.0, 1.0))

#===============================================================================

def _floor_moment(kappa_t: float, kappa_r: float, omega: float, m: int, power: int) -> float:
    # E[((1+κ_T²)Y + κ_R² m)^power] for Y ~ Gamma(m, scale ω)
    receiver = kappa_r**2*m
    crosstalk = (1.0 + kappa_t**2)*omega
    return sum(math.comb(power, k)*receiver**(power - k)*crosstalk**k*math.exp(gammaln(m + k) - gammaln(m))
                for k in range(power + 1))

def _floor_moment_tricomi(kappa_t: float, kappa_r: float, omega: float, m: int, power: int) -> float:
    receiver = kappa_r**2*m
    crosstalk = (1.0 + kappa_t**2)*omega
    log_u = log_tricomi_u(TricomiParams(m, power + m + 1, receiver/crosstalk))
    return math.exp((power + m)*math.log(receiver) - m*math.log(crosstalk) + log_u)

def zf_outage_floor(cfg: SystemConfig, q: OutageQuery, mode: ZfFloorMode | str = ZfFloorMode.GENERAL) -> float:
    """
    High-SNR outage floor of a ZF-SIC layer.

    ``exact`` is the N₀ → 0 limit of the full outage expression. The other
    modes are the leading term of the small-distortion expansion, built on
    ``Pr[r_ii² ≤ t] ≈ K t^N``: ``general`` evaluates it both as a binomial
    moment sum and through Tricomi's U and checks that they agree,
    ``csi_only`` and ``hw_only`` are its reductions.
    """
    mode = ZfFloorMode(mode)
    gamma = q.gamma_th
    if cfg.kappa_t**2*gamma >= 1.0:
        return 1.0
    coeffs = _zf_coefficients(cfg, q)
    if mode == ZfFloorMode.EXACT:
        base, slope = _zf_arguments(cfg, gamma, 0.0)
        return float(np.clip(1.0 - _expected_tail(coeffs, base, slope, cfg.omega, cfg.m), 0.0, 1.0))
    constant, power = xi_coefficients(coeffs.i, cfg.n, cfg.m, 1.0, q.ordering).small_argument_coefficient()
    scale = gamma/(1.0 - cfg.kappa_t**2*gamma)
    if mode == ZfFloorMode.CSI_ONLY:
        if cfg.kappa_t != 0 or cfg.kappa_r != 0:
            raise UnsupportedModeError('csi_only floor needs ideal transceivers')
        return constant*(gamma*cfg.omega)**power*math.exp(gammaln(cfg.m + power) - gammaln(cfg.m))
    elif mode == ZfFloorMode.HW_ONLY:
        if cfg.omega != 0:
            raise UnsupportedModeError('hw_only floor needs perfect CSI')
        return constant*(scale*cfg.kappa_r**2*cfg.m)**power
    moment = _floor_moment(cfg.kappa_t, cfg.kappa_r, cfg.omega, cfg.m, power)
    if cfg.kappa_r > 0 and cfg.omega > 0:
        other = _floor_moment_tricomi(cfg.kappa_t, cfg.kappa_r, cfg.omega, cfg.m, power)
        if abs(other - moment) > FORM_AGREEMENT*abs(moment):
            raise ConsistencyError(f'Floor forms disagree: {moment} vs {other}')
    return constant*scale**power*moment

#===============================================================================

def threshold_from_rate(rate: float) -> float:
    return 2.0**rate - 1.0

def rate_from_threshold(gamma_th: float) -> float:
    return math.log2(1.0 + gamma_th)

def mmse_validity_limit(kappa_t: float, omega: float) -> float:
    """
    1/(κ_T²(ω+1)+ω): the largest threshold the last MMSE stage can reach.
    """
    spread = kappa_t**2*(omega + 1.0) + omega
    return 1.0/spread if spread > 0 else math.inf

def mmse_stage_ceiling(cfg: SystemConfig, stage: int) -> float:
    """
    Supremum of the stage SINDR; earlier stages also lose the crosstalk
    inflation 2√ω+1.
    """
    if stage == cfg.m:
        return mmse_validity_limit(cfg.kappa_t, cfg.omega)
    spread = cfg.distortion_gain - 1.0/cfg.crosstalk_inflation
    return 1.0/spread if spread > 0 else math.inf

def _interference_cdf(x: float, sigma: float, n: int, interferers: int) -> float:
    """
    CDF of hᴴ(KKᴴ + σI)⁻¹h with K of ``interferers`` i.i.d. CN(0,1) columns,
    written as a regularized gamma plus the positive interference correction.
    """
    load = sigma*x
    value = float(gammainc(n, load))
    if interferers == 0 or load == 0.0:
        return value
    logs = []
    for k in range(n - interferers + 1, n + 1):
        for j in range(n - k + 1, interferers + 1):
            logs.append(_log_binomial(interferers, j) + j*math.log(x) - interferers*math.log1p(x)
                        + (k - 1)*math.log(load) - gammaln(k) - load)
    return value + float(np.exp(logsumexp(logs))) if logs else value

def _mmse_outage(n: int, m: int, stage: int, gamma: float, gain: float, inflation: float,
                 noise: float) -> float:
    if stage == m:
        spread = gain - 1.0
        if spread*gamma >= 1.0:
            return 1.0
        return float(gammainc(n, noise*gamma/(1.0 - spread*gamma)))
    if (gain - 1.0)*gamma >= 1.0 or (gain - 1.0/inflation)*gamma >= 1.0:
        return 1.0
    threshold = gamma/(gamma*(1.0/(gain*inflation) - 1.0) + 1.0/gain)
    return min(1.0, _interference_cdf(threshold, noise/gain, n, m - stage))

def _mmse_stage(cfg: SystemConfig, q: OutageQuery) -> int:
    if q.scheme != Scheme.MMSE:
        raise QueryError('Query is not for MMSE-SIC')
    if q.ordering != Ordering.FIXED:
        raise UnsupportedModeError('Closed forms exist only for fixed-order MMSE-SIC')
    return q.stage(cfg.m)

def mmse_outage(cfg: SystemConfig, q: OutageQuery, mode: MmseOutageMode | str = MmseOutageMode.GENERAL) -> float:
#===============================================================================================================
    mode = MmseOutageMode(mode)
    stage = _mmse_stage(cfg, q)
    if mode == MmseOutageMode.IDEAL:
        return _mmse_outage(cfg.n, cfg.m, stage, q.gamma_th, 1.0, 1.0, cfg.n0/cfg.p)
    return _mmse_outage(cfg.n, cfg.m, stage, q.gamma_th, cfg.distortion_gain,
                        cfg.crosstalk_inflation, cfg.receiver_noise)

@dataclass(frozen=True)
class OutageAsymptote:
    coefficient: float
    diversity: int

    def at(self, snr: float) -> float:
        return self.coefficient*snr**(-self.diversity)

def mmse_outage_floor(cfg: SystemConfig, q: OutageQuery,
                      mode: MmseFloorMode | str = MmseFloorMode.FLOOR) -> float | OutageAsymptote:
    """
    ``floor`` drops N₀/p from the outage expression. ``tx_only_asymptote``
    (clean receiver) returns the high-SNR law ``coefficient·(p/N₀)^-diversity``.
    """
    mode = MmseFloorMode(mode)
    stage = _mmse_stage(cfg, q)
    gamma = q.gamma_th
    gain = cfg.distortion_gain
    if mode == MmseFloorMode.FLOOR:
        return _mmse_outage(cfg.n, cfg.m, stage, gamma, gain, cfg.crosstalk_inflation,
                            cfg.kappa_r**2*cfg.m)
    if cfg.kappa_r != 0:
        raise UnsupportedModeError('The transmit-only asymptote needs kappa_r = 0')
    if gamma >= mmse_stage_ceiling(cfg, stage):
        raise QueryError(f'Threshold {gamma} is beyond the SINDR ceiling of stage {stage}')
    if stage == cfg.m:
        return OutageAsymptote((gamma/(1.0 - (gain - 1.0)*gamma))**cfg.n/math.factorial(cfg.n), cfg.n)
    diversity = cfg.n - cfg.m + stage
    threshold = gamma/(gamma*(1.0/(gain*cfg.crosstalk_inflation) - 1.0) + 1.0/gain)
    return OutageAsymptote(gain**(-diversity)*threshold**cfg.n/(1.0 + threshold)**(cfg.m - stage)
                            /math.factorial(diversity), diversity)

#===============================================================================

def diversity_order(cfg: SystemConfig, q: OutageQuery) -> int:
    """
    Magnitude of the high-SNR outage slope; zero when the outage floors.
    """
    if cfg.kappa_r > 0:
        return 0
    if q.scheme == Scheme.ZF:
        return 0 if cfg.omega > 0 else cfg.n - q.layer(cfg.m) + 1
    stage = q.stage(cfg.m)
    return cfg.n if stage == cfg.m else cfg.n - cfg.m + stage

def outage(cfg: SystemConfig, q: OutageQuery) -> float:
#=======================================================
    if q.scheme == Scheme.ZF:
        return zf_outage(cfg, q)
    return mmse_outage(cfg, q)

#===============================================================================
