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

from __future__ import annotations
from dataclasses import dataclass
import logging as log
import math
import warnings

#===============================================================================

import numpy as np
import scipy.integrate
import scipy.special

#===============================================================================

TRICOMI_RELATIVE_ACCURACY = 1e-8

#===============================================================================

class SpecialFunctionDomainError(ValueError):
    pass

class AccuracyError(ArithmeticError):
    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(message)
        self.estimate = estimate
        self.error = error

#===============================================================================

def gamma_real(x: float) -> float:
#=================================
    if x <= 0:
        raise SpecialFunctionDomainError(f'Gamma needs a positive argument, got {x}')
    if float(x).is_integer() and x <= 20:
        return float(math.factorial(int(x) - 1))
    return float(scipy.special.gamma(x))

def log_gamma(x: float) -> float:
#================================
    if x <= 0:
        raise SpecialFunctionDomainError(f'Gamma needs a positive argument, got {x}')
    return float(scipy.special.gammaln(x))

def beta_fn(a: float, b: float) -> float:
#========================================
    return gamma_real(a)*gamma_real(b)/gamma_real(a + b)

def log_beta(a: float, b: float) -> float:
#=========================================
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b)

#===============================================================================

def regularized_gamma_q(k: float, x: float) -> float:
    """
    Upper regularized incomplete gamma ``Γ(k, x)/Γ(k)``.
    """
    if k <= 0 or x < 0:
        raise SpecialFunctionDomainError(f'Incomplete gamma needs k > 0 and x >= 0, got k={k}, x={x}')
    return float(scipy.special.gammaincc(k, x))

def regularized_gamma_p(k: float, x: float) -> float:
#====================================================
    if k <= 0 or x < 0:
        raise SpecialFunctionDomainError(f'Incomplete gamma needs k > 0 and x >= 0, got k={k}, x={x}')
    return float(scipy.special.gammainc(k, x))

#===============================================================================

def gaussian_q(x: float) -> float:
#=================================
    return float(0.5*scipy.special.erfc(x/math.sqrt(2.0)))

#===============================================================================

@dataclass(frozen=True)
class TricomiParams:
    a: float
    b: float
    x: float

    def __post_init__(self):
        if not (self.a > 0 and self.x > 0):
            raise SpecialFunctionDomainError(f'Tricomi U needs a > 0 and x > 0, got a={self.a}, x={self.x}')

#===============================================================================

def _scaled_tricomi_integral(a: float, b: float, x: float) -> tuple[float, float]:
    """
    ``∫₀^∞ e^{-s} s^{a-1} (1 + s/x)^{b-a-1} ds`` on the compactified variable
    ``s = u/(1-u)``. Returns the value and the quadrature error estimate.
    """
    exponent = b - a - 1.0

    def body(u: float) -> float:
        # everything except the u^{a-1} factor
        if u >= 1.0:
            return 0.0
        s = u/(1.0 - u)
        return math.exp(-s - (a + 1.0)*math.log1p(-u) + exponent*math.log1p(s/x))

    def integrand(u: float) -> float:
        if u <= 0.0:
            return 0.0 if a > 1.0 else (1.0 if a == 1.0 else math.inf)
        return math.exp((a - 1.0)*math.log(u))*body(u)

    mode = max(a - 1.0 + max(exponent, 0.0), 0.5)
    spread = 3.0*math.sqrt(mode + 1.0)
    breaks = sorted({s/(1.0 + s) for s in (max(mode - spread, 0.05), mode, mode + spread, mode + 4.0*spread)})
    split = breaks[0]

    value = 0.0
    error = 0.0
    with warnings.catch_warnings():
        # convergence is judged from the returned error estimate
        warnings.simplefilter('ignore', scipy.integrate.IntegrationWarning)
        for limit in (200, 1000):
            if a < 1.0:
                head, head_error = scipy.integrate.quad(body, 0.0, split, weight='alg', wvar=(a - 1.0, 0.0),
                                                        epsabs=0.0, epsrel=1e-12, limit=limit)
            else:
                head, head_error = scipy.integrate.quad(integrand, 0.0, split,
                                                        epsabs=0.0, epsrel=1e-12, limit=limit)
            tail, tail_error = scipy.integrate.quad(integrand, split, 1.0, points=breaks[1:],
                                                    epsabs=0.0, epsrel=1e-12, limit=limit)
            value = head + tail
            error = head_error + tail_error
            if error <= 0.01*TRICOMI_RELATIVE_ACCURACY*abs(value):
                break
    return value, error

def log_tricomi_u(p: TricomiParams) -> float:
    """
    Natural log of U(a, b, x) = ∫₀^∞ e^{-xt} t^{a-1} (1+t)^{b-a-1} dt / Γ(a),
    evaluated after the scaling ``t = s/x``.
    """
    value, error = _scaled_tricomi_integral(p.a, p.b, p.x)
    if not value > 0.0 or error > TRICOMI_RELATIVE_ACCURACY*value:
        log.error(f'Tricomi U({p.a}, {p.b}, {p.x}) did not converge: {value} ± {error}')
        estimate = value*math.exp(-p.a*math.log(p.x) - log_gamma(p.a)) if value > 0.0 else value
        raise AccuracyError(f'Tricomi U({p.a}, {p.b}, {p.x}) quadrature did not converge',
                            estimate, error)
    return -p.a*math.log(p.x) - log_gamma(p.a) + math.log(value)

def tricomi_u(p: TricomiParams) -> float:
#========================================
    return math.exp(log_tricomi_u(p))

#===============================================================================

def log_sum_signed(signs, log_magnitudes) -> tuple[float, float]:
    """
    Sum ``Σ sign·exp(log_mag)`` with the smallest magnitudes accumulated first.

    Returns the sum and the cancellation ratio ``Σ|term| / |Σ term|``.
    """
    signs = np.asarray(signs, dtype=float)
    log_magnitudes = np.asarray(log_magnitudes, dtype=float)
    if log_magnitudes.size == 0:
        return 0.0, 1.0
    order = np.argsort(log_magnitudes)
    terms = signs[order]*np.exp(log_magnitudes[order])
    total = math.fsum(terms)
    absolute = math.fsum(np.abs(terms))
    ratio = absolute/abs(total) if total != 0.0 else (math.inf if absolute > 0.0 else 1.0)
    return total, ratio

#===============================================================================
