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
from dataclasses import dataclass, field, replace
import logging as log
import math

#===============================================================================

import numpy as np
import numpy.typing as npt

#===============================================================================

from sicperf.src.matcore import ComplexMatrix, MatrixShapeError

#===============================================================================

KAPPA_T_TYPICAL = (0.08, 0.175)
OMEGA_TYPICAL_MAX = 0.3

#===============================================================================

class ConfigError(ValueError):
    pass

#===============================================================================

def db_to_linear(value_db: float) -> float:
    return 10.0**(value_db/10.0)

def linear_to_db(value: float) -> float:
    return 10.0*math.log10(value)

#===============================================================================

@dataclass(frozen=True)
class SystemConfig:
    n: int
    m: int
    p: float = 1.0
    n0: float = 1.0
    kappa_t: float = 0.0
    kappa_r: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and isinstance(self.m, (int, np.integer))):
            raise ConfigError(f'Antenna counts must be integers, got n={self.n}, m={self.m}')
        if not self.n >= self.m >= 1:
            raise ConfigError(f'Need n >= m >= 1, got n={self.n}, m={self.m}')
        if not (self.p > 0 and self.n0 > 0):
            raise ConfigError(f'Powers must be positive, got p={self.p}, n0={self.n0}')
        if self.kappa_t < 0 or self.kappa_r < 0 or self.omega < 0:
            raise ConfigError('Impairment levels and estimation error variance must be non-negative')
        if self.kappa_t > 0 and not KAPPA_T_TYPICAL[0] <= self.kappa_t <= KAPPA_T_TYPICAL[1]:
            log.debug(f'kappa_t = {self.kappa_t} is outside the typical range {KAPPA_T_TYPICAL}')
        if self.omega > OMEGA_TYPICAL_MAX:
            log.warning(f'omega = {self.omega} exceeds the practical range (<= {OMEGA_TYPICAL_MAX})')

    @property
    def snr(self) -> float:
        return self.p/self.n0

    @property
    def snr_db(self) -> float:
        return linear_to_db(self.snr)

    @property
    def distortion_gain(self) -> float:
        """
        c = κ_T²(ω+1) + ω + 1, the scaling of HHᴴ in the impairment-aware filter.
        """
        return self.kappa_t**2*(self.omega + 1.0) + self.omega + 1.0

    @property
    def receiver_noise(self) -> float:
        """
        d = κ_R² m + N₀/p, the normalised post-noise level.
        """
        return self.kappa_r**2*self.m + self.n0/self.p

    @property
    def crosstalk_inflation(self) -> float:
        return 2.0*math.sqrt(self.omega) + 1.0

    @property
    def ideal(self) -> bool:
        return self.kappa_t == 0 and self.kappa_r == 0 and self.omega == 0

    def with_snr_db(self, snr_db: float) -> SystemConfig:
    #=====================================================
        return replace(self, p=self.n0*db_to_linear(snr_db))

    def with_values(self, **values) -> SystemConfig:
    #===============================================
        return replace(self, **values)

#===============================================================================

@dataclass(frozen=True)
class ChannelRealization:
    h: ComplexMatrix
    delta_h: ComplexMatrix
    h_hat: ComplexMatrix

    def __post_init__(self):
        if not (self.h.shape == self.delta_h.shape == self.h_hat.shape):
            raise MatrixShapeError('Channel, error and estimate must have the same shape')

    @classmethod
    def from_estimate_error(cls, h, delta_h) -> ChannelRealization:
    #==============================================================
        h = np.asarray(h, dtype=np.complex128)
        delta_h = np.asarray(delta_h, dtype=np.complex128)
        return cls(h, delta_h, h + delta_h)

#===============================================================================

@dataclass(frozen=True)
class ModulationSpec:
    name: str
    a_const: float
    b_const: float
    points: npt.NDArray[np.complex128] = field(repr=False)

    def __post_init__(self):
        if self.a_const <= 0 or self.b_const <= 0:
            raise ConfigError(f'{self.name}: modulation constants must be positive')
        energy = float(np.mean(np.abs(self.points)**2))
        if abs(energy - 1.0) > 1e-12:
            raise ConfigError(f'{self.name}: constellation energy is {energy}, expected 1')

    @property
    def states(self) -> int:
        return len(self.points)

    @classmethod
    def bpsk(cls) -> ModulationSpec:
        return cls('bpsk', 1.0, 1.0, np.array([1.0, -1.0], dtype=np.complex128))

    @classmethod
    def qpsk(cls) -> ModulationSpec:
        return cls.psk(4)

    @classmethod
    def psk(cls, states: int) -> ModulationSpec:
        if states == 2:
            return cls.bpsk()
        if states < 2:
            raise ConfigError(f'PSK needs at least 2 states, got {states}')
        points = np.exp(1j*(2.0*np.pi*np.arange(states)/states + np.pi/states))
        return cls(f'{states}psk', 2.0, math.sin(math.pi/states)**2, points)

    @classmethod
    def qam(cls, states: int) -> ModulationSpec:
        side = math.isqrt(states)
        if side*side != states or side < 2:
            raise ConfigError(f'Square QAM needs a square number of states, got {states}')
        levels = np.arange(-(side - 1), side, 2, dtype=float)
        points = (levels[:, np.newaxis] + 1j*levels[np.newaxis, :]).ravel()
        points /= math.sqrt(np.mean(np.abs(points)**2))
        return cls(f'{states}qam', 4.0*(1.0 - 1.0/side), 1.5/(states - 1), points)

    @classmethod
    def from_name(cls, name: str) -> ModulationSpec:
    #===============================================
        name = name.lower()
        if name == 'bpsk':
            return cls.bpsk()
        elif name == 'qpsk':
            return cls.qpsk()
        elif name.endswith('psk') and name[:-3].isdigit():
            return cls.psk(int(name[:-3]))
        elif name.endswith('qam') and name[:-3].isdigit():
            return cls.qam(int(name[:-3]))
        raise ConfigError(f'Unknown modulation: {name}')

    def slice(self, values, scale: float = 1.0) -> npt.NDArray[np.int64]:
        """
        Indices of the nearest constellation points to ``values/scale``.
        """
        values = np.asarray(values)/scale
        distance = np.abs(values[..., np.newaxis] - self.points)**2
        return np.argmin(distance, axis=-1)

#===============================================================================

def complex_normal(rng: np.random.Generator, variance: float, shape) -> npt.NDArray[np.complex128]:
#================================================================================================
    scale = math.sqrt(variance/2.0)
    return scale*(rng.standard_normal(shape) + 1j*rng.standard_normal(shape))

def sample_channels(cfg: SystemConfig, rng: np.random.Generator, count: int) -> tuple[npt.NDArray, npt.NDArray]:
    """
    ``count`` independent (H, ΔH) pairs as ``(count, n, m)`` stacks.
    """
    shape = (count, cfg.n, cfg.m)
    h = complex_normal(rng, 1.0, shape)
    if cfg.omega > 0:
        delta_h = complex_normal(rng, cfg.omega, shape)
    else:
        delta_h = np.zeros(shape, dtype=np.complex128)
    return h, delta_h

def sample_realization(cfg: SystemConfig, rng: np.random.Generator) -> ChannelRealization:
#=========================================================================================
    h, delta_h = sample_channels(cfg, rng, 1)
    return ChannelRealization.from_estimate_error(h[0], delta_h[0])

#===============================================================================

def draw_symbols(cfg: SystemConfig, mod: ModulationSpec, rng: np.random.Generator,
                 count: int | None = None) -> tuple[npt.NDArray[np.int64], npt.NDArray[np.complex128]]:
    """
    Uniform symbol indices and the transmitted vectors scaled so E[ssᴴ] = pI.
    """
    shape = (cfg.m,) if count is None else (count, cfg.m)
    indices = rng.integers(0, mod.states, size=shape)
    return indices, math.sqrt(cfg.p)*mod.points[indices]

def sample_received(cfg: SystemConfig, h, s, rng: np.random.Generator,
                    suppress_thermal_noise: bool = False) -> npt.NDArray[np.complex128]:
    """
    y = H(s + n_T) + n_R + w for a single channel or a stack of channels.

    ``suppress_thermal_noise`` zeroes w and exists for tests of the noiseless
    fixed point only.
    """
    h = np.asarray(h, dtype=np.complex128)
    s = np.asarray(s, dtype=np.complex128)
    if h.shape[-1] != s.shape[-1] or h.shape[-1] != cfg.m or h.shape[-2] != cfg.n:
        raise MatrixShapeError(f'Channel {h.shape} and symbols {s.shape} do not match n={cfg.n}, m={cfg.m}')
    batch = np.broadcast_shapes(h.shape[:-2], s.shape[:-1])
    tx = s + complex_normal(rng, cfg.p*cfg.kappa_t**2, batch + (cfg.m,))
    y = np.einsum('...ij,...j->...i', h, tx)
    y = y + complex_normal(rng, cfg.p*cfg.kappa_r**2*cfg.m, batch + (cfg.n,))
    if not suppress_thermal_noise:
        y = y + complex_normal(rng, cfg.n0, batch + (cfg.n,))
    return y

#===============================================================================
