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
Ordered and unordered ZF-SIC.

Stage ``k`` (the k-th stream decoded) sits in decoding layer ``m-k+1`` of the
triangular system, so the stream decoded first occupies the last column of
the permuted channel matrix. Arrays here are 0-based: ``perm[k]`` is the
original stream decoded at stage ``k+1``.
"""

#===============================================================================

from __future__ import annotations
from dataclasses import dataclass
from enum import Enum
import math

#===============================================================================

import numpy as np
import numpy.typing as npt

#===============================================================================

from sicperf.src.channel import ChannelRealization, ModulationSpec, SystemConfig
from sicperf.src.matcore import col_norms_sq, qr_decompose_batch

#===============================================================================

DEGENERATE_GAIN = 1e-300

#===============================================================================

class DegenerateRealizationError(ArithmeticError):
    pass

class ModelViolationError(ArithmeticError):
    pass

#===============================================================================

class Scheme(Enum):
    ZF   = 'zf'
    MMSE = 'mmse'

class Ordering(Enum):
    FOSCHINI = 'foschini'
    FIXED    = 'fixed'

class ChannelBasis(Enum):
    ESTIMATE = 'estimate'   # QR of Ĥ, the receiver's view
    TRUE     = 'true'       # QR of H

#===============================================================================

@dataclass(frozen=True)
class DetectionOrder:
    perm: tuple[int, ...]
    strategy: Ordering

    def __post_init__(self):
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError(f'Detection order {self.perm} is not a permutation')
        if self.strategy == Ordering.FIXED and list(self.perm) != sorted(self.perm):
            raise ValueError('Fixed ordering must be the identity permutation')

    @property
    def layer_columns(self) -> npt.NDArray[np.int64]:
        return np.array(self.perm[::-1], dtype=np.int64)

@dataclass(frozen=True)
class SindrProfile:
    values: npt.NDArray[np.float64]
    scheme: Scheme

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)) or np.any(self.values <= 0):
            raise ModelViolationError(f'SINDR values must be positive and finite: {self.values}')

    def stage(self, k: int) -> float:
        """SINDR of SIC stage ``k`` (1-based)."""
        return float(self.values[k - 1])

    def layer(self, i: int) -> float:
        """SINDR of decoding layer ``i`` (1-based)."""
        return float(self.values[len(self.values) - i])

@dataclass(frozen=True)
class ZfLayerTerms:
    r_ii_sq: float
    y_i: float

#===============================================================================

def order_permutations(h_hat, strategy: Ordering) -> npt.NDArray[np.int64]:
    """
    Stage-to-stream permutations for a matrix or a stack of matrices.

    Foschini ordering decodes the column with the largest squared norm first;
    ties go to the lower original index.
    """
    norms = col_norms_sq(h_hat)
    if strategy == Ordering.FIXED:
        return np.broadcast_to(np.arange(norms.shape[-1]), norms.shape).copy()
    return np.argsort(-norms, axis=-1, kind='stable')

def detection_order(h_hat, strategy: Ordering) -> DetectionOrder:
#================================================================
    perm = order_permutations(np.asarray(h_hat), strategy)
    return DetectionOrder(tuple(int(k) for k in perm), strategy)

#===============================================================================

def _layer_columns(perms: npt.NDArray[np.int64]) -> npt.NDArray[np.int64]:
    return perms[..., ::-1]

def _permute_columns(matrices, columns):
    return np.take_along_axis(matrices, columns[..., np.newaxis, :], axis=-1)

def zf_layer_terms_batch(h, delta_h, h_hat, perms, basis: ChannelBasis = ChannelBasis.ESTIMATE
                         ) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """
    Per-layer ``r_ii²`` and crosstalk ``Y_i`` for stacks of realizations.

    ``Y_i`` is the power of row ``i`` of ``Qᴴ ΔH``, the channel-error leakage
    that remains on layer ``i`` after nulling and cancellation. Both outputs
    are in layer order (column ``i-1`` is layer ``i``).
    """
    columns = _layer_columns(np.asarray(perms))
    source = h_hat if basis == ChannelBasis.ESTIMATE else h
    factors = qr_decompose_batch(_permute_columns(np.asarray(source), columns))
    m = columns.shape[-1]
    r_sq = factors.diag_sq
    leakage = np.einsum('...ki,...kj->...ij', np.conj(factors.q[..., :, :m]), np.asarray(delta_h))
    y = np.sum(np.abs(leakage)**2, axis=-1)
    return r_sq, y

def zf_sindr_from_terms(cfg: SystemConfig, r_sq, y) -> npt.NDArray[np.float64]:
    """
    p r² / (p r² κ_T² + p Y (1+κ_T²) + p κ_R² m + N₀), elementwise.
    """
    signal = cfg.p*np.asarray(r_sq)
    return signal/(signal*cfg.kappa_t**2 + cfg.p*np.asarray(y)*(1.0 + cfg.kappa_t**2)
                   + cfg.p*cfg.kappa_r**2*cfg.m + cfg.n0)

def zf_sindr_batch(cfg: SystemConfig, h, delta_h, h_hat, strategy: Ordering,
                   basis: ChannelBasis = ChannelBasis.ESTIMATE) -> tuple[npt.NDArray, npt.NDArray]:
    """
    Stage-ordered SINDRs for a stack of realizations, plus a mask of
    realizations with a vanishing triangular diagonal.
    """
    perms = order_permutations(h_hat if basis == ChannelBasis.ESTIMATE else h, strategy)
    r_sq, y = zf_layer_terms_batch(h, delta_h, h_hat, perms, basis)
    degenerate = np.any(r_sq < DEGENERATE_GAIN, axis=-1)
    with np.errstate(divide='ignore', invalid='ignore'):
        sindr = zf_sindr_from_terms(cfg, r_sq, y)
    return sindr[..., ::-1], degenerate

#===============================================================================

def zf_layer_terms(real: ChannelRealization, order: DetectionOrder,
                   basis: ChannelBasis = ChannelBasis.ESTIMATE) -> list[ZfLayerTerms]:
#===================================================================================
    r_sq, y = zf_layer_terms_batch(real.h, real.delta_h, real.h_hat, np.array(order.perm), basis)
    return [ZfLayerTerms(float(r), float(v)) for r, v in zip(r_sq, y)]

def zf_sindr_profile(cfg: SystemConfig, real: ChannelRealization, order: DetectionOrder,
                     basis: ChannelBasis = ChannelBasis.ESTIMATE) -> SindrProfile:
#================================================================================
    terms = zf_layer_terms(real, order, basis)
    r_sq = np.array([t.r_ii_sq for t in terms])
    if np.any(r_sq < DEGENERATE_GAIN):
        raise DegenerateRealizationError('Triangular factor has a vanishing diagonal entry')
    sindr = zf_sindr_from_terms(cfg, r_sq, [t.y_i for t in terms])
    return SindrProfile(sindr[::-1], Scheme.ZF)

#===============================================================================

def zf_decode_batch(cfg: SystemConfig, y, h_hat, perms, mod: ModulationSpec,
                    genie=None) -> npt.NDArray[np.int64]:
    """
    Decision-feedback ZF-SIC over a stack of received vectors.

    Returns constellation indices in original stream order. When ``genie``
    holds the transmitted indices, cancellation uses them instead of the
    decisions.
    """
    columns = _layer_columns(np.asarray(perms))
    factors = qr_decompose_batch(_permute_columns(np.asarray(h_hat), columns))
    m = columns.shape[-1]
    r = factors.r[..., :m, :]
    z = np.einsum('...ki,...k->...i', np.conj(factors.q[..., :, :m]), np.asarray(y))
    if np.any(np.abs(np.diagonal(r, axis1=-2, axis2=-1))**2 < DEGENERATE_GAIN):
        raise DegenerateRealizationError('Triangular factor has a vanishing diagonal entry')
    amplitude = math.sqrt(cfg.p)
    if genie is not None:
        genie_layers = np.take_along_axis(np.asarray(genie), columns, axis=-1)
    decided = np.zeros(z.shape, dtype=np.int64)
    feedback = np.zeros(z.shape, dtype=np.complex128)
    for i in range(m - 1, -1, -1):
        residual = z[..., i] - np.sum(r[..., i, i + 1:]*feedback[..., i + 1:], axis=-1)
        decided[..., i] = mod.slice(residual/r[..., i, i].real, amplitude)
        source = decided[..., i] if genie is None else genie_layers[..., i]
        feedback[..., i] = amplitude*mod.points[source]
    streams = np.empty_like(decided)
    np.put_along_axis(streams, columns, decided, axis=-1)
    return streams

def zf_sic_decode(cfg: SystemConfig, y, real: ChannelRealization, order: DetectionOrder,
                  mod: ModulationSpec, genie=None) -> npt.NDArray[np.complex128]:
#===============================================================================
    indices = zf_decode_batch(cfg, y, real.h_hat, np.array(order.perm), mod, genie)
    return math.sqrt(cfg.p)*mod.points[indices]

#===============================================================================
