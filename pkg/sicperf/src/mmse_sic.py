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
Impairment-aware MMSE-SIC with fixed (natural) decoding order.

Stage, stream and layer numbers in the public functions are 1-based.
"""

#===============================================================================

from __future__ import annotations
from dataclasses import dataclass
import math

#===============================================================================

import numpy as np
import numpy.typing as npt

#===============================================================================

from sicperf.src.channel import ChannelRealization, ModulationSpec, SystemConfig
from sicperf.src.matcore import ComplexMatrix, as_complex_matrix, solve_hpd
from sicperf.src.zf_sic import ModelViolationError, Scheme, SindrProfile

#===============================================================================

@dataclass(frozen=True)
class MmseStageContext:
    stage: int
    stage_count: int
    deflated: ComplexMatrix
    target: npt.NDArray[np.complex128]

    def __post_init__(self):
        if not 1 <= self.stage <= self.stage_count or self.deflated.shape[0] != len(self.target):
            raise ValueError(f"Inconsistent context for stage {self.stage}")
        # deflated columns are the streams not yet decoded
        if self.deflated.ndim != 2 or self.deflated.shape[1] != self.stage_count - self.stage:
            raise ValueError(f'Stage {self.stage} of {self.stage_count} needs {self.stage_count - self.stage} '
                             f'deflated columns, got shape {self.deflated.shape}')
        if self.stage_count > len(self.target):
            raise ValueError(f'{self.stage_count} streams exceed {len(self.target)} receive antennas')

def stage_context(h_matrix, stage: int) -> MmseStageContext:
#============================================================
    h_matrix = as_complex_matrix(h_matrix)
    m = h_matrix.shape[1]
    if not 1 <= stage <= m:
        raise ValueError(f'Stage {stage} is outside 1..{m}')
    return MmseStageContext(stage, m, h_matrix[:, stage:], h_matrix[:, stage - 1])

#===============================================================================

def _filter_matrix(h_matrix: ComplexMatrix, gain: float, loading: float) -> ComplexMatrix:
    n = h_matrix.shape[0]
    return gain*(h_matrix @ h_matrix.conj().T) + loading*np.eye(n)

def mmse_filter(cfg: SystemConfig, h_matrix, j: int) -> npt.NDArray[np.complex128]:
    """
    g = (HHᴴ(κ_T²(ω+1)+ω+1) + (κ_R² m + N₀/p) I)⁻¹ h_j
    """
    h_matrix = as_complex_matrix(h_matrix)
    system = _filter_matrix(h_matrix, cfg.distortion_gain, cfg.receiver_noise)
    return solve_hpd(system, h_matrix[:, j - 1])

def filter_gain(cfg: SystemConfig, h_matrix, j: int) -> float:
    """
    β_j = g_jᴴ h_j for the full-system filter.
    """
    h_matrix = as_complex_matrix(h_matrix)
    return float(np.real(np.vdot(mmse_filter(cfg, h_matrix, j), h_matrix[:, j - 1])))

#===============================================================================

def _crosstalk_sindr(cfg: SystemConfig, compressed: float) -> float:
    # SINDR = Ĉ/(1 - Ĉ/(2√ω+1))
    inflation = cfg.crosstalk_inflation
    if compressed >= inflation:
        raise ModelViolationError(f'Compressed gain {compressed} reached the crosstalk inflation {inflation}')
    return compressed/(1.0 - compressed/inflation)

def stage_sindr(cfg: SystemConfig, context: MmseStageContext) -> float:
#======================================================================
    if context.stage_count != cfg.m:
        raise ValueError(f'Context has {context.stage_count} streams, configuration has {cfg.m}')
    c = cfg.distortion_gain
    d = cfg.receiver_noise
    h = context.target
    if context.stage == context.stage_count:
        # rank-one system: no stream left to interfere
        system = (c - 1.0)/d*np.outer(h, h.conj()) + np.eye(len(h))
        return float(np.real(np.vdot(h, solve_hpd(system, h))))/d
    k = context.deflated
    phi = float(np.real(np.vdot(h, solve_hpd(k @ k.conj().T + (d/c)*np.eye(len(h)), h))))
    return _crosstalk_sindr(cfg, phi/(c*(1.0 + phi)))

def stage_sindr_direct(cfg: SystemConfig, context: MmseStageContext) -> float:
    """
    The same SINDR from the full per-stage system before Woodbury's identity:
    A = (1/d) hᴴ(H_i H_iᴴ c/d + I)⁻¹h with H_i = [h_i, K̂_i].
    """
    if context.stage_count != cfg.m:
        raise ValueError(f'Context has {context.stage_count} streams, configuration has {cfg.m}')
    c = cfg.distortion_gain
    d = cfg.receiver_noise
    h = context.target
    system_columns = np.column_stack([h, context.deflated])
    system = c/d*(system_columns @ system_columns.conj().T) + np.eye(len(h))
    compressed = float(np.real(np.vdot(h, solve_hpd(system, h))))/d
    if context.stage == context.stage_count:
        return compressed/(1.0 - compressed)
    return _crosstalk_sindr(cfg, compressed)

def mmse_sindr_profile(cfg: SystemConfig, real: ChannelRealization) -> SindrProfile:
    """
    Stage SINDRs evaluated on the true channel H.
    """
    return SindrProfile(np.array([stage_sindr(cfg, stage_context(real.h, stage))
                                    for stage in range(1, cfg.m + 1)]), Scheme.MMSE)

#===============================================================================

def mmse_sindr_batch(cfg: SystemConfig, h) -> npt.NDArray[np.float64]:
    """
    Stage-ordered SINDRs for a ``(count, n, m)`` stack of true channels.
    """
    h = np.asarray(h, dtype=np.complex128)
    c = cfg.distortion_gain
    d = cfg.receiver_noise
    n, m = h.shape[-2:]
    identity = np.eye(n)
    sindr = np.empty(h.shape[:-2] + (m,))
    for i in range(m - 1):
        k = h[..., :, i + 1:]
        target = h[..., :, i]
        system = np.einsum('...ik,...jk->...ij', k, np.conj(k)) + (d/c)*identity
        solved = np.linalg.solve(system, target[..., np.newaxis])[..., 0]
        phi = np.real(np.einsum('...i,...i->...', np.conj(target), solved))
        compressed = phi/(c*(1.0 + phi))
        sindr[..., i] = compressed/(1.0 - compressed/cfg.crosstalk_inflation)
    gain = np.sum(np.abs(h[..., :, m - 1])**2, axis=-1)
    sindr[..., m - 1] = gain/(d + (c - 1.0)*gain)
    return sindr

#===============================================================================

def mmse_decode_batch(cfg: SystemConfig, y, h_hat, mod: ModulationSpec,
                      genie=None, impairment_aware: bool = True) -> npt.NDArray[np.int64]:
    """
    Fixed-order MMSE-SIC over a stack of received vectors.

    At each stage the filter is built from the not-yet-decoded columns of Ĥ,
    the estimate is de-biased by gᴴĥ_i and sliced, and the decided (or, with
    ``genie``, the transmitted) symbol is reconstructed with Ĥ and removed.
    An impairment-unaware receiver uses only the channel and N₀.
    """
    h_hat = np.asarray(h_hat, dtype=np.complex128)
    residual = np.array(y, dtype=np.complex128)
    n, m = h_hat.shape[-2:]
    gain, loading = (cfg.distortion_gain, cfg.receiver_noise) if impairment_aware else (1.0, cfg.n0/cfg.p)
    amplitude = math.sqrt(cfg.p)
    identity = np.eye(n)
    decided = np.zeros(residual.shape[:-1] + (m,), dtype=np.int64)
    for i in range(m):
        remaining = h_hat[..., :, i:]
        target = h_hat[..., :, i]
        system = gain*np.einsum('...ik,...jk->...ij', remaining, np.conj(remaining)) + loading*identity
        weights = np.linalg.solve(system, target[..., np.newaxis])[..., 0]
        bias = np.einsum('...i,...i->...', np.conj(weights), target)
        estimate = np.einsum('...i,...i->...', np.conj(weights), residual)/bias
        decided[..., i] = mod.slice(estimate, amplitude)
        source = decided[..., i] if genie is None else np.asarray(genie)[..., i]
        residual = residual - target*np.asarray(amplitude*mod.points[source])[..., np.newaxis]
    return decided

def mmse_sic_decode(cfg: SystemConfig, y, real: ChannelRealization, mod: ModulationSpec,
                    genie=None, impairment_aware: bool = True) -> npt.NDArray[np.complex128]:
#=========================================================================================
    indices = mmse_decode_batch(cfg, y, real.h_hat, mod, genie, impairment_aware)
    return math.sqrt(cfg.p)*mod.points[indices]

#===============================================================================
