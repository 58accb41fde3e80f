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
Reproducible Monte-Carlo estimates of outage probability and symbol error rate.

Trials are split into fixed-size chunks; chunk ``c`` draws from a Philox
generator keyed by ``SeedSequence(seed, spawn_key=(c, 0))`` so results do not
depend on how chunks are spread over worker processes.
"""

#===============================================================================

from __future__ import annotations
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
import logging as log
import math

#===============================================================================

import numpy as np
import numpy.typing as npt
from scipy.stats import norm

#===============================================================================

from sicperf.src.analytic import OutageQuery, UnsupportedModeError
from sicperf.src.channel import ModulationSpec, SystemConfig, draw_symbols, sample_channels, sample_received
from sicperf.src.mmse_sic import mmse_decode_batch, mmse_sindr_batch
from sicperf.src.zf_sic import (ChannelBasis, Ordering, Scheme, order_permutations,
                                zf_decode_batch, zf_sindr_batch)

#===============================================================================

CHUNK_SIZE = 10_000
MIN_TRIALS = 1_000
OUTAGE_TRIALS = 1_000_000
SER_TRIALS = 100_000
RESAMPLE_FRACTION = 1e-4
RESAMPLE_ATTEMPTS = 100

#===============================================================================

class ResamplingLimitError(ArithmeticError):
    pass

#===============================================================================

class SimulationMode(Enum):
    FORMULA_SAMPLING = 'formula_sampling'
    LINK_LEVEL       = 'link_level'

class Feedback(Enum):
    GENIE    = 'genie'
    DECISION = 'decision'

#===============================================================================

def wilson_interval(events: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """
    Wilson score interval for a binomial proportion.
    """
    if trials <= 0:
        raise ValueError('Need at least one trial')
    z = norm.ppf(0.5 + confidence/2.0)
    z2 = z*z
    share = events/trials
    centre = (share + z2/(2.0*trials))/(1.0 + z2/trials)
    half = z*math.sqrt(share*(1.0 - share)/trials + z2/(4.0*trials*trials))/(1.0 + z2/trials)
    return max(0.0, centre - half), min(1.0, centre + half)

@dataclass(frozen=True)
class OutageEstimate:
    value: float
    ci_low: float
    ci_high: float
    trials: int
    seed: int
    mode: SimulationMode
    events: int = 0

    def __post_init__(self):
        if not 0.0 <= self.ci_low <= self.value <= self.ci_high <= 1.0:
            raise ValueError(f'Inconsistent estimate {self.value} in [{self.ci_low}, {self.ci_high}]')

    @classmethod
    def from_counts(cls, events: int, trials: int, seed: int, mode: SimulationMode) -> OutageEstimate:
    #=================================================================================================
        low, high = wilson_interval(events, trials)
        value = events/trials
        return cls(value, min(low, value), max(high, value), trials, seed, mode, events)

    @property
    def ci_width(self) -> float:
        return self.ci_high - self.ci_low

@dataclass(frozen=True)
class SerEstimate:
    per_stage: tuple[OutageEstimate, ...]
    overall: OutageEstimate
    feedback: Feedback

    def stage(self, k: int) -> OutageEstimate:
        return self.per_stage[k - 1]

#===============================================================================

def chunk_generator(seed: int, chunk: int, stream: int = 0) -> np.random.Generator:
#===================================================================================
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk, stream))))

def _chunk_sizes(trials: int) -> list[int]:
    full, rest = divmod(trials, CHUNK_SIZE)
    return [CHUNK_SIZE]*full + ([rest] if rest else [])

def _run_chunks(worker, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) == 1:
        return [worker(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(worker, tasks))

def _check_resampled(resampled: int, trials: int):
    if resampled == 0:
        return
    log.warning(f'Resampled {resampled} degenerate channel realizations out of {trials}')
    if resampled > RESAMPLE_FRACTION*trials:
        raise ResamplingLimitError(f'{resampled} degenerate realizations exceed '
                                   f'{RESAMPLE_FRACTION:.2%} of {trials} trials')

#===============================================================================

def _sample_sindrs(cfg: SystemConfig, scheme: Scheme, ordering: Ordering, basis: ChannelBasis,
                   rng: np.random.Generator, count: int) -> tuple[npt.NDArray, npt.NDArray]:
    h, delta_h = sample_channels(cfg, rng, count)
    if scheme == Scheme.MMSE:
        return mmse_sindr_batch(cfg, h), np.zeros(count, dtype=bool)
    return zf_sindr_batch(cfg, h, delta_h, h + delta_h, ordering, basis)

@dataclass(frozen=True)
class _OutageTask:
    cfg: SystemConfig
    query: OutageQuery
    basis: ChannelBasis
    seed: int
    chunk: int
    size: int

def _outage_chunk(task: _OutageTask) -> tuple[int, int]:
    q = task.query
    rng = chunk_generator(task.seed, task.chunk)
    sindr, degenerate = _sample_sindrs(task.cfg, q.scheme, q.ordering, task.basis, rng, task.size)
    resampled = int(np.count_nonzero(degenerate))
    if resampled:
        spare = chunk_generator(task.seed, task.chunk, 1)
        for row in np.flatnonzero(degenerate):
            for _ in range(RESAMPLE_ATTEMPTS):
                values, bad = _sample_sindrs(task.cfg, q.scheme, q.ordering, task.basis, spare, 1)
                if not bad[0]:
                    sindr[row] = values[0]
                    break
            else:
                raise ResamplingLimitError('Could not draw a non-degenerate channel realization')
    stage = q.stage(task.cfg.m)
    return int(np.count_nonzero(sindr[:, stage - 1] <= q.gamma_th)), resampled

def estimate_outage(cfg: SystemConfig, q: OutageQuery, trials: int = OUTAGE_TRIALS, seed: int = 0,
                    mode: SimulationMode = SimulationMode.FORMULA_SAMPLING,
                    basis: ChannelBasis = ChannelBasis.ESTIMATE, workers: int = 1) -> OutageEstimate:
    """
    Fraction of channel draws whose stage SINDR is at most ``q.gamma_th``.
    """
    if trials < MIN_TRIALS:
        raise ValueError(f'Need at least {MIN_TRIALS} trials, got {trials}')
    if mode != SimulationMode.FORMULA_SAMPLING:
        raise UnsupportedModeError('Outage is estimated by sampling the SINDR expressions')
    if q.scheme == Scheme.MMSE and q.ordering != Ordering.FIXED:
        raise UnsupportedModeError('MMSE-SIC is simulated with fixed ordering only')
    tasks = [_OutageTask(cfg, q, basis, seed, chunk, size) for chunk, size in enumerate(_chunk_sizes(trials))]
    results = _run_chunks(_outage_chunk, tasks, workers)
    events = sum(r[0] for r in results)
    _check_resampled(sum(r[1] for r in results), trials)
    return OutageEstimate.from_counts(events, trials, seed, mode)

#===============================================================================

@dataclass(frozen=True)
class _SerTask:
    cfg: SystemConfig
    scheme: Scheme
    ordering: Ordering
    mod: ModulationSpec
    feedback: Feedback
    impairment_aware: bool
    suppress_thermal_noise: bool
    seed: int
    chunk: int
    size: int

def _draw_channels(task: _SerTask, rng: np.random.Generator) -> tuple[npt.NDArray, npt.NDArray, int]:
    h, delta_h = sample_channels(task.cfg, rng, task.size)
    if task.scheme == Scheme.MMSE:
        return h, h + delta_h, 0
    h_hat = h + delta_h
    _, degenerate = zf_sindr_batch(task.cfg, h, delta_h, h_hat, task.ordering)
    resampled = int(np.count_nonzero(degenerate))
    if resampled:
        spare = chunk_generator(task.seed, task.chunk, 1)
        for row in np.flatnonzero(degenerate):
            for _ in range(RESAMPLE_ATTEMPTS):
                h_row, delta_row = sample_channels(task.cfg, spare, 1)
                _, bad = zf_sindr_batch(task.cfg, h_row, delta_row, h_row + delta_row, task.ordering)
                if not bad[0]:
                    h[row], h_hat[row] = h_row[0], h_row[0] + delta_row[0]
                    break
            else:
                raise ResamplingLimitError('Could not draw a non-degenerate channel realization')
    return h, h_hat, resampled

def _ser_chunk(task: _SerTask) -> tuple[npt.NDArray[np.int64], int, int]:
    cfg = task.cfg
    rng = chunk_generator(task.seed, task.chunk)
    h, h_hat, resampled = _draw_channels(task, rng)
    sent, s = draw_symbols(cfg, task.mod, rng, task.size)
    y = sample_received(cfg, h, s, rng, task.suppress_thermal_noise)
    genie = sent if task.feedback == Feedback.GENIE else None
    if task.scheme == Scheme.ZF:
        perms = order_permutations(h_hat, task.ordering)
        decided = zf_decode_batch(cfg, y, h_hat, perms, task.mod, genie)
    else:
        perms = np.broadcast_to(np.arange(cfg.m), (task.size, cfg.m))
        decided = mmse_decode_batch(cfg, y, h_hat, task.mod, genie, task.impairment_aware)
    wrong = decided != sent
    per_stage = np.count_nonzero(np.take_along_axis(wrong, perms, axis=-1), axis=0)
    return per_stage, int(np.count_nonzero(wrong)), resampled

def estimate_ser(cfg: SystemConfig, scheme: Scheme, mod: ModulationSpec, trials: int = SER_TRIALS,
                 seed: int = 0, feedback: Feedback = Feedback.DECISION, ordering: Ordering | None = None,
                 impairment_aware: bool = True, suppress_thermal_noise: bool = False,
                 workers: int = 1) -> SerEstimate:
    """
    Link-level symbol error rates per SIC stage and across all streams.

    With genie feedback the stage SER is conditioned on correct cancellation
    of earlier stages; with decision feedback earlier errors propagate.
    """
    if trials < MIN_TRIALS:
        raise ValueError(f'Need at least {MIN_TRIALS} trials, got {trials}')
    if ordering is None:
        ordering = Ordering.FOSCHINI if scheme == Scheme.ZF else Ordering.FIXED
    if scheme == Scheme.MMSE and ordering != Ordering.FIXED:
        raise UnsupportedModeError('MMSE-SIC is simulated with fixed ordering only')
    tasks = [_SerTask(cfg, scheme, ordering, mod, feedback, impairment_aware, suppress_thermal_noise,
                      seed, chunk, size) for chunk, size in enumerate(_chunk_sizes(trials))]
    results = _run_chunks(_ser_chunk, tasks, workers)
    per_stage = np.sum([r[0] for r in results], axis=0)
    _check_resampled(sum(r[2] for r in results), trials)
    mode = SimulationMode.LINK_LEVEL
    return SerEstimate(tuple(OutageEstimate.from_counts(int(k), trials, seed, mode) for k in per_stage),
                       OutageEstimate.from_counts(sum(r[1] for r in results), trials*cfg.m, seed, mode),
                       feedback)

#===============================================================================
