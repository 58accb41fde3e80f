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
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
import json
import logging as log
import math
import pathlib
from typing import Any

#===============================================================================

import numpy as np
import pandas as pd
from tqdm import tqdm

#===============================================================================

from sicperf.src.analytic import MAX_ANTENNAS, Indexing, OutageQuery, outage
from sicperf.src.channel import ConfigError, ModulationSpec, SystemConfig, db_to_linear
from sicperf.src.error_prop import AsepQuery, MmseLimit, stage_asep, total_asep
from sicperf.src.montecarlo import OUTAGE_TRIALS, SER_TRIALS, Feedback, estimate_outage, estimate_ser
from sicperf.src.zf_sic import ChannelBasis, Ordering, Scheme

#===============================================================================

RESOURCE_DIR = pathlib.Path(__file__).parent.parent / 'resources'
PRESET_FILE = 'figure_presets.json'

CSV_COLUMNS = ['snr_db', 'analytic', 'mc_value', 'mc_ci_low', 'mc_ci_high', 'trials', 'mode']
ENGINE_ALIASES = {'mc': 'montecarlo'}

#===============================================================================

class SpecError(ValueError):
    pass

#===============================================================================

class QueryKind(Enum):
    OUTAGE     = 'outage'
    ASEP       = 'asep'
    TOTAL_ASEP = 'total_asep'

class Engine(Enum):
    ANALYTIC   = 'analytic'
    MONTECARLO = 'montecarlo'

    @classmethod
    def parse(cls, name: str) -> Engine:
        return cls(ENGINE_ALIASES.get(name, name))

#===============================================================================

_REQUIRED = object()

def _get(data: dict, key: str, path: str, kind=None, default=_REQUIRED) -> Any:
    if key not in data:
        if default is _REQUIRED:
            raise SpecError(f'{path}{key}: missing required field')
        return default
    value = data[key]
    if kind is not None and (not isinstance(value, kind) or isinstance(value, bool)):
        raise SpecError(f'{path}{key}: expected {getattr(kind, "__name__", kind)}, got {value!r}')
    return value

def _get_db(data: dict, key: str, path: str, default=_REQUIRED) -> Any:
    # accepts `key` (linear) or `key_db`, never both
    if key in data and f'{key}_db' in data:
        raise SpecError(f'{path}{key}: give either {key} or {key}_db')
    if f'{key}_db' in data:
        return db_to_linear(_get(data, f'{key}_db', path, (int, float)))
    return _get(data, key, path, (int, float), default)

def _get_enum(data: dict, key: str, path: str, enum, default=_REQUIRED):
    value = _get(data, key, path, str, default)
    if isinstance(value, enum) or value is None:
        return value
    try:
        return enum(value)
    except ValueError:
        choices = ', '.join(e.value for e in enum)
        raise SpecError(f'{path}{key}: {value!r} is not one of {choices}') from None

#===============================================================================

@dataclass(frozen=True)
class ExperimentQuery:
    kind: QueryKind
    scheme: Scheme
    label: str
    ordering: Ordering = Ordering.FIXED
    index: int = 1
    indexing: Indexing = Indexing.SIC_STAGE
    gamma_th: float | None = None
    modulation: str = 'bpsk'
    overrides: tuple[tuple[str, float], ...] = ()

    def config(self, base: SystemConfig, snr_db: float) -> SystemConfig:
    #===================================================================
        return base.with_values(**dict(self.overrides)).with_snr_db(snr_db)

    def outage_query(self) -> OutageQuery:
    #=====================================
        return OutageQuery(self.gamma_th, self.index, self.indexing, self.ordering, self.scheme)

    def stage(self, m: int) -> int:
        return self.index if self.indexing == Indexing.SIC_STAGE else m - self.index + 1

    def to_json(self) -> dict:
        data = {'kind': self.kind.value, 'scheme': self.scheme.value, 'label': self.label,
                'ordering': self.ordering.value, 'index': self.index, 'indexing': self.indexing.value}
        if self.kind == QueryKind.OUTAGE:
            data['gamma_th'] = self.gamma_th
        else:
            data['modulation'] = self.modulation
        if self.overrides:
            data['overrides'] = dict(self.overrides)
        return data

    @classmethod
    def from_json(cls, data: dict, path: str, position: int) -> ExperimentQuery:
    #===========================================================================
        if not isinstance(data, dict):
            raise SpecError(f'{path}: expected an object')
        path = f'{path}.'
        kind = _get_enum(data, 'kind', path, QueryKind, QueryKind.OUTAGE)
        scheme = _get_enum(data, 'scheme', path, Scheme)
        ordering = _get_enum(data, 'ordering', path, Ordering,
                             Ordering.FOSCHINI if scheme == Scheme.ZF else Ordering.FIXED)
        index = _get(data, 'index', path, int, 1)
        if index < 1:
            raise SpecError(f'{path}index: must be at least 1, got {index}')
        gamma_th = None
        if kind == QueryKind.OUTAGE:
            gamma_th = _get_db(data, 'gamma_th', path)
            if not gamma_th > 0:
                raise SpecError(f'{path}gamma_th: must be positive, got {gamma_th}')
        modulation = _get(data, 'modulation', path, str, 'bpsk')
        try:
            ModulationSpec.from_name(modulation)
        except ConfigError as error:
            raise SpecError(f'{path}modulation: {error}') from None
        overrides = _get(data, 'overrides', path, dict, {})
        known = {f.name for f in fields(SystemConfig)} - {'p'}
        converted = {}
        for key in overrides:
            name = key[:-3] if key.endswith('_db') else key
            if name not in known:
                raise SpecError(f'{path}overrides.{key}: not a system parameter')
            converted[name] = _get_db(overrides, name, f'{path}overrides.')
        default_label = f'q{position}_{kind.value}_{scheme.value}_{ordering.value}_{index}'
        return cls(kind, scheme, _get(data, 'label', path, str, default_label), ordering, index,
                   _get_enum(data, 'indexing', path, Indexing, Indexing.SIC_STAGE),
                   gamma_th, modulation, tuple(sorted(converted.items())))

#===============================================================================

@dataclass(frozen=True)
class ExperimentSpec:
    config: SystemConfig
    sweep_db: tuple[float, ...]
    queries: tuple[ExperimentQuery, ...]
    engines: frozenset[Engine] = frozenset({Engine.ANALYTIC, Engine.MONTECARLO})
    trials: int = OUTAGE_TRIALS
    ser_trials: int = SER_TRIALS
    seed: int = 0
    output: str = '.'
    name: str = 'experiment'
    basis: ChannelBasis = ChannelBasis.ESTIMATE
    mmse_limit: MmseLimit = MmseLimit.RECEIVER
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if len(self.sweep_db) == 0 or any(b <= a for a, b in zip(self.sweep_db, self.sweep_db[1:])):
            raise SpecError('sweep_db: must be a non-empty, strictly increasing list')
        if len(self.queries) == 0:
            raise SpecError('queries: at least one query is needed')
        if len(self.engines) == 0:
            raise SpecError('engines: at least one engine is needed')
        labels = [q.label for q in self.queries]
        if len(set(labels)) != len(labels):
            raise SpecError('queries: labels must be unique')
        for position, query in enumerate(self.queries):
            try:
                config = self.config.with_values(**dict(query.overrides))
            except ConfigError as error:
                raise SpecError(f'queries[{position}].overrides: {error}') from None
            if query.index > config.m:
                raise SpecError(f'queries[{position}].index: {query.index} exceeds m = {config.m}')
            if Engine.ANALYTIC in self.engines and query.scheme == Scheme.ZF and config.n > MAX_ANTENNAS:
                raise SpecError(f'config.n: closed-form ZF-SIC results are limited to n <= {MAX_ANTENNAS}')

    @classmethod
    def from_json(cls, data: dict) -> ExperimentSpec:
    #================================================
        if not isinstance(data, dict):
            raise SpecError('spec: expected an object')
        config = _get(data, 'config', '', dict)
        try:
            system = SystemConfig(n=_get(config, 'n', 'config.', int), m=_get(config, 'm', 'config.', int),
                                  n0=_get(config, 'n0', 'config.', (int, float), 1.0),
                                  kappa_t=_get(config, 'kappa_t', 'config.', (int, float), 0.0),
                                  kappa_r=_get(config, 'kappa_r', 'config.', (int, float), 0.0),
                                  omega=_get_db(config, 'omega', 'config.', 0.0))
        except ConfigError as error:
            raise SpecError(f'config: {error}') from None
        sweep = _get(data, 'sweep_db', '', list)
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in sweep):
            raise SpecError('sweep_db: expected a list of numbers')
        queries = _get(data, 'queries', '', list)
        try:
            engines = frozenset(Engine.parse(e) for e in _get(data, 'engines', '', list,
                                                              ['analytic', 'montecarlo']))
        except ValueError:
            raise SpecError('engines: expected a subset of analytic, montecarlo') from None
        trials = _get(data, 'trials', '', int, OUTAGE_TRIALS)
        ser_trials = _get(data, 'ser_trials', '', int, SER_TRIALS)
        for key, value in (('trials', trials), ('ser_trials', ser_trials)):
            if value < 1000:
                raise SpecError(f'{key}: need at least 1000 trials, got {value}')
        return cls(system, tuple(float(v) for v in sweep),
                   tuple(ExperimentQuery.from_json(q, f'queries[{n}]', n) for n, q in enumerate(queries)),
                   engines, trials, ser_trials, _get(data, 'seed', '', int, 0),
                   _get(data, 'output', '', str, '.'), _get(data, 'name', '', str, 'experiment'),
                   _get_enum(data, 'basis', '', ChannelBasis, ChannelBasis.ESTIMATE),
                   _get_enum(data, 'mmse_limit', '', MmseLimit, MmseLimit.RECEIVER),
                   tuple(_get(data, 'notes', '', list, [])))

    def to_json(self) -> dict:
    #=========================
        config = {k: v for k, v in asdict(self.config).items() if k != 'p'}
        return {'name': self.name, 'config': config, 'sweep_db': list(self.sweep_db),
                'queries': [q.to_json() for q in self.queries],
                'engines': sorted(e.value for e in self.engines),
                'trials': self.trials, 'ser_trials': self.ser_trials, 'seed': self.seed,
                'output': self.output, 'basis': self.basis.value,
                'mmse_limit': self.mmse_limit.value, 'notes': list(self.notes)}

    def with_options(self, **options) -> ExperimentSpec:
        """
        Copy with command-line overrides applied; ``None`` values are ignored.
        """
        return replace(self, **{k: v for k, v in options.items() if v is not None})

    def output_path(self, query: ExperimentQuery) -> pathlib.Path:
        return pathlib.Path(self.output) / f'{self.name}_{query.label}.csv'

#===============================================================================

def load_spec(path) -> ExperimentSpec:
#=====================================
    try:
        with open(path, 'r') as fd:
            data = json.loads(fd.read())
    except FileNotFoundError:
        raise SpecError(f'Cannot open spec file: {path}') from None
    except json.JSONDecodeError as error:
        raise SpecError(f'{path}: line {error.lineno}, column {error.colno}: {error.msg}') from None
    return ExperimentSpec.from_json(data)

#===============================================================================

class PresetLibrary:
    def __init__(self):
        with open(RESOURCE_DIR / PRESET_FILE, 'r') as fd:
            self.__presets = json.loads(fd.read())

    @property
    def available_presets(self) -> list[str]:
        return [p['id'] for p in self.__presets]

    def description(self, preset_id: str) -> str:
        return self.__find(preset_id).get('description', '')

    def get_spec(self, preset_id: str) -> dict:
        preset = self.__find(preset_id)
        return dict(preset['spec'], name=preset_id, notes=preset.get('notes', []))

    def __find(self, preset_id: str) -> dict:
        for preset in self.__presets:
            if preset['id'] == preset_id:
                return preset
        raise SpecError(f'Unknown preset {preset_id!r}; available: {", ".join(self.available_presets)}')

def figure_preset(preset_id: str) -> ExperimentSpec:
#===================================================
    return ExperimentSpec.from_json(PresetLibrary().get_spec(preset_id))

#===============================================================================

def _point_seed(seed: int, query: int, point: int) -> int:
    return int(np.random.SeedSequence([seed, query, point]).generate_state(1, np.uint64)[0])

def _evaluate(spec: ExperimentSpec, position: int, query: ExperimentQuery, point: int,
              snr_db: float, workers: int) -> dict:
    cfg = query.config(spec.config, snr_db)
    row = {'snr_db': snr_db, 'analytic': math.nan, 'mc_value': math.nan, 'mc_ci_low': math.nan,
           'mc_ci_high': math.nan, 'trials': 0, 'mode': 'analytic'}
    seed = _point_seed(spec.seed, position, point)
    if query.kind == QueryKind.OUTAGE:
        outage_query = query.outage_query()
        if Engine.ANALYTIC in spec.engines:
            row['analytic'] = outage(cfg, outage_query)
        estimate = (estimate_outage(cfg, outage_query, spec.trials, seed, basis=spec.basis, workers=workers)
                        if Engine.MONTECARLO in spec.engines else None)
    else:
        mod = ModulationSpec.from_name(query.modulation)
        asep_query = AsepQuery(mod, query.scheme, cfg, query.ordering, spec.mmse_limit)
        stage = query.stage(cfg.m)
        if Engine.ANALYTIC in spec.engines:
            row['analytic'] = (total_asep(asep_query) if query.kind == QueryKind.TOTAL_ASEP
                                else stage_asep(asep_query, stage))
        estimate = None
        if Engine.MONTECARLO in spec.engines:
            feedback = Feedback.DECISION if query.kind == QueryKind.TOTAL_ASEP else Feedback.GENIE
            ser = estimate_ser(cfg, query.scheme, mod, spec.ser_trials, seed, feedback,
                               query.ordering, workers=workers)
            estimate = ser.overall if query.kind == QueryKind.TOTAL_ASEP else ser.stage(stage)
    if estimate is not None:
        row.update(mc_value=estimate.value, mc_ci_low=estimate.ci_low, mc_ci_high=estimate.ci_high,
                   trials=estimate.trials, mode=estimate.mode.value)
    return row

def _header(spec: ExperimentSpec, query: ExperimentQuery) -> list[str]:
    lines = [f'sicperf experiment {spec.name}, query {query.label}',
             f'config: {json.dumps(spec.to_json()["config"], sort_keys=True)}',
             f'query: {json.dumps(query.to_json(), sort_keys=True)}',
             f'engines: {",".join(sorted(e.value for e in spec.engines))}; seed: {spec.seed}; '
             f'basis: {spec.basis.value}; mmse_limit: {spec.mmse_limit.value}']
    return [f'# {line}\n' for line in lines + list(spec.notes)]

def write_table(path: pathlib.Path, header: list[str], rows: list[dict]):
#========================================================================
    path.parent.mkdir(parents=True, exist_ok=True)
    table = pd.DataFrame(rows, columns=CSV_COLUMNS)
    with open(path, 'w', encoding='utf-8', newline='') as fd:
        fd.writelines(header)
        table.to_csv(fd, index=False, float_format='%.9g', lineterminator='\n')

def run_experiment(spec: ExperimentSpec, workers: int = 1, progress: bool = True,
                   dry_run: bool = False) -> list[pathlib.Path]:
    """
    Evaluate every query over the SNR sweep and write one CSV per query.

    Returns the paths written (or, for a dry run, the paths that would be).
    """
    paths = [spec.output_path(query) for query in spec.queries]
    if dry_run:
        log.info(f'Spec {spec.name} is valid: {len(spec.queries)} queries x {len(spec.sweep_db)} points')
        return paths
    total = len(spec.queries)*len(spec.sweep_db)
    with tqdm(total=total, unit='pt', ncols=40, disable=not progress,
              bar_format='{l_bar}{bar}| {n_fmt}/{total_fmt}') as progress_bar:
        for position, (query, path) in enumerate(zip(spec.queries, paths)):
            rows = []
            for point, snr_db in enumerate(spec.sweep_db):
                rows.append(_evaluate(spec, position, query, point, snr_db, workers))
                progress_bar.update(1)
            write_table(path, _header(spec, query), rows)
            log.info(f'Wrote {path}')
    return paths

#===============================================================================
