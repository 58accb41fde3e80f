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

import argparse
import logging
import os

#===============================================================================

from sicperf.src.experiment import Engine, PresetLibrary, SpecError, figure_preset, load_spec, run_experiment

#===============================================================================

def _engines(value: str) -> frozenset:
    try:
        return frozenset(Engine.parse(name.strip()) for name in value.split(',') if name.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f'invalid engine list: {value}') from None

def _workers(threads) -> int:
    if threads is not None:
        return max(1, threads)
    try:
        return max(1, int(os.environ.get('THREADS', '1')))
    except ValueError:
        raise SpecError(f"THREADS must be an integer, got {os.environ['THREADS']!r}") from None

def _configure_logging(opts: dict):
    level = logging.INFO
    if opts['quiet']:
        level = logging.WARNING
    elif opts['verbose']:
        level = logging.DEBUG
    logging.basicConfig(level=level, filename=opts['log_file'], format='%(levelname)s: %(message)s')

#===============================================================================

def main():
    import sys

    parser = argparse.ArgumentParser(description='Outage and symbol error analysis of ZF-SIC and MMSE-SIC '
                                                 'receivers with hardware impairments and imperfect CSI')
    parser.add_argument('--quiet', action='store_true',
                        help='only log warnings and hide progress bars')
    parser.add_argument('--verbose', action='store_true',
                        help='log debugging detail')
    parser.add_argument('--log-file', dest='log_file',
                        help='write log messages to this file')

    running = argparse.ArgumentParser(add_help=False)
    running.add_argument('--engines', type=_engines,
                         help='comma separated subset of analytic,mc')
    running.add_argument('--threads', type=int,
                         help='Monte-Carlo worker processes (default: $THREADS or 1)')
    running.add_argument('--trials', type=int,
                         help='Monte-Carlo trials per outage point')
    running.add_argument('--ser-trials', dest='ser_trials', type=int,
                         help='Monte-Carlo trials per error-rate point')
    running.add_argument('--seed', type=int,
                         help='base random seed')
    running.add_argument('--out', metavar='DIR',
                         help='directory for the CSV results')
    running.add_argument('--dry-run', dest='dry_run', action='store_true',
                         help='validate and list outputs without computing')

    commands = parser.add_subparsers(dest='command', required=True)
    run_parser = commands.add_parser('run', parents=[running], help='run an experiment spec file')
    run_parser.add_argument('spec', metavar='SPEC', help='JSON experiment spec')
    preset_parser = commands.add_parser('preset', parents=[running], help='run a figure preset')
    preset_parser.add_argument('preset', metavar='PRESET', help='preset id, e.g. fig1')
    validate_parser = commands.add_parser('validate', help='check an experiment spec file')
    validate_parser.add_argument('spec', metavar='SPEC', help='JSON experiment spec')
    commands.add_parser('presets', help='list the figure presets')

    try:
        opts = vars(parser.parse_args())
        _configure_logging(opts)
        if opts['command'] == 'presets':
            library = PresetLibrary()
            for preset_id in library.available_presets:
                print(f'{preset_id}: {library.description(preset_id)}')
        elif opts['command'] == 'validate':
            spec = load_spec(opts['spec'])
            print(f'{opts["spec"]}: valid, {len(spec.queries)} queries over {len(spec.sweep_db)} points')
        else:
            spec = load_spec(opts['spec']) if opts['command'] == 'run' else figure_preset(opts['preset'])
            spec = spec.with_options(engines=opts['engines'], trials=opts['trials'],
                                     ser_trials=opts['ser_trials'], seed=opts['seed'], output=opts['out'])
            paths = run_experiment(spec, workers=_workers(opts['threads']),
                                   progress=not opts['quiet'], dry_run=opts['dry_run'])
            for path in paths:
                print(path)
    except (ValueError, ArithmeticError, OSError) as error:
        sys.stderr.write(f'{error}\n')
        sys.exit(1)
    sys.exit(0)

#===============================================================================

if __name__ == '__main__':
    main()

#===============================================================================
