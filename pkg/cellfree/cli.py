"""
cli.py - Experiment runner

Scenario files are TOML:

    [system]                  # dB where the key says so, linear otherwise
    num_aps = 4
    num_antennas = 64
    num_users = 4
    snr_db = 20.0             # beta / sigma^2
    noise_power = 1.0
    sinr_target_db = 15.0     # scalar or one value per user
    relaxation_factor = 1.0
    seed = 42
    # large_scale = [[...]]   # optional K x M linear matrix, overrides snr_db

    [admm]
    penalty = 10.0
    max_iters = 10
    primal_tol = 1e-4
    dual_tol = 1e-4
    rel_tol = 1e-3
    solver_tol = 1e-7
    solver_max_iters = 200

    [experiment]
    methods = ["centralized", "admm", "conjugate"]
    n_realizations = 100
    output_dir = "results"
    comm_iterations = 10      # iteration multiplier of the comm table
    measure_comm = true       # also push realization 0 through the fronthaul
    latency = 0.0             # seconds per fronthaul link traversal

    [sweep]                   # only used by the sweep subcommand
    sinr_target_db = [15.0, 25.0]
    relaxation_factor = [1.0, 1.13]
    penalty = [10.0]
    num_aps = [2, 4]

    [[scenario]]              # zero or more; each inherits the sections above
    name = "fig2_gamma15"
    system = { num_aps = 2 }

Every file written embeds the schema version and the resolved config, and none
carries a timestamp, so reruns are byte-identical.
"""

import argparse
import itertools
import json
import logging
import re
import sys
import time
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from . import config as defaults
from .datasources.channels import channel_source, generate_channels
from .errors import CellFreeError, ConfigError
from .methods import METHODS, get_method
from .metrics import empirical_cdf, ensemble
from .model import SystemConfig, beta_from_snr_db, db_to_linear, linear_to_db
from .netsim import Scheme, comm_volume, run_centralized_protocol, run_distributed_protocol
from .workers import default_max_workers, get_worker_manager

logger = logging.getLogger(__name__)

BANNER = '=' * 70

SYSTEM_KEYS = {
    'num_aps': 'int', 'num_antennas': 'int', 'num_users': 'int',
    'snr_db': 'float', 'noise_power': 'float', 'sinr_target_db': 'float_or_list',
    'relaxation_factor': 'float', 'seed': 'int', 'large_scale': 'matrix',
}
ADMM_KEYS = {
    'penalty': 'float', 'max_iters': 'int', 'primal_tol': 'float', 'dual_tol': 'float',
    'rel_tol': 'float', 'solver_tol': 'float', 'solver_max_iters': 'int',
}
EXPERIMENT_KEYS = {
    'methods': 'str_list', 'n_realizations': 'int', 'output_dir': 'str',
    'comm_iterations': 'int', 'measure_comm': 'bool', 'latency': 'float',
}
SWEEP_KEYS = {
    'sinr_target_db': ('system', 'float'),
    'relaxation_factor': ('system', 'float'),
    'penalty': ('admm', 'float'),
    'num_aps': ('system', 'int'),
}
SECTIONS = {'system': SYSTEM_KEYS, 'admm': ADMM_KEYS, 'experiment': EXPERIMENT_KEYS}

DEFAULT_SYSTEM = {
    'num_aps': defaults.NUM_APS, 'num_antennas': defaults.NUM_ANTENNAS,
    'num_users': defaults.NUM_USERS, 'snr_db': defaults.SNR_DB,
    'noise_power': defaults.NOISE_POWER, 'sinr_target_db': defaults.SINR_TARGET_DB,
    'relaxation_factor': defaults.RELAXATION_FACTOR, 'seed': defaults.SEED,
}
DEFAULT_ADMM = {
    'penalty': defaults.PENALTY, 'max_iters': defaults.MAX_ITERS,
    'primal_tol': defaults.PRIMAL_TOL, 'dual_tol': defaults.DUAL_TOL,
    'rel_tol': defaults.REL_TOL, 'solver_tol': defaults.SOLVER_TOL,
    'solver_max_iters': defaults.SOLVER_MAX_ITERS,
}
DEFAULT_EXPERIMENT = {
    'methods': ['centralized', 'admm', 'conjugate'],
    'n_realizations': defaults.N_REALIZATIONS, 'output_dir': defaults.OUTPUT_DIR,
    'comm_iterations': defaults.MAX_ITERS, 'measure_comm': True, 'latency': 0.0,
}

# SystemConfig field -> scenario file key
CONFIG_KEYS = {
    'num_aps': 'system.num_aps', 'num_antennas': 'system.num_antennas',
    'num_users': 'system.num_users', 'noise_power': 'system.noise_power',
    'large_scale': 'system.snr_db', 'sinr_target': 'system.sinr_target_db',
    'relaxation_factor': 'system.relaxation_factor', 'rng_seed': 'system.seed',
    'penalty': 'admm.penalty', 'max_iters': 'admm.max_iters',
    'primal_tol': 'admm.primal_tol', 'dual_tol': 'admm.dual_tol', 'rel_tol': 'admm.rel_tol',
    'solver_tol': 'admm.solver_tol', 'solver_max_iters': 'admm.solver_max_iters',
}

RESULT_COLUMNS = ['scenario', 'method', 'realization', 'min_sinr_db', 'mean_sinr_db',
                  'total_power_db', 'iterations', 'converged']
COMM_COLUMNS = ['scheme', 'per_exchange_scalars', 'per_iteration_bytes', 'total_bytes']


# ---------------------------------------------------------------------------
# Scenario files
# ---------------------------------------------------------------------------

def _line_of(text, parts):
    """Best-effort line number of a key path inside the TOML source."""
    lines = text.splitlines()
    start = 0
    headers = list(parts[:-1])
    key = str(parts[-1])
    section = '.'.join(str(h) for h in headers)
    if len(headers) >= 2 and headers[0] == 'scenario' and isinstance(headers[1], int):
        count = -1
        for i, line in enumerate(lines):
            if re.match(r'\s*\[\[\s*scenario\s*\]\]', line):
                count += 1
                if count == headers[1]:
                    start = i
                    break
        section = '.'.join(['scenario'] + [str(h) for h in headers[2:]]) if headers[2:] else ''
    if section:
        header = re.compile(r'\s*\[\s*{}\s*\]'.format(re.escape(section)))
        for i in range(start, len(lines)):
            if header.match(lines[i]):
                start = i
                break
    exact = re.compile(r'^\s*{}\s*='.format(re.escape(key)))
    loose = re.compile(r'\b{}\s*='.format(re.escape(key)))
    for first in (start, 0):
        for pattern in (exact, loose):
            for i in range(first, len(lines)):
                if pattern.search(lines[i]):
                    return i + 1
    return None


def _key_path(parts):
    out = ''
    for p in parts:
        if isinstance(p, int):
            out += '[{}]'.format(p)
        else:
            out += ('.' if out else '') + p
    return out


class _Reader:
    """Typed access to a parsed TOML document, raising ConfigError with key and line."""

    def __init__(self, text, source):
        self.text = text
        self.source = source

    def error(self, message, parts):
        return ConfigError(message, _key_path(parts), _line_of(self.text, parts), self.source)

    def check(self, value, kind, parts):
        if kind == 'int':
            if isinstance(value, bool) or not isinstance(value, int):
                raise self.error('expected an integer, got {!r}'.format(value), parts)
            return value
        if kind == 'float':
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise self.error('expected a number, got {!r}'.format(value), parts)
            return float(value)
        if kind == 'float_or_list':
            if isinstance(value, list):
                return [self.check(v, 'float', parts) for v in value]
            return self.check(value, 'float', parts)
        if kind == 'matrix':
            if not isinstance(value, list) or not all(isinstance(row, list) for row in value):
                raise self.error('expected a list of rows', parts)
            return [[self.check(v, 'float', parts) for v in row] for row in value]
        if kind == 'str':
            if not isinstance(value, str):
                raise self.error('expected a string, got {!r}'.format(value), parts)
            return value
        if kind == 'str_list':
            if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                raise self.error('expected a list of strings', parts)
            return list(value)
        if kind == 'bool':
            if not isinstance(value, bool):
                raise self.error('expected true or false, got {!r}'.format(value), parts)
            return value
        raise AssertionError(kind)

    def section(self, table, schema, parts):
        if not isinstance(table, dict):
            raise self.error('expected a table', parts)
        out = {}
        for key, value in table.items():
            if key not in schema:
                raise self.error('unknown key', parts + [key])
            out[key] = self.check(value, schema[key], parts + [key])
        return out


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    name: str
    config: SystemConfig
    methods: tuple
    n_realizations: int
    output_dir: Path
    comm_iterations: int = defaults.MAX_ITERS
    measure_comm: bool = True
    latency: float = 0.0
    source: str = None
    settings: dict = field(default_factory=dict, repr=False)

    @property
    def scenario_dir(self):
        return Path(self.output_dir) / self.name

    def to_dict(self):
        return {
            'name': self.name,
            'methods': list(self.methods),
            'n_realizations': self.n_realizations,
            'comm_iterations': self.comm_iterations,
            'measure_comm': self.measure_comm,
            'latency': self.latency,
            'settings': self.settings,
            'config': self.config.to_dict(),
        }


def build_system_config(system, admm, reader=None, origin=None):
    """
    SystemConfig from resolved [system] and [admm] sections.

    origin maps (section, key) to the key path the value was read from, so an
    invalid value is reported where the file sets it.
    """
    noise = system['noise_power']
    try:
        if 'large_scale' in system:
            large_scale = np.array(system['large_scale'], dtype=float)
        else:
            large_scale = beta_from_snr_db(system['snr_db'], noise)
        return SystemConfig(
            num_aps=system['num_aps'],
            num_antennas=system['num_antennas'],
            num_users=system['num_users'],
            noise_power=noise,
            large_scale=large_scale,
            sinr_target=db_to_linear(system['sinr_target_db']),
            relaxation_factor=system['relaxation_factor'],
            penalty=admm['penalty'],
            max_iters=admm['max_iters'],
            primal_tol=admm['primal_tol'],
            dual_tol=admm['dual_tol'],
            rel_tol=admm['rel_tol'],
            solver_tol=admm['solver_tol'],
            solver_max_iters=admm['solver_max_iters'],
            rng_seed=system['seed'],
        )
    except ConfigError as e:
        key = CONFIG_KEYS.get(e.key_path, e.key_path or 'system')
        if 'large_scale' in system and e.key_path == 'large_scale':
            key = 'system.large_scale'
        if reader is None:
            raise ConfigError(e.detail, key) from None
        parts = key.split('.')
        if origin is not None and len(parts) == 2:
            parts = origin(*parts)
        raise reader.error(e.detail, parts) from None


def parse_config(path, expand_sweep=False, output_dir=None):
    """
    Reads a scenario file into fully resolved ExperimentSpecs.

    Args:
        path: TOML scenario file
        expand_sweep: Expand the [sweep] grid (sweep subcommand)
        output_dir: Overrides experiment.output_dir when given

    Returns:
        list of ExperimentSpec, one per scenario (per grid point when sweeping)

    Raises:
        ConfigError: unknown keys, ill-typed values, invalid parameters,
                     duplicate scenario names; carries key path and line
    """
    path = Path(path)
    text = path.read_text()
    reader = _Reader(text, str(path))
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        match = re.search(r'line (\d+)', str(e))
        raise ConfigError(str(e), None, int(match.group(1)) if match else None, str(path)) from None

    for key in doc:
        if key not in ('system', 'admm', 'experiment', 'sweep', 'scenario'):
            raise reader.error('unknown section', [key])

    base = {
        'system': dict(DEFAULT_SYSTEM, **reader.section(doc.get('system', {}), SYSTEM_KEYS, ['system'])),
        'admm': dict(DEFAULT_ADMM, **reader.section(doc.get('admm', {}), ADMM_KEYS, ['admm'])),
        'experiment': dict(DEFAULT_EXPERIMENT,
                           **reader.section(doc.get('experiment', {}), EXPERIMENT_KEYS, ['experiment'])),
    }

    sweep = {}
    for key, values in doc.get('sweep', {}).items():
        if key not in SWEEP_KEYS:
            raise reader.error('unknown key', ['sweep', key])
        if not isinstance(values, list) or not values:
            raise reader.error('expected a nonempty list', ['sweep', key])
        sweep[key] = [reader.check(v, SWEEP_KEYS[key][1], ['sweep', key]) for v in values]

    scenarios = doc.get('scenario', [{'name': path.stem}])
    if not isinstance(scenarios, list):
        raise reader.error('expected [[scenario]] tables', ['scenario'])

    specs = []
    for i, entry in enumerate(scenarios):
        parts = ['scenario', i]
        if not isinstance(entry, dict):
            raise reader.error('expected a table', parts)
        for key in entry:
            if key not in ('name', 'description', 'system', 'admm', 'experiment'):
                raise reader.error('unknown key', parts + [key])
        name = reader.check(entry.get('name', '{}_{}'.format(path.stem, i)), 'str', parts + ['name'])
        sections = {
            section: dict(base[section], **reader.section(entry.get(section, {}), schema,
                                                          parts + [section]))
            for section, schema in SECTIONS.items()
        }
        points = [()]
        if expand_sweep and sweep:
            points = itertools.product(*[[(k, v) for v in vals] for k, vals in sweep.items()])
        for point in points:
            resolved = {s: dict(v) for s, v in sections.items()}
            suffix = ''
            for key, value in point:
                resolved[SWEEP_KEYS[key][0]][key] = value
                suffix += '-{}={:g}'.format(key, value)
            origin = _origin(parts, entry, {key for key, _ in point})
            specs.append(_make_spec(name + suffix, resolved, reader, origin, output_dir, path))

    names = [s.name for s in specs]
    for name in names:
        if names.count(name) > 1:
            raise ConfigError('duplicate scenario name {!r}'.format(name), 'scenario.name',
                              _line_of(text, ['scenario', 'name']), str(path))
    return specs


def _origin(parts, entry, swept):
    def origin(section, key):
        if key in swept and SWEEP_KEYS[key][0] == section:
            return ['sweep', key]
        if isinstance(entry.get(section), dict) and key in entry[section]:
            return list(parts) + [section, key]
        return [section, key]
    return origin


def _make_spec(name, resolved, reader, origin, output_dir, path):
    experiment = resolved['experiment']
    methods = tuple(experiment['methods'])
    if not methods:
        raise reader.error('at least one method is required', origin('experiment', 'methods'))
    if len(set(methods)) != len(methods):
        raise reader.error('method names must be unique', origin('experiment', 'methods'))
    for method in methods:
        if method not in METHODS:
            raise reader.error('unknown method {!r} (choose from {})'.format(
                method, ', '.join(METHODS)), origin('experiment', 'methods'))
    for key in ('n_realizations', 'comm_iterations'):
        if experiment[key] < 1:
            raise reader.error('expected a positive integer', origin('experiment', key))
    if experiment['latency'] < 0:
        raise reader.error('latency must be nonnegative', origin('experiment', 'latency'))

    config = build_system_config(resolved['system'], resolved['admm'], reader, origin)
    return ExperimentSpec(
        name=name,
        config=config,
        methods=methods,
        n_realizations=experiment['n_realizations'],
        output_dir=Path(output_dir or experiment['output_dir']),
        comm_iterations=experiment['comm_iterations'],
        measure_comm=experiment['measure_comm'],
        latency=experiment['latency'],
        source=str(path),
        settings=resolved,
    )


# ---------------------------------------------------------------------------
# Result files
# ---------------------------------------------------------------------------

def _header(kind, config=None, extra=None):
    record = {'schema': 'cellfree.{}'.format(kind), 'version': defaults.RESULTS_SCHEMA_VERSION}
    if config is not None:
        record['config'] = config.to_dict()
    if extra:
        record.update(extra)
    return '# ' + json.dumps(record, sort_keys=True) + '\n'


def write_csv(df, path, kind, config=None, extra=None):
    """CSV with a leading '#' line carrying schema version and config."""
    with open(path, 'w', newline='') as f:
        f.write(_header(kind, config, extra))
        df.to_csv(f, index=False, float_format='%.12g', lineterminator='\n')


def write_json(record, path):
    with open(path, 'w') as f:
        json.dump(record, f, indent=1, sort_keys=True)
        f.write('\n')


def read_csv(path):
    return pd.read_csv(path, comment='#')


def export_cdf(stats, path, config=None, kind='mean'):
    """
    Writes the SINR CDF as a two-column CSV (sinr_db, cdf) plus a JSON sidecar.

    Args:
        stats: EnsembleStats
        path: CSV path; the sidecar is the same path with a .json suffix
        config: SystemConfig embedded in both files
        kind: 'mean' (mean-user SINR) or 'min' (min-user SINR)

    Raises:
        ValueError: stats holds no samples (nothing is written)
    """
    if not stats.samples:
        raise ValueError('cannot export the CDF of an empty ensemble')
    if kind not in ('mean', 'min'):
        raise ValueError("kind must be 'mean' or 'min'")
    values = stats.mean_sinr_db if kind == 'mean' else stats.min_sinr_db
    x, F = empirical_cdf(values)
    path = Path(path)
    write_csv(pd.DataFrame({'sinr_db': x, 'cdf': F}), path, 'cdf', config,
              {'method': stats.method, 'kind': kind})

    sidecar = {
        'schema': 'cellfree.cdf',
        'version': defaults.RESULTS_SCHEMA_VERSION,
        'method': stats.method,
        'kind': kind,
        'n_samples': len(stats.samples),
        'n_failed': len(stats.failures),
        'outage_fraction': stats.outage_fraction,
        'mean_outage_fraction': stats.mean_outage_fraction,
    }
    if config is not None:
        sidecar['sinr_target_db'] = linear_to_db(config.sinr_target).tolist()
        sidecar['relaxation_factor'] = config.relaxation_factor
        sidecar['config'] = config.to_dict()
    write_json(sidecar, path.with_suffix('.json'))
    return path


def results_frame(name, stats_by_method):
    rows = []
    for method, stats in stats_by_method.items():
        for s in stats.samples:
            rows.append({
                'scenario': name,
                'method': method,
                'realization': s.realization_index,
                'min_sinr_db': s.report.min_sinr_db,
                'mean_sinr_db': s.report.mean_sinr_db,
                'total_power_db': float(linear_to_db(s.total_power)),
                'iterations': s.iterations,
                'converged': bool(s.converged),
            })
    return pd.DataFrame(rows, columns=RESULT_COLUMNS)


def compare_frame(name, stats_by_method):
    """Paired power gap of every method against the centralized optimum."""
    reference = {s.realization_index: s.total_power for s in stats_by_method['centralized'].samples}
    rows = []
    for method, stats in stats_by_method.items():
        if method == 'centralized':
            continue
        for s in stats.samples:
            if s.realization_index not in reference:
                continue
            ref = reference[s.realization_index]
            rows.append({
                'scenario': name,
                'realization': s.realization_index,
                'method': method,
                'power_db': float(linear_to_db(s.total_power)),
                'centralized_power_db': float(linear_to_db(ref)),
                'power_gap_db': float(linear_to_db(s.total_power) - linear_to_db(ref)),
            })
    return pd.DataFrame(rows, columns=['scenario', 'realization', 'method', 'power_db',
                                       'centralized_power_db', 'power_gap_db'])


def comm_frame(spec):
    K, M, N = spec.config.shape
    volumes = [comm_volume(scheme, M, N, K, spec.comm_iterations) for scheme in Scheme]
    return pd.DataFrame([v.to_row() for v in volumes], columns=COMM_COLUMNS), volumes


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

def _progress_printer(label):
    start_time = time.time()

    def progress(done, total):
        if done == 1 or done % 10 == 0 or done == total:
            elapsed = time.time() - start_time
            eta = elapsed / done * (total - done)
            print("  [{:6.2f}%] {} {}/{} | ETA: {:.1f}s".format(
                100.0 * done / total, label, done, total, eta))
    return progress


def _print_config(spec):
    c = spec.config
    print("  APs (M): {}".format(c.num_aps))
    print("  Antennas per AP (N): {}".format(c.num_antennas))
    print("  Users (K): {}".format(c.num_users))
    print("  SINR target: {} dB".format(np.round(linear_to_db(c.sinr_target), 2).tolist()))
    print("  Relaxation factor c: {:g}".format(c.relaxation_factor))
    print("  Penalty rho: {:g}".format(c.penalty))
    print("  Realizations: {}".format(spec.n_realizations))
    print("  Methods: {}".format(', '.join(spec.methods)))


def run_scenario(spec, command='run', executor=None, plot=False):
    """
    Runs one scenario and writes its result files.

    Returns:
        list of written paths
    """
    out = spec.scenario_dir
    out.mkdir(parents=True, exist_ok=True)
    written = []
    metadata = {
        'schema': 'cellfree.metadata',
        'version': defaults.RESULTS_SCHEMA_VERSION,
        'command': command,
        'scenario': spec.to_dict(),
    }

    if command in ('run', 'compare', 'sweep'):
        methods = list(spec.methods)
        if command == 'compare' and 'centralized' not in methods:
            methods.insert(0, 'centralized')
        source = channel_source(spec.config)
        stats_by_method = {}
        for name in methods:
            print("\n  Method: {}".format(name))
            stats_by_method[name] = ensemble(source, get_method(name), spec.config,
                                             spec.n_realizations, executor, name=name,
                                             progress=_progress_printer(name))

        path = out / 'results.csv'
        write_csv(results_frame(spec.name, stats_by_method), path, 'results', spec.config)
        written.append(path)
        for name, stats in stats_by_method.items():
            if stats.samples:
                written.append(export_cdf(stats, out / 'cdf_{}.csv'.format(name), spec.config))

        if 'admm' in stats_by_method:
            path = out / 'trace_admm.json'
            runs = [{'realization': s.realization_index, 'iterations': s.iterations,
                     'converged': bool(s.converged),
                     'records': [rec.to_dict() for rec in s.outcome.trace]}
                    for s in stats_by_method['admm'].samples]
            write_json({'schema': 'cellfree.trace', 'version': defaults.RESULTS_SCHEMA_VERSION,
                        'config': spec.config.to_dict(), 'runs': runs}, path)
            written.append(path)

        if command == 'compare':
            path = out / 'compare.csv'
            write_csv(compare_frame(spec.name, stats_by_method), path, 'compare', spec.config)
            written.append(path)

        metadata['summaries'] = {name: stats.summary() for name, stats in stats_by_method.items()}
        metadata['failures'] = {
            name: [{'realization': f.realization_index, 'status': f.status, 'message': f.message}
                   for f in stats.failures]
            for name, stats in stats_by_method.items()
        }

        if plot:
            written.extend(_plot(spec, stats_by_method, out))

    if command == 'comm':
        df, volumes = comm_frame(spec)
        path = out / 'comm.csv'
        write_csv(df, path, 'comm', spec.config, {'iterations': spec.comm_iterations})
        written.append(path)
        metadata['comm'] = [asdict(v) for v in volumes]
        if spec.measure_comm:
            written.extend(_measure_comm(spec, out, metadata))

    path = out / 'metadata.json'
    write_json(metadata, path)
    written.append(path)
    return written


def _measure_comm(spec, out, metadata):
    """Realization 0 through both fronthaul protocols, logged per message."""
    H = generate_channels(spec.config, 0)
    admm_result, admm_log = run_distributed_protocol(H, spec.config, latency=spec.latency)
    central_result, central_log = run_centralized_protocol(H, spec.config, latency=spec.latency)
    rows = central_log.rows() + admm_log.rows()
    path = out / 'comm_log.csv'
    write_csv(pd.DataFrame(rows, columns=['scheme', 'iteration', 'direction', 'bytes',
                                          'scalar_count', 'messages']),
              path, 'comm_log', spec.config)
    metadata['measured'] = {
        'centralized': {'total_bytes': central_log.total_bytes,
                        'uplink_bytes': central_log.uplink_bytes,
                        'downlink_bytes': central_log.downlink_bytes,
                        'simulated_latency': central_log.simulated_latency,
                        'status': central_result.status.value},
        'admm-cell-free': {'total_bytes': admm_log.total_bytes,
                           'uplink_bytes': admm_log.uplink_bytes,
                           'downlink_bytes': admm_log.downlink_bytes,
                           'simulated_latency': admm_log.simulated_latency,
                           'iterations': admm_result.iterations_used,
                           'converged': admm_result.converged},
    }
    print("  Measured centralized exchange: {} bytes".format(central_log.total_bytes))
    print("  Measured ADMM exchange: {} bytes over {} iterations".format(
        admm_log.total_bytes, admm_result.iterations_used))
    return [path]


def _plot(spec, stats_by_method, out):
    from . import plots

    written = []
    target_db = float(np.mean(linear_to_db(spec.config.sinr_target)))
    path = out / 'sinr_cdf.png'
    plots.plot_sinr_cdf(stats_by_method, target_db, path)
    written.append(path)
    path = out / 'power.png'
    plots.plot_power(stats_by_method, float(np.mean(spec.config.noise_power)), path)
    written.append(path)
    admm_stats = stats_by_method.get('admm')
    if admm_stats is not None and admm_stats.samples:
        path = out / 'admm_residuals.png'
        plots.plot_admm_trace(admm_stats.samples[0].outcome.trace, path)
        written.append(path)
    return written


def run_experiments(specs, command='run', workers=None, plot=False):
    """
    Runs every scenario; a failing scenario does not stop the others.

    Returns:
        0 if no scenario aborted, 1 otherwise
    """
    manager = get_worker_manager()
    failed = []
    written = []
    for spec in specs:
        print("\n" + BANNER)
        print("SCENARIO: {} ({})".format(spec.name, command))
        print(BANNER)
        _print_config(spec)
        start_time = time.time()
        try:
            executor = None
            if command != 'comm':
                executor = manager.start_pool(spec.name, workers)
            written.extend(run_scenario(spec, command, executor, plot))
        except CellFreeError as e:
            failed.append((spec.name, e))
            print("\n  Scenario failed: {}".format(e))
        finally:
            manager.shutdown_pool(spec.name, cancel=True)
        print("  Time: {:.1f} seconds".format(time.time() - start_time))

    print("\n" + BANNER)
    print("SUMMARY")
    print(BANNER)
    print("  Scenarios: {} run, {} failed".format(len(specs), len(failed)))
    for name, error in failed:
        print("  FAILED {}: {}".format(name, error))
    if written:
        print("\nOutput files:")
        for path in written:
            print("  {}".format(path))
    return 1 if failed else 0


def main(argv=None):
    """Main entry point"""
    parser = argparse.ArgumentParser(
        description='Cell-free massive MIMO downlink precoding simulator',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # SINR CDF at a 15 dB target, centralized vs ADMM vs conjugate
  python cellfree_sim.py run scenarios/fig2_gamma15.toml

  # Paired comparison on shared channel draws, with figures
  python cellfree_sim.py compare scenarios/fig3_power.toml --plot

  # Fronthaul volume table for the three schemes
  python cellfree_sim.py comm scenarios/table1.toml

  # Grid over SINR target, c, rho and M
  python cellfree_sim.py sweep scenarios/sweep.toml --workers 4

Note: CELLFREE_MAX_WORKERS caps the worker pool when --workers is not given.
        """)
    parser.add_argument('command', choices=['run', 'compare', 'comm', 'sweep'],
                        help='What to do with the scenario file')
    parser.add_argument('config', help='Scenario file (TOML)')
    parser.add_argument('--output', default=None,
                        help='Output directory (default: experiment.output_dir)')
    parser.add_argument('--realizations', type=int, default=None,
                        help='Override experiment.n_realizations')
    parser.add_argument('--workers', type=int, default=None,
                        help='Worker processes (default: ${} or physical cores)'.format(
                            defaults.MAX_WORKERS_ENV))
    parser.add_argument('--plot', action='store_true',
                        help='Also render PNG figures from the results')
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='More logging (-v info, -vv debug)')

    args = parser.parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')

    try:
        specs = parse_config(args.config, expand_sweep=(args.command == 'sweep'),
                             output_dir=args.output)
        if args.realizations is not None:
            if args.realizations < 1:
                raise ConfigError('expected a positive integer', '--realizations')
            specs = [replace(s, n_realizations=args.realizations) for s in specs]
        workers = args.workers if args.workers is not None else default_max_workers()
    except ConfigError as e:
        print("Config error: {}".format(e), file=sys.stderr)
        return 2

    return run_experiments(specs, args.command, workers, args.plot)
