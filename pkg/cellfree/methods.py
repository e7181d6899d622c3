"""
Registry of precoding methods the experiment harness can run.

Each method maps (ChannelRealization, SystemConfig) to a MethodOutcome. All of
them are module-level functions so they pickle into worker processes.
"""

from dataclasses import dataclass, field

from .admm import run_admm, solve_consensus_problem
from .baseline import PowerAllocation, conjugate_precoder, max_sinr_under_conjugate
from .centralized import solve_centralized
from .errors import ConfigError


@dataclass(frozen=True, eq=False)
class MethodOutcome:
    method: str
    precoder: object
    total_power: float
    status: str
    iterations: int = 0
    converged: bool = True
    trace: tuple = field(default=(), repr=False)
    details: dict = field(default_factory=dict, repr=False)

    @property
    def ok(self):
        return self.precoder is not None


def centralized(H, config):
    result = solve_centralized(H, config)
    return MethodOutcome('centralized', result.precoder, result.total_power, result.status.value,
                         result.iterations, result.ok)


def admm(H, config):
    result = run_admm(H, config)
    return MethodOutcome('admm', result.precoder, result.total_power,
                         'converged' if result.converged else 'iteration_cap',
                         result.iterations_used, result.converged, result.trace)


def conjugate(H, config):
    """Equal-power conjugate beamforming at the grid point with the best min-user SINR."""
    sweep = max_sinr_under_conjugate(H, config)
    precoder = conjugate_precoder(H, PowerAllocation.equal(config, sweep.best_power))
    return MethodOutcome('conjugate', precoder, sweep.best_power, 'grid_best',
                         details={'sweep': sweep.to_dict()})


def relaxed(H, config):
    """The consensus problem solved as one program (what ADMM converges to)."""
    result = solve_consensus_problem(H, config)
    return MethodOutcome('relaxed', result.precoder, result.total_power, result.status.value,
                         result.solution.iterations if result.solution is not None else 0,
                         result.ok)


METHODS = {
    'centralized': centralized,
    'admm': admm,
    'conjugate': conjugate,
    'relaxed': relaxed,
}


def get_method(name):
    try:
        return METHODS[name]
    except KeyError:
        raise ConfigError('unknown method {!r} (choose from {})'.format(
            name, ', '.join(METHODS)), 'experiment.methods') from None
