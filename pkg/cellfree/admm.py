"""
admm.py - Distributed precoding by consensus ADMM

Every AP m solves a local conic program over its own precoder block W_m, its
declared own interference I_m and its declared total interference sums z_m:

    minimize    tr(W_m^H W_m) + V_m^T (z_m - Omega) + (rho/2) ||z_m - Omega||^2
    subject to  Re(h_km^T w_km) >= (gamma_hat_k / M) (I_km + (z_km - I_km) + sigma_k)
                I_km >= ||(h_km^T w_um)_{u != k}||_2
                z_km - I_km >= 0,  I_km >= 0
                Im(h_km^T w_km) = 0

for every user k. I_km is the epigraph variable of the own-interference norm,
so the SINR row reduces to Re(h_km^T w_km) >= (gamma_hat_k / M)(z_km + sigma_k).
For K = 1 there is no interference and I_1m = 0 is imposed.

The central node averages the reported z_m into Omega, every AP moves its dual
V_m by rho (z_m - Omega), and the loop stops on the primal/dual residual rule:

    max_m ||z_m - Omega|| <= sqrt(K) primal_tol + rel_tol max(max_m ||z_m||, ||Omega||)
    rho ||Omega^t - Omega^(t-1)|| <= sqrt(K) dual_tol + rel_tol max_m ||V_m||

or when t reaches max_iters.

Local variable layout (n = 2NK + 2K):
    Re w_km[i] at k*N + i, Im w_km[i] at N*K + k*N + i,
    I_km at 2NK + k, d_km = z_km - Omega_k at 2NK + K + k.

The penalty acts on d, so the program stays well scaled however large Omega is.
"""

import json
import logging
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from functools import partial

import numpy as np
import scipy.sparse as sp

from .errors import MissingReport, SolverFailure, ZeroChannel
from .lifting import inner_product_rows
from .metrics import total_power
from .model import Precoder
from .solvers.conic import (ConicProgram, NonNegative, QuadraticObjective, SecondOrderCone,
                            SolverStatus, ZeroCone, solve)

logger = logging.getLogger(__name__)


def _frozen(array, dtype=float):
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


class _Layout:
    """Indices of one AP's variables inside a (possibly larger) real vector."""

    def __init__(self, num_antennas, num_users, offset=0, z_offset=None):
        self.N = num_antennas
        self.K = num_users
        self.offset = offset
        NK = num_antennas * num_users
        self.z_offset = offset + 2 * NK + num_users if z_offset is None else z_offset

    @property
    def size(self):
        """Variables owned by this AP, z excluded."""
        return 2 * self.N * self.K + self.K

    def re(self, k):
        start = self.offset + k * self.N
        return np.arange(start, start + self.N)

    def im(self, k):
        return self.re(k) + self.N * self.K

    def interference(self, k):
        return self.offset + 2 * self.N * self.K + k

    def z(self, k):
        return self.z_offset + k

    def unpack(self, x, z_shift=0.0):
        """(W_m as (N, K), I_m, z_m) from a solution vector."""
        NK = self.N * self.K
        block = x[self.offset:self.offset + self.size]
        W = (block[:NK] + 1j * block[NK:2 * NK]).reshape(self.K, self.N).T
        I = block[2 * NK:]
        z = x[self.z_offset:self.z_offset + self.K] + z_shift
        return W, I, z


def _unit_row(index, num_vars, value=1.0):
    return sp.csr_matrix(([value], ([0], [index])), shape=(1, num_vars))


def check_channels(H_m, ap_index=None):
    """
    Raises:
        ZeroChannel: some column h_km of H_m is identically zero
    """
    for k in range(H_m.shape[1]):
        if not np.any(H_m[:, k]):
            raise ZeroChannel(k, ap_index)


def _local_constraints(H_m, config, layout, num_vars, ap_index=None, z_shift=None):
    """
    Cones of one AP for all users, placed according to layout.

    The variable at layout.z(k) stands for z_km - z_shift[k].
    """
    N, K = H_m.shape
    M = config.num_aps
    share = config.relaxed_target / M
    sigma = config.noise_std
    z_shift = np.zeros(K) if z_shift is None else z_shift
    check_channels(H_m, ap_index)

    constraints = []
    for k in range(K):
        h = H_m[:, k]
        rows = [inner_product_rows(h, layout.re(u), layout.im(u), num_vars) for u in range(K)]
        i_k, z_k = layout.interference(k), layout.z(k)

        if K > 1:
            A = sp.vstack([rows[u] for u in range(K) if u != k], format='csr')
            c = np.zeros(num_vars)
            c[i_k] = 1.0
            constraints.append(SecondOrderCone(A, np.zeros(A.shape[0]), c, 0.0))
        else:
            constraints.append(ZeroCone(_unit_row(i_k, num_vars), [0.0]))

        # SINR share, z - I >= 0, I >= 0
        G = sp.vstack([
            rows[k][0] - _unit_row(z_k, num_vars, share[k]),
            _unit_row(z_k, num_vars) - _unit_row(i_k, num_vars),
            _unit_row(i_k, num_vars),
        ], format='csr')
        constraints.append(NonNegative(G, [-share[k] * (sigma[k] + z_shift[k]), z_shift[k], 0.0]))
        constraints.append(ZeroCone(rows[k][1], [0.0]))
    return constraints


def build_local_program(H_m, omega, V_m, config, ap_index=None):
    """
    Local conic program of one AP (see module docstring).

    Args:
        H_m: (N, K) complex channel matrix [h_1m, ..., h_Km]
        omega: (K,) consensus variable
        V_m: (K,) dual variable of this AP
        config: SystemConfig
        ap_index: Only used to label ZeroChannel

    Raises:
        ZeroChannel: some h_km is identically zero
    """
    H_m = np.asarray(H_m, dtype=np.complex128)
    N, K = H_m.shape
    omega = np.asarray(omega, dtype=float)
    V_m = np.asarray(V_m, dtype=float)
    rho = config.penalty
    layout = _Layout(N, K)
    n = 2 * N * K + 2 * K

    p = np.zeros(n)
    p[:2 * N * K] = 1.0
    p[layout.z_offset:] = rho / 2.0
    q = np.zeros(n)
    q[layout.z_offset:] = V_m
    objective = QuadraticObjective.diagonal(p, q)

    constraints = _local_constraints(H_m, config, layout, n, ap_index, z_shift=omega)
    return ConicProgram(n, objective, tuple(constraints))


def local_objective(W_m, z_m, omega, V_m, rho):
    """Augmented-Lagrangian term of one AP evaluated directly."""
    W_m = np.asarray(W_m)
    diff = np.asarray(z_m, dtype=float) - np.asarray(omega, dtype=float)
    return float(np.sum(np.abs(W_m) ** 2) + np.asarray(V_m) @ diff + rho / 2.0 * diff @ diff)


@dataclass(frozen=True, eq=False)
class ApLocalState:
    """
    Variables owned by AP m.

    channel is the AP's own CSI H_m (N x K); it never leaves the AP.
    """
    ap_index: int
    W: np.ndarray
    I: np.ndarray
    z: np.ndarray
    V: np.ndarray
    last_local_objective: float = float('nan')
    channel: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'W', _frozen(self.W, np.complex128))
        for name in ('I', 'z', 'V'):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.channel is not None:
            object.__setattr__(self, 'channel', _frozen(self.channel, np.complex128))

    @property
    def power(self):
        """f_m(W_m) = tr(W_m^H W_m)"""
        return float(np.sum(self.W.real ** 2 + self.W.imag ** 2))

    def replace(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return {
            'ap_index': self.ap_index,
            'I': self.I.tolist(),
            'z': self.z.tolist(),
            'V': self.V.tolist(),
            'power': self.power,
            'last_local_objective': self.last_local_objective,
        }


@dataclass(frozen=True, eq=False)
class IterationRecord:
    iteration: int
    omega: np.ndarray
    primal_residuals: np.ndarray
    dual_residual: float
    eps_primal: float
    eps_dual: float
    per_ap_power: np.ndarray
    local_objectives: np.ndarray

    @property
    def max_primal_residual(self):
        return float(np.max(self.primal_residuals))

    @property
    def residuals_met(self):
        return self.max_primal_residual <= self.eps_primal and self.dual_residual <= self.eps_dual

    def to_dict(self):
        return {
            't': self.iteration,
            'omega': self.omega.tolist(),
            'primal_residuals': self.primal_residuals.tolist(),
            'dual_residual': self.dual_residual,
            'eps_primal': self.eps_primal,
            'eps_dual': self.eps_dual,
            'per_ap_power': self.per_ap_power.tolist(),
            'local_objectives': self.local_objectives.tolist(),
        }


@dataclass(frozen=True, eq=False)
class ConsensusState:
    """
    Central-node view: Omega, the iteration counter t and the trace.

    After iteration t has completed, trace[-1] is its record and iteration is
    still t; advance() moves to t + 1.
    """
    omega: np.ndarray
    iteration: int = 1
    primal_residuals: np.ndarray = None
    dual_residual: float = float('nan')
    trace: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, 'omega', _frozen(self.omega))
        if self.primal_residuals is not None:
            object.__setattr__(self, 'primal_residuals', _frozen(self.primal_residuals))

    @property
    def completed(self):
        return len(self.trace)

    def record(self, rec):
        return ConsensusState(rec.omega, rec.iteration, rec.primal_residuals,
                              rec.dual_residual, self.trace + (rec,))

    def advance(self):
        return replace(self, iteration=self.iteration + 1)


def init_state(config, H=None):
    """
    Step 1: V_m = 0, Omega^0 = 0, t = 1, and zeroed W_m, I_m, z_m.

    When H is given each AP state also carries its own H_m, and every h_km is
    checked before any AP starts.

    Raises:
        ZeroChannel: some h_km is identically zero
    """
    K, M, N = config.shape
    if H is not None:
        H.check(config)
        for m in range(M):
            check_channels(H.ap_matrix(m), m)
    states = [
        ApLocalState(ap_index=m,
                     W=np.zeros((N, K), dtype=np.complex128),
                     I=np.zeros(K), z=np.zeros(K), V=np.zeros(K),
                     channel=None if H is None else H.ap_matrix(m))
        for m in range(M)
    ]
    return states, ConsensusState(np.zeros(K), iteration=1)


def local_step(state, omega, config):
    """
    Step 2 at one AP: solve the local program and replace (W_m, I_m, z_m).

    V_m is left untouched.

    Raises:
        SolverFailure: the local program did not solve to optimality
    """
    if state.channel is None:
        raise ValueError('AP {} has no channel; build its state with init_state(config, H)'.format(
            state.ap_index))
    program = build_local_program(state.channel, omega, state.V, config, state.ap_index)
    solution = solve(program, config.solver_tol, config.solver_max_iters)
    if solution.status is not SolverStatus.OPTIMAL:
        raise SolverFailure(state.ap_index, solution.status, diagnostic=solution.diagnostic)
    N, K = state.channel.shape
    W, I, z = _Layout(N, K).unpack(solution.x, np.asarray(omega, dtype=float))
    return state.replace(W=W, I=I, z=z, last_local_objective=solution.objective_value)


def consensus_update(reports, num_aps=None):
    """
    Step 4: Omega = (1/M) sum_m z_m, summed in ascending AP index.

    Args:
        reports: Mapping ap_index -> z_m, or a sequence ordered by AP
        num_aps: Expected number of reports (defaults to len(reports))

    Raises:
        MissingReport: a report of some AP is absent
    """
    if not isinstance(reports, Mapping):
        reports = dict(enumerate(reports))
    num_aps = len(reports) if num_aps is None else int(num_aps)
    for m in range(num_aps):
        if m not in reports:
            raise MissingReport(m)
    total = np.zeros(np.shape(reports[0]), dtype=float)
    for m in range(num_aps):
        total = total + np.asarray(reports[m], dtype=float)
    return total / num_aps


def dual_update(V_m, z_m, omega, rho):
    """Step 5: V_m + rho (z_m - Omega)."""
    return np.asarray(V_m, dtype=float) + rho * (np.asarray(z_m, dtype=float) - np.asarray(omega, dtype=float))


def iteration_record(iteration, states, omega, previous_omega, config):
    """Residuals and stopping thresholds after the dual update of iteration t."""
    K = config.num_users
    primal = np.array([np.linalg.norm(s.z - omega) for s in states])
    dual = config.penalty * float(np.linalg.norm(omega - previous_omega))
    z_scale = max(max(np.linalg.norm(s.z) for s in states), np.linalg.norm(omega))
    v_scale = max(np.linalg.norm(s.V) for s in states)
    return IterationRecord(
        iteration=iteration,
        omega=_frozen(omega),
        primal_residuals=_frozen(primal),
        dual_residual=dual,
        eps_primal=float(np.sqrt(K) * config.primal_tol + config.rel_tol * z_scale),
        eps_dual=float(np.sqrt(K) * config.dual_tol + config.rel_tol * v_scale),
        per_ap_power=_frozen([s.power for s in states]),
        local_objectives=_frozen([s.last_local_objective for s in states]),
    )


def residuals_met(consensus):
    if not consensus.trace:
        raise ValueError('no completed iteration')
    return consensus.trace[-1].residuals_met


def check_stop(consensus, config):
    """
    Step 6: residual rule met, or t >= max_iters.

    Raises:
        ValueError: no iteration has completed yet
    """
    return residuals_met(consensus) or consensus.iteration >= config.max_iters


def admm_iteration(states, consensus, config, executor=None):
    """
    Steps 2 to 5 of iteration t = consensus.iteration.

    The M local steps go through executor.map when one is given; results are
    consumed in AP order either way.

    Returns:
        (updated AP states, ConsensusState with the iteration recorded)
    """
    t = consensus.iteration
    step = partial(local_step, omega=consensus.omega, config=config)
    try:
        if executor is None:
            states = [step(s) for s in states]
        else:
            states = list(executor.map(step, states))
    except SolverFailure as e:
        raise e.at_iteration(t) from e

    omega = consensus_update({s.ap_index: s.z for s in states}, config.num_aps)
    states = [s.replace(V=dual_update(s.V, s.z, omega, config.penalty)) for s in states]
    record = iteration_record(t, states, omega, consensus.omega, config)
    logger.debug('iteration %d: primal %.3e (eps %.3e), dual %.3e (eps %.3e)', t,
                 record.max_primal_residual, record.eps_primal,
                 record.dual_residual, record.eps_dual)
    return states, consensus.record(record)


@dataclass(frozen=True, eq=False)
class AdmmResult:
    precoder: Precoder
    iterations_used: int
    converged: bool
    total_power: float
    trace: tuple
    omega: np.ndarray = None
    states: tuple = field(default=(), repr=False)

    @property
    def ok(self):
        return self.precoder is not None

    def trace_dicts(self):
        return [rec.to_dict() for rec in self.trace]


def result_from_states(states, consensus):
    precoder = Precoder.from_ap_blocks([s.W for s in states])
    return AdmmResult(
        precoder=precoder,
        iterations_used=consensus.completed,
        converged=residuals_met(consensus),
        total_power=total_power(precoder),
        trace=consensus.trace,
        omega=consensus.omega,
        states=tuple(states),
    )


def run_admm(H, config, executor=None):
    """
    Runs the distributed algorithm to its stopping rule.

    Args:
        H: ChannelRealization
        config: SystemConfig
        executor: Optional executor for the per-AP local steps

    Returns:
        AdmmResult; converged is False when the iteration cap was hit first

    Raises:
        ZeroChannel: some h_km is zero
        SolverFailure: a local program failed (carries the iteration)
    """
    states, consensus = init_state(config, H)
    while True:
        states, consensus = admm_iteration(states, consensus, config, executor)
        if check_stop(consensus, config):
            break
        consensus = consensus.advance()
    result = result_from_states(states, consensus)
    logger.debug('ADMM stopped after %d iterations (converged=%s), power %.4g',
                 result.iterations_used, result.converged, result.total_power)
    return result


def trace_to_json(trace, path, extra=None):
    """One record per iteration, plus optional metadata, as JSON."""
    record = dict(extra or {})
    record['iterations'] = [rec.to_dict() for rec in trace]
    with open(path, 'w') as f:
        json.dump(record, f, indent=1)


# ---------------------------------------------------------------------------
# Monolithic consensus problem
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConsensusSolution:
    precoder: Precoder
    total_power: float
    omega: np.ndarray
    status: SolverStatus
    solution: object = field(default=None, repr=False)

    @property
    def ok(self):
        return self.status is SolverStatus.OPTIMAL


def build_consensus_program(H, config):
    """
    All local constraint sets at once with z_m = Omega shared by every AP.

    Minimizes sum_m tr(W_m^H W_m), the value the distributed iteration
    converges to. Variables are the AP blocks (Re W_m, Im W_m, I_m) in AP order
    followed by the K entries of Omega.
    """
    H.check(config)
    K, M, N = config.shape
    block = 2 * N * K + K
    n = M * block + K
    p = np.zeros(n)
    constraints = []
    for m in range(M):
        layout = _Layout(N, K, offset=m * block, z_offset=M * block)
        p[layout.offset:layout.offset + 2 * N * K] = 1.0
        constraints.extend(_local_constraints(H.ap_matrix(m), config, layout, n, m))
    return ConicProgram(n, QuadraticObjective.diagonal(p), tuple(constraints))


def solve_consensus_problem(H, config):
    program = build_consensus_program(H, config)
    solution = solve(program, config.solver_tol, config.solver_max_iters)
    K, M, N = config.shape
    if not solution.ok:
        return ConsensusSolution(None, float('nan'), np.full(K, np.nan), solution.status, solution)
    block = 2 * N * K + K
    blocks = [_Layout(N, K, offset=m * block, z_offset=M * block).unpack(solution.x)
              for m in range(M)]
    precoder = Precoder.from_ap_blocks([W for W, _, _ in blocks])
    return ConsensusSolution(precoder, total_power(precoder), blocks[0][2].copy(),
                             solution.status, solution)
