"""
centralized.py - Full-CSI power minimization

    minimize    sum_{m,k} ||w_km||^2
    subject to  SINR_k >= gamma_k   for every user k

With g_k = (h_k1, ..., h_kM) and w_u = (w_u1, ..., w_uM) stacked over APs, the
SINR constraint is rewritten as the second-order cone

    ||( {g_k^T w_u}_{u != k}, sigma_k )||_2 <= Re(g_k^T w_k) / sqrt(gamma_k)
    Im(g_k^T w_k) = 0

Fixing the phase of g_k^T w_k loses nothing because a common phase per user does
not change any SINR.

Variable layout: Re w_km[i] sits at index (k*M + m)*N + i and Im w_km[i] at the
same index plus K*M*N, so every stacked w_u is a contiguous block.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ZeroChannel
from .lifting import inner_product_rows, to_complex
from .metrics import achieved_sinr, total_power
from .model import Precoder
from .solvers.conic import (ConicProgram, QuadraticObjective, SecondOrderCone,
                            SolverStatus, ZeroCone, solve)

logger = logging.getLogger(__name__)


def _user_indices(config, u):
    K, M, N = config.shape
    start = u * M * N
    re = np.arange(start, start + M * N)
    return re, re + K * M * N


def num_variables(config):
    K, M, N = config.shape
    return 2 * K * M * N


def precoder_from_solution(x, config):
    half = num_variables(config) // 2
    return Precoder(to_complex(x, slice(0, half), slice(half, 2 * half), config.shape))


def build_centralized_program(H, config):
    """
    SOC form of the centralized problem for one channel realization.

    Raises:
        ZeroChannel: user k's stacked channel is identically zero
    """
    H.check(config)
    K = config.num_users
    n = num_variables(config)
    sigma = config.noise_std
    scale = 1.0 / np.sqrt(config.sinr_target)

    constraints = []
    for k in range(K):
        g = H.stacked(k)
        if not np.any(g):
            raise ZeroChannel(k)
        rows = [inner_product_rows(g, *_user_indices(config, u), n) for u in range(K)]
        noise_row = sp.csr_matrix((1, n))
        A = sp.vstack([rows[u] for u in range(K) if u != k] + [noise_row], format='csr')
        b = np.zeros(A.shape[0])
        b[-1] = sigma[k]
        c = scale[k] * rows[k][0].toarray().ravel()
        constraints.append(SecondOrderCone(A, b, c, 0.0))
        constraints.append(ZeroCone(rows[k][1], [0.0]))

    return ConicProgram(n, QuadraticObjective.diagonal(np.ones(n)), tuple(constraints))


@dataclass(frozen=True, eq=False)
class CentralizedResult:
    precoder: Precoder
    total_power: float
    status: SolverStatus
    per_user_sinr: np.ndarray
    solution: object = field(default=None, repr=False)

    @property
    def ok(self):
        return self.status is SolverStatus.OPTIMAL

    @property
    def iterations(self):
        return 0 if self.solution is None else self.solution.iterations


def solve_centralized(H, config):
    """
    Optimal precoder for one realization given full CSI.

    Returns:
        CentralizedResult; precoder is None and total_power NaN unless the
        solve is Optimal

    Raises:
        ZeroChannel: see build_centralized_program
    """
    program = build_centralized_program(H, config)
    solution = solve(program, config.solver_tol, config.solver_max_iters)
    if not solution.ok:
        logger.info('centralized solve for realization %d ended %s',
                    H.realization_index, solution.status.value)
        return CentralizedResult(None, float('nan'), solution.status,
                                 np.full(config.num_users, np.nan), solution)

    precoder = precoder_from_solution(solution.x, config)
    report = achieved_sinr(H, precoder, config)
    return CentralizedResult(precoder, total_power(precoder), solution.status,
                             report.per_user_sinr, solution)
