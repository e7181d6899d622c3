"""
conic.py - Second-order cone programs over real variables

A ConicProgram is

    minimize    ||F x||^2 + q^T x + r
    subject to  ||A_i x + b_i||_2 <= c_i^T x + d_i      (second-order cones)
                G_j x + h_j >= 0                        (nonnegativity)
                E_l x + f_l  = 0                        (zero cones)

The quadratic part is moved into a rotated-cone epigraph (see quad_epigraph) and
the result is handed to cvxopt's primal-dual interior-point cone solver.

Residual contract (all relative, cvxopt's own scaling, standard-form data):
    primal = max(||G x + s - h|| / max(1, ||h||), ||A x - b|| / max(1, ||b||))
    dual   = ||G^T z + A^T y + c|| / max(1, ||c||)
    gap    = s^T z / max(1, |c^T x|, |h^T z + b^T y|)
A solution is Optimal iff all three are <= tol.

Everything here is real; complex precoders are lifted by the callers.
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum

import cvxopt
import numpy as np
import scipy.sparse as sp
from cvxopt import solvers

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITERS = 200
DUMP_SCHEMA = 'cellfree.conic/1'


def _as_matrix(name, matrix, num_cols=None):
    if sp.issparse(matrix):
        out = sp.csr_matrix(matrix, dtype=float)
    else:
        arr = np.asarray(matrix, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise ValueError('{} must be two-dimensional'.format(name))
        out = sp.csr_matrix(arr)
    if num_cols is not None and out.shape[1] != num_cols:
        raise ValueError('{} has {} columns, expected {}'.format(name, out.shape[1], num_cols))
    if not np.all(np.isfinite(out.data)):
        raise ValueError('{} contains non-finite entries'.format(name))
    return out


def _as_vector(name, vector, length):
    arr = np.array(vector, dtype=float).reshape(-1)
    if arr.shape != (length,):
        raise ValueError('{} has length {}, expected {}'.format(name, arr.size, length))
    if not np.all(np.isfinite(arr)):
        raise ValueError('{} contains non-finite entries'.format(name))
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SecondOrderCone:
    """||A x + b||_2 <= c^T x + d"""
    A: sp.csr_matrix
    b: np.ndarray
    c: np.ndarray
    d: float = 0.0

    def __post_init__(self):
        A = _as_matrix('A', self.A)
        object.__setattr__(self, 'A', A)
        object.__setattr__(self, 'b', _as_vector('b', self.b, A.shape[0]))
        object.__setattr__(self, 'c', _as_vector('c', self.c, A.shape[1]))
        object.__setattr__(self, 'd', float(self.d))
        if not np.isfinite(self.d):
            raise ValueError('d must be finite')

    @property
    def num_vars(self):
        return self.A.shape[1]

    def violation(self, x):
        return max(0.0, float(np.linalg.norm(self.A @ x + self.b) - (self.c @ x + self.d)))


@dataclass(frozen=True, eq=False)
class NonNegative:
    """G x + h >= 0, componentwise"""
    G: sp.csr_matrix
    h: np.ndarray

    def __post_init__(self):
        G = _as_matrix('G', self.G)
        object.__setattr__(self, 'G', G)
        object.__setattr__(self, 'h', _as_vector('h', self.h, G.shape[0]))

    @property
    def num_vars(self):
        return self.G.shape[1]

    def violation(self, x):
        value = self.G @ x + self.h
        return float(np.max(np.maximum(-value, 0.0), initial=0.0))


@dataclass(frozen=True, eq=False)
class ZeroCone:
    """E x + f = 0"""
    E: sp.csr_matrix
    f: np.ndarray

    def __post_init__(self):
        E = _as_matrix('E', self.E)
        object.__setattr__(self, 'E', E)
        object.__setattr__(self, 'f', _as_vector('f', self.f, E.shape[0]))

    @property
    def num_vars(self):
        return self.E.shape[1]

    def violation(self, x):
        return float(np.max(np.abs(self.E @ x + self.f), initial=0.0))


@dataclass(frozen=True, eq=False)
class QuadraticObjective:
    """||F x||^2 + q^T x + r, i.e. P = F^T F is positive semidefinite by construction."""
    F: sp.csr_matrix
    q: np.ndarray
    r: float = 0.0

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).reshape(-1)
        object.__setattr__(self, 'F', _as_matrix('F', self.F, q.size))
        object.__setattr__(self, 'q', _as_vector('q', q, q.size))
        object.__setattr__(self, 'r', float(self.r))

    @classmethod
    def diagonal(cls, p, q=None, r=0.0):
        """x^T diag(p) x + q^T x + r with p >= 0."""
        p = np.asarray(p, dtype=float).reshape(-1)
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError('diagonal weights must be finite and nonnegative')
        rows = np.flatnonzero(p)
        F = sp.csr_matrix((np.sqrt(p[rows]), (np.arange(rows.size), rows)),
                          shape=(rows.size, p.size))
        return cls(F, np.zeros(p.size) if q is None else q, r)

    @classmethod
    def gram(cls, F, q=None, r=0.0):
        F = _as_matrix('F', F)
        return cls(F, np.zeros(F.shape[1]) if q is None else q, r)

    @classmethod
    def linear(cls, q, r=0.0):
        q = np.asarray(q, dtype=float).reshape(-1)
        return cls(sp.csr_matrix((0, q.size)), q, r)

    @property
    def num_vars(self):
        return self.q.size

    @property
    def is_linear(self):
        return self.F.shape[0] == 0 or self.F.nnz == 0

    def value(self, x):
        Fx = self.F @ x
        return float(Fx @ Fx + self.q @ x + self.r)

    def scaled(self, alpha):
        """alpha * objective, alpha > 0."""
        if not alpha > 0:
            raise ValueError('scale must be positive')
        return QuadraticObjective(self.F * np.sqrt(alpha), self.q * alpha, self.r * alpha)


CONE_TYPES = (SecondOrderCone, NonNegative, ZeroCone)


@dataclass(frozen=True, eq=False)
class ConicProgram:
    num_vars: int
    objective: QuadraticObjective
    constraints: tuple = ()

    def __post_init__(self):
        n = self.num_vars
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
            raise ValueError('num_vars must be a positive integer')
        object.__setattr__(self, 'num_vars', int(n))
        if not isinstance(self.objective, QuadraticObjective):
            raise ValueError('objective must be a QuadraticObjective')
        if self.objective.num_vars != n:
            raise ValueError('objective is over {} variables, program has {}'.format(
                self.objective.num_vars, n))
        constraints = tuple(self.constraints)
        for i, cone in enumerate(constraints):
            if not isinstance(cone, CONE_TYPES):
                raise ValueError('constraint {} is not a cone: {!r}'.format(i, type(cone)))
            if cone.num_vars != n:
                raise ValueError('constraint {} is over {} variables, program has {}'.format(
                    i, cone.num_vars, n))
        object.__setattr__(self, 'constraints', constraints)

    def with_objective(self, objective):
        return ConicProgram(self.num_vars, objective, self.constraints)

    def max_violation(self, x):
        """Largest absolute constraint violation at x (0 when x is feasible)."""
        x = np.asarray(x, dtype=float)
        return max((cone.violation(x) for cone in self.constraints), default=0.0)


class SolverStatus(Enum):
    OPTIMAL = 'optimal'
    INFEASIBLE = 'infeasible'
    UNBOUNDED = 'unbounded'
    MAX_ITERATIONS = 'max_iterations'


@dataclass(frozen=True, eq=False)
class StandardForm:
    """
    cvxopt conelp data:  minimize c^T x  s.t.  G x + s = h, A x = b, s in K.

    K is dims['l'] nonnegative rows followed by the second-order cones of sizes
    dims['q']. blocks maps each program constraint to (kind, row slice), kind
    'G' for rows of G/h/s/z and 'A' for rows of A/b/y. When the objective has a
    quadratic part, variable epigraph_index holds t >= ||F x||^2 and its cone is
    the last one.
    """
    c: np.ndarray
    G: sp.csr_matrix
    h: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    dims: dict
    num_vars: int
    epigraph_index: int = None
    offset: float = 0.0
    blocks: tuple = ()

    def residuals(self, x, s, y, z):
        return kkt_residuals(self, x, s, y, z)


@dataclass(frozen=True, eq=False)
class StandardSolution:
    x: np.ndarray
    s: np.ndarray
    y: np.ndarray
    z: np.ndarray


@dataclass(frozen=True, eq=False)
class ConicSolution:
    status: SolverStatus
    x: np.ndarray
    objective_value: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int = 0
    standard: StandardSolution = None
    diagnostic: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.status is SolverStatus.OPTIMAL


def _gram_epigraph(F, t_index, num_vars):
    """||F x||^2 <= t  as  ||(2 F x, t - 1)||_2 <= t + 1."""
    F = _as_matrix('F', F, num_vars)
    e_t = sp.csr_matrix(([1.0], ([0], [t_index])), shape=(1, num_vars))
    A = sp.vstack([2.0 * F, e_t], format='csr')
    b = np.zeros(A.shape[0])
    b[-1] = -1.0
    c = np.zeros(num_vars)
    c[t_index] = 1.0
    return SecondOrderCone(A, b, c, 1.0)


def quad_epigraph(x_indices, t_index, num_vars):
    """
    Cone list for sum_j x[x_indices[j]]^2 <= x[t_index].

    Uses the rotated-cone identity ||x||^2 <= t  <=>  ||(2x, t - 1)||_2 <= t + 1.
    """
    x_indices = [int(i) for i in x_indices]
    t_index = int(t_index)
    if len(set(x_indices)) != len(x_indices) or t_index in x_indices:
        raise ValueError('epigraph indices must be distinct')
    if any(i < 0 or i >= num_vars for i in x_indices + [t_index]):
        raise ValueError('epigraph index out of range')
    rows = np.arange(len(x_indices))
    F = sp.csr_matrix((np.ones(len(x_indices)), (rows, x_indices)),
                      shape=(len(x_indices), num_vars))
    return [_gram_epigraph(F, t_index, num_vars)]


def _pad(matrix, extra_cols):
    if extra_cols == 0:
        return matrix
    return sp.hstack([matrix, sp.csr_matrix((matrix.shape[0], extra_cols))], format='csr')


def to_standard_form(program):
    """Lowers a ConicProgram to cvxopt conelp data (see StandardForm)."""
    n = program.num_vars
    objective = program.objective
    epigraph = None if objective.is_linear else n
    n_std = n + (0 if epigraph is None else 1)
    extra = n_std - n

    nonneg_G, nonneg_h, soc_G, soc_h, soc_dims = [], [], [], [], []
    eq_A, eq_b = [], []
    pending = []    # (constraint index, kind, rows, group)

    for i, cone in enumerate(program.constraints):
        if isinstance(cone, NonNegative):
            nonneg_G.append(-_pad(cone.G, extra))
            nonneg_h.append(cone.h)
            pending.append((i, 'G', cone.G.shape[0], 'l'))
        elif isinstance(cone, SecondOrderCone) and cone.A.shape[0] == 0:
            # ||()|| <= c^T x + d is a single nonnegative row
            nonneg_G.append(-_pad(sp.csr_matrix(cone.c.reshape(1, -1)), extra))
            nonneg_h.append(np.array([cone.d]))
            pending.append((i, 'G', 1, 'l'))
        elif isinstance(cone, SecondOrderCone):
            rows = sp.vstack([sp.csr_matrix(cone.c.reshape(1, -1)), cone.A], format='csr')
            soc_G.append(-_pad(rows, extra))
            soc_h.append(np.concatenate([[cone.d], cone.b]))
            soc_dims.append(rows.shape[0])
            pending.append((i, 'G', rows.shape[0], 'q'))
        else:
            eq_A.append(_pad(cone.E, extra))
            eq_b.append(-cone.f)
            pending.append((i, 'A', cone.E.shape[0], 'eq'))

    if epigraph is not None:
        cone = _gram_epigraph(_pad(objective.F, extra), epigraph, n_std)
        rows = sp.vstack([sp.csr_matrix(cone.c.reshape(1, -1)), cone.A], format='csr')
        soc_G.append(-rows)
        soc_h.append(np.concatenate([[cone.d], cone.b]))
        soc_dims.append(rows.shape[0])

    num_l = sum(block.shape[0] for block in nonneg_G)
    offsets = {'l': 0, 'q': num_l, 'eq': 0}
    blocks = []
    for i, kind, rows, group in pending:
        start = offsets[group]
        blocks.append((i, kind, slice(start, start + rows)))
        offsets[group] = start + rows

    G = sp.vstack(nonneg_G + soc_G, format='csr') if (nonneg_G or soc_G) else sp.csr_matrix((0, n_std))
    h = np.concatenate(nonneg_h + soc_h) if (nonneg_h or soc_h) else np.zeros(0)
    A = sp.vstack(eq_A, format='csr') if eq_A else sp.csr_matrix((0, n_std))
    b = np.concatenate(eq_b) if eq_b else np.zeros(0)

    c = np.zeros(n_std)
    c[:n] = objective.q
    if epigraph is not None:
        c[epigraph] = 1.0

    return StandardForm(c=c, G=G, h=h, A=A, b=b,
                        dims={'l': num_l, 'q': soc_dims, 's': []},
                        num_vars=n, epigraph_index=epigraph,
                        offset=objective.r, blocks=tuple(blocks))


def kkt_residuals(form, x, s, y, z):
    """
    Relative (primal, dual, gap) residuals of a standard-form point.

    See the module docstring for the scaling.
    """
    x, s, y, z = (np.asarray(v, dtype=float).reshape(-1) for v in (x, s, y, z))
    res_z = form.G @ x + s - form.h
    res_y = form.A @ x - form.b
    primal = np.linalg.norm(res_z) / max(1.0, np.linalg.norm(form.h))
    if form.b.size:
        primal = max(primal, np.linalg.norm(res_y) / max(1.0, np.linalg.norm(form.b)))
    res_x = form.G.T @ z + form.A.T @ y + form.c
    dual = np.linalg.norm(res_x) / max(1.0, np.linalg.norm(form.c))
    pcost = form.c @ x
    dcost = -(form.h @ z) - (form.b @ y)
    gap = abs(s @ z) / max(1.0, abs(pcost), abs(dcost))
    return float(primal), float(dual), float(gap)


def _to_cvx_sparse(matrix):
    coo = matrix.tocoo()
    return cvxopt.spmatrix(coo.data.tolist(), coo.row.tolist(), coo.col.tolist(),
                           size=(int(matrix.shape[0]), int(matrix.shape[1])))


def _to_cvx_dense(vector):
    return cvxopt.matrix(np.ascontiguousarray(vector, dtype=float).reshape(-1, 1))


def _from_cvx(value, length):
    if value is None:
        return np.full(length, np.nan)
    return np.array(value, dtype=float).reshape(-1)


def solve(program, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS):
    """
    Solves a ConicProgram with cvxopt's interior-point cone solver.

    Args:
        program: ConicProgram
        tol: Residual tolerance of the contract in the module docstring
        max_iters: Interior-point iteration cap

    Returns:
        ConicSolution. Infeasible, Unbounded and MaxIterations are returned, not
        raised; their diagnostic carries cvxopt's certificate residuals.
    """
    form = to_standard_form(program)
    n_std = form.c.size
    options = {
        'show_progress': False,
        'maxiters': int(max_iters),
        'abstol': tol / 2.0,
        'reltol': tol / 2.0,
        'feastol': tol / 2.0,
        'refinement': 1,
    }
    args = [_to_cvx_dense(form.c), _to_cvx_sparse(form.G), _to_cvx_dense(form.h),
            {'l': form.dims['l'], 'q': list(form.dims['q']), 's': []}]
    kwargs = {'options': options}
    if form.b.size:
        kwargs['A'] = _to_cvx_sparse(form.A)
        kwargs['b'] = _to_cvx_dense(form.b)

    nan_x = np.full(program.num_vars, np.nan)
    try:
        sol = solvers.conelp(*args, **kwargs)
    except (ArithmeticError, ValueError) as exc:
        logger.debug('conelp raised %s', exc)
        return ConicSolution(SolverStatus.MAX_ITERATIONS, nan_x, np.nan, np.inf, np.inf, np.inf,
                             diagnostic={'solver_status': 'exception', 'message': str(exc)})

    diagnostic = {key: sol.get(key) for key in (
        'status', 'primal infeasibility', 'dual infeasibility', 'gap', 'relative gap',
        'residual as primal infeasibility certificate',
        'residual as dual infeasibility certificate') if key in sol}
    diagnostic['solver_status'] = diagnostic.pop('status', None)
    iterations = int(sol.get('iterations', 0))

    if sol['status'] == 'primal infeasible':
        return ConicSolution(SolverStatus.INFEASIBLE, nan_x, np.inf, np.inf, np.inf, np.inf,
                             iterations, diagnostic=diagnostic)
    if sol['status'] == 'dual infeasible':
        return ConicSolution(SolverStatus.UNBOUNDED, nan_x, -np.inf, np.inf, np.inf, np.inf,
                             iterations, diagnostic=diagnostic)
    if sol['x'] is None:
        return ConicSolution(SolverStatus.MAX_ITERATIONS, nan_x, np.nan, np.inf, np.inf, np.inf,
                             iterations, diagnostic=diagnostic)

    standard = StandardSolution(
        x=_from_cvx(sol['x'], n_std),
        s=_from_cvx(sol['s'], form.h.size),
        y=_from_cvx(sol['y'], form.b.size),
        z=_from_cvx(sol['z'], form.h.size),
    )
    primal, dual, gap = kkt_residuals(form, standard.x, standard.s, standard.y, standard.z)
    within = all(np.isfinite(v) and v <= tol for v in (primal, dual, gap))
    status = SolverStatus.OPTIMAL if within else SolverStatus.MAX_ITERATIONS
    if status is not SolverStatus.OPTIMAL or sol['status'] != 'optimal':
        logger.debug('conelp %s -> %s (primal %.2e, dual %.2e, gap %.2e)',
                     sol['status'], status.value, primal, dual, gap)

    x = standard.x[:program.num_vars].copy()
    return ConicSolution(status, x, program.objective.value(x), primal, dual, gap,
                         iterations, standard, diagnostic)


# ---------------------------------------------------------------------------
# Debug dump
# ---------------------------------------------------------------------------

def _matrix_record(matrix):
    coo = matrix.tocoo()
    return {'shape': list(coo.shape), 'row': coo.row.tolist(),
            'col': coo.col.tolist(), 'data': coo.data.tolist()}


def _matrix_from_record(record):
    return sp.csr_matrix((record['data'], (record['row'], record['col'])),
                         shape=tuple(record['shape']))


def dump_program(program, path):
    """
    Writes a ConicProgram as JSON for offline cross-checking.

    Schema (cellfree.conic/1):
        {"schema", "num_vars",
         "objective": {"F": matrix, "q": [...], "r": float},
         "constraints": [{"kind": "soc", "A", "b", "c", "d"} |
                         {"kind": "nonneg", "G", "h"} |
                         {"kind": "zero", "E", "f"}]}
    where matrix = {"shape": [rows, cols], "row": [...], "col": [...], "data": [...]}
    """
    constraints = []
    for cone in program.constraints:
        if isinstance(cone, SecondOrderCone):
            constraints.append({'kind': 'soc', 'A': _matrix_record(cone.A), 'b': cone.b.tolist(),
                                'c': cone.c.tolist(), 'd': cone.d})
        elif isinstance(cone, NonNegative):
            constraints.append({'kind': 'nonneg', 'G': _matrix_record(cone.G), 'h': cone.h.tolist()})
        else:
            constraints.append({'kind': 'zero', 'E': _matrix_record(cone.E), 'f': cone.f.tolist()})
    record = {
        'schema': DUMP_SCHEMA,
        'num_vars': program.num_vars,
        'objective': {'F': _matrix_record(program.objective.F),
                      'q': program.objective.q.tolist(), 'r': program.objective.r},
        'constraints': constraints,
    }
    with open(path, 'w') as f:
        json.dump(record, f, indent=1)


def load_program(path):
    with open(path, 'r') as f:
        record = json.load(f)
    if record.get('schema') != DUMP_SCHEMA:
        raise ValueError('unsupported program dump schema: {!r}'.format(record.get('schema')))
    objective = QuadraticObjective(_matrix_from_record(record['objective']['F']),
                                   record['objective']['q'], record['objective']['r'])
    constraints = []
    for item in record['constraints']:
        if item['kind'] == 'soc':
            constraints.append(SecondOrderCone(_matrix_from_record(item['A']), item['b'],
                                               item['c'], item['d']))
        elif item['kind'] == 'nonneg':
            constraints.append(NonNegative(_matrix_from_record(item['G']), item['h']))
        elif item['kind'] == 'zero':
            constraints.append(ZeroCone(_matrix_from_record(item['E']), item['f']))
        else:
            raise ValueError('unknown cone kind {!r}'.format(item['kind']))
    return ConicProgram(record['num_vars'], objective, tuple(constraints))
