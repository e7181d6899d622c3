"""
netsim.py - Star-topology fronthaul simulation

APs talk only to the central node, over lossless in-order links. The
distributed scheme sends one interference report z_m (K reals) per AP per
iteration and gets Omega (K reals) back as a single broadcast. The centralized
scheme uploads every H_m (N x K complex) once and downloads every W_m.

Byte accounting: a real scalar is 8 bytes (IEEE-754 double), a complex scalar
16 bytes. scalar_count is always in real scalars, so one complex entry counts 2.
"""

import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from functools import partial

import numpy as np

from .admm import (check_stop, consensus_update, dual_update, init_state, iteration_record,
                   local_step, result_from_states)
from .centralized import solve_centralized
from .errors import MissingReport, SolverFailure
from .model import ChannelRealization

logger = logging.getLogger(__name__)

REAL_BYTES = 8
COMPLEX_BYTES = 16


class Direction(Enum):
    UPLINK = 'uplink'
    DOWNLINK = 'downlink'


class Scheme(Enum):
    CENTRALIZED = 'centralized'
    ADMM_CELL_FREE = 'admm-cell-free'
    ADMM_CELLULAR = 'admm-cellular'


def _frozen(array, dtype=float):
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class InterferenceReport:
    ap_index: int
    iteration: int
    z: np.ndarray
    direction = Direction.UPLINK

    def __post_init__(self):
        object.__setattr__(self, 'z', _frozen(self.z))

    @property
    def scalar_count(self):
        return self.z.size

    @property
    def payload_bytes(self):
        return REAL_BYTES * self.z.size


@dataclass(frozen=True, eq=False)
class ConsensusBroadcast:
    iteration: int
    omega: np.ndarray
    ap_index: int = None            # None: one broadcast to every AP
    direction = Direction.DOWNLINK

    def __post_init__(self):
        object.__setattr__(self, 'omega', _frozen(self.omega))

    @property
    def scalar_count(self):
        return self.omega.size

    @property
    def payload_bytes(self):
        return REAL_BYTES * self.omega.size


@dataclass(frozen=True, eq=False)
class ChannelUpload:
    ap_index: int
    H_m: np.ndarray
    direction = Direction.UPLINK

    def __post_init__(self):
        object.__setattr__(self, 'H_m', _frozen(self.H_m, np.complex128))

    @property
    def scalar_count(self):
        return 2 * self.H_m.size

    @property
    def payload_bytes(self):
        return COMPLEX_BYTES * self.H_m.size


@dataclass(frozen=True, eq=False)
class PrecoderDownload:
    ap_index: int
    W_m: np.ndarray
    direction = Direction.DOWNLINK

    def __post_init__(self):
        object.__setattr__(self, 'W_m', _frozen(self.W_m, np.complex128))

    @property
    def scalar_count(self):
        return 2 * self.W_m.size

    @property
    def payload_bytes(self):
        return COMPLEX_BYTES * self.W_m.size


@dataclass(frozen=True)
class CommRecord:
    scheme: str
    iteration: int
    direction: str
    bytes: int
    scalar_count: int
    messages: int = 1


class CommLog:
    """Every message sent over the fronthaul, one CommRecord each."""

    def __init__(self, scheme):
        self.scheme = Scheme(scheme)
        self.records = []
        self.simulated_latency = 0.0

    def add(self, message, iteration):
        self.records.append(CommRecord(self.scheme.value, int(iteration), message.direction.value,
                                       message.payload_bytes, message.scalar_count))

    def _total(self, attr, direction=None):
        return sum(getattr(r, attr) for r in self.records
                   if direction is None or r.direction == Direction(direction).value)

    @property
    def uplink_bytes(self):
        return self._total('bytes', Direction.UPLINK)

    @property
    def downlink_bytes(self):
        return self._total('bytes', Direction.DOWNLINK)

    @property
    def total_bytes(self):
        return self._total('bytes')

    @property
    def total_scalars(self):
        return self._total('scalar_count')

    @property
    def message_count(self):
        return self._total('messages')

    @property
    def iterations(self):
        return sorted({r.iteration for r in self.records})

    def rows(self):
        """Records aggregated per (iteration, direction), in iteration order."""
        grouped = {}
        for r in self.records:
            key = (r.iteration, r.direction)
            b, s, n = grouped.get(key, (0, 0, 0))
            grouped[key] = (b + r.bytes, s + r.scalar_count, n + r.messages)
        order = {Direction.UPLINK.value: 0, Direction.DOWNLINK.value: 1}
        return [
            {'scheme': self.scheme.value, 'iteration': it, 'direction': d,
             'bytes': b, 'scalar_count': s, 'messages': n}
            for (it, d), (b, s, n) in sorted(grouped.items(), key=lambda kv: (kv[0][0], order[kv[0][1]]))
        ]


class StarFronthaul:
    """
    Links between M APs and the central node.

    uplink messages queue at the central node; a broadcast is logged once and
    queued at every AP. latency (seconds per link traversal) only feeds
    log.simulated_latency: each exchange phase costs one link latency.
    """

    def __init__(self, num_aps, scheme, latency=0.0):
        self.num_aps = num_aps
        self.latency = float(latency)
        self.log = CommLog(scheme)
        self.central_inbox = deque()
        self.ap_inboxes = [deque() for _ in range(num_aps)]

    def uplink(self, message, iteration):
        self.log.add(message, iteration)
        self.central_inbox.append(message)

    def downlink(self, message, iteration):
        self.log.add(message, iteration)
        self.ap_inboxes[message.ap_index].append(message)

    def broadcast(self, message, iteration):
        self.log.add(message, iteration)
        for inbox in self.ap_inboxes:
            inbox.append(message)

    def drain_central(self):
        messages = list(self.central_inbox)
        self.central_inbox.clear()
        self.log.simulated_latency += self.latency
        return messages

    def receive(self, ap_index):
        return self.ap_inboxes[ap_index].popleft()

    def end_downlink_phase(self):
        self.log.simulated_latency += self.latency


class AccessPointNode:
    """One AP: owns its ApLocalState and only exchanges z_m / Omega."""

    def __init__(self, state):
        self.state = state

    @property
    def ap_index(self):
        return self.state.ap_index

    def report(self, iteration):
        return InterferenceReport(self.ap_index, iteration, self.state.z)

    def apply_broadcast(self, message, rho):
        self.state = self.state.replace(V=dual_update(self.state.V, self.state.z, message.omega, rho))


class CentralNode:
    """Collects reports at a barrier and averages them into Omega."""

    def __init__(self, num_aps):
        self.num_aps = num_aps

    def collect(self, messages, iteration):
        reports = {}
        for msg in messages:
            if msg.iteration == iteration:
                reports[msg.ap_index] = msg.z
        for m in range(self.num_aps):
            if m not in reports:
                raise MissingReport(m, iteration)
        return reports

    def update(self, reports):
        return consensus_update(reports, self.num_aps)


def run_distributed_protocol(H, config, executor=None, latency=0.0):
    """
    Runs the distributed algorithm with every exchange going through the fronthaul.

    The arithmetic and its order match run_admm, so the precoder is bit-identical.

    Returns:
        (AdmmResult, CommLog)
    """
    M = config.num_aps
    states, consensus = init_state(config, H)
    nodes = [AccessPointNode(s) for s in states]
    central = CentralNode(M)
    fronthaul = StarFronthaul(M, Scheme.ADMM_CELL_FREE, latency)

    while True:
        t = consensus.iteration
        step = partial(local_step, omega=consensus.omega, config=config)
        try:
            if executor is None:
                updated = [step(node.state) for node in nodes]
            else:
                updated = list(executor.map(step, [node.state for node in nodes]))
        except SolverFailure as e:
            raise e.at_iteration(t) from e

        for node, state in zip(nodes, updated):
            node.state = state
            fronthaul.uplink(node.report(t), t)

        omega = central.update(central.collect(fronthaul.drain_central(), t))
        fronthaul.broadcast(ConsensusBroadcast(t, omega), t)
        for node in nodes:
            node.apply_broadcast(fronthaul.receive(node.ap_index), config.penalty)
        fronthaul.end_downlink_phase()

        states = [node.state for node in nodes]
        consensus = consensus.record(iteration_record(t, states, omega, consensus.omega, config))
        if check_stop(consensus, config):
            break
        consensus = consensus.advance()

    result = result_from_states(states, consensus)
    logger.debug('distributed protocol: %d iterations, %d bytes',
                 result.iterations_used, fronthaul.log.total_bytes)
    return result, fronthaul.log


def run_centralized_protocol(H, config, latency=0.0):
    """
    Centralized scheme over the fronthaul: M channel uploads, one central
    solve, M precoder downloads (all logged as iteration 0).

    Returns:
        (CentralizedResult, CommLog)
    """
    M = config.num_aps
    fronthaul = StarFronthaul(M, Scheme.CENTRALIZED, latency)
    for m in range(M):
        fronthaul.uplink(ChannelUpload(m, H.ap_matrix(m)), 0)

    uploads = {msg.ap_index: msg.H_m for msg in fronthaul.drain_central()}
    for m in range(M):
        if m not in uploads:
            raise MissingReport(m, 0)
    gathered = ChannelRealization(np.stack([uploads[m].T for m in range(M)], axis=1),
                                  H.realization_index)
    result = solve_centralized(gathered, config)

    if result.precoder is not None:
        for m in range(M):
            fronthaul.downlink(PrecoderDownload(m, result.precoder.ap_block(m)), 0)
            fronthaul.receive(m)
        fronthaul.end_downlink_phase()
    return result, fronthaul.log


@dataclass(frozen=True)
class CommVolume:
    """
    Table-style communication volume of one scheme.

    per_exchange_scalars is the shared data of one exchange in real scalars;
    total_bytes multiplies by the iteration count for the iterative schemes.
    downlink_bytes covers the return path (precoders, or the Omega broadcast);
    unicast_downlink_bytes is the same return path sent to each AP separately.
    """
    scheme: str
    per_exchange_scalars: int
    per_iteration_bytes: int
    total_bytes: int
    iterations: int
    complex_scalars: int = 0
    downlink_bytes: int = 0
    unicast_downlink_bytes: int = 0

    def to_row(self):
        return {
            'scheme': self.scheme,
            'per_exchange_scalars': self.per_exchange_scalars,
            'per_iteration_bytes': self.per_iteration_bytes,
            'total_bytes': self.total_bytes,
        }


def comm_volume(scheme, num_aps, num_antennas, num_users, iterations=1):
    """
    Shared-data volume of a scheme as a pure function of (M, N, K, iterations).

    Centralized: M N K complex CSI entries, once (precoder download reported
    in downlink_bytes). Cell-free ADMM: M K reals per iteration uplink, Omega
    broadcast as K reals. Cellular ADMM: M (M - 1) K reals per round.
    """
    scheme = Scheme(scheme)
    M, N, K = int(num_aps), int(num_antennas), int(num_users)
    if min(M, N, K) < 1 or iterations < 0:
        raise ValueError('dimensions must be positive and iterations nonnegative')

    if scheme is Scheme.CENTRALIZED:
        complex_scalars = M * N * K
        nbytes = COMPLEX_BYTES * complex_scalars
        return CommVolume(scheme.value, 2 * complex_scalars, nbytes, nbytes, 1,
                          complex_scalars=complex_scalars, downlink_bytes=nbytes,
                          unicast_downlink_bytes=nbytes)

    if scheme is Scheme.ADMM_CELL_FREE:
        scalars = M * K
        per_iteration = REAL_BYTES * scalars
        return CommVolume(scheme.value, scalars, per_iteration, per_iteration * iterations,
                          iterations, downlink_bytes=REAL_BYTES * K * iterations,
                          unicast_downlink_bytes=REAL_BYTES * M * K * iterations)

    scalars = M * (M - 1) * K
    per_iteration = REAL_BYTES * scalars
    return CommVolume(scheme.value, scalars, per_iteration, per_iteration * iterations, iterations)
