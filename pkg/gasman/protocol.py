# GASMAN
# Copyright (C) 2026 GASMAN contributors
#
# This program is free software: you can redistribute it and/or modify it under the terms of the GNU
# Affero General Public License as published by the Free Software Foundation, either version 3 of
# the License, or (at your option) any later version.
#
# This program is distributed in the hope that it will be useful, but WITHOUT ANY WARRANTY; without
# even the implied warranty of MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE. See the GNU
# Affero General Public License for more details.
#
# You should have received a copy of the GNU Affero General Public License along with this program.
# If not, see <https://www.gnu.org/licenses/>.

"""Node life cycle: initialization, insertion, access control, proofs of life and deletion.

Operations act on the :class:`NodeState` of a single node. All times are simulated milliseconds.
"""

from __future__ import annotations

from collections import OrderedDict
from collections.abc import Iterable
from dataclasses import dataclass, field
from itertools import count
from random import Random
import struct
import typing
from typing import ClassVar, Optional, Union

from . import error
from .graph import (Graph, HamiltonianCycle, canonical_bytes, canonical_bytes_cycle,
                    find_unique_cycle_adjacent_pair, is_hamiltonian_cycle, splice_delete,
                    splice_insert)
from .zkp import (DEFAULT_ROUNDS, Challenge, CheatingProver, Commitments, HonestProver, Prover,
                  RoundOpening, Transcript, run_protocol)

@dataclass(frozen=True)
class NetworkParams:
    """Network parameters.

    .. attribute:: period

       Threshold period *T* in milliseconds, both the maximum tolerated off-line duration and the
       proof of life cadence.

    .. attribute:: rounds

       Number of ZKP rounds *l*.

    .. attribute:: degree

       Neighbors contributed per node, *2m/n*.

    .. attribute:: termination_threshold

       Minimum number of on-line nodes.
    """

    period: int
    rounds: int = DEFAULT_ROUNDS
    degree: int = 6
    termination_threshold: int = 3

    def __post_init__(self) -> None:
        if self.period <= 0:
            raise error.BadParams(f'T {self.period} <= 0')
        if self.rounds < 1:
            raise error.BadParams(f'l {self.rounds} < 1')
        if self.degree < 3:
            raise error.BadParams(f'Degree {self.degree} < 3')
        if self.termination_threshold < 1:
            raise error.BadParams(f'Termination threshold {self.termination_threshold} < 1')

    def edge_target(self, n: int) -> int:
        """Target initial edge count *m* for *n* nodes."""
        return n * self.degree // 2

    def check(self, n: int) -> None:
        """Check that a network of *n* nodes can be initialized."""
        if n < 3:
            raise error.BadParams(f'n {n} < 3')
        if n <= self.degree:
            raise error.BadParams(f'n {n} <= degree {self.degree}')
        if n * self.degree % 2:
            raise error.BadParams(f'n {n} * degree {self.degree} is odd')

# Messages

@dataclass(frozen=True)
class Message:
    """Protocol message.

    The wire format is a one byte tag, the sender as 32-bit integer and the body.

    .. attribute:: sender

       Sending node.
    """

    sender: int

    tag: ClassVar[int] = 0
    #: Traffic category.
    category: ClassVar[str] = 'other'
    #: Channel the message travels on, 'open' or 'secure'.
    channel: ClassVar[str] = 'open'

    def body(self) -> bytes:
        """Encode the message body."""
        return b''

    def encode(self) -> bytes:
        """Encode the message."""
        return struct.pack('>BI', self.tag, self.sender) + self.body()

def _ids(ids: Iterable[int]) -> bytes:
    values = sorted(ids)
    return struct.pack(f'>I{len(values)}I', len(values), *values)

def _prefixed(data: bytes) -> bytes:
    return struct.pack('>I', len(data)) + data

@dataclass(frozen=True)
class InsertionAnnounce(Message):
    """Announcement of the ID *vertex* for a new node."""

    vertex: int
    tag: ClassVar[int] = 1
    category: ClassVar[str] = 'insertion'

    def body(self) -> bytes:
        return struct.pack('>I', self.vertex)

@dataclass(frozen=True)
class InsertionAck(Message):
    """Answer to an :class:`InsertionAnnounce`."""

    vertex: int
    tag: ClassVar[int] = 2
    category: ClassVar[str] = 'insertion'

    def body(self) -> bytes:
        return struct.pack('>I', self.vertex)

@dataclass(frozen=True)
class NeighborSetBroadcast(Message):
    """Neighbor set of the new node *vertex*, sent at *time*."""

    vertex: int
    neighbors: frozenset[int]
    time: int = 0
    tag: ClassVar[int] = 3
    category: ClassVar[str] = 'insertion'

    def body(self) -> bytes:
        return struct.pack('>I', self.vertex) + _ids(self.neighbors)

@dataclass(frozen=True)
class GraphDelivery(Message):
    """Current graph for a new or returning node, over the open channel."""

    graph: Graph
    stage: int = 0
    tag: ClassVar[int] = 4
    category: ClassVar[str] = 'insertion'

    def body(self) -> bytes:
        return struct.pack('>I', self.stage) + _prefixed(canonical_bytes(self.graph))

@dataclass(frozen=True)
class CycleDelivery(Message):
    """Current cycle for a new or returning node. Only ever sent over the secure channel."""

    cycle: HamiltonianCycle
    tag: ClassVar[int] = 5
    category: ClassVar[str] = 'insertion'
    channel: ClassVar[str] = 'secure'

    def body(self) -> bytes:
        return _prefixed(canonical_bytes_cycle(self.cycle))

@dataclass(frozen=True)
class ProofOfLife(Message):
    """Proof of life of the sender, both as broadcast and as answer to one."""

    tag: ClassVar[int] = 6
    category: ClassVar[str] = 'proof_of_life'

@dataclass(frozen=True)
class DeletionNotice(Message):
    """Notice that *vertex* is deleted."""

    vertex: int
    tag: ClassVar[int] = 7
    category: ClassVar[str] = 'deletion'

    def body(self) -> bytes:
        return struct.pack('>I', self.vertex)

@dataclass(frozen=True)
class ProofOfLifeEcho(Message):
    """Second step of a proof of life broadcast.

    .. attribute:: senders

       Nodes that proved their life, including the initiator.

    .. attribute:: deleted

       Nodes deleted by the initiator, in deletion order.

    .. attribute:: time

       Time the proofs of life were received.
    """

    senders: frozenset[int]
    deleted: tuple[int, ...] = ()
    time: int = 0
    tag: ClassVar[int] = 8
    category: ClassVar[str] = 'proof_of_life'

    @property
    def deletion_size(self) -> int:
        """Size of the deletion notices part of the encoding, in bytes."""
        return 4 + 4 * len(self.deleted)

    def body(self) -> bytes:
        return _ids(self.senders) + struct.pack(f'>I{len(self.deleted)}I', len(self.deleted),
                                                *self.deleted)

@dataclass(frozen=True)
class AccessRequest(Message):
    """Request of a returning node presenting the graph *graph* of its last stage *stage*."""

    graph: Graph
    stage: int = 0
    tag: ClassVar[int] = 9
    category: ClassVar[str] = 'zkp'

    def body(self) -> bytes:
        return struct.pack('>I', self.stage) + _prefixed(canonical_bytes(self.graph))

@dataclass(frozen=True)
class ZkpRound(Message):
    """ZKP message, either commitments, a challenge or an opening."""

    payload: Union[Commitments, Challenge, RoundOpening]
    tag: ClassVar[int] = 10
    category: ClassVar[str] = 'zkp'

    def body(self) -> bytes:
        return self.payload.encode()

    @staticmethod
    def session(transcript: Transcript, supplicant: int, authenticator: int) -> list[ZkpRound]:
        """Messages exchanged for *transcript* between *supplicant* and *authenticator*."""
        messages = []
        for r in transcript.rounds:
            messages += [ZkpRound(supplicant, r.commitments), ZkpRound(authenticator, r.challenge),
                         ZkpRound(supplicant, r.opening)]
        return messages

@dataclass(frozen=True)
class AccessGrant(Message):
    """Grant of access for *supplicant*.

    .. attribute:: transcript

       Accepted transcript.

    .. attribute:: stage_verified

       Indicates if the presented graph was checked against the stage history.
    """

    supplicant: int
    transcript: Optional[Transcript] = None
    stage_verified: bool = True
    tag: ClassVar[int] = 11

    def body(self) -> bytes:
        return struct.pack('>I?', self.supplicant, self.stage_verified)

@dataclass(frozen=True)
class Withdraw:
    """Withdrawn proof of life of *initiator*, which received only *answers*."""

    initiator: int
    answers: frozenset[int]

# State

@dataclass(eq=False)
class NodeState:
    """View of a single node.

    .. attribute:: id

       Node ID.

    .. attribute:: graph

       View of *G_t*.

    .. attribute:: cycle

       View of *HC_t*.

    .. attribute:: stage

       Stage *t*, incremented by every insertion and every single deletion.

    .. attribute:: clock_origin

       Time of the last proof of life, the clock is the time elapsed since.

    .. attribute:: pol_queue

       Proofs of life received within the last *T*, as node ID to time, oldest first.

    .. attribute:: online

       Indicates if the node is on-line.

    .. attribute:: last_online_stage

       Stage at which the node went off-line.

    .. attribute:: offline_since

       Time the node went off-line, ``None`` while on-line.

    .. attribute:: history

       Graph digest of every stage the node knows.

    .. attribute:: reserved

       IDs announced for insertion but not inserted yet.

    .. attribute:: pending_pol

       Clock origin before the proof of life the node is waiting answers for.

    .. attribute:: address

       Link-layer address of the device.

    .. attribute:: observed

       Last node ID claimed by every address proofs of life were received from, with the time.
    """

    id: int
    graph: Graph
    cycle: HamiltonianCycle
    stage: int = 0
    clock_origin: int = 0
    pol_queue: typing.OrderedDict[int, int] = field(default_factory=OrderedDict)
    online: bool = True
    last_online_stage: int = 0
    offline_since: Optional[int] = None
    history: dict[int, bytes] = field(default_factory=dict)
    reserved: set[int] = field(default_factory=set)
    pending_pol: Optional[int] = None
    address: int = 0
    observed: dict[int, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.history.setdefault(self.stage, self.graph.digest)

    def clock(self, now: int) -> int:
        """Time elapsed since the last proof of life at *now*."""
        return now - self.clock_origin

    def record_proof_of_life(self, v: int, time: int) -> None:
        """Record a proof of life of node *v* received at *time*."""
        self.pol_queue.pop(v, None)
        self.pol_queue[v] = time

    def prune(self, now: int, period: int) -> None:
        """Drop proofs of life older than *period* at *now*."""
        for v, time in list(self.pol_queue.items()):
            if now - time > period:
                del self.pol_queue[v]

    def observe(self, address: int, claimed: int, now: int, period: int) -> Optional[int]:
        """Observe a proof of life for *claimed* sent from *address* at *now*.

        If the address claimed a different ID within *period*, that ID is returned. A device may
        take a new ID after its old one expired.
        """
        known = self.observed.get(address)
        self.observed[address] = (claimed, now)
        if known and known[0] != claimed and now - known[1] <= period:
            return known[0]
        return None

    def advance(self, graph: Graph, cycle: HamiltonianCycle) -> None:
        """Move to the next stage with *graph* and *cycle*."""
        self.graph = graph
        self.cycle = cycle
        self.stage += 1
        self.history[self.stage] = graph.digest

    def go_offline(self, now: int) -> None:
        """Go off-line at *now*."""
        self.online = False
        self.last_online_stage = self.stage
        self.offline_since = now
        self.pending_pol = None

    def adopt(self, other: NodeState, now: int) -> None:
        """Take over the state of the on-line node *other* and go on-line at *now*."""
        self.graph = other.graph
        self.cycle = other.cycle
        self.stage = other.stage
        self.history = dict(other.history)
        self.pol_queue = OrderedDict(other.pol_queue)
        self.reserved = set(other.reserved)
        self.online = True
        self.offline_since = None
        self.clock_origin = now
        self.pending_pol = None

    def is_consistent_with(self, other: NodeState) -> bool:
        """Check if *other* holds the same graph, cycle and stage."""
        return (self.stage == other.stage and self.graph.digest == other.graph.digest
                and self.cycle == other.cycle)

# Initialization

def deal_contributions(hc: HamiltonianCycle, degree: int, rng: Random) -> dict[int, list[int]]:
    """Draw the neighbor declarations of every node around the cycle *hc*.

    Every node declares its two cycle neighbors and *degree* - 2 random neighbors. Random neighbors
    are paired up uniformly, so declarations are mutual; a node may draw itself or a neighbor
    twice, which is merged away.
    """
    declarations = {v: [hc.predecessor(v), hc.successor(v)] for v in sorted(hc)}
    stubs = [v for v in sorted(hc) for _ in range(degree - 2)]
    rng.shuffle(stubs)
    for u, v in zip(stubs[::2], stubs[1::2]):
        declarations[u].append(v)
        declarations[v].append(u)
    return declarations

def initialize_network(n: int, params: NetworkParams, rng: Random, *,
                       cycle: Optional[Iterable[int]] = None, now: int = 0) -> list[NodeState]:
    """Set up a network of *n* nodes as trusted dealer.

    *HC_0* is drawn at random, unless a *cycle* is given. Every node starts on-line at *now* with
    proofs of life of all nodes.
    """
    params.check(n)
    if cycle is None:
        order = list(range(n))
        rng.shuffle(order)
        hc = HamiltonianCycle(order)
    else:
        hc = HamiltonianCycle(cycle)
        if len(hc) != n or set(hc) != set(range(n)):
            raise error.BadParams(f'Cycle {list(hc)} is not a cycle over 0..{n - 1}')

    declarations = deal_contributions(hc, params.degree, rng)
    graph = Graph(range(n), ((u, v) for u, vs in declarations.items() for v in vs if u != v))
    states = []
    for v in range(n):
        states.append(
            NodeState(v, graph, hc, clock_origin=now,
                      pol_queue=OrderedDict((w, now) for w in range(n)), address=v))
    return states

# Insertion

def begin_insertion(authenticator: NodeState, *, vertex: Optional[int] = None,
                    vetted: bool = True) -> InsertionAnnounce:
    """Announce the insertion of a supplicant by *authenticator*.

    The supplicant is assigned the lowest ID that is neither a vertex nor reserved, unless a
    *vertex* is forced. *vetted* tells if the supplicant convinced the authenticator out-of-band.
    """
    if not authenticator.online:
        raise error.AuthenticatorOffline(f'Authenticator {authenticator.id} is off-line')
    if not vetted:
        raise error.NotVetted('Supplicant is not vetted')
    vertices = authenticator.graph.vertices
    if vertex is None:
        vertex = next(i for i in count() if i not in vertices and i not in authenticator.reserved)
    elif vertex in vertices:
        raise error.DuplicateId(f'Node {vertex} already in graph')
    authenticator.reserved.add(vertex)
    return InsertionAnnounce(authenticator.id, vertex)

def complete_insertion(
        authenticator: NodeState, announce: InsertionAnnounce, ack_count: int,
        params: NetworkParams, rng: Random, *, splice: Optional[tuple[int, int]] = None,
        now: int = 0) -> NeighborSetBroadcast:
    """Complete an insertion after *ack_count* answers to *announce*.

    The neighbor set consists of a random cycle edge ``(v_j, v_k)``, or the forced *splice*, and
    *degree* - 2 vertices that are neither adjacent to each other nor to ``v_j`` and ``v_k`` in the
    cycle.
    """
    vertices = authenticator.graph.vertices
    if ack_count * 2 < len(vertices):
        authenticator.reserved.discard(announce.vertex)
        raise error.QuorumNotReached(f'{ack_count} answers of {len(vertices)} nodes')

    hc = authenticator.cycle
    if splice:
        v_j, v_k = splice
        if v_j not in hc or v_k not in hc or not hc.is_adjacent(v_j, v_k):
            authenticator.reserved.discard(announce.vertex)
            raise error.NotAdjacentInCycle(f'({v_j}, {v_k}) not adjacent in cycle')
    else:
        v_j = rng.choice(hc.order)
        v_k = rng.choice(hc.neighbors(v_j))
    b = v_k if hc.successor(v_j) == v_k else v_j

    # Cycle path from the second successor of the pair to the second predecessor
    n = len(hc)
    i = hc.positions[b]
    path = [hc[(i + 2 + s) % n] for s in range(max(n - 4, 0))]
    k = params.degree - 2
    if len(path) < 2 * k - 1:
        authenticator.reserved.discard(announce.vertex)
        raise error.BadParams(f'Cycle of {n} nodes too small for degree {params.degree}')
    picks = sorted(rng.sample(range(len(path) - k + 1), k))
    ws = [path[c + j] for j, c in enumerate(picks)]
    return NeighborSetBroadcast(authenticator.id, announce.vertex, frozenset({v_j, v_k, *ws}),
                                now)

def apply_insertion(state: NodeState, broadcast: NeighborSetBroadcast, *,
                    params: Optional[NetworkParams] = None,
                    now: Optional[int] = None) -> NodeState:
    """Insert the node of *broadcast* into the view of *state*.

    The authenticator and the new node count as alive at the time of the broadcast. With *params*,
    proofs of life older than *T* at *now*, by default the time of the broadcast, are dropped.
    """
    v = broadcast.vertex
    if v in state.graph.vertices:
        raise error.DuplicateId(f'Node {v} already in graph')
    v_j, v_k = find_unique_cycle_adjacent_pair(broadcast.neighbors, state.cycle)
    graph = state.graph.with_vertex(v, broadcast.neighbors)
    cycle = splice_insert(state.cycle, v, v_j, v_k)
    state.reserved.discard(v)
    state.advance(graph, cycle)
    state.record_proof_of_life(broadcast.sender, broadcast.time)
    state.record_proof_of_life(v, broadcast.time)
    if params is not None:
        state.prune(broadcast.time if now is None else now, params.period)
    return state

# Access control

def access_control(
        authenticator: NodeState, supplicant: NodeState, now: int, params: NetworkParams,
        rng: Random, *, prover: Optional[Prover] = None,
        observed_online: typing.AbstractSet[int] = frozenset()) -> AccessGrant:
    """Let *authenticator* check the returning *supplicant* at *now*.

    The supplicant proves knowledge of the cycle of the graph it presents, by default with the
    cycle it holds. *observed_online* are the IDs the authenticator currently sees on-line.
    """
    if not authenticator.online:
        raise error.AuthenticatorOffline(f'Authenticator {authenticator.id} is off-line')
    if supplicant.offline_since is None:
        raise error.ValueError(f'Supplicant {supplicant.id} is on-line')
    if supplicant.id not in authenticator.graph.vertices:
        raise error.Expired(f'Node {supplicant.id} is no member')
    # An ID held longer than T ago may have been given to another node meanwhile
    duration = now - supplicant.offline_since
    if duration > params.period:
        raise error.Expired(f'Node {supplicant.id} off-line for {duration} ms', duration)
    last_seen = authenticator.pol_queue.get(supplicant.id)
    if (supplicant.id in observed_online
            or (last_seen is not None and last_seen > supplicant.offline_since)):
        raise error.IdInUse(f'Node {supplicant.id} is on-line')

    known = authenticator.history.get(supplicant.stage)
    if known is not None and known != supplicant.graph.digest:
        raise error.ZkpFailed(f'Graph of node {supplicant.id} does not match stage '
                              f'{supplicant.stage}')
    if not prover:
        prover_rng = Random(rng.getrandbits(64))
        prover = (
            HonestProver(supplicant.graph, supplicant.cycle, prover_rng)
            if is_hamiltonian_cycle(supplicant.graph, supplicant.cycle)
            else CheatingProver(supplicant.graph, prover_rng))
    transcript = run_protocol(prover, supplicant.graph, params.rounds, rng)
    if not transcript.accepted:
        raise error.ZkpFailed(f'Node {supplicant.id} failed round {len(transcript.rounds)}',
                              transcript)
    authenticator.record_proof_of_life(supplicant.id, now)
    return AccessGrant(authenticator.id, supplicant.id, transcript, known is not None)

def accept_grant(supplicant: NodeState, authenticator: NodeState, now: int) -> NodeState:
    """Deliver the current state of *authenticator* to the granted *supplicant* at *now*."""
    supplicant.adopt(authenticator, now)
    return supplicant

# Proofs of life and deletion

def emit_proof_of_life(state: NodeState, now: int, params: NetworkParams, *,
                       force: bool = False) -> Optional[ProofOfLife]:
    """Emit a proof of life of *state* if its clock exceeds *T* at *now*, or if *force* is set."""
    if not state.online or not (force or state.clock(now) > params.period):
        return None
    state.pending_pol = state.clock_origin
    return ProofOfLife(state.id)

def handle_pol_quorum(initiator: NodeState, answers: Iterable[int], now: int,
                      params: NetworkParams, *,
                      answered_at: Optional[int] = None) -> Union[ProofOfLifeEcho, Withdraw]:
    """Complete the proof of life of *initiator* after *answers* arrived.

    With less than half of the members answering, the proof of life is withdrawn and the clock put
    back. Otherwise the answers, received at *answered_at* (by default *now*), are recorded, a
    deletion sweep runs on *initiator* and the answers are echoed together with the deleted nodes.
    """
    answers = frozenset(answers) - {initiator.id}
    if len(answers) * 2 < len(initiator.graph.vertices):
        if initiator.pending_pol is not None:
            initiator.clock_origin = initiator.pending_pol
        initiator.pending_pol = None
        return Withdraw(initiator.id, answers)

    time = now if answered_at is None else answered_at
    senders = answers | {initiator.id}
    for v in sorted(senders):
        initiator.record_proof_of_life(v, time)
    notices = run_deletion_sweep(initiator, now, params)
    initiator.clock_origin = now
    initiator.pending_pol = None
    return ProofOfLifeEcho(initiator.id, senders, tuple(notice.vertex for notice in notices),
                           time)

def stale_vertices(state: NodeState, now: int, period: int) -> list[int]:
    """Vertices without a proof of life within *period* before *now*, ascending."""
    return sorted(v for v in state.graph.vertices
                  if v not in state.pol_queue or now - state.pol_queue[v] > period)

def apply_deletions(state: NodeState, vertices: Iterable[int]) -> list[tuple[int, int]]:
    """Delete *vertices* from the view of *state*, in order.

    The former cycle neighbors of every deleted vertex are returned. Vertices *state* does not know
    are skipped.
    """
    bridges = []
    for v in vertices:
        if v not in state.graph.vertices:
            continue
        try:
            cycle, (v_j, v_k) = splice_delete(state.cycle, v)
        except error.CycleTooSmall as e:
            raise error.NetworkTermination(str(e)) from e
        state.advance(state.graph.without_vertex(v).with_edge(v_j, v_k), cycle)
        state.pol_queue.pop(v, None)
        bridges.append((v_j, v_k))
    return bridges

def run_deletion_sweep(state: NodeState, now: int, params: NetworkParams) -> list[DeletionNotice]:
    """Delete every vertex without a proof of life within *T* from the view of *state*."""
    state.prune(now, params.period)
    deleted = stale_vertices(state, now, params.period)
    apply_deletions(state, deleted)
    return [DeletionNotice(state.id, v) for v in deleted]

def apply_echo(state: NodeState, echo: ProofOfLifeEcho, now: int, params: NetworkParams) -> None:
    """Refresh the proofs of life of *state* with *echo* and apply its deletions."""
    for v in sorted(echo.senders):
        state.record_proof_of_life(v, echo.time)
    state.prune(now, params.period)
    apply_deletions(state, echo.deleted)
