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

"""Discrete event simulation of a GASMAN network.

Simulated time is counted in integer milliseconds. Membership mutations (insertions and proof of
life echoes) are applied by every on-line node in reach within one event, so all on-line nodes hold
the same view between events.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Callable, Generator, Iterable, Mapping, Sequence
import csv
from dataclasses import dataclass
import io
from itertools import count
from logging import getLogger
import math
from pathlib import Path
from random import Random
import typing
from typing import NamedTuple, Optional, Union

import networkx as nx
import simpy

from . import attacks, error
from .graph import Graph, HamiltonianCycle, is_hamiltonian_cycle, splice_delete
from .protocol import (
    AccessGrant, AccessRequest, CycleDelivery, GraphDelivery, InsertionAck, InsertionAnnounce,
    Message, NeighborSetBroadcast, NodeState, ProofOfLife, ProofOfLifeEcho, Withdraw, ZkpRound,
    accept_grant, access_control, apply_echo, apply_insertion, begin_insertion,
    complete_insertion, emit_proof_of_life, handle_pol_quorum, initialize_network)
from .scenarios import ChannelConfig, Directive, ScenarioConfig
from .util import format_ids, format_time
from .zkp import HASH_NAME, Transcript

#: Traffic categories, in report order.
CATEGORIES = ('zkp', 'proof_of_life', 'insertion', 'deletion', 'other')

_CHURN_INTERVAL = 1000

_logger = getLogger(__name__)

class ChannelModel:
    """Reachability between devices, given by their addresses.

    .. attribute:: positions

       Device coordinates in meters. Without positions every device reaches every other device.
    """

    def __init__(self, config: ChannelConfig) -> None:
        self.open_range = config.open_range
        self.secure_range = config.secure_range
        self.latency = config.latency
        self.positions: dict[int, tuple[float, float]] = dict(config.positions)

    def position(self, address: int) -> tuple[float, float]:
        """Position of the device *address*, the origin if it has none."""
        return self.positions.get(address, (0.0, 0.0))

    def place(self, address: int, near: int) -> None:
        """Place the new device *address* at the position of the device *near*."""
        if self.positions:
            self.positions[address] = self.position(near)

    def component(self, source: int, addresses: Iterable[int]) -> set[int]:
        """Devices of *addresses* that *source* reaches over the open channel, in any number of
        hops, including *source*.
        """
        nodes = set(addresses) | {source}
        if not self.positions:
            return nodes
        graph = nx.Graph()
        graph.add_nodes_from((a, {'pos': self.position(a)}) for a in nodes)
        graph.add_edges_from(nx.geometric_edges(graph, self.open_range))
        return set(nx.node_connected_component(graph, source))

    def secure(self, u: int, v: int) -> bool:
        """Check if the devices *u* and *v* are within range of the secure channel."""
        if not self.positions:
            return True
        return math.dist(self.position(u), self.position(v)) <= self.secure_range

class ChurnEvent(NamedTuple):
    """Device *node* going ``off`` or coming back ``on``."""

    kind: str
    node: int

def churn_step(rng: Random, p_off: float, p_on: float, online: Iterable[int],
               offline: Iterable[int]) -> list[ChurnEvent]:
    """Draw the churn of one simulated second.

    Every *online* node goes off with probability *p_off* and every *offline* node returns with
    probability *p_on*.
    """
    if not (0 <= p_off <= 1 and 0 <= p_on <= 1):
        raise error.ValueError(f'Probabilities {p_off}, {p_on} not in [0, 1]')
    events = [ChurnEvent('off', v) for v in online if rng.random() < p_off]
    events += [ChurnEvent('on', v) for v in offline if rng.random() < p_on]
    return events

class TraceRow(NamedTuple):
    """Trace row at *time* about *event*, with the cycle *hc* after a membership mutation."""

    time: int
    event: str
    hc: Optional[tuple[int, ...]] = None

    def format(self) -> str:
        """Render the row as tab separated line."""
        hc = ','.join(str(v) for v in self.hc) if self.hc is not None else ''
        return f'{format_time(self.time)}\t{self.event}\t{hc}'

class TraceLog:
    """Event trace of a run.

    .. attribute:: rows

       Rows in order of occurrence.
    """

    def __init__(self, seed: int, config_digest: str) -> None:
        self.seed = seed
        self.config_digest = config_digest
        self.rows: list[TraceRow] = []

    def add(self, time: int, event: str, cycle: Optional[HamiltonianCycle] = None) -> None:
        """Add a row about *event* at *time*, with *cycle* after a membership mutation."""
        row = TraceRow(time, event, cycle.order if cycle is not None else None)
        self.rows.append(row)
        _logger.debug('%s', row.format())

    @property
    def events(self) -> list[str]:
        """Event descriptions in order."""
        return [row.event for row in self.rows]

    def dump(self) -> str:
        """Render the trace as TSV document with a header."""
        lines = [f'# hash: {HASH_NAME}', f'# seed: {self.seed}', f'# config: {self.config_digest}',
                 'time\tevent\thc', *(row.format() for row in self.rows)]
        return '\n'.join(lines) + '\n'

class Metrics:
    """Traffic and event statistics of a run.

    .. attribute:: bytes

       Bytes delivered per traffic category.

    .. attribute:: counts

       Deliveries per traffic category.

    .. attribute:: events

       Occurrences of every event kind.

    .. attribute:: insertion_latencies

       Time from the announcement of every insertion to the delivery of the cycle, in
       milliseconds.
    """

    def __init__(self) -> None:
        self.bytes: typing.Counter[str] = Counter({category: 0 for category in CATEGORIES})
        self.counts: typing.Counter[str] = Counter({category: 0 for category in CATEGORIES})
        self.events: typing.Counter[str] = Counter()
        self.insertion_latencies: list[int] = []

    @property
    def total(self) -> int:
        """Total bytes delivered."""
        return sum(self.bytes[category] for category in CATEGORIES)

    def account(self, category: str, size: int, copies: int = 1) -> None:
        """Account *copies* deliveries of a message of *size* bytes in *category*."""
        if category not in CATEGORIES:
            raise error.ValueError(f'Unknown category {category}')
        self.bytes[category] += size * copies
        self.counts[category] += copies

    def dump(self) -> str:
        """Render the traffic as CSV document with a summary row."""
        out = io.StringIO()
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow(['category', 'bytes', 'count'])
        for category in CATEGORIES:
            writer.writerow([category, self.bytes[category], self.counts[category]])
        writer.writerow(['total', self.total, sum(self.counts[c] for c in CATEGORIES)])
        return out.getvalue()

def read_metrics(path: Union[str, Path]) -> dict[str, int]:
    """Read the bytes per traffic category from the metrics file at *path*."""
    try:
        with open(path, newline='') as f:
            rows = list(csv.DictReader(f))
    except OSError as e:
        raise error.FileInvalid(f'Cannot read metrics {path}: {e.strerror}') from e
    except csv.Error as e:
        raise error.FileInvalid(f'Metrics {path} are not CSV: {e}') from e
    try:
        data = {row['category']: int(row['bytes']) for row in rows}
    except (KeyError, TypeError, ValueError) as e:
        raise error.FileInvalid(f'Metrics {path} lack category or bytes') from e
    data.pop('total', None)
    return data

def traffic_shares(bytes_by_category: Mapping[str, int]) -> dict[str, float]:
    """Percentage of the total traffic of every category, all zero without traffic."""
    total = sum(bytes_by_category.get(category, 0) for category in CATEGORIES)
    return {category: bytes_by_category.get(category, 0) / total * 100 if total else 0.0
            for category in CATEGORIES}

@dataclass
class _Insertion:
    start: int
    splice: Optional[tuple[int, int]] = None
    device: Optional[NodeState] = None

class RunResult(NamedTuple):
    """Outcome of :func:`run_scenario`."""

    trace: TraceLog
    metrics: Metrics
    states: list[NodeState]
    report: str

class Simulation:
    """Simulated network running the scenario *config* with the random *seed*.

    Randomness is drawn from independent streams per concern, so churn does not shift protocol
    choices and vice versa.

    .. attribute:: devices

       Every device by link-layer address, with its current node state.

    .. attribute:: nodes

       Device currently holding every node ID.

    .. attribute:: members

       Legitimate node IDs, the vertices every on-line node must hold.

    .. attribute:: archive

       ZKP transcripts sent over the open channel, with the graph they prove.

    .. attribute:: detections

       Sybil detections as observer, address and the two conflicting IDs.

    .. attribute:: attack_outcomes

       Outcome of every attack.
    """

    def __init__(self, config: ScenarioConfig, seed: int, *, invariant_checks: bool = True) -> None:
        self.config = config
        self.seed = seed
        self.params = config.params
        self.invariant_checks = invariant_checks
        self.env = simpy.Environment()
        self.channel = ChannelModel(config.channel)
        self.trace = TraceLog(seed, config.digest)
        self.metrics = Metrics()
        self.devices: dict[int, NodeState] = {}
        self.nodes: dict[int, NodeState] = {}
        self.members: set[int] = set()
        self.archive: list[tuple[Graph, Transcript]] = []
        self.detections: list[tuple[int, int, int, int]] = []
        self.attack_outcomes: list[str] = []
        self.terminated = False
        self.rngs = {name: Random(f'{seed}:{name}')
                     for name in ('dealer', 'churn', 'protocol', 'attack')}
        self.event_count = 0

        self._silent: dict[int, bool] = {}
        self._pending: set[int] = set()
        self._timers: dict[int, int] = {}
        self._forced_id: Optional[int] = None
        self._addresses = count(config.n)
        self._verified: dict[tuple[bytes, tuple[int, ...]], bool] = {}
        self._failure: Optional[Exception] = None

    @property
    def now(self) -> int:
        """Current simulated time."""
        return int(self.env.now)

    @property
    def states(self) -> list[NodeState]:
        """Current state of every device, by address."""
        return [self.devices[address] for address in sorted(self.devices)]

    def online(self) -> list[NodeState]:
        """On-line devices, by node ID."""
        return sorted((s for s in self.devices.values() if s.online), key=lambda s: s.id)

    def run(self) -> None:
        """Run the scenario until its duration elapsed or the network terminated."""
        self.schedule(self.config.setup_time, self._setup)
        for directive in self.config.schedule:
            self.schedule(directive.time, self._run_directive, directive)
        until = self.config.duration + 1
        while not self.terminated and self._failure is None and self.env.peek() < until:
            self.env.step()
        if self._failure:
            raise self._failure
        _logger.info('Ran %s with seed %d: %d events, %d trace rows, %d bytes', self.config.name,
                     self.seed, self.event_count, len(self.trace.rows), self.metrics.total)

    def schedule(self, time: int, action: Callable[..., object], *args: object) -> None:
        """Schedule *action* with *args* at *time*."""
        if time < self.now:
            raise error.ValueError(f'Event at {time} ms scheduled at {self.now} ms')
        self.env.process(self._at(time, action, args))

    def _at(self, time: int, action: Callable[..., object],
            args: Sequence[object]) -> Generator[simpy.Event, object, None]:
        yield self.env.timeout(time - self.env.now)
        if self.terminated or self._failure:
            return
        self.event_count += 1
        try:
            action(*args)
            # On-line nodes forget proofs of life older than T as time passes
            for state in self.devices.values():
                if state.online:
                    state.prune(self.now, self.params.period)
            if self.members and len(self.online()) < self.params.termination_threshold:
                raise error.NetworkTermination(
                    f'{len(self.online())} nodes on-line, less than '
                    f'{self.params.termination_threshold}')
            if self.invariant_checks:
                self.check_invariants()
        except error.NetworkTermination as e:
            _logger.info('Network terminated at %s: %s', format_time(self.now), e)
            self.terminated = True
            self.trace.add(self.now, 'Network terminated')
        except Exception as e: # pylint: disable=broad-except; raised by run
            self._failure = e

    def check_invariants(self) -> None:
        """Check that every on-line node holds the same valid view of the members, without proofs of
        life older than *T*.
        """
        reference = None
        for state in self.online():
            if state.graph.vertices != self.members:
                raise error.InvariantViolation(
                    self.event_count,
                    f'Vertices of node {state.id} differ from members '
                    f'{format_ids(sorted(self.members))}')
            key = (state.graph.digest, state.cycle.order)
            valid = self._verified.get(key)
            if valid is None:
                valid = self._verified[key] = is_hamiltonian_cycle(state.graph, state.cycle)
            if not valid:
                raise error.InvariantViolation(
                    self.event_count, f'Cycle of node {state.id} is not Hamiltonian')
            stale = sorted(v for v, time in state.pol_queue.items()
                           if self.now - time > self.params.period)
            if stale:
                raise error.InvariantViolation(
                    self.event_count,
                    f'Node {state.id} holds proofs of life older than T of {format_ids(stale)}')
            if reference is None:
                reference = state
            elif not state.is_consistent_with(reference):
                raise error.InvariantViolation(
                    self.event_count, f'Nodes {reference.id} and {state.id} are inconsistent')

    # Channels

    def reach(self, device: NodeState) -> list[NodeState]:
        """On-line devices *device* reaches over the open channel, including itself if on-line, by
        node ID.
        """
        online = {s.address: s for s in self.devices.values() if s.online}
        component = self.channel.component(device.address, online)
        return sorted((online[a] for a in component if a in online), key=lambda s: s.id)

    def observed_online(self, observer: NodeState) -> set[int]:
        """IDs *observer* currently sees on-line."""
        return {state.id for state in self.reach(observer)}

    def broadcast(self, message: Message, *, device: Optional[NodeState] = None,
                  category: Optional[str] = None) -> list[NodeState]:
        """Flood *message* from its sender, or from the transmitting *device*.

        Every on-line device in reach forwards the message once. The recipients are returned.
        """
        sender = device or self.nodes.get(message.sender)
        if sender is None or not sender.online:
            raise error.SenderOffline(f'Node {message.sender} is off-line')
        reached = self.reach(sender)
        copies = len(reached) * (len(reached) - 1)
        size = len(message.encode())
        if isinstance(message, ProofOfLifeEcho) and message.deleted:
            self.metrics.account('deletion', message.deletion_size, copies)
            size -= message.deletion_size
        self.metrics.account(category or message.category, size, copies)
        return [state for state in reached if state is not sender]

    def _deliver_mutation(self, sender: int) -> list[NodeState]:
        # On-line nodes outside of the reach of a mutation lose contact
        device = self.nodes.get(sender)
        if device is None:
            return []
        receivers = self.reach(device)
        for state in self.online():
            if state not in receivers:
                self._leave(state, silent=True)
                self.trace.add(self.now, f'Node {state.id} loses contact')
        return receivers

    # Scenario

    def _setup(self) -> None:
        states = initialize_network(self.config.n, self.params, self.rngs['dealer'],
                                    cycle=self.config.initial_cycle, now=self.now)
        for state in states:
            self.devices[state.address] = state
            self.nodes[state.id] = state
            self.metrics.account('other', len(GraphDelivery(state.id, state.graph).encode()))
            self.metrics.account('other', len(CycleDelivery(state.id, state.cycle).encode()))
            self._arm(state)
        self.members = set(self.nodes)
        self.trace.add(self.now, f'{format_ids(sorted(self.members))} are legitimate',
                       states[0].cycle)
        churn = self.config.churn
        if churn.p_off or churn.p_on or churn.p_insert:
            self.schedule(self.now + _CHURN_INTERVAL, self._churn)

    def _run_directive(self, directive: Directive) -> None:
        args = typing.cast(Mapping[str, typing.Any], directive.args)
        if directive.action == 'insert':
            splice = args.get('splice')
            self.insert(args['authenticator'], vertex=args.get('id'),
                        splice=(splice[0], splice[1]) if splice else None,
                        vetted=args.get('vetted', True))
        elif directive.action == 'force_id':
            self._forced_id = args['id']
        elif directive.action == 'node_off':
            self.node_off(args['id'], silent=args.get('silent', False))
        elif directive.action == 'node_on':
            self.node_on(args['id'], args.get('authenticator'))
        elif directive.action == 'pol':
            self.proof_of_life(args['initiator'], force=True)
        else:
            kind = args['kind']
            if kind == 'sybil':
                kind = attacks.SYBIL_MODES[args.get('mode', 'duplicate_access')]
            outcome = attacks.launch(self, attacks.AdversaryProfile(kind, args.get('target')),
                                     attacker=args.get('attacker'))
            self.attack_outcomes.append(f'{format_time(self.now)} {kind}: {outcome}')

    def _churn(self) -> None:
        churn = self.config.churn
        rng = self.rngs['churn']
        online = sorted(a for a, s in self.devices.items() if s.online)
        offline = sorted(a for a, s in self.devices.items() if not s.online)
        for event in churn_step(rng, churn.p_off, churn.p_on, online, offline):
            state = self.devices[event.node]
            if event.kind == 'off' and state.online:
                self._leave(state, silent=False)
                self.trace.add(self.now, f'Node {state.id} turns off')
            elif event.kind == 'on' and not state.online:
                self._return(state)
        if rng.random() < churn.p_insert:
            candidates = self.online()
            if candidates:
                self.insert(rng.choice(candidates).id)
        self.schedule(self.now + _CHURN_INTERVAL, self._churn)

    # Departure and access control

    def node_off(self, node_id: int, *, silent: bool = False) -> None:
        """Turn the node *node_id* off.

        Announced departures are traced, *silent* ones are not. A node that went off silently may
        announce its departure later.
        """
        state = self.nodes.get(node_id)
        if (state is not None and not state.online and not silent
                and self._silent.get(state.address) and state.id in self.members):
            self._silent[state.address] = False
            self.trace.add(self.now, f'Node {node_id} turns off')
            return
        if state is None or not state.online:
            _logger.warning('Node %d is not on-line at %s', node_id, format_time(self.now))
            return
        self._leave(state, silent=silent)
        if not silent:
            self.trace.add(self.now, f'Node {node_id} turns off')

    def _leave(self, state: NodeState, *, silent: bool) -> None:
        state.go_offline(self.now)
        self._silent[state.address] = silent
        self._timers.pop(state.address, None)
        self.metrics.events['departure'] += 1

    def _isolate(self, state: NodeState) -> None:
        if state.online:
            self._leave(state, silent=True)
        self._silent[state.address] = True
        self.trace.add(self.now, f'Node {state.id} is isolated')
        self.metrics.events['isolation'] += 1

    def node_on(self, node_id: int, authenticator: Optional[int] = None) -> None:
        """Turn the node *node_id* on again, passing access control with *authenticator*.

        By default a random on-line node within range of the secure channel authenticates.
        """
        state = self.nodes.get(node_id)
        if state is None or state.online:
            _logger.warning('Node %d is not off-line at %s', node_id, format_time(self.now))
            return
        self._return(state, authenticator)

    def _return(self, state: NodeState, authenticator: Optional[int] = None) -> None:
        if state.address in self._pending:
            return
        if authenticator is None:
            candidates = [s for s in self.online() if self.channel.secure(state.address, s.address)]
            if not candidates:
                return
            auth = self.rngs['churn'].choice(candidates)
        else:
            auth_state = self.nodes.get(authenticator)
            if auth_state is None:
                _logger.warning('Unknown authenticator %d', authenticator)
                return
            auth = auth_state
        if not self._silent.get(state.address, True):
            self.trace.add(self.now,
                           f'Node {state.id} turns on and Node {auth.id} is chosen for ZKP')
        if not self.channel.secure(state.address, auth.address):
            self.trace.add(self.now, f'Node {auth.id} is out of range of Node {state.id}')
            return

        self.metrics.account('zkp', len(AccessRequest(state.id, state.graph, state.stage).encode()))
        try:
            grant = access_control(auth, state, self.now, self.params, self.rngs['protocol'],
                                   observed_online=self.observed_online(auth))
        except error.AuthenticatorOffline:
            self.trace.add(self.now, f'Node {auth.id} is off-line and cannot authenticate')
            return
        except error.Expired:
            self._expire(state, auth)
            return
        except error.ZkpFailed as e:
            if e.transcript:
                self.account_session(state.graph, e.transcript, state.id, auth.id)
            self._isolate(state)
            return
        except error.IdInUse:
            self._isolate(state)
            return
        assert grant.transcript
        self.account_session(state.graph, grant.transcript, state.id, auth.id)
        self.schedule(self.now + self.channel.latency, self._grant, grant, state, auth)

    def account_session(self, graph: Graph, transcript: Transcript, supplicant: int,
                        authenticator: int, *, archive: bool = True) -> None:
        """Account the ZKP session *transcript* between *supplicant* and *authenticator*.

        Unless disabled, the session is added to the *archive* of open channel traffic.
        """
        if archive:
            self.archive.append((graph, transcript))
        for message in ZkpRound.session(transcript, supplicant, authenticator):
            self.metrics.account('zkp', len(message.encode()))
        self.metrics.events['zkp_session'] += 1

    def _expire(self, state: NodeState, auth: NodeState) -> None:
        self.trace.add(self.now, f'Node {state.id} has expired')
        self.metrics.events['expiry'] += 1
        self.insert(auth.id, device=state)

    def _grant(self, grant: AccessGrant, state: NodeState, auth: NodeState) -> None:
        if self.devices.get(state.address) is not state or state.online:
            return
        if state.id not in self.members:
            self._expire(state, auth)
            return
        if not auth.online:
            self.trace.add(self.now, f'Access of Node {state.id} by Node {auth.id} is stopped')
            return
        for message in (grant, GraphDelivery(auth.id, auth.graph, auth.stage),
                        CycleDelivery(auth.id, auth.cycle)):
            self.metrics.account('other', len(message.encode()))
        if not grant.stage_verified:
            self.trace.add(self.now, f'Graph of Node {state.id} at stage {state.stage} is '
                                     'unverified')
            self.metrics.events['unverified'] += 1
        accept_grant(state, auth, self.now)
        if self._silent.pop(state.address, True):
            self.trace.add(self.now, f'Node {state.id} is re-inserted by ZKP with Node {auth.id}')
        self.metrics.events['access'] += 1
        self._arm(state)

    # Insertion

    def insert(self, authenticator: int, *, vertex: Optional[int] = None,
               splice: Optional[tuple[int, int]] = None, vetted: bool = True,
               device: Optional[NodeState] = None) -> None:
        """Insert a new node with *authenticator*.

        The ID *vertex* and the cycle edge *splice* to insert the node at may be forced. If a
        *device* is given, it is re-inserted under a new ID.
        """
        auth = self.nodes.get(authenticator)
        if auth is None:
            _logger.warning('Unknown authenticator %d', authenticator)
            return
        if vertex is None and self._forced_id is not None:
            vertex, self._forced_id = self._forced_id, None
        try:
            announce = begin_insertion(auth, vertex=vertex, vetted=vetted)
        except error.AuthenticatorOffline:
            self.trace.add(self.now, f'Node {auth.id} is off-line and cannot insert')
            return
        except error.NotVetted:
            self.trace.add(self.now, f'Supplicant of Node {auth.id} is not vetted')
            return
        except error.DuplicateId:
            self.trace.add(self.now, f'Insertion of Node {vertex} is denied')
            self.metrics.events['denial'] += 1
            return
        if device:
            self._pending.add(device.address)
        recipients = self.broadcast(announce)
        # Concurrent insertions pick distinct IDs
        for state in recipients:
            state.reserved.add(announce.vertex)
        self.schedule(self.now + self.channel.latency, self._ack_insertion, auth, announce,
                      recipients, _Insertion(self.now, splice, device))

    def _ack_insertion(self, auth: NodeState, announce: InsertionAnnounce,
                       recipients: list[NodeState], insertion: _Insertion) -> None:
        acks = [state for state in recipients if state.online]
        for state in acks:
            self.metrics.account('insertion', len(InsertionAck(state.id, announce.vertex).encode()))
        self.schedule(self.now + self.channel.latency, self._complete_insertion, auth, announce,
                      len(acks), insertion)

    def _complete_insertion(self, auth: NodeState, announce: InsertionAnnounce, ack_count: int,
                            insertion: _Insertion) -> None:
        if not auth.online:
            self._stop_insertion(auth, announce.vertex, insertion)
            return
        try:
            broadcast = complete_insertion(auth, announce, ack_count, self.params,
                                           self.rngs['protocol'], splice=insertion.splice,
                                           now=self.now)
        except (error.QuorumNotReached, error.BadParams, error.NotAdjacentInCycle) as e:
            _logger.debug('Insertion of node %d stopped: %s', announce.vertex, e)
            self._stop_insertion(auth, announce.vertex, insertion)
            return
        self.broadcast(broadcast)
        self.schedule(self.now + self.channel.latency, self._insert_vertex, broadcast, insertion)

    def _stop_insertion(self, auth: NodeState, vertex: int, insertion: _Insertion) -> None:
        for state in self.devices.values():
            state.reserved.discard(vertex)
        if insertion.device:
            self._pending.discard(insertion.device.address)
        self.trace.add(self.now, f'Insertion of Node {vertex} by Node {auth.id} is stopped')
        self.metrics.events['stopped_insertion'] += 1

    def deliver_insertion(self, broadcast: NeighborSetBroadcast) -> bool:
        """Apply the insertion *broadcast* on every node in reach of its sender.

        Returns whether the insertion was accepted.
        """
        v = broadcast.vertex
        receivers = self._deliver_mutation(broadcast.sender)
        if not receivers:
            return False
        try:
            apply_insertion(receivers[0], broadcast, params=self.params, now=self.now)
        except (error.DuplicateId, error.AmbiguousPair, error.NoAdjacentPair,
                error.VertexNotInCycle) as e:
            for state in receivers:
                state.reserved.discard(v)
            outcome = 'denied' if isinstance(e, error.DuplicateId) else 'malformed'
            self.trace.add(self.now, f'Insertion of Node {v} is {outcome}')
            self.metrics.events['denial' if outcome == 'denied' else 'malformed'] += 1
            return False
        for state in receivers[1:]:
            apply_insertion(state, broadcast, params=self.params, now=self.now)
        self.members.add(v)
        self.trace.add(self.now, f'Insertion of Node {v} is broadcast by Node {broadcast.sender}',
                       receivers[0].cycle)
        self.metrics.events['insertion'] += 1
        return True

    def _insert_vertex(self, broadcast: NeighborSetBroadcast, insertion: _Insertion) -> None:
        if not self.deliver_insertion(broadcast):
            if insertion.device:
                self._pending.discard(insertion.device.address)
            return
        self.schedule(self.now + self.channel.latency, self._deliver_secret, broadcast, insertion)

    def _deliver_secret(self, broadcast: NeighborSetBroadcast, insertion: _Insertion) -> None:
        v = broadcast.vertex
        auth = self.nodes.get(broadcast.sender)
        if insertion.device:
            address = insertion.device.address
            self._pending.discard(address)
        else:
            address = next(self._addresses)
            if auth:
                self.channel.place(address, auth.address)
        if (auth is None or not auth.online or v not in self.members
                or not self.channel.secure(address, auth.address)):
            self.trace.add(self.now, f'Insertion of Node {v} is stopped')
            self.metrics.events['stopped_insertion'] += 1
            return

        delivery = GraphDelivery(auth.id, auth.graph, auth.stage)
        self.metrics.account('insertion', len(delivery.encode()))
        self.metrics.account('insertion', len(CycleDelivery(auth.id, auth.cycle).encode()))
        state = NodeState(v, auth.graph, auth.cycle, online=False, offline_since=self.now,
                          address=address)
        accept_grant(state, auth, self.now)
        old = self.devices.get(address)
        if old and self.nodes.get(old.id) is old:
            del self.nodes[old.id]
        self.devices[address] = state
        self.nodes[v] = state
        self._silent.pop(address, None)
        self.metrics.insertion_latencies.append(self.now - insertion.start)
        self._arm(state)

    # Proofs of life and deletion

    def proof_of_life(self, initiator: int, *, force: bool = False) -> None:
        """Let the node *initiator* broadcast a proof of life.

        Without *force* the proof of life is only sent if the clock of the node exceeds *T*.
        """
        state = self.nodes.get(initiator)
        if state is None:
            _logger.warning('Unknown node %d', initiator)
            return
        self._start_pol(state, force=force)

    def _arm(self, state: NodeState) -> None:
        if not self.config.auto_pol:
            return
        token = self._timers.get(state.address, 0) + 1
        self._timers[state.address] = token
        self.schedule(max(state.clock_origin + self.params.period + 1, self.now), self._timer,
                      state, token)

    def _timer(self, state: NodeState, token: int) -> None:
        if self._timers.get(state.address) == token:
            self._start_pol(state)

    def _start_pol(self, state: NodeState, *, force: bool = False) -> None:
        if (self.devices.get(state.address) is not state or not state.online
                or state.pending_pol is not None):
            return
        pol = emit_proof_of_life(state, self.now, self.params, force=force)
        if pol is None:
            self._arm(state)
            return
        self.trace.add(self.now, f'Proof of life started by Node {state.id}')
        self.metrics.events['proof_of_life'] += 1
        recipients = self.broadcast(pol)
        self.observe(recipients, state, state.id)
        self.schedule(self.now + self.channel.latency, self._answer_pol, state, recipients)

    def observe(self, observers: Iterable[NodeState], device: NodeState, claimed: int) -> bool:
        """Let *observers* see a proof of life for *claimed* sent by *device*.

        The first observer that saw the address of *device* claim another ID raises a Sybil
        detection, which is returned.
        """
        for observer in observers:
            if observer is device:
                continue
            known = observer.observe(device.address, claimed, self.now, self.params.period)
            if known is not None:
                self.detections.append((observer.id, device.address, known, claimed))
                self.trace.add(self.now, f'Node {observer.id} detects Nodes {known} and {claimed} '
                                         'at one address')
                self.metrics.events['sybil_detection'] += 1
                return True
        return False

    def _answer_pol(self, state: NodeState, recipients: list[NodeState]) -> None:
        if not state.online:
            return
        answers = [r for r in recipients if r.online]
        for answer in answers:
            self.metrics.account('proof_of_life', len(ProofOfLife(answer.id).encode()))
            self.observe([state], answer, answer.id)
        self.schedule(self.now + self.channel.latency, self._pol_quorum, state,
                      frozenset(r.id for r in answers), self.now)

    def _pol_quorum(self, state: NodeState, answers: frozenset[int], answered_at: int) -> None:
        if not state.online or state.pending_pol is None:
            return
        vertices, cycle = state.graph.vertices, state.cycle
        result = handle_pol_quorum(state, answers, self.now, self.params, answered_at=answered_at)
        if isinstance(result, Withdraw):
            self.trace.add(self.now, f'Proof of life of Node {state.id} is withdrawn')
            self.metrics.events['withdrawal'] += 1
            if self.config.auto_pol:
                self.schedule(self.now + self.config.pol_retry, self._start_pol, state)
            return
        missing = sorted(vertices - result.senders)
        if len(missing) == 1:
            self.trace.add(self.now, f'Node {missing[0]} does not answer to proof of life')
        elif missing:
            self.trace.add(self.now, f'Nodes {format_ids(missing)} do not answer to proof of life')
        for v in result.deleted:
            cycle, _ = splice_delete(cycle, v)
            self.members.discard(v)
            self.trace.add(self.now, f'Node {v} is deleted', cycle)
            self.metrics.events['deletion'] += 1

        self.broadcast(result)
        receivers = self._deliver_mutation(state.id)
        for receiver in receivers:
            if receiver is not state:
                apply_echo(receiver, result, self.now, self.params)
        for receiver in receivers:
            if receiver.id in result.deleted:
                self._isolate(receiver)
        self._arm(state)

    def report(self) -> str:
        """Render a text report of attack outcomes, events and insertion latency."""
        lines = [f'Scenario: {self.config.name}', f'Seed: {self.seed}',
                 f'Events: {self.event_count}', f'Members: {len(self.members)}',
                 f'On-line: {len(self.online())}',
                 f'Terminated: {"yes" if self.terminated else "no"}',
                 '', 'Attacks:']
        lines += [f'  {outcome}' for outcome in self.attack_outcomes] or ['  none']
        lines += ['', 'Events:']
        lines += [f'  {kind}: {n}' for kind, n in sorted(self.metrics.events.items())] or ['  none']
        latencies = self.metrics.insertion_latencies
        lines += ['', 'Insertion latency:']
        if latencies:
            lines += [f'  count: {len(latencies)}',
                      f'  mean: {format_time(round(sum(latencies) / len(latencies)))} s',
                      f'  max: {format_time(max(latencies))} s']
        else:
            lines.append('  none')
        return '\n'.join(lines) + '\n'

def run_scenario(config: ScenarioConfig, seed: int, *,
                 invariant_checks: bool = True) -> RunResult:
    """Run the scenario *config* with the random *seed*.

    Protocol invariants are checked after every event, unless *invariant_checks* is disabled.
    """
    simulation = Simulation(config, seed, invariant_checks=invariant_checks)
    simulation.run()
    return RunResult(simulation.trace, simulation.metrics, simulation.states, simulation.report())
