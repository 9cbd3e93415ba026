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

"""Adversaries against a GASMAN network.

Adversaries only use what travels over the open channel, i.e. graphs, stages and ZKP transcripts,
never the cycle held by an honest node.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field
from itertools import cycle as repeat
from random import Random
import typing
from typing import TYPE_CHECKING, Optional

import numpy as np
from scipy import stats

from . import error
from .graph import Graph, HamiltonianCycle, apply_permutation
from .protocol import NeighborSetBroadcast, NodeState, ProofOfLife, access_control
from .zkp import (Challenge, CheatingProver, Commitments, CycleOpening, PermutationOpening, Round,
                  RoundOpening, Transcript, prover_commit, run_protocol, simulate_transcript)

if TYPE_CHECKING:
    from .netsim import Simulation

#: Minimum number of rounds per challenge to compare honest and simulated transcripts.
MIN_SAMPLES = 50
#: Significance level below which a feature distribution counts as distinguishable.
SIGNIFICANCE = 0.001

FEATURES = ('opening_size', 'edge_count', 'cycle_length', 'digest_byte')

#: Adversary kind of every Sybil attack mode.
SYBIL_MODES = {
    'duplicate_access': 'sybil_access',
    'duplicate_insert': 'sybil_insert',
    'multi_pol': 'sybil_pol'
}

@dataclass(frozen=True)
class AdversaryProfile:
    """Adversary of *kind* ``replay``, ``spoof``, ``sybil_insert``, ``sybil_access``,
    ``sybil_pol`` or ``eavesdrop``, against the node *target*.

    .. attribute:: captured

       Captured open channel ZKP traffic, as graphs and their transcripts.
    """

    kind: str
    target: Optional[int] = None
    captured: tuple[tuple[Graph, Transcript], ...] = ()

class ReplayProver:
    """Prover replaying the rounds of a *captured* transcript, over and over."""

    def __init__(self, captured: Transcript) -> None:
        if not captured.rounds:
            raise error.ValueError('Empty transcript')
        self.captured = captured
        self._rounds = repeat(captured.rounds)
        self._round: Optional[Round] = None

    def commit(self) -> Commitments:
        # pylint: disable=missing-function-docstring; prover interface
        self._round = next(self._rounds)
        return self._round.commitments

    def respond(self, challenge: Challenge) -> RoundOpening:
        # pylint: disable=missing-function-docstring; prover interface
        if not self._round:
            raise error.SecretAlreadyUsed('No round started')
        opening, self._round = self._round.opening, None
        return opening

class LeakyProver:
    """Faulty prover reusing the commitments of its first round and answering every challenge for
    them.
    """

    def __init__(self, graph: Graph, cycle: HamiltonianCycle, rng: Random) -> None:
        self._secret, self._commitments = prover_commit(graph, cycle, rng)

    def commit(self) -> Commitments:
        # pylint: disable=missing-function-docstring; prover interface
        return self._commitments

    def respond(self, challenge: Challenge) -> RoundOpening:
        # pylint: disable=missing-function-docstring; prover interface
        secret = self._secret
        if challenge == Challenge.CYCLE:
            return CycleOpening(secret.graph, secret.cycle, secret.graph_nonce, secret.cycle_nonce)
        return PermutationOpening(secret.permutation, secret.graph_nonce)

def replay_attack(captured: Transcript, verifier_graph: Graph, rng: Random, *,
                  challenges: Optional[typing.Sequence[Challenge]] = None) -> Transcript:
    """Replay the *captured* transcript to a verifier for *verifier_graph*.

    The verifier draws fresh challenges from *rng*, unless it repeats the sequence *challenges*.
    """
    return run_protocol(ReplayProver(captured), verifier_graph, captured.l, rng,
                        challenges=challenges)

def _claim(sim: Simulation, target: int) -> str:
    # Adversary device claiming the ID target with the public graph and a cheating prover
    rng = sim.rngs['attack']
    online = sim.online()
    if not online:
        return 'no authenticator'
    view = online[0]
    authenticators = [s for s in online if s.id != target]
    if not authenticators:
        return 'no authenticator'
    auth = rng.choice(authenticators)
    graph = view.graph
    device = NodeState(target, graph, HamiltonianCycle(sorted(graph.vertices)), stage=view.stage,
                       online=False, last_online_stage=view.stage, offline_since=sim.now,
                       address=-1)
    try:
        access_control(auth, device, sim.now, sim.params, rng,
                       prover=CheatingProver(graph, Random(rng.getrandbits(64))),
                       observed_online=sim.observed_online(auth))
    except error.IdInUse:
        sim.trace.add(sim.now, f'Access of Node {target} by Node {auth.id} is denied')
        sim.trace.add(sim.now, f'Sybil device of Node {target} is isolated')
        sim.metrics.events['denial'] += 1
        return 'denied'
    except error.Expired:
        sim.trace.add(sim.now, f'Access of Node {target} by Node {auth.id} is expired')
        return 'expired'
    except error.ZkpFailed as e:
        if e.transcript:
            sim.account_session(graph, e.transcript, target, auth.id, archive=False)
        sim.trace.add(sim.now, f'Spoofing device of Node {target} is isolated')
        sim.metrics.events['isolation'] += 1
        return 'isolated'
    sim.trace.add(sim.now, f'Spoofing device of Node {target} is accepted by Node {auth.id}')
    return 'accepted'

def spoof_attack(sim: Simulation, target: Optional[int] = None) -> str:
    """Claim the ID of the off-line member *target* without knowing the cycle.

    By default the lowest off-line member is targeted.
    """
    if target is None:
        offline = sorted(sim.members - {s.id for s in sim.online()})
        if not offline:
            return 'no target'
        target = offline[0]
    return _claim(sim, target)

def sybil_attack(sim: Simulation, mode: str, target: Optional[int] = None,
                 attacker: Optional[int] = None) -> str:
    """Attack *sim* with a Sybil identity of *target*.

    *mode* is one of ``duplicate_access`` (claim the ID of an on-line node), ``duplicate_insert``
    (the legitimate *attacker* inserts an ID that is already assigned) or ``multi_pol`` (the device
    of *attacker* sends proofs of life for itself and *target*).
    """
    rng = sim.rngs['attack']
    online = sim.online()
    if target is None:
        if not online:
            return 'no target'
        target = rng.choice(online).id
    if mode == 'duplicate_access':
        return _claim(sim, target)

    if attacker is None:
        candidates = [s for s in online if s.id != target]
        if not candidates:
            return 'no attacker'
        device = rng.choice(candidates)
    else:
        attacker_state = sim.nodes.get(attacker)
        if attacker_state is None:
            raise error.ConfigInvalid(f'Attacker {attacker} is no node')
        device = attacker_state
        if not device.online:
            return 'attacker off-line'

    if mode == 'duplicate_insert':
        hc = device.cycle
        broadcast = NeighborSetBroadcast(
            device.id, target, frozenset({device.id, hc.successor(device.id)}), sim.now)
        sim.broadcast(broadcast)
        return 'accepted' if sim.deliver_insertion(broadcast) else 'denied'

    if mode == 'multi_pol':
        detected = False
        for claimed in (device.id, target):
            recipients = sim.broadcast(ProofOfLife(claimed), device=device)
            detected = sim.observe(recipients, device, claimed) or detected
        return 'detected' if detected else 'undetected'
    raise error.ValueError(f'Unknown Sybil mode {mode}')

@dataclass
class EavesdropReport:
    """Result of :func:`eavesdrop_analysis`.

    .. attribute:: rounds

       Number of analyzed rounds.

    .. attribute:: p_values

       p-value of the two-sample test per challenge and feature. Empty if there were too few rounds
       to compare.
    """

    rounds: int
    p_values: dict[tuple[Challenge, str], float] = field(default_factory=dict)

    @property
    def compared(self) -> bool:
        """Indicates if honest and simulated transcripts were compared."""
        return bool(self.p_values)

    @property
    def indistinguishable(self) -> bool:
        """Indicates if no feature distribution tells honest and simulated transcripts apart."""
        return all(p > SIGNIFICANCE for p in self.p_values.values())

    def __str__(self) -> str:
        if not self.compared:
            return f'no leak in {self.rounds} rounds, too few to compare'
        verdict = 'indistinguishable' if self.indistinguishable else 'distinguishable'
        return (f'no leak in {self.rounds} rounds, {verdict} from simulation '
                f'(min p {min(self.p_values.values()):.3f})')

def _features(graph: Graph, r: Round) -> tuple[int, int, int, int]:
    opening = r.opening
    if isinstance(opening, CycleOpening):
        edge_count, cycle_length = len(opening.graph.edges), len(opening.cycle)
    else:
        edge_count = len(apply_permutation(graph, opening.permutation).edges)
        cycle_length = len(opening.permutation)
    return (len(opening.encode()), edge_count, cycle_length, r.commitments.graph.digest[0])

def eavesdrop_analysis(archive: Iterable[tuple[Graph, Transcript]],
                       rng: Optional[Random] = None) -> EavesdropReport:
    """Analyze the open channel ZKP traffic *archive* of graphs and their transcripts.

    No commitment may ever be opened for both challenges, otherwise :exc:`error.LeakDetected` is
    raised. Observable features of honest rounds are compared with simulated rounds for the same
    challenges, drawn from *rng*.
    """
    rng = rng or Random(0)
    opened: dict[Commitments, Challenge] = {}
    samples: dict[Challenge, tuple[list[tuple[int, ...]], list[tuple[int, ...]]]] = {
        challenge: ([], []) for challenge in Challenge}
    index = 0
    for graph, transcript in archive:
        for r in transcript.rounds:
            known = opened.setdefault(r.commitments, r.opening.challenge)
            if known != r.opening.challenge:
                raise error.LeakDetected(index, 'Commitments opened for both challenges')
            honest, simulated = samples[r.challenge]
            honest.append(_features(graph, r))
            simulated.append(_features(graph, simulate_transcript(graph, r.challenge, rng)))
            index += 1

    report = EavesdropReport(index)
    if any(len(honest) < MIN_SAMPLES for honest, _ in samples.values()):
        return report
    for challenge, (honest, simulated) in samples.items():
        a, b = np.array(honest), np.array(simulated)
        for i, feature in enumerate(FEATURES):
            report.p_values[(challenge, feature)] = float(stats.ks_2samp(a[:, i], b[:, i]).pvalue)
    return report

def launch(sim: Simulation, profile: AdversaryProfile, *, attacker: Optional[int] = None) -> str:
    """Launch the adversary *profile* in *sim* and return the outcome.

    Replay and eavesdropping adversaries use the transcripts they captured, by default the archive
    of *sim*. Sybil adversaries other than ``sybil_access`` act through the device of the
    legitimate node *attacker*.
    """
    rng = sim.rngs['attack']
    captured = profile.captured or tuple(sim.archive)
    if profile.kind == 'replay':
        accepted = [(graph, t) for graph, t in captured if t.accepted]
        if not accepted:
            return 'no transcript captured'
        graph, transcript = accepted[-1]
        replayed = replay_attack(transcript, graph, rng)
        sim.trace.add(sim.now, f'Replay of a ZKP transcript is {replayed.verdict}ed')
        return replayed.verdict
    if profile.kind == 'spoof':
        return spoof_attack(sim, profile.target)
    if profile.kind in SYBIL_MODES.values():
        mode = next(mode for mode, kind in SYBIL_MODES.items() if kind == profile.kind)
        return sybil_attack(sim, mode, profile.target, attacker)
    if profile.kind == 'eavesdrop':
        try:
            report = eavesdrop_analysis(captured, rng)
        except error.LeakDetected as e:
            sim.trace.add(sim.now, f'Eavesdropping detects a leak in round {e.round}')
            return str(e)
        return str(report)
    raise error.ValueError(f'Unknown adversary {profile.kind}')
