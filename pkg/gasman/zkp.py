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

"""Zero-knowledge proof of knowledge of a Hamiltonian cycle.

In every round the prover commits to a random isomorphic copy of its graph and to the copied
cycle, the verifier challenges with a random bit and the prover opens either the copy with its
cycle (:attr:`Challenge.CYCLE`) or the permutation (:attr:`Challenge.PERMUTATION`).

Commitments are ``h(nonce || payload)`` over the canonical byte formats of :mod:`gasman.graph`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
import hashlib
from random import Random
import struct
import typing
from typing import Optional, Protocol, Union

from . import error
from .graph import (Graph, HamiltonianCycle, Permutation, apply_permutation,
                    apply_permutation_to_cycle, canonical_bytes, canonical_bytes_cycle,
                    canonical_bytes_permutation, is_hamiltonian_cycle, planted_cycle_graph)

HASH_NAME = 'sha256'
DIGEST_SIZE = hashlib.new(HASH_NAME).digest_size
NONCE_SIZE = 16
DEFAULT_ROUNDS = 20

def _prefixed(data: bytes) -> bytes:
    return struct.pack('>I', len(data)) + data

def commit(nonce: bytes, payload: bytes) -> Commitment:
    """Commit to *payload*, hidden by *nonce*."""
    return Commitment(hashlib.new(HASH_NAME, nonce + payload).digest())

@dataclass(frozen=True)
class Commitment:
    """Hash commitment.

    .. attribute:: digest

       ``h(nonce || payload)``.
    """

    digest: bytes

    def __post_init__(self) -> None:
        if len(self.digest) != DIGEST_SIZE:
            raise error.ValueError(f'Digest of {len(self.digest)} bytes')

@dataclass(frozen=True)
class Commitments:
    """Commitment pair of one round, to the permuted graph and to the permuted cycle."""

    graph: Commitment
    cycle: Commitment

    def encode(self) -> bytes:
        # pylint: disable=missing-function-docstring; wire format
        return self.graph.digest + self.cycle.digest

class Challenge(IntEnum):
    """Challenge bit *b_j*."""

    #: Open the permuted graph and its cycle.
    CYCLE = 0
    #: Open the permutation.
    PERMUTATION = 1

    def encode(self) -> bytes:
        # pylint: disable=missing-function-docstring; wire format
        return bytes([self])

@dataclass(frozen=True)
class CycleOpening:
    """Opening for :attr:`Challenge.CYCLE`: permuted graph, permuted cycle and both nonces."""

    graph: Graph
    cycle: HamiltonianCycle
    graph_nonce: bytes
    cycle_nonce: bytes

    challenge: typing.ClassVar[Challenge] = Challenge.CYCLE

    def encode(self) -> bytes:
        # pylint: disable=missing-function-docstring; wire format
        return (_prefixed(canonical_bytes(self.graph))
                + _prefixed(canonical_bytes_cycle(self.cycle))
                + self.graph_nonce + self.cycle_nonce)

@dataclass(frozen=True)
class PermutationOpening:
    """Opening for :attr:`Challenge.PERMUTATION`: permutation and graph nonce."""

    permutation: Permutation
    graph_nonce: bytes

    challenge: typing.ClassVar[Challenge] = Challenge.PERMUTATION

    def encode(self) -> bytes:
        # pylint: disable=missing-function-docstring; wire format
        return _prefixed(canonical_bytes_permutation(self.permutation)) + self.graph_nonce

RoundOpening = Union[CycleOpening, PermutationOpening]

class RoundSecret:
    """Prover state of one round, able to answer a single challenge.

    .. attribute:: permutation

       Random permutation *Π_j*.

    .. attribute:: graph

       Permuted graph.

    .. attribute:: cycle

       Permuted cycle.
    """

    def __init__(self, permutation: Permutation, graph: Graph, cycle: HamiltonianCycle,
                 graph_nonce: bytes, cycle_nonce: bytes) -> None:
        self.permutation = permutation
        self.graph = graph
        self.cycle = cycle
        self.graph_nonce = graph_nonce
        self.cycle_nonce = cycle_nonce
        self.used = False

@dataclass
class Round:
    """Messages of one round."""

    commitments: Commitments
    challenge: Challenge
    opening: RoundOpening

@dataclass
class Transcript:
    """Record of a protocol run.

    .. attribute:: rounds

       Rounds in order; on rejection the last one is the failing round.

    .. attribute:: accepted

       Verdict of the verifier.

    .. attribute:: l

       Number of rounds the verifier asked for.
    """

    l: int
    rounds: list[Round] = field(default_factory=list)
    accepted: bool = False

    @property
    def verdict(self) -> str:
        """Verdict as text, ``accept`` or ``reject``."""
        return 'accept' if self.accepted else 'reject'

    @property
    def challenges(self) -> list[Challenge]:
        """Challenge sequence."""
        return [r.challenge for r in self.rounds]

def prover_commit(g: Graph, hc: HamiltonianCycle, rng: Random) -> tuple[RoundSecret, Commitments]:
    """Start a round proving knowledge of *hc* in *g*."""
    if not is_hamiltonian_cycle(g, hc):
        raise error.InvalidWitness('Cycle is not Hamiltonian in graph')
    p = Permutation.random(g.vertices, rng)
    secret = RoundSecret(p, apply_permutation(g, p), apply_permutation_to_cycle(hc, p),
                         rng.randbytes(NONCE_SIZE), rng.randbytes(NONCE_SIZE))
    commitments = Commitments(commit(secret.graph_nonce, canonical_bytes(secret.graph)),
                              commit(secret.cycle_nonce, canonical_bytes_cycle(secret.cycle)))
    return secret, commitments

def prover_respond(secret: RoundSecret, challenge: Challenge) -> RoundOpening:
    """Answer *challenge* with the round *secret*, which is consumed."""
    if secret.used:
        raise error.SecretAlreadyUsed('Round secret already answered a challenge')
    secret.used = True
    if challenge == Challenge.CYCLE:
        return CycleOpening(secret.graph, secret.cycle, secret.graph_nonce, secret.cycle_nonce)
    return PermutationOpening(secret.permutation, secret.graph_nonce)

def verifier_check(g: Graph, commitments: Commitments, challenge: Challenge,
                   opening: RoundOpening) -> bool:
    """Verify the *opening* of a round against *commitments* for *challenge* in graph *g*."""
    if opening.challenge != challenge:
        return False
    if isinstance(opening, CycleOpening):
        return (
            commit(opening.graph_nonce, canonical_bytes(opening.graph)) == commitments.graph
            and commit(opening.cycle_nonce, canonical_bytes_cycle(opening.cycle))
                == commitments.cycle
            and is_hamiltonian_cycle(opening.graph, opening.cycle))
    try:
        permuted = apply_permutation(g, opening.permutation)
    except error.DomainMismatch:
        return False
    return commit(opening.graph_nonce, canonical_bytes(permuted)) == commitments.graph

class Prover(Protocol):
    """Prover side of a session."""

    def commit(self) -> Commitments:
        """Start a round."""

    def respond(self, challenge: Challenge) -> RoundOpening:
        """Answer the *challenge* of the current round."""

class HonestProver:
    """Prover knowing the cycle *cycle* of *graph*."""

    def __init__(self, graph: Graph, cycle: HamiltonianCycle, rng: Random) -> None:
        self.graph = graph
        self.cycle = cycle
        self.rng = rng
        self._secret: Optional[RoundSecret] = None

    def commit(self) -> Commitments:
        self._secret, commitments = prover_commit(self.graph, self.cycle, self.rng)
        return commitments

    def respond(self, challenge: Challenge) -> RoundOpening:
        if not self._secret:
            raise error.SecretAlreadyUsed('No round started')
        return prover_respond(self._secret, challenge)

class CheatingProver:
    """Prover without a cycle of *graph*, preparing every round for one challenge only.

    It either commits to a permuted copy of *graph* with a fabricated cycle, which answers
    :attr:`Challenge.PERMUTATION`, or to a graph with a planted cycle, which answers
    :attr:`Challenge.CYCLE`.

    .. attribute:: guess

       Challenge to prepare for, or ``None`` to guess at random every round.
    """

    def __init__(self, graph: Graph, rng: Random, guess: Optional[Challenge] = None) -> None:
        self.graph = graph
        self.rng = rng
        self.guess = guess
        self._round: Optional[tuple[Challenge, RoundSecret]] = None

    def commit(self) -> Commitments:
        guess = Challenge(self.rng.getrandbits(1)) if self.guess is None else self.guess
        p = Permutation.random(self.graph.vertices, self.rng)
        if guess == Challenge.PERMUTATION:
            order = sorted(self.graph.vertices)
            self.rng.shuffle(order)
            graph, cycle = apply_permutation(self.graph, p), HamiltonianCycle(order)
        else:
            graph, cycle = planted_cycle_graph(self.graph.vertices, len(self.graph.edges),
                                               self.rng)
        secret = RoundSecret(p, graph, cycle, self.rng.randbytes(NONCE_SIZE),
                             self.rng.randbytes(NONCE_SIZE))
        self._round = (guess, secret)
        return Commitments(commit(secret.graph_nonce, canonical_bytes(graph)),
                           commit(secret.cycle_nonce, canonical_bytes_cycle(cycle)))

    def respond(self, challenge: Challenge) -> RoundOpening:
        if not self._round:
            raise error.SecretAlreadyUsed('No round started')
        _, secret = self._round
        self._round = None
        # Openings for the other challenge do not verify
        return prover_respond(secret, challenge)

def run_protocol(prover: Prover, verifier_graph: Graph, l: int, rng: Random, *,
                 challenges: Optional[typing.Sequence[Challenge]] = None) -> Transcript:
    """Run *l* rounds of *prover* against a verifier for *verifier_graph*.

    Challenges are drawn from *rng*, unless a fixed sequence of *challenges* is given. The run stops
    at the first round that does not verify.
    """
    if l < 1:
        raise error.BadParams(f'l {l} < 1')
    if challenges is not None and len(challenges) < l:
        raise error.BadParams(f'{len(challenges)} challenges for l {l}')
    transcript = Transcript(l)
    for i in range(l):
        commitments = prover.commit()
        challenge = (Challenge(rng.getrandbits(1)) if challenges is None
                     else Challenge(challenges[i]))
        opening = prover.respond(challenge)
        transcript.rounds.append(Round(commitments, challenge, opening))
        if not verifier_check(verifier_graph, commitments, challenge, opening):
            return transcript
    transcript.accepted = True
    return transcript

def simulate_transcript(g: Graph, challenge: Challenge, rng: Random) -> Round:
    """Simulate a round for *challenge* on *g* without knowing any cycle.

    For :attr:`Challenge.PERMUTATION` the permuted graph is committed honestly, with a dummy cycle
    commitment. For :attr:`Challenge.CYCLE` a fresh graph with a planted cycle is committed, with
    the vertices and edge count of *g*.
    """
    if challenge == Challenge.PERMUTATION:
        p = Permutation.random(g.vertices, rng)
        order = sorted(g.vertices)
        rng.shuffle(order)
        graph_nonce, cycle_nonce = rng.randbytes(NONCE_SIZE), rng.randbytes(NONCE_SIZE)
        commitments = Commitments(
            commit(graph_nonce, canonical_bytes(apply_permutation(g, p))),
            commit(cycle_nonce, canonical_bytes_cycle(HamiltonianCycle(order))))
        return Round(commitments, challenge, PermutationOpening(p, graph_nonce))

    graph, cycle = planted_cycle_graph(g.vertices, max(len(g.vertices), len(g.edges)), rng)
    graph_nonce, cycle_nonce = rng.randbytes(NONCE_SIZE), rng.randbytes(NONCE_SIZE)
    commitments = Commitments(commit(graph_nonce, canonical_bytes(graph)),
                              commit(cycle_nonce, canonical_bytes_cycle(cycle)))
    return Round(commitments, challenge, CycleOpening(graph, cycle, graph_nonce, cycle_nonce))
