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

# pylint: disable=redefined-builtin; ValueError is namespaced by the module

"""GASMAN errors."""

from __future__ import annotations

import builtins
import typing

if typing.TYPE_CHECKING:
    from .zkp import Transcript

class Error(Exception):
    """Base for GASMAN errors."""

class ValueError(Error, builtins.ValueError):
    """Raised for malformed values, e.g. a self-loop or a node ID that does not fit 32 bits."""

# Graph

class DomainMismatch(Error):
    """Raised if a permutation does not cover the vertices it is applied to."""

class NotAdjacentInCycle(Error):
    """Raised if a splice position is not an edge of the cycle."""

class DuplicateVertex(Error):
    """Raised if a vertex is spliced into a cycle that already contains it."""

class VertexNotInCycle(Error):
    """Raised if a vertex is not part of the cycle."""

class CycleTooSmall(Error):
    """Raised if a deletion would leave a cycle of less than three vertices."""

class NoAdjacentPair(Error):
    """Raised if a neighbor set contains no pair adjacent in the cycle."""

class AmbiguousPair(Error):
    """Raised if a neighbor set contains more than one pair adjacent in the cycle."""

# Zero-knowledge proof

class InvalidWitness(Error):
    """Raised if a prover commits with a cycle that is not Hamiltonian in its graph."""

class SecretAlreadyUsed(Error):
    """Raised if a round secret is asked to answer a second challenge."""

class LeakDetected(Error):
    """Raised if eavesdropped traffic reveals information about the secret.

    .. attribute:: round

       Index of the offending round in the archive.
    """

    def __init__(self, round: int, message: str = '') -> None:
        super().__init__(round, message)
        self.round = round

    def __str__(self) -> str:
        return f'Leak in round {self.round}: {self.args[1]}'

# Protocol

class BadParams(Error):
    """Raised for network parameters that cannot be satisfied."""

class AuthenticatorOffline(Error):
    """Raised if an off-line node is asked to authenticate."""

class QuorumNotReached(Error):
    """Raised if an insertion receives less than half of the members as answers."""

class Denied(Error):
    """Raised if access or insertion is denied for the claimed identity."""

class DuplicateId(Denied):
    """Raised if an insertion announces an ID that is already a vertex of the graph."""

class IdInUse(Denied):
    """Raised if a supplicant claims an ID that is currently on-line."""

class NotVetted(Denied):
    """Raised if an insertion is requested for a supplicant that was not vetted."""

class Expired(Error):
    """Raised if a supplicant was off-line for longer than the threshold period.

    .. attribute:: duration

       Off-line duration in milliseconds, or ``None`` if the supplicant is no member anymore.
    """

    def __init__(self, message: str, duration: typing.Optional[int] = None) -> None:
        super().__init__(message)
        self.duration = duration

class ZkpFailed(Error):
    """Raised if a supplicant fails the proof of knowledge.

    .. attribute:: transcript

       Rejected transcript, if the proof was run at all.
    """

    def __init__(self, message: str, transcript: typing.Optional[Transcript] = None) -> None:
        super().__init__(message)
        self.transcript = transcript

class NetworkTermination(Error):
    """Raised if the network cannot continue, e.g. when too few nodes are left on-line."""

# Simulation

class SenderOffline(Error):
    """Raised if an off-line node is asked to broadcast."""

class ConfigInvalid(Error):
    """Raised for a scenario that is missing or does not validate."""

class InvariantViolation(Error):
    """Raised if a protocol invariant does not hold after an event.

    .. attribute:: event

       Index of the offending event.
    """

    def __init__(self, event: int, message: str) -> None:
        super().__init__(event, message)
        self.event = event

    def __str__(self) -> str:
        return f'Event {self.event}: {self.args[1]}'

class FileInvalid(Error):
    """Raised for a metrics file that is missing or malformed."""
