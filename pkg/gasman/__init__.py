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

"""Membership of mobile ad hoc networks by zero-knowledge proofs of Hamiltonian cycles."""

from .graph import Graph, HamiltonianCycle, Permutation
from .netsim import Metrics, Simulation, TraceLog, run_scenario
from .protocol import NetworkParams, NodeState
from .scenarios import ScenarioConfig, load_scenario
from .zkp import Transcript, run_protocol
