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

# pylint: disable=missing-docstring; test module

from collections import OrderedDict
from random import Random
from unittest import TestCase

from gasman import error
from gasman.graph import (Graph, HamiltonianCycle, find_unique_cycle_adjacent_pair,
                          is_hamiltonian_cycle)
from gasman.protocol import (DeletionNotice, InsertionAnnounce, NeighborSetBroadcast,
                             NetworkParams, NodeState, ProofOfLife, ProofOfLifeEcho, Withdraw,
                             accept_grant, access_control, apply_deletions, apply_echo,
                             apply_insertion, begin_insertion, complete_insertion,
                             deal_contributions, emit_proof_of_life, handle_pol_quorum,
                             initialize_network, run_deletion_sweep)
from gasman.zkp import CheatingProver

PERIOD = 48000
TABLE_CYCLE = [8, 3, 9, 7, 4, 2, 6, 5, 1, 10, 0]

class ProtocolTestCase(TestCase):
    def setUp(self):
        self.rng = Random(42)
        self.params = NetworkParams(PERIOD, degree=6)
        self.states = initialize_network(11, self.params, self.rng, cycle=TABLE_CYCLE)
        self.a = self.states[4]

    def copy_state(self, state):
        return NodeState(state.id, state.graph, state.cycle, stage=state.stage,
                         pol_queue=OrderedDict(state.pol_queue), history=dict(state.history))

class NetworkParamsTest(TestCase):
    def test_check(self):
        NetworkParams(1000, degree=3).check(4)
        with self.assertRaises(error.BadParams):
            NetworkParams(1000, degree=3).check(3)
        with self.assertRaises(error.BadParams):
            NetworkParams(1000, degree=3).check(5)

    def test_init_bad_values(self):
        for kwargs in ({'period': 0}, {'period': 1000, 'rounds': 0},
                       {'period': 1000, 'degree': 2}):
            with self.assertRaises(error.BadParams):
                NetworkParams(**kwargs)

class InitializeNetworkTest(ProtocolTestCase):
    def test_initialize(self):
        self.assertEqual(self.a.cycle.order, tuple(TABLE_CYCLE))
        for state in self.states:
            self.assertTrue(is_hamiltonian_cycle(state.graph, state.cycle))
            self.assertTrue(state.is_consistent_with(self.a))
            self.assertEqual(set(state.pol_queue), set(range(11)))
        self.assertLessEqual(len(self.a.graph.edges), self.params.edge_target(11))

    def test_initialize_small(self):
        states = initialize_network(4, NetworkParams(1000, degree=3), self.rng)
        self.assertEqual(states[0].graph.vertices, {0, 1, 2, 3})
        self.assertTrue(is_hamiltonian_cycle(states[0].graph, states[0].cycle))

    def test_initialize_random_cycle(self):
        for seed in range(20):
            states = initialize_network(20, self.params, Random(seed))
            self.assertTrue(is_hamiltonian_cycle(states[0].graph, states[0].cycle))

    def test_initialize_edge_count(self):
        cycle = list(range(20))
        for seed in range(10):
            graph = initialize_network(20, self.params, Random(seed), cycle=cycle)[0].graph
            declarations = deal_contributions(HamiltonianCycle(cycle), 6, Random(seed))
            edges = {frozenset((u, v)) for u, vs in declarations.items() for v in vs if u != v}
            self.assertEqual({frozenset(edge) for edge in graph.edges}, edges)
            self.assertGreaterEqual(len(graph.edges), 20)
            self.assertLessEqual(len(graph.edges), self.params.edge_target(20))
            for v in range(20):
                self.assertGreaterEqual(graph.degree(v), 2)
                self.assertLessEqual(graph.degree(v), 6)

    def test_initialize_bad_cycle(self):
        with self.assertRaises(error.BadParams):
            initialize_network(11, self.params, self.rng, cycle=[0, 1, 2])

class InsertionTest(ProtocolTestCase):
    def test_begin(self):
        announce = begin_insertion(self.a)
        self.assertEqual(announce, InsertionAnnounce(4, 11))
        self.assertEqual(begin_insertion(self.a).vertex, 12)

    def test_begin_gap(self):
        g = Graph.complete([0, 1, 3])
        state = NodeState(0, g, HamiltonianCycle([0, 1, 3]))
        self.assertEqual(begin_insertion(state).vertex, 2)

    def test_begin_forced_duplicate(self):
        with self.assertRaises(error.DuplicateId):
            begin_insertion(self.a, vertex=3)

    def test_begin_not_vetted(self):
        with self.assertRaises(error.NotVetted):
            begin_insertion(self.a, vetted=False)

    def test_begin_offline(self):
        self.a.go_offline(1000)
        with self.assertRaises(error.AuthenticatorOffline):
            begin_insertion(self.a)

    def test_complete_quorum(self):
        announce = begin_insertion(self.a, vertex=14)
        with self.assertRaises(error.QuorumNotReached):
            complete_insertion(self.a, announce, 5, self.params, self.rng)
        self.assertNotIn(14, self.a.reserved)
        announce = begin_insertion(self.a, vertex=14)
        broadcast = complete_insertion(self.a, announce, 6, self.params, self.rng)
        self.assertEqual(broadcast.vertex, 14)
        self.assertEqual(len(broadcast.neighbors), 6)

    def test_complete_forced_splice(self):
        announce = begin_insertion(self.a, vertex=14)
        broadcast = complete_insertion(self.a, announce, 10, self.params, self.rng, splice=(4, 2),
                                       now=1200)
        self.assertLessEqual({4, 2}, broadcast.neighbors)
        for state in self.states:
            apply_insertion(state, broadcast)
            self.assertEqual(state.cycle.order, (8, 3, 9, 7, 4, 14, 2, 6, 5, 1, 10, 0))
            self.assertTrue(is_hamiltonian_cycle(state.graph, state.cycle))
            self.assertEqual(state.stage, 1)
            self.assertEqual(state.pol_queue[14], 1200)
        self.assertNotIn(14, self.a.reserved)

    def test_apply_prune(self):
        announce = begin_insertion(self.a, vertex=14)
        broadcast = complete_insertion(self.a, announce, 10, self.params, self.rng, splice=(4, 2),
                                       now=PERIOD + 1)
        state = self.states[0]
        apply_insertion(state, broadcast, params=self.params)
        self.assertEqual(list(state.pol_queue), [4, 14])

    def test_complete_splice_not_adjacent(self):
        announce = begin_insertion(self.a)
        with self.assertRaises(error.NotAdjacentInCycle):
            complete_insertion(self.a, announce, 10, self.params, self.rng, splice=(4, 6))

    def test_complete_cycle_too_small(self):
        states = initialize_network(7, NetworkParams(1000, degree=6), self.rng)
        announce = begin_insertion(states[0])
        with self.assertRaises(error.BadParams):
            complete_insertion(states[0], announce, 7, NetworkParams(1000, degree=6), self.rng)

    def test_neighbor_set_unique(self):
        for _ in range(1000):
            state = self.copy_state(self.a)
            announce = begin_insertion(state)
            broadcast = complete_insertion(state, announce, 11, self.params, self.rng)
            v_j, v_k = find_unique_cycle_adjacent_pair(broadcast.neighbors, state.cycle)
            self.assertEqual(state.cycle.successor(v_j), v_k)
            apply_insertion(state, broadcast)
            self.assertTrue(is_hamiltonian_cycle(state.graph, state.cycle))

    def test_apply_duplicate(self):
        broadcast = NeighborSetBroadcast(4, 3, frozenset({4, 2, 9, 5}))
        with self.assertRaises(error.DuplicateId):
            apply_insertion(self.a, broadcast)

    def test_apply_malformed(self):
        broadcast = NeighborSetBroadcast(4, 14, frozenset({8, 3, 9}))
        with self.assertRaises(error.AmbiguousPair):
            apply_insertion(self.a, broadcast)
        self.assertEqual(self.a.stage, 0)

class AccessControlTest(ProtocolTestCase):
    def setUp(self):
        super().setUp()
        self.s = self.states[0]
        self.s.go_offline(1000)

    def test_access(self):
        grant = access_control(self.states[8], self.s, 1000 + PERIOD, self.params, self.rng)
        self.assertEqual(grant.supplicant, 0)
        self.assertTrue(grant.transcript.accepted)
        self.assertTrue(grant.stage_verified)
        self.assertEqual(self.states[8].pol_queue[0], 1000 + PERIOD)
        accept_grant(self.s, self.states[8], 1000 + PERIOD)
        self.assertTrue(self.s.online)
        self.assertIsNone(self.s.offline_since)
        self.assertEqual(self.s.clock(1000 + PERIOD), 0)

    def test_access_expired(self):
        with self.assertRaises(error.Expired) as cm:
            access_control(self.states[8], self.s, 1001 + PERIOD, self.params, self.rng)
        self.assertEqual(cm.exception.duration, PERIOD + 1)

    def test_access_expired_id_reused(self):
        with self.assertRaises(error.Expired) as cm:
            access_control(self.states[8], self.s, 1001 + PERIOD, self.params, self.rng,
                           observed_online={0})
        self.assertEqual(cm.exception.duration, PERIOD + 1)

    def test_access_no_member(self):
        apply_deletions(self.states[8], [0])
        with self.assertRaises(error.Expired) as cm:
            access_control(self.states[8], self.s, 2000, self.params, self.rng)
        self.assertIsNone(cm.exception.duration)

    def test_access_id_observed(self):
        with self.assertRaises(error.IdInUse):
            access_control(self.states[8], self.s, 2000, self.params, self.rng,
                           observed_online={0})

    def test_access_id_in_queue(self):
        self.states[8].record_proof_of_life(0, 1500)
        with self.assertRaises(error.IdInUse):
            access_control(self.states[8], self.s, 2000, self.params, self.rng)

    def test_access_wrong_graph(self):
        self.s.graph = self.s.graph.without_vertex(5)
        with self.assertRaises(error.ZkpFailed):
            access_control(self.states[8], self.s, 2000, self.params, self.rng)

    def test_access_fabricated_cycle(self):
        accepted = 0
        for seed in range(200):
            prover = CheatingProver(self.s.graph, Random(seed))
            try:
                access_control(self.states[8], self.s, 2000, self.params, self.rng, prover=prover)
                accepted += 1
            except error.ZkpFailed as e:
                self.assertFalse(e.transcript.accepted)
        self.assertEqual(accepted, 0)

    def test_access_unknown_stage(self):
        self.s.stage = 99
        grant = access_control(self.states[8], self.s, 2000, self.params, self.rng)
        self.assertFalse(grant.stage_verified)

    def test_access_authenticator_offline(self):
        self.states[8].go_offline(1500)
        with self.assertRaises(error.AuthenticatorOffline):
            access_control(self.states[8], self.s, 2000, self.params, self.rng)

class ProofOfLifeTest(ProtocolTestCase):
    def test_emit(self):
        self.assertIsNone(emit_proof_of_life(self.a, PERIOD, self.params))
        self.assertEqual(emit_proof_of_life(self.a, PERIOD + 1, self.params), ProofOfLife(4))
        self.assertEqual(self.a.pending_pol, 0)

    def test_emit_force(self):
        self.assertEqual(emit_proof_of_life(self.a, 100, self.params, force=True), ProofOfLife(4))

    def test_emit_offline(self):
        self.a.go_offline(100)
        self.assertIsNone(emit_proof_of_life(self.a, PERIOD + 1, self.params))

    def test_quorum_withdraw(self):
        emit_proof_of_life(self.a, 30000, self.params, force=True)
        withdraw = handle_pol_quorum(self.a, [0, 1, 2, 3], 30100, self.params)
        self.assertEqual(withdraw, Withdraw(4, frozenset({0, 1, 2, 3})))
        self.assertEqual(self.a.clock_origin, 0)
        self.assertIsNone(self.a.pending_pol)

    def test_quorum_echo(self):
        emit_proof_of_life(self.a, 30000, self.params, force=True)
        echo = handle_pol_quorum(self.a, [0, 1, 2, 3, 5, 6, 7, 8], 30100, self.params,
                                 answered_at=30050)
        self.assertIsInstance(echo, ProofOfLifeEcho)
        self.assertEqual(echo.senders, {0, 1, 2, 3, 4, 5, 6, 7, 8})
        self.assertEqual(echo.deleted, ())
        self.assertEqual(self.a.clock_origin, 30100)
        self.assertEqual(self.a.pol_queue[8], 30050)
        receiver = self.states[0]
        apply_echo(receiver, echo, 30100, self.params)
        self.assertEqual(receiver.pol_queue[8], 30050)
        self.assertEqual(list(receiver.pol_queue)[-1], 8)

    def test_quorum_echo_deletes(self):
        echo = handle_pol_quorum(self.a, [0, 1, 2, 3, 6, 7, 8, 9], PERIOD + 1, self.params)
        self.assertEqual(echo.deleted, (5, 10))
        self.assertEqual(echo.deletion_size, 12)
        self.assertEqual(self.a.graph.vertices, set(range(11)) - {5, 10})
        self.assertEqual(self.a.stage, 2)
        for state in self.states:
            apply_echo(state, echo, PERIOD + 1, self.params)
        for state in self.states:
            self.assertEqual(state.graph.vertices, set(range(11)) - {5, 10})
            self.assertTrue(is_hamiltonian_cycle(state.graph, state.cycle))
            self.assertTrue(state.is_consistent_with(self.a))
        self.assertEqual(self.a.stage, 2)

    def test_observe(self):
        self.assertIsNone(self.a.observe(20, 3, 1000, PERIOD))
        self.assertIsNone(self.a.observe(20, 3, 2000, PERIOD))
        self.assertEqual(self.a.observe(20, 7, 3000, PERIOD), 3)
        self.assertIsNone(self.a.observe(20, 11, 3000 + PERIOD + 1, PERIOD))

class DeletionTest(ProtocolTestCase):
    def test_sweep(self):
        for v in range(11):
            if v != 5:
                self.a.record_proof_of_life(v, 17000)
        notices = run_deletion_sweep(self.a, 64200, self.params)
        self.assertEqual(notices, [DeletionNotice(4, 5)])
        self.assertEqual(self.a.cycle.order, (8, 3, 9, 7, 4, 2, 6, 1, 10, 0))
        self.assertTrue(self.a.graph.has_edge(6, 1))
        self.assertNotIn(5, self.a.pol_queue)

    def test_sweep_all_alive(self):
        notices = run_deletion_sweep(self.a, PERIOD, self.params)
        self.assertEqual(notices, [])
        self.assertEqual(self.a.stage, 0)

    def test_delete_unknown(self):
        self.assertEqual(apply_deletions(self.a, [42]), [])

    def test_delete_too_many(self):
        state = initialize_network(4, NetworkParams(1000, degree=3), self.rng)[0]
        apply_deletions(state, [3])
        with self.assertRaises(error.NetworkTermination):
            apply_deletions(state, [2])
