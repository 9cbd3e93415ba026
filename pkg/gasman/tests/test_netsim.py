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

from collections import deque
import math
from pathlib import Path
from random import Random
from tempfile import mkdtemp
from time import perf_counter
from unittest import TestCase

from gasman import error
from gasman.netsim import (CATEGORIES, ChannelModel, Metrics, Simulation, churn_step,
                           read_metrics, run_scenario, traffic_shares)
from gasman.protocol import ProofOfLife
from gasman.scenarios import ChannelConfig, ScenarioConfig, load_scenario

def is_subsequence(rows, lines):
    it = iter(rows)
    return all(any(row == line for row in it) for line in lines)

def reachable(positions, source, open_range):
    seen = {source}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v, p in positions.items():
            if v not in seen and math.dist(positions[u], p) <= open_range:
                seen.add(v)
                queue.append(v)
    return seen

class Table1Test(TestCase):
    def setUp(self):
        self.result = run_scenario(load_scenario('table1'), 0)

    def test_trace(self):
        lines = (Path(__file__).parent / 'res/table1.tsv').read_text().splitlines()
        rows = [row.format().rstrip('\t') for row in self.result.trace.rows]
        self.assertTrue(is_subsequence(rows, lines), '\n'.join(rows))

    def test_final_state(self):
        online = [s for s in self.result.states if s.online]
        self.assertEqual(online[0].graph.vertices, {0, 1, 3, 4, 6, 7, 8, 9, 10, 13, 14, 2})
        self.assertEqual(online[0].cycle.order, (8, 3, 9, 7, 4, 14, 2, 13, 6, 1, 10, 0))

    def test_dump(self):
        lines = self.result.trace.dump().splitlines()
        self.assertEqual(lines[:4], ['# hash: sha256', '# seed: 0',
                                     f'# config: {load_scenario("table1").digest}',
                                     'time\tevent\thc'])

    def test_deterministic(self):
        other = run_scenario(load_scenario('table1'), 0)
        self.assertEqual(other.trace.dump(), self.result.trace.dump())
        self.assertEqual(other.metrics.dump(), self.result.metrics.dump())

class SimulationTest(TestCase):
    def setUp(self):
        self.doc = {'n': 5, 'duration': 5, 'auto_pol': False, 'params': {'T': 2, 'degree': 4}}

    def test_run_empty(self):
        result = run_scenario(ScenarioConfig.parse(self.doc), 0)
        self.assertEqual(result.trace.events, ['0, 1, 2, 3, 4 are legitimate'])
        self.assertGreater(result.metrics.bytes['other'], 0)
        for category in CATEGORIES[:-1]:
            self.assertEqual(result.metrics.bytes[category], 0)

    def test_run_auto_pol(self):
        self.doc.update({'n': 6, 'duration': 10, 'auto_pol': True})
        sim = Simulation(ScenarioConfig.parse(self.doc), 0)
        sim.run()
        self.assertEqual(sim.members, set(range(6)))
        self.assertGreater(sim.metrics.bytes['proof_of_life'], 0)
        self.assertFalse([e for e in sim.trace.events if 'do not answer' in e])
        rounds = sim.metrics.events['proof_of_life']
        self.assertGreater(rounds, 0)
        self.assertEqual(sim.metrics.events['withdrawal'], 0)
        # Broadcast and echo reach 6 * 5 receivers, 5 nodes answer
        self.assertEqual(sim.metrics.counts['proof_of_life'], rounds * (2 * 6 * 5 + 5))

    def test_run_deletion(self):
        self.doc.update({
            'n': 6,
            'duration': 10,
            'auto_pol': True,
            'schedule': [{'time': 1, 'action': 'node_off', 'id': 2, 'silent': True}]
        })
        sim = Simulation(ScenarioConfig.parse(self.doc), 0)
        sim.run()
        self.assertNotIn(2, sim.members)
        self.assertIn('Node 2 is deleted', sim.trace.events)

    def test_run_expired(self):
        self.doc.update({
            'n': 8,
            'duration': 10,
            'auto_pol': True,
            'schedule': [
                {'time': 1, 'action': 'node_off', 'id': 2},
                {'time': 8, 'action': 'node_on', 'id': 2, 'authenticator': 0}
            ]
        })
        sim = Simulation(ScenarioConfig.parse(self.doc), 0)
        sim.run()
        self.assertIn('Node 2 has expired', sim.trace.events)
        self.assertEqual(len(sim.members), 8)
        self.assertEqual(sum(s.online for s in sim.states), 8)

    def test_run_insertion(self):
        self.doc.update({
            'n': 8,
            'schedule': [
                {'time': 1, 'action': 'force_id', 'id': 20},
                {'time': 1, 'action': 'insert', 'authenticator': 3}
            ]
        })
        sim = Simulation(ScenarioConfig.parse(self.doc), 0)
        sim.run()
        self.assertIn(20, sim.members)
        self.assertIn('Insertion of Node 20 is broadcast by Node 3', sim.trace.events)
        self.assertEqual(len(sim.metrics.insertion_latencies), 1)
        self.assertGreater(sim.metrics.bytes['insertion'], 0)

    def test_run_insertion_concurrent(self):
        self.doc.update({
            'n': 8,
            'initial_cycle': list(range(8)),
            'schedule': [
                {'time': 1, 'action': 'insert', 'authenticator': 3, 'splice': [0, 1]},
                {'time': 1, 'action': 'insert', 'authenticator': 5, 'splice': [4, 5]}
            ]
        })
        sim = Simulation(ScenarioConfig.parse(self.doc), 0)
        sim.run()
        self.assertEqual(sim.members, set(range(10)))
        self.assertIn('Insertion of Node 8 is broadcast by Node 3', sim.trace.events)
        self.assertIn('Insertion of Node 9 is broadcast by Node 5', sim.trace.events)
        self.assertFalse([e for e in sim.trace.events if 'denied' in e])
        self.assertEqual(len(sim.metrics.insertion_latencies), 2)

    def test_run_insertion_duplicate(self):
        self.doc['schedule'] = [{'time': 1, 'action': 'insert', 'authenticator': 3, 'id': 2}]
        result = run_scenario(ScenarioConfig.parse(self.doc), 0)
        self.assertIn('Insertion of Node 2 is denied', result.trace.events)

    def test_run_late_departure(self):
        self.doc['schedule'] = [
            {'time': 1, 'action': 'node_off', 'id': 2, 'silent': True},
            {'time': 2, 'action': 'node_off', 'id': 2}
        ]
        sim = Simulation(ScenarioConfig.parse(self.doc), 0)
        sim.run()
        self.assertEqual([(row.time, row.event) for row in sim.trace.rows[1:]],
                         [(2000, 'Node 2 turns off')])
        self.assertEqual(sim.metrics.events['departure'], 1)

    def test_run_termination(self):
        self.doc['schedule'] = [{'time': 1, 'action': 'node_off', 'id': i} for i in range(3)]
        sim = Simulation(ScenarioConfig.parse(self.doc), 0)
        sim.run()
        self.assertTrue(sim.terminated)
        self.assertEqual(sim.trace.events[-1], 'Network terminated')

    def test_check_invariants(self):
        sim = Simulation(ScenarioConfig.parse({**self.doc, 'duration': 0.1}), 0)
        sim.run()
        sim.check_invariants()
        sim.members.add(99)
        with self.assertRaises(error.InvariantViolation):
            sim.check_invariants()

    def test_check_invariants_old_proof_of_life(self):
        sim = Simulation(ScenarioConfig.parse({**self.doc, 'duration': 0.1}), 0)
        sim.run()
        sim.nodes[1].record_proof_of_life(3, sim.now - 2001)
        with self.assertRaises(error.InvariantViolation):
            sim.check_invariants()

    def test_broadcast_offline(self):
        sim = Simulation(ScenarioConfig.parse({**self.doc, 'duration': 0.1}), 0)
        sim.run()
        sim.nodes[0].go_offline(sim.now)
        with self.assertRaises(error.SenderOffline):
            sim.broadcast(ProofOfLife(0))

    def test_broadcast_partition(self):
        rng = Random(3)
        positions = {str(v): [rng.uniform(0, 1000), rng.uniform(0, 1000)] for v in range(12)}
        doc = {'n': 12, 'duration': 0.1, 'channel': {'positions': positions, 'open_range': 250}}
        sim = Simulation(ScenarioConfig.parse(doc), 0)
        sim.run()
        expected = reachable({int(v): tuple(p) for v, p in positions.items()}, 0, 250)
        recipients = sim.broadcast(ProofOfLife(0))
        self.assertEqual({s.address for s in recipients}, expected - {0})
        self.assertEqual(sim.metrics.counts['proof_of_life'],
                         len(expected) * (len(expected) - 1))

    def test_soak(self):
        start = perf_counter()
        sim = Simulation(load_scenario('soak50'), 1)
        sim.run()
        self.assertLess(perf_counter() - start, 120)
        self.assertFalse(sim.terminated)
        self.assertNotIn('Network terminated', sim.trace.events)
        self.assertGreater(sim.now, 199000)
        shares = traffic_shares(sim.metrics.bytes)
        self.assertGreaterEqual(shares['proof_of_life'], 80)
        self.assertLessEqual(shares['proof_of_life'], 95)
        self.assertLess(shares['zkp'], 10)
        self.assertGreater(sim.metrics.events['insertion'], 0)
        self.assertGreater(sim.metrics.events['access'], 0)

class AttacksAllTest(TestCase):
    def test_run(self):
        sim = Simulation(load_scenario('attacks_all'), 0)
        sim.run()
        outcomes = [outcome.split(' ', 1)[1] for outcome in sim.attack_outcomes]
        self.assertEqual(outcomes[:-1], [
            'replay: reject',
            'spoof: isolated',
            'sybil_access: denied',
            'sybil_insert: denied',
            'sybil_pol: detected'
        ])
        self.assertTrue(outcomes[-1].startswith('eavesdrop: no leak in '))
        self.assertNotIn('too few', outcomes[-1])
        self.assertGreaterEqual(sum(len(t.rounds) for _, t in sim.archive), 1000)
        self.assertIn('Node 7 is re-inserted by ZKP with Node 6', sim.trace.events)
        self.assertEqual(sim.members, set(range(12)))
        self.assertTrue(sim.detections)

class ChannelModelTest(TestCase):
    def test_component_without_positions(self):
        channel = ChannelModel(ChannelConfig())
        self.assertEqual(channel.component(0, [1, 2, 3]), {0, 1, 2, 3})
        self.assertTrue(channel.secure(0, 3))

    def test_component(self):
        rng = Random(4)
        for _ in range(20):
            positions = {v: (rng.uniform(0, 500), rng.uniform(0, 500)) for v in range(30)}
            channel = ChannelModel(ChannelConfig(open_range=80, positions=positions))
            self.assertEqual(channel.component(0, positions), reachable(positions, 0, 80))

    def test_secure(self):
        channel = ChannelModel(ChannelConfig(positions={0: (0, 0), 1: (3, 4), 2: (3, 5)}))
        self.assertTrue(channel.secure(0, 1))
        self.assertFalse(channel.secure(0, 2))

class ChurnStepTest(TestCase):
    def test_step(self):
        rng = Random(5)
        self.assertEqual(churn_step(rng, 0, 0, range(100), range(100, 200)), [])
        events = churn_step(rng, 1, 1, range(100), range(100, 200))
        self.assertEqual(len(events), 200)
        self.assertEqual({e.kind for e in events if e.node < 100}, {'off'})

    def test_step_rate(self):
        events = churn_step(Random(6), 0.1, 0, range(10000), [])
        self.assertAlmostEqual(len(events) / 10000, 0.1, delta=0.01)

    def test_step_bad_probability(self):
        with self.assertRaises(error.ValueError):
            churn_step(Random(7), 1.5, 0, [], [])

class MetricsTest(TestCase):
    def test_account(self):
        metrics = Metrics()
        metrics.account('zkp', 10, 3)
        metrics.account('other', 5)
        self.assertEqual(metrics.total, 35)
        self.assertEqual(metrics.counts['zkp'], 3)
        with self.assertRaises(error.ValueError):
            metrics.account('gossip', 1)

    def test_read(self):
        metrics = Metrics()
        metrics.account('proof_of_life', 90)
        metrics.account('zkp', 10)
        path = Path(mkdtemp()) / 'metrics.csv'
        path.write_text(metrics.dump())
        data = read_metrics(path)
        self.assertEqual(data['proof_of_life'], 90)
        self.assertNotIn('total', data)
        shares = traffic_shares(data)
        self.assertEqual(shares['zkp'], 10)
        self.assertEqual(shares['deletion'], 0)

    def test_read_missing(self):
        with self.assertRaises(error.FileInvalid):
            read_metrics(Path(mkdtemp()) / 'metrics.csv')

    def test_read_malformed(self):
        path = Path(mkdtemp()) / 'metrics.csv'
        path.write_text('category,size\nzkp,ten\n')
        with self.assertRaises(error.FileInvalid):
            read_metrics(path)

    def test_traffic_shares_empty(self):
        self.assertEqual(traffic_shares({}), {category: 0.0 for category in CATEGORIES})
