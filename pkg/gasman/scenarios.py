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

"""Scenario configuration."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from hashlib import sha256
import json
from pathlib import Path
import typing
from typing import Dict, Optional, cast

import jsonschema

from . import error
from .protocol import NetworkParams
from .util import to_ms

_ID = {'type': 'integer', 'minimum': 0, 'maximum': 2 ** 32 - 1}
_PROBABILITY = {'type': 'number', 'minimum': 0, 'maximum': 1}

def _directive(action: str, properties: Mapping[str, object],
               required: typing.Sequence[str] = ()) -> dict[str, object]:
    return {
        'if': {'properties': {'action': {'const': action}}},
        'then': {
            'properties': {'time': {}, 'action': {}, **properties},
            'required': list(required),
            'additionalProperties': False
        }
    }

SCHEMA: Dict[str, object] = {
    '$schema': 'http://json-schema.org/draft-07/schema#',
    'type': 'object',
    'required': ['n', 'duration'],
    'additionalProperties': False,
    'properties': {
        'name': {'type': 'string'},
        'n': {'type': 'integer', 'minimum': 3},
        'setup_time': {'type': 'number', 'minimum': 0},
        'duration': {'type': 'number', 'exclusiveMinimum': 0},
        'params': {
            'type': 'object',
            'additionalProperties': False,
            'properties': {
                'T': {'type': 'number', 'exclusiveMinimum': 0},
                'l': {'type': 'integer', 'minimum': 1},
                'degree': {'type': 'integer', 'minimum': 3},
                'termination_threshold': {'type': 'integer', 'minimum': 1}
            }
        },
        'channel': {
            'type': 'object',
            'additionalProperties': False,
            'properties': {
                'open_range': {'type': 'number', 'exclusiveMinimum': 0},
                'secure_range': {'type': 'number', 'exclusiveMinimum': 0},
                'latency': {'type': 'number', 'minimum': 0},
                'positions': {
                    'type': 'object',
                    'propertyNames': {'pattern': '^[0-9]+$'},
                    'additionalProperties': {
                        'type': 'array', 'items': {'type': 'number'}, 'minItems': 2,
                        'maxItems': 2
                    }
                }
            }
        },
        'initial_cycle': {'type': 'array', 'items': _ID},
        'auto_pol': {'type': 'boolean'},
        'pol_retry': {'type': 'number', 'exclusiveMinimum': 0},
        'churn': {
            'type': 'object',
            'additionalProperties': False,
            'properties': {'p_off': _PROBABILITY, 'p_on': _PROBABILITY, 'p_insert': _PROBABILITY}
        },
        'schedule': {
            'type': 'array',
            'items': {
                'type': 'object',
                'required': ['time', 'action'],
                'properties': {
                    'time': {'type': 'number', 'minimum': 0},
                    'action': {
                        'enum': ['insert', 'force_id', 'node_off', 'node_on', 'pol', 'attack']
                    }
                },
                'allOf': [
                    _directive(
                        'insert',
                        {
                            'authenticator': _ID, 'id': _ID, 'vetted': {'type': 'boolean'},
                            'splice': {'type': 'array', 'items': _ID, 'minItems': 2, 'maxItems': 2}
                        },
                        ['authenticator']),
                    _directive('force_id', {'id': _ID}, ['id']),
                    _directive('node_off', {'id': _ID, 'silent': {'type': 'boolean'}}, ['id']),
                    _directive('node_on', {'id': _ID, 'authenticator': _ID}, ['id']),
                    _directive('pol', {'initiator': _ID}, ['initiator']),
                    _directive(
                        'attack',
                        {
                            'kind': {'enum': ['replay', 'spoof', 'sybil', 'eavesdrop']},
                            'mode': {'enum': ['duplicate_access', 'duplicate_insert', 'multi_pol']},
                            'target': _ID,
                            'attacker': _ID
                        },
                        ['kind'])
                ]
            }
        }
    }
}

@dataclass(frozen=True)
class ChannelConfig:
    """Channel model settings.

    .. attribute:: open_range

       Range of the open channel and broadcasts in meters.

    .. attribute:: secure_range

       Range of the secure channel in meters.

    .. attribute:: latency

       Delay of every delivery in milliseconds.

    .. attribute:: positions

       Node coordinates in meters. Without positions every node reaches every other node.
    """

    open_range: float = 250
    secure_range: float = 5
    latency: int = 100
    positions: Mapping[int, tuple[float, float]] = field(default_factory=dict)

@dataclass(frozen=True)
class Churn:
    """Per second probabilities to go off-line, to come back on-line and of a new supplicant."""

    p_off: float = 0
    p_on: float = 0
    p_insert: float = 0

@dataclass(frozen=True)
class Directive:
    """Scheduled action at *time* with its arguments *args*."""

    time: int
    action: str
    args: Mapping[str, object] = field(default_factory=dict)

@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario.

    Times are in milliseconds.

    .. attribute:: digest

       SHA-256 hex digest of the canonical JSON document.
    """

    name: str
    n: int
    params: NetworkParams
    duration: int
    setup_time: int = 100
    channel: ChannelConfig = ChannelConfig()
    initial_cycle: Optional[tuple[int, ...]] = None
    auto_pol: bool = True
    pol_retry: int = 1000
    churn: Churn = Churn()
    schedule: tuple[Directive, ...] = ()
    digest: str = ''

    @staticmethod
    def parse(data: object) -> ScenarioConfig:
        """Validate the JSON document *data* and parse it."""
        try:
            jsonschema.validate(instance=data, schema=SCHEMA)
        except jsonschema.ValidationError as e:
            path = '/'.join(str(p) for p in e.absolute_path)
            raise error.ConfigInvalid(f'{path or "scenario"}: {e.message}') from e
        doc = cast(Dict[str, typing.Any], data)

        params = doc.get('params', {})
        channel = doc.get('channel', {})
        churn = doc.get('churn', {})
        try:
            network_params = NetworkParams(
                period=to_ms(params.get('T', 30)), rounds=params.get('l', 20),
                degree=params.get('degree', 6),
                termination_threshold=params.get('termination_threshold', 3))
            network_params.check(doc['n'])
        except error.BadParams as e:
            raise error.ConfigInvalid(f'params: {e}') from e

        initial_cycle = doc.get('initial_cycle')
        if initial_cycle is not None and sorted(initial_cycle) != list(range(doc['n'])):
            raise error.ConfigInvalid(f'initial_cycle: not a cycle over 0..{doc["n"] - 1}')
        schedule = sorted(
            (Directive(to_ms(d['time']), d['action'],
                       {k: v for k, v in d.items() if k not in {'time', 'action'}})
             for d in doc.get('schedule', [])),
            key=lambda directive: directive.time)
        setup_time = to_ms(doc.get('setup_time', 0.1))
        early = next((d for d in schedule if d.time < setup_time), None)
        if early:
            raise error.ConfigInvalid(f'schedule: {early.action} at {early.time} ms before setup')

        return ScenarioConfig(
            name=doc.get('name', 'unnamed'), n=doc['n'], params=network_params,
            duration=to_ms(doc['duration']), setup_time=setup_time,
            channel=ChannelConfig(
                open_range=channel.get('open_range', 250),
                secure_range=channel.get('secure_range', 5),
                latency=to_ms(channel.get('latency', 0.1)),
                positions={int(k): (v[0], v[1]) for k, v in channel.get('positions', {}).items()}),
            initial_cycle=tuple(initial_cycle) if initial_cycle is not None else None,
            auto_pol=doc.get('auto_pol', True), pol_retry=to_ms(doc.get('pol_retry', 1)),
            churn=Churn(churn.get('p_off', 0), churn.get('p_on', 0), churn.get('p_insert', 0)),
            schedule=tuple(schedule),
            digest=sha256(
                json.dumps(data, sort_keys=True, separators=(',', ':')).encode()).hexdigest())

    def with_overrides(self, *, rounds: Optional[int] = None,
                       period: Optional[float] = None) -> ScenarioConfig:
        """Return a copy with the number of ZKP *rounds* and the threshold *period* (in seconds)
        replaced, if given.
        """
        try:
            params = replace(
                self.params, **({'rounds': rounds} if rounds is not None else {}),
                **({'period': to_ms(period)} if period is not None else {}))
        except error.BadParams as e:
            raise error.ConfigInvalid(f'params: {e}') from e
        return replace(self, params=params)

def _table1_schedule() -> list[dict[str, object]]:
    def off(time: float, *ids: int, silent: bool = False) -> list[dict[str, object]]:
        return [{'time': time, 'action': 'node_off', 'id': i, 'silent': silent} for i in ids]
    def on(time: float, i: int, authenticator: int) -> list[dict[str, object]]:
        return [{'time': time, 'action': 'node_on', 'id': i, 'authenticator': authenticator}]
    def pol(time: float, initiator: int) -> list[dict[str, object]]:
        return [{'time': time, 'action': 'pol', 'initiator': initiator}]
    return [
        {'time': 1.2, 'action': 'insert', 'authenticator': 4, 'id': 14, 'splice': [4, 2]},
        *off(1.25, 3, 1, 0, silent=True),
        *pol(1.3, 8),
        *on(3.2, 0, 8),
        *on(8.6, 3, 4),
        *on(9.4, 1, 10),
        *off(11.6, 1),
        *off(13.8, 2, silent=True),
        *pol(13.9, 3),
        *on(14.8, 2, 14),
        *off(17.0, 5, silent=True),
        *pol(17.2, 2),
        *off(21.7, 5),
        *on(31.4, 1, 2),
        *off(31.5, 4),
        *off(32.4, 6, silent=True),
        *pol(32.5, 1),
        *on(34.2, 6, 2),
        *pol(38.5, 6),
        *off(41.4, 1),
        *on(53.2, 1, 0),
        *pol(59.6, 6),
        *pol(64.2, 6),
        *off(64.7, 2),
        *on(72.5, 4, 0),
        {'time': 75.3, 'action': 'insert', 'authenticator': 14, 'id': 13, 'splice': [2, 6]},
        *pol(75.4, 14)
    ]

def _access_cycles(start: float, count: int) -> list[dict[str, object]]:
    # Nodes 8 to 11 take turns to leave and come back, passing one ZKP session each
    directives: list[dict[str, object]] = []
    for i in range(count):
        time, node = start + i / 2, 8 + i % 4
        directives += [
            {'time': time, 'action': 'node_off', 'id': node},
            {'time': time + 0.3, 'action': 'node_on', 'id': node, 'authenticator': 0}
        ]
    return directives

BUILTIN_SCENARIOS: Dict[str, Dict[str, object]] = {
    'table1': {
        'name': 'table1',
        'n': 11,
        'setup_time': 0.1,
        'duration': 80,
        'params': {'T': 48, 'l': 20, 'degree': 6, 'termination_threshold': 3},
        'channel': {'latency': 0},
        'initial_cycle': [8, 3, 9, 7, 4, 2, 6, 5, 1, 10, 0],
        'auto_pol': False,
        'schedule': _table1_schedule()
    },
    'soak50': {
        'name': 'soak50',
        'n': 50,
        'setup_time': 0.1,
        'duration': 200,
        'params': {'T': 3, 'l': 20, 'degree': 6, 'termination_threshold': 3},
        'channel': {'latency': 0.1},
        'churn': {'p_off': 0.1, 'p_on': 0.1, 'p_insert': 0.05}
    },
    'attacks_all': {
        'name': 'attacks_all',
        'n': 12,
        'setup_time': 0.1,
        'duration': 40,
        'params': {'T': 10, 'l': 20, 'degree': 6, 'termination_threshold': 3},
        'channel': {'latency': 0.1},
        'schedule': [
            {'time': 1, 'action': 'node_off', 'id': 5},
            {'time': 3, 'action': 'node_on', 'id': 5, 'authenticator': 0},
            {'time': 4, 'action': 'node_off', 'id': 7, 'silent': True},
            {'time': 5, 'action': 'attack', 'kind': 'replay'},
            {'time': 6, 'action': 'attack', 'kind': 'spoof', 'target': 7},
            {'time': 7, 'action': 'attack', 'kind': 'sybil', 'mode': 'duplicate_access',
             'target': 3},
            {'time': 8, 'action': 'attack', 'kind': 'sybil', 'mode': 'duplicate_insert',
             'target': 4, 'attacker': 1},
            {'time': 9, 'action': 'attack', 'kind': 'sybil', 'mode': 'multi_pol', 'target': 7,
             'attacker': 2},
            {'time': 10, 'action': 'node_on', 'id': 7, 'authenticator': 6},
            *_access_cycles(11, 50),
            {'time': 37, 'action': 'attack', 'kind': 'eavesdrop'}
        ]
    }
}

def load_scenario(name_or_path: str) -> ScenarioConfig:
    """Load the built-in scenario or the scenario file *name_or_path*."""
    if name_or_path in BUILTIN_SCENARIOS:
        return ScenarioConfig.parse(BUILTIN_SCENARIOS[name_or_path])
    try:
        data = json.loads(Path(name_or_path).read_text())
    except OSError as e:
        raise error.ConfigInvalid(f'Cannot read scenario {name_or_path}: {e.strerror}') from e
    except json.JSONDecodeError as e:
        raise error.ConfigInvalid(f'Scenario {name_or_path} is not JSON: {e}') from e
    return ScenarioConfig.parse(data)
