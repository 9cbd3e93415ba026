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

"""Various utilities."""

from __future__ import annotations

from argparse import ArgumentParser
from collections.abc import Iterable
import logging
from logging import StreamHandler, getLogger

def setup_logging(debug: bool = False) -> None:
    """Configure logging for a GASMAN process.

    If *debug* is ``True``, every trace row is logged.
    """
    logger = getLogger()
    logger.setLevel(logging.DEBUG if debug else logging.INFO)
    handler = StreamHandler()
    handler.setFormatter(logging.Formatter('%(asctime)s %(levelname)s %(name)s: %(message)s'))
    logger.addHandler(handler)

def to_ms(seconds: float) -> int:
    """Convert simulated *seconds* to milliseconds."""
    return round(seconds * 1000)

def format_time(ms: int) -> str:
    """Render simulated time *ms* as seconds with at least one decimal, e.g. ``1.2`` or ``1.25``."""
    text = f'{ms // 1000}.{ms % 1000:03d}'.rstrip('0')
    return text + '0' if text.endswith('.') else text

def format_ids(ids: Iterable[int]) -> str:
    """Render node *ids* as a comma separated list."""
    return ', '.join(str(i) for i in ids)

def make_command_line_parser() -> ArgumentParser:
    """Create a parser for the GASMAN command line.

    Subcommands are ``run``, ``zkp-demo`` and ``metrics-summary``; the selected one is available
    as *command*.
    """
    parser = ArgumentParser(prog='gasman', description='Simulate the GASMAN membership scheme.')
    parser.add_argument('--debug', action='store_true', help='log every trace row')
    commands = parser.add_subparsers(dest='command', required=True)

    run = commands.add_parser('run', help='run a scenario')
    run.add_argument(
        '--scenario', required=True,
        help='scenario file or name of a built-in scenario (table1, soak50, attacks_all)')
    run.add_argument('--seed', type=int, default=0, help='random seed (default: 0)')
    run.add_argument('--out', default='out', help='output directory (default: out)')
    run.add_argument('--rounds', type=int, help='override the number of ZKP rounds l')
    run.add_argument('--period', type=float, help='override the threshold period T in seconds')
    run.add_argument('--no-invariant-checks', dest='invariant_checks', action='store_false',
                     help='do not check protocol invariants after every event')

    demo = commands.add_parser('zkp-demo', help='run honest and cheating ZKP sessions')
    demo.add_argument('--n', type=int, default=20, help='number of nodes (default: 20)')
    demo.add_argument('--degree', type=int, default=6, help='neighbors per node (default: 6)')
    demo.add_argument('--rounds', type=int, default=20, help='ZKP rounds l (default: 20)')
    demo.add_argument('--seed', type=int, default=0, help='random seed (default: 0)')
    demo.add_argument('--sessions', type=int, default=1000,
                      help='cheating sessions to measure (default: 1000)')

    summary = commands.add_parser('metrics-summary', help='summarize a metrics file')
    summary.add_argument('metrics', help='metrics CSV file')
    return parser
