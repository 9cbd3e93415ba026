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

"""GASMAN script."""

from __future__ import annotations

from argparse import Namespace
from logging import getLogger
from pathlib import Path
from random import Random
import sys

from . import error
from .netsim import CATEGORIES, read_metrics, run_scenario, traffic_shares
from .protocol import NetworkParams, initialize_network
from .scenarios import load_scenario
from .util import make_command_line_parser, setup_logging
from .zkp import CheatingProver, HonestProver, Transcript, run_protocol

_logger = getLogger(__name__)

def main(args: list[str]) -> int:
    """Run GASMAN with the given list of command line *args*."""
    args = make_command_line_parser().parse_args(args[1:])
    setup_logging(getattr(args, 'debug', False))
    commands = {'run': run, 'zkp-demo': zkp_demo, 'metrics-summary': metrics_summary}
    try:
        return commands[args.command](args)
    except (error.ConfigInvalid, error.FileInvalid, error.BadParams) as e:
        _logger.error('%s', e)
        return 2
    except error.InvariantViolation as e:
        _logger.error('Invariant violated: %s', e)
        return 3

def run(args: Namespace) -> int:
    """Run a scenario and write trace, metrics and report to the output directory."""
    config = load_scenario(args.scenario).with_overrides(rounds=args.rounds, period=args.period)
    result = run_scenario(config, args.seed, invariant_checks=args.invariant_checks)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / 'trace.tsv').write_text(result.trace.dump())
    (out / 'metrics.csv').write_text(result.metrics.dump())
    (out / 'report.txt').write_text(result.report)
    print(f'{config.name}: {len(result.trace.rows)} trace rows, {result.metrics.total} bytes, '
          f'written to {out}')
    return 0

def _print_transcript(label: str, transcript: Transcript) -> None:
    for i, r in enumerate(transcript.rounds, 1):
        passed = transcript.accepted or i < len(transcript.rounds)
        print(f'  round {i}: challenge {r.challenge.name.lower()}, {"ok" if passed else "fail"}')
    print(f'{label}: {transcript.verdict} after {len(transcript.rounds)} rounds')

def zkp_demo(args: Namespace) -> int:
    """Run an honest and a cheating ZKP session, then measure the cheat acceptance rate."""
    if args.sessions < 1:
        raise error.BadParams(f'Sessions {args.sessions} < 1')
    rng = Random(args.seed)
    params = NetworkParams(period=1000, rounds=args.rounds, degree=args.degree)
    state = initialize_network(args.n, params, rng)[0]
    graph = state.graph
    print(f'Network of {args.n} nodes, {len(graph.edges)} edges, l {args.rounds}')

    _print_transcript('honest', run_protocol(HonestProver(graph, state.cycle, rng), graph,
                                             args.rounds, rng))
    _print_transcript('cheating', run_protocol(CheatingProver(graph, rng), graph, args.rounds,
                                               rng))
    accepted = sum(run_protocol(CheatingProver(graph, rng), graph, args.rounds, rng).accepted
                   for _ in range(args.sessions))
    print(f'Cheat acceptance rate: {accepted / args.sessions:.4f} ({accepted} of '
          f'{args.sessions} sessions, bound {2 ** -args.rounds:.4f})')
    return 0

def metrics_summary(args: Namespace) -> int:
    """Print the traffic share of every category of a metrics file."""
    shares = traffic_shares(read_metrics(args.metrics))
    for category in CATEGORIES:
        print(f'{category}: {shares[category]:.1f} %')
    if any(shares.values()):
        if shares['zkp'] < 10:
            print('flag: zkp share below 10 %')
        if 80 <= shares['proof_of_life'] <= 95:
            print('flag: proof_of_life share within 80 to 95 %')
    return 0

if __name__ == '__main__':
    sys.exit(main(sys.argv))
