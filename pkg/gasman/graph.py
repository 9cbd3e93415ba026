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

"""Graphs, Hamiltonian cycles and permutations.

All types are immutable values. Canonical byte formats use big-endian unsigned 32-bit integers:

* Graph: vertex count, edge count, vertices ascending, edges as ``(min, max)`` pairs ascending
* Cycle: length, then the order rotated to start at the smallest vertex, in the direction whose
  second vertex is smaller
* Permutation: size, then ``(vertex, image)`` pairs by ascending vertex
"""

from __future__ import annotations

from collections.abc import Collection, Iterable, Iterator, Mapping, Sequence
from functools import cached_property
from hashlib import sha256
from itertools import combinations
from random import Random
import struct
from typing import Tuple, overload

from . import error

NodeId = int
Edge = Tuple[int, int]

MAX_NODE_ID = 2 ** 32 - 1

def _pack(values: Sequence[int]) -> bytes:
    return struct.pack(f'>{len(values)}I', *values)

def _edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)

class Graph:
    """Undirected graph *G_t* shared by all legitimate nodes.

    .. attribute:: vertices

       Set of node IDs.

    .. attribute:: edges

       Set of edges, each stored once as ``(min, max)`` pair.
    """

    def __init__(self, vertices: Iterable[int], edges: Iterable[Edge] = ()) -> None:
        self.vertices = frozenset(vertices)
        for v in self.vertices:
            if not 0 <= v <= MAX_NODE_ID:
                raise error.ValueError(f'Node ID {v} out of range')
        normalized = set()
        for u, v in edges:
            if u == v:
                raise error.ValueError(f'Self-loop at {u}')
            if u not in self.vertices or v not in self.vertices:
                raise error.ValueError(f'Edge ({u}, {v}) not within vertices')
            normalized.add(_edge(u, v))
        self.edges = frozenset(normalized)

    @staticmethod
    def complete(vertices: Iterable[int]) -> Graph:
        """Create a complete graph over *vertices*."""
        vertices = sorted(vertices)
        return Graph(vertices, combinations(vertices, 2))

    @cached_property
    def adjacency(self) -> Mapping[int, frozenset[int]]:
        """Neighbors of every vertex."""
        neighbors: dict[int, set[int]] = {v: set() for v in self.vertices}
        for u, v in self.edges:
            neighbors[u].add(v)
            neighbors[v].add(u)
        return {v: frozenset(n) for v, n in neighbors.items()}

    @cached_property
    def canonical(self) -> bytes:
        """Canonical byte serialization, see :func:`canonical_bytes`."""
        vertices = sorted(self.vertices)
        edges = [x for edge in sorted(self.edges) for x in edge]
        return _pack([len(vertices), len(self.edges), *vertices, *edges])

    @cached_property
    def digest(self) -> bytes:
        """SHA-256 digest of the canonical serialization."""
        return sha256(self.canonical).digest()

    def neighbors(self, v: int) -> frozenset[int]:
        """Return the neighbors of vertex *v*."""
        return self.adjacency[v]

    def has_edge(self, u: int, v: int) -> bool:
        """Check if there is an edge between *u* and *v*."""
        return _edge(u, v) in self.edges

    def degree(self, v: int) -> int:
        """Return the degree of vertex *v*."""
        return len(self.adjacency[v])

    def with_vertex(self, v: int, neighbors: Iterable[int]) -> Graph:
        """Return a copy with the new vertex *v* connected to *neighbors*."""
        if v in self.vertices:
            raise error.DuplicateVertex(f'Vertex {v} already in graph')
        return Graph(self.vertices | {v}, [*self.edges, *((v, w) for w in neighbors)])

    def without_vertex(self, v: int) -> Graph:
        """Return a copy without vertex *v* and its edges."""
        return Graph(self.vertices - {v}, (e for e in self.edges if v not in e))

    def with_edge(self, u: int, v: int) -> Graph:
        """Return a copy with the edge between *u* and *v*."""
        return Graph(self.vertices, [*self.edges, (u, v)])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.vertices == other.vertices and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.vertices, self.edges))

    def __repr__(self) -> str:
        return f'<Graph with {len(self.vertices)} vertices and {len(self.edges)} edges>'

class HamiltonianCycle(Sequence[int]):
    """Secret network key *HC_t*, an order of vertices closed from the last back to the first.

    Cycles compare equal if they are rotations or reversals of each other, while :attr:`order`
    keeps the order they were built with.

    .. attribute:: order

       Vertices in cycle order.
    """

    def __init__(self, order: Iterable[int]) -> None:
        self.order = tuple(order)

    @cached_property
    def positions(self) -> Mapping[int, int]:
        """Index of every vertex in :attr:`order`."""
        return {v: i for i, v in enumerate(self.order)}

    @cached_property
    def edges(self) -> frozenset[Edge]:
        """Set of cycle edges as ``(min, max)`` pairs."""
        n = len(self.order)
        return frozenset(_edge(self.order[i], self.order[(i + 1) % n]) for i in range(n))

    @cached_property
    def canonical(self) -> tuple[int, ...]:
        """Canonical order, rotated to start at the smallest vertex.

        Of both directions the one with the smaller second vertex is chosen.
        """
        if len(self.order) < 2:
            return self.order
        i = self.order.index(min(self.order))
        forward = self.order[i:] + self.order[:i]
        backward = (forward[0], *reversed(forward[1:]))
        return min(forward, backward, key=lambda order: order[1])

    def successor(self, v: int) -> int:
        """Return the vertex following *v*."""
        return self.order[(self._index(v) + 1) % len(self.order)]

    def predecessor(self, v: int) -> int:
        """Return the vertex preceding *v*."""
        return self.order[self._index(v) - 1]

    def neighbors(self, v: int) -> tuple[int, int]:
        """Return the two cycle neighbors ``(predecessor, successor)`` of *v*."""
        return self.predecessor(v), self.successor(v)

    def is_adjacent(self, u: int, v: int) -> bool:
        """Check if *u* and *v* follow each other in the cycle."""
        return _edge(u, v) in self.edges

    def _index(self, v: int) -> int:
        try:
            return self.positions[v]
        except KeyError:
            raise error.VertexNotInCycle(f'Vertex {v} not in cycle') from None

    @overload
    def __getitem__(self, key: int) -> int:
        pass
    @overload
    def __getitem__(self, key: slice) -> Sequence[int]:
        pass
    def __getitem__(self, key: int | slice) -> int | Sequence[int]:
        return self.order[key]

    def __len__(self) -> int:
        return len(self.order)

    def __iter__(self) -> Iterator[int]:
        return iter(self.order)

    def __contains__(self, v: object) -> bool:
        return v in self.positions

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HamiltonianCycle):
            return NotImplemented
        return self.canonical == other.canonical

    def __hash__(self) -> int:
        return hash(self.canonical)

    def __repr__(self) -> str:
        return f'HamiltonianCycle({list(self.order)})'

class Permutation(Mapping[int, int]):
    """Bijective relabeling *Π* of a vertex set."""

    def __init__(self, mapping: Mapping[int, int]) -> None:
        self._mapping = dict(mapping)
        if set(self._mapping.values()) != self._mapping.keys():
            raise error.ValueError('Mapping is not a permutation of its domain')

    @staticmethod
    def identity(vertices: Iterable[int]) -> Permutation:
        """Create the identity permutation over *vertices*."""
        return Permutation({v: v for v in vertices})

    @staticmethod
    def random(vertices: Iterable[int], rng: Random) -> Permutation:
        """Draw a uniformly random permutation over *vertices* from *rng*."""
        domain = sorted(vertices)
        images = list(domain)
        rng.shuffle(images)
        return Permutation(dict(zip(domain, images)))

    @property
    def domain(self) -> frozenset[int]:
        """Set of permuted vertices."""
        return frozenset(self._mapping)

    @cached_property
    def canonical(self) -> bytes:
        """Canonical byte serialization, see :func:`canonical_bytes_permutation`."""
        pairs = [x for item in sorted(self._mapping.items()) for x in item]
        return _pack([len(self._mapping), *pairs])

    def __call__(self, v: int) -> int:
        return self._mapping[v]

    def __getitem__(self, v: int) -> int:
        return self._mapping[v]

    def __len__(self) -> int:
        return len(self._mapping)

    def __iter__(self) -> Iterator[int]:
        return iter(self._mapping)

    def __repr__(self) -> str:
        return f'Permutation({self._mapping})'

def is_hamiltonian_cycle(g: Graph, hc: Sequence[int]) -> bool:
    """Check if *hc* visits every vertex of *g* exactly once along edges of *g*.

    Malformed candidates, e.g. with repeated or foreign vertices, are simply not Hamiltonian.
    """
    order = list(hc)
    n = len(order)
    if n < 3 or n != len(g.vertices) or set(order) != g.vertices:
        return False
    return all(g.has_edge(order[i], order[(i + 1) % n]) for i in range(n))

def apply_permutation(g: Graph, p: Permutation) -> Graph:
    """Relabel the graph *g* with the permutation *p*."""
    if p.domain != g.vertices:
        raise error.DomainMismatch('Permutation domain differs from graph vertices')
    return Graph((p(v) for v in g.vertices), ((p(u), p(v)) for u, v in g.edges))

def apply_permutation_to_cycle(hc: HamiltonianCycle, p: Permutation) -> HamiltonianCycle:
    """Relabel the cycle *hc* with the permutation *p*."""
    if not hc.positions.keys() <= p.domain:
        raise error.DomainMismatch('Permutation does not cover cycle vertices')
    return HamiltonianCycle(p(v) for v in hc)

def splice_insert(hc: HamiltonianCycle, v_new: int, v_j: int, v_k: int) -> HamiltonianCycle:
    """Insert *v_new* into *hc* between the adjacent vertices *v_j* and *v_k*."""
    if v_new in hc:
        raise error.DuplicateVertex(f'Vertex {v_new} already in cycle')
    if v_j not in hc or v_k not in hc:
        raise error.NotAdjacentInCycle(f'({v_j}, {v_k}) not in cycle')
    if hc.successor(v_j) == v_k:
        after = v_j
    elif hc.successor(v_k) == v_j:
        after = v_k
    else:
        raise error.NotAdjacentInCycle(f'({v_j}, {v_k}) not adjacent in cycle')
    i = hc.positions[after] + 1
    return HamiltonianCycle((*hc.order[:i], v_new, *hc.order[i:]))

def splice_delete(hc: HamiltonianCycle, v: int) -> tuple[HamiltonianCycle, tuple[int, int]]:
    """Remove *v* from *hc*.

    The new cycle is returned together with the former cycle neighbors ``(v_j, v_k)`` of *v*, which
    now follow each other.
    """
    v_j, v_k = hc.neighbors(v)
    if len(hc) - 1 < 3:
        raise error.CycleTooSmall(f'Deleting {v} leaves less than 3 vertices')
    return HamiltonianCycle(w for w in hc if w != v), (v_j, v_k)

def canonical_bytes(g: Graph) -> bytes:
    """Serialize the graph *g* so that equal graphs yield identical bytes."""
    return g.canonical

def canonical_bytes_cycle(hc: HamiltonianCycle) -> bytes:
    """Serialize the cycle *hc* so that its rotations and reversal yield identical bytes."""
    return _pack([len(hc), *hc.canonical])

def canonical_bytes_permutation(p: Permutation) -> bytes:
    """Serialize the permutation *p*."""
    return p.canonical

def find_unique_cycle_adjacent_pair(neighbor_set: Collection[int],
                                    hc: HamiltonianCycle) -> tuple[int, int]:
    """Find the one pair of *neighbor_set* whose vertices follow each other in *hc*.

    The pair is returned in cycle order, i.e. the second vertex is the successor of the first.
    """
    for v in neighbor_set:
        if v not in hc:
            raise error.VertexNotInCycle(f'Vertex {v} not in cycle')
    pairs = sorted((v, hc.successor(v)) for v in neighbor_set if hc.successor(v) in neighbor_set)
    if not pairs:
        raise error.NoAdjacentPair('No adjacent pair in neighbor set')
    if len(pairs) > 1:
        raise error.AmbiguousPair(f'Adjacent pairs {pairs} in neighbor set')
    return pairs[0]

def planted_cycle_graph(vertices: Iterable[int], edge_count: int,
                        rng: Random) -> tuple[Graph, HamiltonianCycle]:
    """Build a random graph over *vertices* around a random Hamiltonian cycle.

    Random edges are added to the cycle until the graph has *edge_count* edges, at most a complete
    graph.
    """
    order = sorted(vertices)
    rng.shuffle(order)
    hc = HamiltonianCycle(order)
    edges = set(hc.edges)
    others = sorted(set(combinations(sorted(order), 2)) - edges)
    extra = min(max(edge_count - len(edges), 0), len(others))
    edges.update(rng.sample(others, extra))
    return Graph(order, edges), hc
