"""Finite lattice graphs: built-in geometries, JSON loading, hop distances.

Sites are integers ``0..site_count-1`` and edges are unordered pairs. The
hopping structure of the lattice Hamiltonian is fully determined by the edge
list; coordinates are carried only for documentation and plotting.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


@dataclass(frozen=True)
class LatticeGraph:
    """Undirected, connected site graph.

    ``edges`` is stored canonically: each pair ``(a, b)`` with ``a < b``,
    sorted, no duplicates, no self-loops.
    """

    site_count: int
    edges: tuple[tuple[int, int], ...]
    coords: tuple[tuple[float, float], ...] | None = None
    label: str = "custom"

    def __post_init__(self) -> None:
        if self.site_count < 1:
            raise ValueError(f"site_count must be positive, got {self.site_count}")
        seen: set[tuple[int, int]] = set()
        canon = []
        for edge in self.edges:
            a, b = edge
            if a == b:
                raise ValueError(f"self-loop at site {a}")
            for s in (a, b):
                if not 0 <= s < self.site_count:
                    raise ValueError(
                        f"edge {tuple(edge)}: site {s} out of range [0, {self.site_count})"
                    )
            key = (min(a, b), max(a, b))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            canon.append(key)
        object.__setattr__(self, "edges", tuple(sorted(canon)))
        if self.coords is not None:
            if len(self.coords) != self.site_count:
                raise ValueError(
                    f"coords has {len(self.coords)} entries for {self.site_count} sites"
                )
            object.__setattr__(
                self, "coords", tuple((float(x), float(y)) for x, y in self.coords)
            )
        unreachable = _unreachable_from_zero(self.site_count, self.edges)
        if unreachable:
            raise ValueError(
                f"graph is disconnected: site {min(unreachable)} unreachable from site 0"
            )

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def neighbors(self, site: int) -> tuple[int, ...]:
        _check_site(self, site)
        out = [b for a, b in self.edges if a == site]
        out += [a for a, b in self.edges if b == site]
        return tuple(sorted(out))

    def to_dict(self) -> dict:
        doc: dict = {"sites": self.site_count, "edges": [list(e) for e in self.edges]}
        if self.coords is not None:
            doc["coords"] = [list(c) for c in self.coords]
        doc["label"] = self.label
        return doc


@dataclass(frozen=True)
class OperatorSitePair:
    """Pair of distinct sites carrying the two local operators."""

    i: int
    j: int

    def __post_init__(self) -> None:
        if self.i == self.j:
            raise ValueError(f"operator sites must differ, got i = j = {self.i}")
        if self.i < 0 or self.j < 0:
            raise ValueError(f"operator sites must be non-negative, got ({self.i}, {self.j})")

    def validate_for(self, graph: LatticeGraph) -> None:
        for s in (self.i, self.j):
            if s >= graph.site_count:
                raise ValueError(
                    f"operator site {s} out of range for {graph.site_count}-site graph"
                )


@dataclass(frozen=True)
class PresetEntry:
    """One registry row: a named geometry plus its documented operator pairs."""

    name: str
    variant: int
    graph: LatticeGraph
    operator_pairs: Mapping[str, OperatorSitePair]
    default_pair: str
    note: str = ""

    @property
    def pair(self) -> OperatorSitePair:
        return self.operator_pairs[self.default_pair]


def _unreachable_from_zero(n: int, edges: Iterable[tuple[int, int]]) -> set[int]:
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return set(range(n)) - seen


def _check_site(graph: LatticeGraph, site: int) -> None:
    if not 0 <= site < graph.site_count:
        raise IndexError(f"site {site} out of range [0, {graph.site_count})")


def graph_distance(graph: LatticeGraph, i: int, j: int) -> int:
    """Shortest path length between two sites, in edge hops."""
    _check_site(graph, i)
    _check_site(graph, j)
    if i == j:
        return 0
    adj: list[list[int]] = [[] for _ in range(graph.site_count)]
    for a, b in graph.edges:
        adj[a].append(b)
        adj[b].append(a)
    dist = {i: 0}
    queue = deque([i])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                if v == j:
                    return dist[v]
                queue.append(v)
    raise ValueError(f"no path between sites {i} and {j}")  # unreachable: graph connected


def distance_matrix(graph: LatticeGraph) -> list[list[int]]:
    """All-pairs hop distances (BFS from every site)."""
    return [
        [graph_distance(graph, i, j) for j in range(graph.site_count)]
        for i in range(graph.site_count)
    ]


def max_distance_pair(graph: LatticeGraph) -> OperatorSitePair:
    """Lexicographically smallest site pair realizing the graph diameter."""
    best: tuple[int, int] | None = None
    best_d = -1
    for i in range(graph.site_count):
        for j in range(i + 1, graph.site_count):
            d = graph_distance(graph, i, j)
            if d > best_d:
                best_d, best = d, (i, j)
    assert best is not None
    return OperatorSitePair(*best)


def load_graph(document: str | bytes | Mapping) -> LatticeGraph:
    """Build a validated LatticeGraph from a JSON document or parsed mapping.

    Schema: ``{"sites": int, "edges": [[a, b], ...], "coords": [[x, y], ...]?,
    "label": str?}``.
    """
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ValueError(f"lattice document is not valid JSON: {exc}") from exc
    else:
        doc = document
    if not isinstance(doc, Mapping):
        raise ValueError(f"lattice document must be a JSON object, got {type(doc).__name__}")
    for key in ("sites", "edges"):
        if key not in doc:
            raise ValueError(f"lattice document missing required key '{key}'")
    sites = doc["sites"]
    if not isinstance(sites, int) or isinstance(sites, bool):
        raise ValueError(f"'sites' must be an integer, got {sites!r}")
    raw_edges = doc["edges"]
    if not isinstance(raw_edges, Sequence) or isinstance(raw_edges, (str, bytes)):
        raise ValueError("'edges' must be a list of [a, b] pairs")
    edges = []
    for k, e in enumerate(raw_edges):
        if (
            not isinstance(e, Sequence)
            or len(e) != 2
            or not all(isinstance(s, int) and not isinstance(s, bool) for s in e)
        ):
            raise ValueError(f"edge #{k} must be a pair of site indices, got {e!r}")
        edges.append((e[0], e[1]))
    coords = None
    if doc.get("coords") is not None:
        raw = doc["coords"]
        if not isinstance(raw, Sequence) or any(
            not isinstance(c, Sequence) or len(c) != 2 for c in raw
        ):
            raise ValueError("'coords' must be a list of [x, y] pairs")
        coords = tuple((float(c[0]), float(c[1])) for c in raw)
    label = doc.get("label", "custom")
    if not isinstance(label, str):
        raise ValueError(f"'label' must be a string, got {label!r}")
    return LatticeGraph(site_count=sites, edges=tuple(edges), coords=coords, label=label)


# ---------------------------------------------------------------------------
# Preset geometries
# ---------------------------------------------------------------------------
#
# Site numbering diagrams (top/bottom rows run left to right):
#
# hex_strip(n) -- n fused hexagons in a row, 4n+2 sites, 5n+1 edges.
#   top row:    0 .. 2n          bottom row: 2n+1 .. 4n+1
#   top and bottom rows are paths; vertical rungs sit at even columns.
#   n = 1:        0 - 1 - 2
#                 |       |
#                 3 - 4 - 5
#   n = 2:        0 - 1 - 2 - 3 - 4
#                 |       |       |
#                 5 - 6 - 7 - 8 - 9
#
# hex_flake(3) -- three hexagons fused around a central vertex, 13 sites,
# 15 edges. Site 0 is the center, 1..3 its neighbors, 4..12 the outer ring:
#   hexagon k (k = 0, 1, 2): 0 - (1+k) - (4+3k) - (5+3k) - (6+3k) - (1+(k+1)%3) - 0
#
# triangle_pair -- two triangles sharing edge (1, 2):
#       0           sites 0 and 3 are the apexes
#      / \
#     1 - 2
#      \ /
#       3
#
# square_pair -- two squares sharing the middle rung (1, 4):
#     0 - 1 - 2
#     |   |   |
#     3 - 4 - 5
#
# tri_square -- a square with a triangle on edge (1, 2):
#     0 - 1
#     |   | \
#     |   |  4
#     |   | /
#     3 - 2
#
# Operator-pair placements are package conventions (the geometries pin the
# Hamiltonian; where the two local operators sit is configurable everywhere).

PRESET_NAMES = (
    "chain_pbc",
    "triangle_pair",
    "square_pair",
    "tri_square",
    "hex_strip",
    "hex_flake",
)

_HEX_COUNT_RANGE = (1, 3)


def _hex_strip_graph(n: int) -> LatticeGraph:
    top = list(range(2 * n + 1))
    bot = [2 * n + 1 + k for k in range(2 * n + 1)]
    edges = [(top[k], top[k + 1]) for k in range(2 * n)]
    edges += [(bot[k], bot[k + 1]) for k in range(2 * n)]
    edges += [(top[k], bot[k]) for k in range(0, 2 * n + 1, 2)]
    s3 = math.sqrt(3.0) / 2.0
    coords = [(s3 * k, 1.5 + 0.5 * (k % 2)) for k in range(2 * n + 1)]
    coords += [(s3 * k, 0.5 - 0.5 * (k % 2)) for k in range(2 * n + 1)]
    return LatticeGraph(4 * n + 2, tuple(edges), tuple(coords), f"hex_strip_{n}")


def _hex_flake3_graph() -> LatticeGraph:
    edges = [(0, 1), (0, 2), (0, 3)]
    for k in range(3):
        ring = [1 + k, 4 + 3 * k, 5 + 3 * k, 6 + 3 * k, 1 + (k + 1) % 3]
        edges += [(ring[m], ring[m + 1]) for m in range(4)]
    coords = [(0.0, 0.0)] + [
        (math.cos(math.radians(90 + 120 * k)), math.sin(math.radians(90 + 120 * k)))
        for k in range(3)
    ]
    for k in range(3):
        ck = math.radians(150 + 120 * k)
        cx, cy = math.cos(ck), math.sin(ck)
        for m in (2, 3, 4):
            phi = math.radians(-30 + 120 * k + 60 * m)
            coords.append((cx + math.cos(phi), cy + math.sin(phi)))
    return LatticeGraph(13, tuple(edges), tuple(coords), "hex_flake_3")


def _ring_graph(length: int) -> LatticeGraph:
    edges = tuple((k, (k + 1) % length) for k in range(length))
    coords = tuple(
        (math.cos(2 * math.pi * k / length), math.sin(2 * math.pi * k / length))
        for k in range(length)
    )
    return LatticeGraph(length, edges, coords, f"chain_pbc_{length}")


def _hex_pairs(graph: LatticeGraph) -> dict[str, OperatorSitePair]:
    return {
        "neighboring": OperatorSitePair(0, 1),
        "distant": max_distance_pair(graph),
    }


def build_preset(name: str, variant: int) -> LatticeGraph:
    """Canonical graph for a named preset; see the registry for pair choices."""
    return preset_entry(name, variant).graph


def preset_entry(name: str, variant: int) -> PresetEntry:
    """Graph plus documented operator pairs for a named preset variant."""
    if name not in PRESET_NAMES:
        raise ValueError(f"unknown preset '{name}' (known: {', '.join(PRESET_NAMES)})")

    if name == "chain_pbc":
        if variant < 3:
            raise ValueError(f"chain_pbc needs at least 3 sites, got {variant}")
        graph = _ring_graph(variant)
        pairs = {"neighboring": OperatorSitePair(0, 1), "distant": max_distance_pair(graph)}
        return PresetEntry(name, variant, graph, pairs, "neighboring", "ring of sites")

    if name in ("hex_strip", "hex_flake"):
        lo, hi = _HEX_COUNT_RANGE
        if not lo <= variant <= hi:
            raise ValueError(f"{name} supports {lo}..{hi} hexagons, got {variant}")
        if name == "hex_flake" and variant == 3:
            graph = _hex_flake3_graph()
            note = "three hexagons fused around a central vertex"
        else:
            # A flake of 1 or 2 hexagons coincides with the strip of the same size.
            graph = _hex_strip_graph(variant)
            note = f"{variant} fused hexagon(s) in a row"
        return PresetEntry(name, variant, graph, _hex_pairs(graph), "distant", note)

    if name == "triangle_pair":
        graph = LatticeGraph(
            4,
            ((0, 1), (0, 2), (1, 2), (1, 3), (2, 3)),
            ((0.5, 0.87), (0.0, 0.0), (1.0, 0.0), (0.5, -0.87)),
            "triangle_pair",
        )
        placements = {1: OperatorSitePair(0, 3), 2: OperatorSitePair(0, 1)}
        notes = {1: "operators on the two apexes", 2: "operators on adjacent sites"}
    elif name == "square_pair":
        graph = LatticeGraph(
            6,
            ((0, 1), (1, 2), (3, 4), (4, 5), (0, 3), (1, 4), (2, 5)),
            ((0.0, 1.0), (1.0, 1.0), (2.0, 1.0), (0.0, 0.0), (1.0, 0.0), (2.0, 0.0)),
            "square_pair",
        )
        placements = {
            1: OperatorSitePair(0, 1),
            2: OperatorSitePair(0, 2),
            3: OperatorSitePair(0, 5),
        }
        notes = {
            1: "operators on adjacent corners",
            2: "operators across the top row",
            3: "operators on opposite corners",
        }
    else:  # tri_square
        graph = LatticeGraph(
            5,
            ((0, 1), (1, 2), (2, 3), (0, 3), (1, 4), (2, 4)),
            ((0.0, 1.0), (1.0, 1.0), (1.0, 0.0), (0.0, 0.0), (1.87, 0.5)),
            "tri_square",
        )
        placements = {
            1: OperatorSitePair(0, 1),
            2: OperatorSitePair(3, 4),
            3: OperatorSitePair(0, 2),
        }
        notes = {
            1: "operators on adjacent square corners",
            2: "operators on a far corner and the apex",
            3: "operators across the square diagonal",
        }
    if variant not in placements:
        raise ValueError(
            f"{name} has variants {sorted(placements)}, got {variant}"
        )
    return PresetEntry(
        name, variant, graph, {"default": placements[variant]}, "default", notes[variant]
    )


def preset_registry() -> tuple[PresetEntry, ...]:
    """All presets in stable listing order (chain_pbc shown at 6 sites)."""
    entries = [preset_entry("chain_pbc", 6)]
    for name in ("triangle_pair", "square_pair", "tri_square"):
        n_variants = 2 if name == "triangle_pair" else 3
        entries += [preset_entry(name, v) for v in range(1, n_variants + 1)]
    entries += [preset_entry("hex_strip", n) for n in (1, 2, 3)]
    entries += [preset_entry("hex_flake", n) for n in (1, 2, 3)]
    return tuple(entries)
