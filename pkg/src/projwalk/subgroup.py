"""Folded core graphs (Stallings graphs) of finitely generated subgroups of F_k."""

from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .words import Word, as_word


@dataclass(frozen=True)
class SubgroupGraph:
    """Folded core graph with basepoint 0.

    ``edges`` holds (from, to, generator index) triples read in the positive
    direction.  The graph is folded (no two edges with the same label leave or
    enter a vertex) and core (every non-basepoint vertex has degree >= 2).
    """

    rank: int
    num_vertices: int
    edges: tuple[tuple[int, int, int], ...]
    basepoint: int = 0

    def __post_init__(self):
        if self.basepoint != 0:
            raise ValueError("basepoint must be vertex 0 (renumber before constructing)")
        if self.num_vertices < 1:
            raise ValueError("graph needs at least one vertex")
        seen = set()
        deg = [0] * self.num_vertices
        for u, v, g in self.edges:
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise ValueError(f"edge ({u}, {v}, {g}) references a missing vertex")
            if not 0 <= g < self.rank:
                raise ValueError(f"edge label {g} outside rank {self.rank}")
            for key in ((u, 2 * g), (v, 2 * g + 1)):
                if key in seen:
                    raise ValueError(f"graph is not folded at vertex {key[0]}")
                seen.add(key)
            deg[u] += 1
            deg[v] += 1
        for x in range(1, self.num_vertices):
            if deg[x] < 2:
                raise ValueError(f"graph is not core: vertex {x} has degree {deg[x]}")
        if not self.edges:
            raise ValueError("trivial subgroup")
        if len(seen) == 2 * self.rank * self.num_vertices:
            raise ValueError("subgroup has finite index; its cosets give no projection system")
        # connectivity
        dist = self._bfs_dist()
        if np.any(dist < 0):
            raise ValueError("graph is not connected")

    # construction -------------------------------------------------------------
    @classmethod
    def cyclic(cls, axis: int = 0, rank: int = 2) -> "SubgroupGraph":
        return cls(rank, 1, ((0, 0, axis),))

    @classmethod
    def from_generators(cls, gens: Sequence[Word | str], rank: int | None = None) -> "SubgroupGraph":
        words = [as_word(g) for g in gens]
        words = [w for w in words if len(w)]
        if not words:
            raise ValueError("trivial subgroup")
        if rank is None:
            rank = max(2, 1 + max(w.max_generator() for w in words))
        edges: set[tuple[int, int, int]] = set()
        nverts = 1
        for w in words:
            prev = 0
            for pos, c in enumerate(w.codes):
                if pos == len(w) - 1:
                    nxt = 0
                else:
                    nxt = nverts
                    nverts += 1
                g = c >> 1
                edges.add((prev, nxt, g) if c & 1 == 0 else (nxt, prev, g))
                prev = nxt
        edges = _fold(edges)
        edges = _prune(edges)
        return cls._renumbered(rank, edges)

    @classmethod
    def _renumbered(cls, rank: int, edges: Iterable[tuple[int, int, int]]) -> "SubgroupGraph":
        edges = set(edges)
        adj: dict[int, dict[int, int]] = {}
        for u, v, g in edges:
            adj.setdefault(u, {})[2 * g] = v
            adj.setdefault(v, {})[2 * g + 1] = u
        order = {0: 0}
        queue = deque([0])
        while queue:
            x = queue.popleft()
            for c in sorted(adj.get(x, {})):
                y = adj[x][c]
                if y not in order:
                    order[y] = len(order)
                    queue.append(y)
        new_edges = tuple(sorted((order[u], order[v], g) for u, v, g in edges))
        return cls(rank, len(order), new_edges)

    # serialization ---------------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "num_vertices": self.num_vertices,
            "basepoint": self.basepoint,
            "edges": [list(e) for e in self.edges],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SubgroupGraph":
        edges = tuple(tuple(int(x) for x in e) for e in data["edges"])
        return cls(int(data["rank"]), int(data["num_vertices"]), edges, int(data.get("basepoint", 0)))

    @cached_property
    def id(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return "Q" + hashlib.sha256(blob.encode()).hexdigest()[:10]

    # derived tables --------------------------------------------------------------
    @cached_property
    def delta(self) -> np.ndarray:
        d = np.full((self.num_vertices, 2 * self.rank), -1, dtype=np.int64)
        for u, v, g in self.edges:
            d[u, 2 * g] = v
            d[v, 2 * g + 1] = u
        return d

    def _bfs_dist(self) -> np.ndarray:
        d = np.full((self.num_vertices, 2 * self.rank), -1, dtype=np.int64)
        for u, v, g in self.edges:
            d[u, 2 * g] = v
            d[v, 2 * g + 1] = u
        dist = np.full(self.num_vertices, -1, dtype=np.int64)
        dist[0] = 0
        queue = deque([0])
        while queue:
            x = queue.popleft()
            for c in range(2 * self.rank):
                y = d[x, c]
                if y >= 0 and dist[y] < 0:
                    dist[y] = dist[x] + 1
                    queue.append(y)
        return dist

    @cached_property
    def dist_to_base(self) -> np.ndarray:
        return self._bfs_dist()

    @cached_property
    def path_table(self) -> tuple[np.ndarray, np.ndarray]:
        """Greedy (lexicographically least) shortest path from each vertex to 0."""
        dist = self.dist_to_base
        width = max(1, int(dist.max()))
        paths = np.zeros((self.num_vertices, width), dtype=np.int8)
        plens = np.zeros(self.num_vertices, dtype=np.int64)
        delta = self.delta
        for v in range(self.num_vertices):
            x = v
            k = 0
            while x != 0:
                for c in range(2 * self.rank):
                    y = delta[x, c]
                    if y >= 0 and dist[y] == dist[x] - 1:
                        paths[v, k] = c
                        k += 1
                        x = y
                        break
            plens[v] = k
        return paths, plens

    @property
    def tables(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        paths, plens = self.path_table
        return self.delta, paths, plens

    @cached_property
    def cyclic_axis(self) -> int | None:
        """Generator index if this is a single loop (Q = <axis>), else None."""
        if self.num_vertices == 1 and len(self.edges) == 1:
            return self.edges[0][2]
        return None

    # group-theoretic queries ---------------------------------------------------------
    def read(self, w: Word, start: int = 0) -> tuple[int, int]:
        """(length of longest readable prefix, vertex reached)."""
        v = start
        delta = self.delta
        for j, c in enumerate(w.codes):
            nv = delta[v, c]
            if nv < 0:
                return j, v
            v = int(nv)
        return len(w), v

    def contains(self, w: Word) -> bool:
        m, v = self.read(w)
        return m == len(w) and v == 0

    def path_word(self, v: int) -> Word:
        paths, plens = self.path_table
        return Word(tuple(int(c) for c in paths[v, : plens[v]]))

    def generators(self) -> list[Word]:
        """A free basis read off a BFS spanning tree."""
        delta = self.delta
        tree_word: dict[int, Word] = {0: Word.identity()}
        tree_edges = set()
        queue = deque([0])
        while queue:
            x = queue.popleft()
            for c in range(2 * self.rank):
                y = int(delta[x, c])
                if y >= 0 and y not in tree_word:
                    tree_word[y] = tree_word[x] * Word((c,))
                    tree_edges.add((x, c))
                    tree_edges.add((y, c ^ 1))
                    queue.append(y)
        gens = []
        for u, v, g in self.edges:
            if (u, 2 * g) in tree_edges:
                continue
            gens.append(tree_word[u] * Word((2 * g,)) * tree_word[v].inverse())
        return gens


def _fold(edges: set[tuple[int, int, int]]) -> set[tuple[int, int, int]]:
    edges = set(edges)
    while True:
        seen: dict[tuple[int, int], int] = {}
        merge = None
        for u, v, g in edges:
            for key, other in (((u, 2 * g), v), ((v, 2 * g + 1), u)):
                if key in seen and seen[key] != other:
                    merge = (seen[key], other)
                    break
                seen[key] = other
            if merge:
                break
        if merge is None:
            return edges
        keep, drop = sorted(merge)
        edges = {(keep if u == drop else u, keep if v == drop else v, g) for u, v, g in edges}


def _prune(edges: set[tuple[int, int, int]]) -> set[tuple[int, int, int]]:
    edges = set(edges)
    while True:
        deg: dict[int, int] = {}
        for u, v, _ in edges:
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
        hairs = {x for x, d in deg.items() if d < 2 and x != 0}
        if not hairs:
            return edges
        edges = {e for e in edges if e[0] not in hairs and e[1] not in hairs}
