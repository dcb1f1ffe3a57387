"""Configuration-model sampling and component statistics."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import AttemptsExhausted, OddDegreeSum
from .rng import as_generator
from .spectra import DegreeDistribution


@dataclass(frozen=True, eq=False)
class DegreeSequence:
    degrees: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.degrees, dtype=np.int64).ravel().copy()
        if np.any(d < 0):
            raise ValueError("degrees must be non-negative")
        d.setflags(write=False)
        object.__setattr__(self, "degrees", d)

    @property
    def n(self) -> int:
        return int(self.degrees.size)

    @property
    def total(self) -> int:
        return int(self.degrees.sum())

    def __len__(self):
        return self.n


def _as_degrees(degrees) -> np.ndarray:
    if isinstance(degrees, DegreeSequence):
        return degrees.degrees
    return DegreeSequence(degrees).degrees


@dataclass(frozen=True, eq=False)
class MultiGraph:
    """Multigraph on vertices 0..n-1; ``edges`` is an (m, 2) array, self-pairs allowed."""

    n: int
    edges: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2).copy()
        if e.size and (e.min() < 0 or e.max() >= self.n):
            raise ValueError("edge endpoint out of range")
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)

    @property
    def l_n(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def degree(self) -> np.ndarray:
        """Half-edge count per vertex; a self-loop contributes 2."""
        return np.bincount(self.edges.ravel(), minlength=self.n).astype(np.int64)

    @cached_property
    def self_looped(self) -> np.ndarray:
        loops = self.edges[self.edges[:, 0] == self.edges[:, 1], 0]
        mask = np.zeros(self.n, dtype=bool)
        mask[loops] = True
        return mask

    @cached_property
    def csr(self) -> tuple[list, list, list]:
        """(indptr, neighbour, edge id) as Python lists, one entry per half-edge."""
        m = self.l_n
        src = np.concatenate((self.edges[:, 0], self.edges[:, 1]))
        dst = np.concatenate((self.edges[:, 1], self.edges[:, 0]))
        eid = np.concatenate((np.arange(m), np.arange(m)))
        order = np.argsort(src, kind="stable")
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=self.n), out=indptr[1:])
        return indptr.tolist(), dst[order].tolist(), eid[order].tolist()

    def neighbours(self, v: int) -> list:
        indptr, nbr, _ = self.csr
        return nbr[indptr[v]:indptr[v + 1]]

    def simple_adjacency(self) -> list[set]:
        """Adjacency sets with multi-edges collapsed and self-loops dropped."""
        adj = [set() for _ in range(self.n)]
        for u, v in self.edges.tolist():
            if u != v:
                adj[u].add(v)
                adj[v].add(u)
        return adj

    def is_simple(self) -> bool:
        if self.l_n == 0:
            return True
        if np.any(self.edges[:, 0] == self.edges[:, 1]):
            return False
        pairs = np.sort(self.edges, axis=1)
        return np.unique(pairs, axis=0).shape[0] == self.l_n

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "MultiGraph":
        return cls(n, np.array(list(edges), dtype=np.int64).reshape(-1, 2))


@dataclass(frozen=True)
class ComponentStats:
    component_sizes: np.ndarray
    component_edges: np.ndarray
    revisit_counts: np.ndarray
    bad_vertices: int
    largest_component: int

    @property
    def is_tree(self) -> np.ndarray:
        return self.revisit_counts == 0


def sample_degrees(dist: DegreeDistribution, n: int, rng) -> DegreeSequence:
    """n i.i.d. degrees by inverse CDF; an odd total gets one uniform vertex bumped by 1."""
    gen = as_generator(rng)
    if n <= 0:
        return DegreeSequence(np.zeros(0, dtype=np.int64))
    cdf = np.cumsum(dist.mass)
    cdf /= cdf[-1]
    deg = np.searchsorted(cdf, gen.random(n), side="right")
    deg = np.minimum(deg, dist.truncation_K).astype(np.int64)
    if deg.sum() % 2:
        deg[gen.integers(n)] += 1
    return DegreeSequence(deg)


def sample_cm(degrees, rng) -> MultiGraph:
    """Uniform matching of half-edges (shuffle the stub list, pair consecutive stubs)."""
    gen = as_generator(rng)
    deg = _as_degrees(degrees)
    if deg.sum() % 2:
        raise OddDegreeSum(f"degree sum {int(deg.sum())} is odd")
    stubs = np.repeat(np.arange(deg.size, dtype=np.int64), deg)
    gen.shuffle(stubs)
    return MultiGraph(int(deg.size), stubs.reshape(-1, 2))


def condition_simple(degrees, rng, max_attempts: int = 1000) -> MultiGraph:
    gen = as_generator(rng)
    for _ in range(max_attempts):
        g = sample_cm(degrees, gen)
        if g.is_simple():
            return g
    raise AttemptsExhausted(f"no simple realization in {max_attempts} attempts")


def component_stats(g: MultiGraph) -> ComponentStats:
    """Breadth-first exploration of every component.

    Each edge is traversed once; a traversal that lands on an already visited
    vertex counts as a revisit, so self-loops and parallel edges count too and
    revisits = edges - (size - 1) per component.
    """
    indptr, nbr, eid = g.csr
    visited = bytearray(g.n)
    used = bytearray(g.l_n)
    sizes, n_edges, revisits = [], [], []
    for root in range(g.n):
        if visited[root]:
            continue
        visited[root] = 1
        queue = [root]
        size = edges = rev = 0
        head = 0
        while head < len(queue):
            v = queue[head]
            head += 1
            size += 1
            for i in range(indptr[v], indptr[v + 1]):
                e = eid[i]
                if used[e]:
                    continue
                used[e] = 1
                edges += 1
                w = nbr[i]
                if visited[w]:
                    rev += 1
                else:
                    visited[w] = 1
                    queue.append(w)
        sizes.append(size)
        n_edges.append(edges)
        revisits.append(rev)
    sizes_a = np.array(sizes, dtype=np.int64)
    rev_a = np.array(revisits, dtype=np.int64)
    return ComponentStats(
        component_sizes=sizes_a,
        component_edges=np.array(n_edges, dtype=np.int64),
        revisit_counts=rev_a,
        bad_vertices=int(sizes_a[rev_a > 0].sum()),
        largest_component=int(sizes_a.max()) if sizes_a.size else 0,
    )


# --- file formats ---------------------------------------------------------

def read_degree_sequence(path) -> DegreeSequence:
    return DegreeSequence([int(tok) for tok in Path(path).read_text().split()])


def write_degree_sequence(degrees, path) -> None:
    Path(path).write_text(" ".join(str(int(d)) for d in _as_degrees(degrees)) + "\n")


def format_edgelist(g: MultiGraph) -> str:
    lines = [f"{u} {v}" for u, v in g.edges.tolist()]
    return "\n".join(lines) + ("\n" if lines else "")


def write_edgelist(g: MultiGraph, path) -> None:
    Path(path).write_text(format_edgelist(g))


def read_edgelist(path, n: int | None = None) -> MultiGraph:
    """Parse "u v" lines; ``n`` defaults to the largest id + 1. Lines starting with # are skipped."""
    pairs = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        u, v = line.split()
        pairs.append((int(u), int(v)))
    if n is None:
        n = 1 + max((max(p) for p in pairs), default=-1)
    return MultiGraph.from_edges(n, pairs)
