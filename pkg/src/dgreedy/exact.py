"""Exact independence numbers for desk-scale verification.

The multigraph is first reduced to a simple graph: self-looped vertices
are deleted (they can never be independent) and parallel edges collapse.
Vertex sets are Python ints used as bitsets.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded, TooLarge
from .graphgen import MultiGraph

DEFAULT_BUDGET = 10_000_000
BRUTE_MAX_N = 25


@dataclass(frozen=True)
class ExactResult:
    alpha: int
    nodes_explored: int
    witness: frozenset

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "nodes_explored": self.nodes_explored}


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _reduced_adjacency(g: MultiGraph) -> tuple[list[int], int]:
    """Bitset adjacency of the simple reduction and the mask of usable vertices."""
    loops = g.self_looped
    adj = [0] * g.n
    for u, v in g.edges.tolist():
        if u != v and not loops[u] and not loops[v]:
            adj[u] |= 1 << v
            adj[v] |= 1 << u
    usable = 0
    for v in range(g.n):
        if not loops[v]:
            usable |= 1 << v
    return adj, usable


def _component(adj: list[int], S: int, root: int) -> int:
    comp = frontier = 1 << root
    while frontier:
        reach = 0
        for v in _bits(frontier):
            reach |= adj[v]
        frontier = reach & S & ~comp
        comp |= frontier
    return comp


def _components(adj, S):
    while S:
        root = (S & -S).bit_length() - 1
        c = _component(adj, S, root)
        yield c
        S &= ~c


class _Solver:
    def __init__(self, adj: list[int], budget: int, upper: int = 0):
        self.adj = adj
        self.budget = budget
        self.upper = upper
        self.nodes = 0
        self.best_total = 0
        self.best = 0  # incumbent of the component being branched on

    def _tick(self):
        self.nodes += 1
        if self.nodes > self.budget:
            raise BudgetExceeded(f"search exceeded {self.budget} nodes",
                                 best=self.best_total + self.best.bit_count(), upper=self.upper)

    def reduce(self, S: int) -> tuple[int, int]:
        """Exhaust degree-0 and degree-1 vertices; returns (taken set, remaining set)."""
        adj = self.adj
        taken = 0
        changed = True
        while changed:
            changed = False
            for v in _bits(S):
                if not (S >> v) & 1:
                    continue
                nb = adj[v] & S
                if nb & (nb - 1) == 0:  # degree 0 or 1
                    taken |= 1 << v
                    S &= ~((1 << v) | nb)
                    changed = True
        return taken, S

    def _cycle(self, S: int) -> int:
        # Connected 2-regular component: take every other vertex along the cycle.
        start = (S & -S).bit_length() - 1
        order = [start]
        prev, cur = -1, start
        while True:
            nb = self.adj[cur] & S
            nxt = next(w for w in _bits(nb) if w != prev)
            if nxt == start:
                break
            order.append(nxt)
            prev, cur = cur, nxt
        chosen = 0
        for v in order[0: 2 * (len(order) // 2): 2]:
            chosen |= 1 << v
        return chosen

    def _greedy(self, S: int) -> int:
        adj = self.adj
        chosen = 0
        while S:
            v = min(_bits(S), key=lambda x: (adj[x] & S).bit_count())
            chosen |= 1 << v
            S &= ~((1 << v) | adj[v])
        return chosen

    def _matching_size(self, S: int) -> int:
        adj = self.adj
        free = S
        size = 0
        for v in _bits(S):
            if (free >> v) & 1:
                nb = adj[v] & free & ~(1 << v)
                if nb:
                    w = (nb & -nb).bit_length() - 1
                    free &= ~((1 << v) | (1 << w))
                    size += 1
        return size

    def solve(self, S: int) -> int:
        """Maximum independent set (as a bitset) of the subgraph induced by S."""
        self._tick()
        taken, S = self.reduce(S)
        if not S:
            return taken
        comps = list(_components(self.adj, S))
        if len(comps) > 1:
            for c in comps:
                taken |= self.solve(c)
            return taken
        if all((self.adj[v] & S).bit_count() == 2 for v in _bits(S)):
            return taken | self._cycle(S)
        best = self._greedy(S)
        self.best = best
        self._branch(S, 0)
        return taken | self.best

    def _branch(self, S: int, acc: int):
        self._tick()
        extra, S = self.reduce(S)
        acc |= extra
        if not S:
            if acc.bit_count() > self.best.bit_count():
                self.best = acc
            return
        if acc.bit_count() + S.bit_count() - self._matching_size(S) <= self.best.bit_count():
            return
        comps = list(_components(self.adj, S))
        if len(comps) > 1:
            saved = self.best
            total = acc
            for c in comps:
                total |= self.solve(c)
            self.best = saved
            if total.bit_count() > self.best.bit_count():
                self.best = total
            return
        v = max(_bits(S), key=lambda x: (self.adj[x] & S).bit_count())
        self._branch(S & ~((1 << v) | self.adj[v]), acc | (1 << v))
        self._branch(S & ~(1 << v), acc)


def exact_alpha(g: MultiGraph, budget: int = DEFAULT_BUDGET) -> ExactResult:
    """Branch and bound over connected components with degree <= 1 reductions."""
    adj, usable = _reduced_adjacency(g)
    solver = _Solver(adj, budget, upper=usable.bit_count())
    witness = 0
    for comp in _components(adj, usable):
        witness |= solver.solve(comp)
        solver.best_total = witness.bit_count()
        solver.best = 0
    return ExactResult(alpha=witness.bit_count(), nodes_explored=solver.nodes, witness=frozenset(_bits(witness)))


def degree_one_reduction(g: MultiGraph) -> tuple[frozenset, MultiGraph]:
    """Exhaust the degree-0/1 rules on the simple reduction of ``g``.

    Returns the forced vertices and the graph induced on what is left
    (relabelled 0..k-1). alpha(g) = len(forced) + alpha(rest).
    """
    adj, usable = _reduced_adjacency(g)
    taken, rest = _Solver(adj, DEFAULT_BUDGET).reduce(usable)
    keep = list(_bits(rest))
    index = {v: i for i, v in enumerate(keep)}
    pairs = {(index[u], index[v]) for u in keep for v in _bits(adj[u] & rest) if u < v}
    return frozenset(_bits(taken)), MultiGraph.from_edges(len(keep), sorted(pairs))


_POP16 = np.array([bin(i).count("1") for i in range(1 << 16)], dtype=np.int8)


def brute_alpha(g: MultiGraph) -> int:
    """Largest independent subset by checking every subset of the usable vertices."""
    if g.n > BRUTE_MAX_N:
        raise TooLarge(f"brute force limited to n <= {BRUTE_MAX_N}, got {g.n}")
    loops = g.self_looped
    keep = [v for v in range(g.n) if not loops[v]]
    index = {v: i for i, v in enumerate(keep)}
    pairs = {(min(index[u], index[v]), max(index[u], index[v]))
             for u, v in g.edges.tolist() if u != v and u in index and v in index}
    n = len(keep)
    best = 0
    chunk = 1 << 20
    for start in range(0, 1 << n, chunk):
        masks = np.arange(start, min(1 << n, start + chunk), dtype=np.uint32)
        ok = np.ones(masks.size, dtype=bool)
        for u, v in pairs:
            ok &= ((masks >> np.uint32(u)) & (masks >> np.uint32(v)) & np.uint32(1)) == 0
        if ok.any():
            good = masks[ok]
            counts = _POP16[good & np.uint32(0xFFFF)].astype(np.int32) + _POP16[good >> np.uint32(16)]
            best = max(best, int(counts.max()))
    return best
