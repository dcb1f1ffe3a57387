"""Sequential exploration: degree-greedy and uniform greedy.

Both engines share one loop. At each step a vertex is activated, its
unexplored neighbours are blocked, and all of them leave the remaining
graph. Remaining degrees count half-edges towards unexplored vertices, so a
parallel edge counts twice and a self-loop counts 2.

Self-looped vertices can never be active. They stay in the remaining graph
(and count towards their neighbours' degrees) but are never candidates;
whatever is left of them when no candidate remains is blocked at the end.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .errors import InvalidSequence
from .graphgen import MultiGraph
from .rng import py_random


@dataclass(frozen=True)
class SelectionSequence:
    vertices: tuple
    selected_degrees: tuple

    def __len__(self):
        return len(self.vertices)


@dataclass(frozen=True)
class ExplorationResult:
    sequence: SelectionSequence
    sigma: int
    t1_violations: int
    first_violation_step: int | None = None
    remaining_nu_at_first_violation: float | None = None
    remaining_fraction_at_first_violation: float | None = None
    n: int = 0

    def record(self, seed=None) -> dict:
        return {
            "sigma": self.sigma,
            "n": self.n,
            "t1_violations": self.t1_violations,
            "first_violation_step": self.first_violation_step,
            "remaining_nu_at_first_violation": self.remaining_nu_at_first_violation,
            "seed": seed,
        }

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "vertex", "degree_at_selection"])
        for step, (v, d) in enumerate(zip(self.sequence.vertices, self.sequence.selected_degrees)):
            w.writerow([step, v, d])
        return buf.getvalue()


class Verdict(NamedTuple):
    independent: bool
    maximal: bool
    t1: bool


class _Buckets:
    """Vertices keyed by remaining degree; O(1) insert, delete and uniform pick."""

    def __init__(self, deg, members, max_degree):
        self.deg = deg
        self.buckets = [[] for _ in range(max_degree + 1)]
        self.pos = [0] * len(deg)
        self.size = 0
        self.low = 0
        for v in members:
            self.add(v)

    def add(self, v):
        b = self.buckets[self.deg[v]]
        self.pos[v] = len(b)
        b.append(v)
        self.size += 1
        if self.deg[v] < self.low:
            self.low = self.deg[v]

    def remove(self, v):
        b = self.buckets[self.deg[v]]
        i = self.pos[v]
        last = b.pop()
        if last != v:
            b[i] = last
            self.pos[last] = i
        self.size -= 1

    def decrement(self, v):
        self.remove(v)
        self.deg[v] -= 1
        self.add(v)

    def pick(self, rnd):
        while not self.buckets[self.low]:
            self.low += 1
        b = self.buckets[self.low]
        return b[int(rnd() * len(b))]


class _Pool:
    """Unordered candidate set with uniform pick; degrees tracked outside."""

    def __init__(self, deg, members):
        self.deg = deg
        self.items = list(members)
        self.pos = [0] * len(deg)
        for i, v in enumerate(self.items):
            self.pos[v] = i

    @property
    def size(self):
        return len(self.items)

    def remove(self, v):
        i = self.pos[v]
        last = self.items.pop()
        if last != v:
            self.items[i] = last
            self.pos[last] = i

    def decrement(self, v):
        self.deg[v] -= 1

    def pick(self, rnd):
        return self.items[int(rnd() * len(self.items))]


def _run(g: MultiGraph, rng, policy: str) -> ExplorationResult:
    rnd = py_random(rng).random
    indptr, nbr, _ = g.csr
    n = g.n
    deg = g.degree.tolist()
    eligible = [not x for x in g.self_looped.tolist()]
    alive = bytearray(b"\x01") * n
    members = [v for v in range(n) if eligible[v]]
    if policy == "degree":
        cand = _Buckets(deg, members, max(deg, default=0))
    else:
        cand = _Pool(deg, members)

    vertices, degrees = [], []
    violations = 0
    first_step = first_nu = first_frac = None
    alive_count = n
    while cand.size:
        v = cand.pick(rnd)
        d = deg[v]
        if d >= 2:
            violations += 1
            if first_step is None:
                first_step = len(vertices)
                s1 = s2 = 0
                for x in range(n):
                    if alive[x]:
                        s1 += deg[x]
                        s2 += deg[x] * (deg[x] - 1)
                first_nu = s2 / s1
                first_frac = alive_count / n
        vertices.append(v)
        degrees.append(d)

        cand.remove(v)
        alive[v] = 0
        gone = [v]
        for i in range(indptr[v], indptr[v + 1]):
            w = nbr[i]
            if alive[w]:
                alive[w] = 0
                gone.append(w)
                if eligible[w]:
                    cand.remove(w)
        alive_count -= len(gone)
        for x in gone:
            for i in range(indptr[x], indptr[x + 1]):
                y = nbr[i]
                if alive[y]:
                    if eligible[y]:
                        cand.decrement(y)
                    else:
                        deg[y] -= 1

    return ExplorationResult(
        sequence=SelectionSequence(tuple(vertices), tuple(degrees)),
        sigma=len(vertices),
        t1_violations=violations,
        first_violation_step=first_step,
        remaining_nu_at_first_violation=first_nu,
        remaining_fraction_at_first_violation=first_frac,
        n=n,
    )


def degree_greedy(g: MultiGraph, rng) -> ExplorationResult:
    """Activate a uniformly chosen vertex of minimum remaining degree until none is left."""
    return _run(g, rng, "degree")


def uniform_greedy(g: MultiGraph, rng) -> ExplorationResult:
    """Activate a uniformly chosen unexplored vertex until none is left."""
    return _run(g, rng, "uniform")


def verify_selection_sequence(g: MultiGraph, w: SelectionSequence | Sequence[int]) -> Verdict:
    """Replay ``w`` on ``g`` and check independence, maximality and the T1 property.

    Degrees are recomputed on the remaining graph at every step. Maximality
    ignores self-looped vertices, which no independent set can contain.
    """
    verts = w.vertices if isinstance(w, SelectionSequence) else tuple(w)
    indptr, nbr, _ = g.csr
    deg = g.degree.tolist()
    loops = g.self_looped.tolist()
    alive = bytearray(b"\x01") * g.n
    independent = t1 = True
    for step, v in enumerate(verts):
        if not 0 <= v < g.n:
            raise InvalidSequence(f"vertex {v} out of range")
        if not alive[v]:
            raise InvalidSequence(f"vertex {v} at step {step} was already explored")
        if loops[v]:
            independent = False
        if deg[v] > 1:
            t1 = False
        alive[v] = 0
        gone = [v]
        for i in range(indptr[v], indptr[v + 1]):
            u = nbr[i]
            if alive[u]:
                alive[u] = 0
                gone.append(u)
        for x in gone:
            for i in range(indptr[x], indptr[x + 1]):
                y = nbr[i]
                if alive[y]:
                    deg[y] -= 1
    maximal = all(not alive[v] or loops[v] for v in range(g.n))
    return Verdict(independent, maximal, t1)
