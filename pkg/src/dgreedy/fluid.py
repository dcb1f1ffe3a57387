"""Two-phase stochastic matching, its closed-form fluid curves, and the pairing urn.

Phase 1 matches the half-edges of the initial degree-1 vertices; phase 2
resolves the free half-edges of blocked vertices. Because the configuration
model can be revealed lazily, both phases only need counts: the number of
free degree-1 half-edges (A), free blocked half-edges (B) and unexplored
vertices per degree (mu). Every event picks a uniform eligible half-edge and
a uniform free partner, with exponential holding times of rate U (the number
of free half-edges), which is distributionally exact.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputs
from .graphgen import MultiGraph, _as_degrees
from .rng import py_random
from .spectra import DegreeDistribution, _q_and_q_tilde, binomial_thinning, moments

DEFAULT_SAMPLE_DT = 0.01


@dataclass(frozen=True)
class FluidCurves:
    """Closed-form fluid limits of both phases.

    ``t1`` is the root of ``a`` (= -log Q), where ``u = Q**2 * lam``.
    Phase-2 quantities need the full distribution and are None without it.
    """

    lam: float
    p1: float
    q: float
    q_tilde: float | None = None
    lambda_tilde: float | None = None
    survivors: np.ndarray | None = field(default=None, repr=False)

    @property
    def t1(self) -> float:
        return math.inf if self.q == 0 else -math.log(self.q)

    @property
    def t2(self) -> float | None:
        if self.q_tilde is None:
            return None
        return math.inf if self.q_tilde == 0 else -math.log(self.q_tilde)

    def u1(self, t):
        return self.lam * np.exp(-2 * np.asarray(t, dtype=float))

    def a(self, t):
        t = np.asarray(t, dtype=float)
        return self.lam * np.exp(-2 * t) - (self.lam - self.p1) * np.exp(-t)

    def u2(self, t):
        """Free half-edges in phase 2, with t measured from the end of phase 1."""
        return self.q ** 2 * self.lam * np.exp(-2 * np.asarray(t, dtype=float))

    def b(self, t):
        t = np.asarray(t, dtype=float)
        return self.q ** 2 * self.lam * np.exp(-2 * t) - np.exp(-t) * self._need("lambda_tilde")

    def mu2(self, t: float) -> np.ndarray:
        """Unexplored vertices per degree (per n) at phase-2 time t."""
        return binomial_thinning(self._need("survivors"), math.exp(-t))

    def _need(self, name):
        value = getattr(self, name)
        if value is None:
            raise InvalidInputs("phase-2 curves need the degree distribution")
        return value


def fluid_curves(lam: float | None = None, p1: float | None = None,
                 dist: DegreeDistribution | None = None) -> FluidCurves:
    """Fluid curves from (lam, p1), or from ``dist`` when either is omitted."""
    if dist is not None:
        dl, _ = moments(dist)
        lam = dl if lam is None else lam
        p1 = dist.p(1) if p1 is None else p1
    if lam is None or p1 is None:
        raise InvalidInputs("need lam and p1, or a distribution")
    if lam <= 0:
        raise InvalidInputs(f"lambda must be positive, got {lam}")
    if not 0 < p1 <= lam:
        raise InvalidInputs(f"need 0 < p1 <= lambda, got p1={p1}, lambda={lam}")
    q = 1.0 - p1 / lam
    if dist is None:
        return FluidCurves(lam, p1, q)
    _, q_tilde = _q_and_q_tilde(dist.mass, lam)
    k = dist.degrees
    survivors = np.where(k >= 2, np.power(q, k) * dist.mass, 0.0)
    return FluidCurves(lam, p1, q, q_tilde, float(np.sum(k * survivors)), survivors)


@dataclass(frozen=True, eq=False)
class Population:
    """Counts carried between phases: free blocked half-edges, unexplored vertices per degree."""

    n: int
    blocked: int
    mu: np.ndarray

    @property
    def unpaired(self) -> int:
        return int(self.blocked + np.dot(np.arange(self.mu.size), self.mu))


@dataclass(frozen=True, eq=False)
class PhaseTrajectory:
    phase: int
    times: np.ndarray
    u: np.ndarray
    secondary: np.ndarray
    mu: np.ndarray
    n: int
    stop_time: float
    end: Population
    set_aside: int = 0
    seed: object = None

    def sup_deviation(self, curve, column: str = "u") -> float:
        """Largest |X_t / n - curve(t)| over the sampled times."""
        values = getattr(self, column)
        if values.size == 0:
            return 0.0
        return float(np.max(np.abs(values - curve(self.times))))


class _Sampler:
    def __init__(self, n, dt, K):
        self.n = max(n, 1)
        self.dt = dt
        self.next_t = 0.0
        self.rows = []
        self.K = K

    def until(self, t, U, X, mu):
        while self.next_t <= t:
            self.record(self.next_t, U, X, mu)
            self.next_t += self.dt

    def record(self, t, U, X, mu):
        self.rows.append((t, U / self.n, X / self.n, [m / self.n for m in mu]))

    def arrays(self):
        if not self.rows:
            return np.zeros(0), np.zeros(0), np.zeros(0), np.zeros((0, self.K + 1))
        t, u, x, mu = zip(*self.rows)
        return np.array(t), np.array(u), np.array(x), np.array(mu)


def _pick_class(weights, r):
    """Index k with cumulative weight first exceeding r (weights as a list)."""
    acc = 0.0
    for k, w in enumerate(weights):
        acc += w
        if r < acc:
            return k
    return len(weights) - 1


def simulate_phase1(degrees, rng, sample_dt: float = DEFAULT_SAMPLE_DT, seed=None) -> PhaseTrajectory:
    """Match degree-1 half-edges until none is free; degree-0 vertices are set aside at t = 0."""
    deg = _as_degrees(degrees)
    rnd = py_random(rng)
    n = int(deg.size)
    counts = np.bincount(deg, minlength=2).tolist() if n else [0, 0]
    K = len(counts) - 1
    set_aside = counts[0]
    A = counts[1]
    mu = [0, 0] + counts[2:]  # unexplored vertices of degree >= 2
    B = 0
    U = int(deg.sum())
    sampler = _Sampler(n, sample_dt, K)
    t = 0.0
    while A > 0:
        t_next = t + rnd.expovariate(U)
        sampler.until(t_next, U, A, [set_aside, A] + mu[2:])
        t = t_next
        A -= 1
        U -= 1
        r = rnd.random() * U
        if r < A:
            A -= 1
        elif r < A + B:
            B -= 1
        else:
            k = _pick_class([k * m if k >= 2 else 0 for k, m in enumerate(mu)], r - A - B)
            mu[k] -= 1
            B += k - 1
        U -= 1
    sampler.record(t, U, A, [set_aside, A] + mu[2:])
    times, u, a, mus = sampler.arrays()
    end = Population(n=n, blocked=B, mu=np.array(mu, dtype=np.int64))
    return PhaseTrajectory(1, times, u, a, mus, n, t, end, set_aside, seed)


def simulate_phase2(state: Population, rng, sample_dt: float = DEFAULT_SAMPLE_DT, seed=None) -> PhaseTrajectory:
    """Match free blocked half-edges until none is left; unexplored partners lose one degree."""
    rnd = py_random(rng)
    n = state.n
    mu = [int(m) for m in state.mu]
    B = int(state.blocked)
    U = B + sum(k * m for k, m in enumerate(mu))
    sampler = _Sampler(n, sample_dt, len(mu) - 1)
    t = 0.0
    if B == 0:
        times, u, b, mus = sampler.arrays()
        return PhaseTrajectory(2, times, u, b, mus, n, 0.0, state, 0, seed)
    while B > 0:
        t_next = t + rnd.expovariate(U)
        sampler.until(t_next, U, B, mu)
        t = t_next
        B -= 1
        U -= 1
        r = rnd.random() * U
        if r < B:
            B -= 1
        else:
            k = _pick_class([k * m for k, m in enumerate(mu)], r - B)
            mu[k] -= 1
            mu[k - 1] += 1
        U -= 1
    sampler.record(t, U, B, mu)
    times, u, b, mus = sampler.arrays()
    end = Population(n=n, blocked=0, mu=np.array(mu, dtype=np.int64))
    return PhaseTrajectory(2, times, u, b, mus, n, t, end, 0, seed)


def untouched_fractions(g: MultiGraph) -> dict[int, float]:
    """For each degree i >= 2 present in g, the fraction of its vertices with no degree-1 neighbour."""
    deg = g.degree
    touched = np.zeros(g.n, dtype=bool)
    if g.l_n:
        u, v = g.edges[:, 0], g.edges[:, 1]
        touched[u[deg[v] == 1]] = True
        touched[v[deg[u] == 1]] = True
    out = {}
    for i in np.unique(deg[deg >= 2]).tolist():
        cls = deg == i
        out[i] = float(1.0 - touched[cls].mean())
    return out


def ode_oracle(initial_mu, t_end: float, step: float = 1e-3) -> np.ndarray:
    """RK4 for d mu(k)/dt = (k+1) mu(k+1) - k mu(k) on the given support.

    The top class has no inflow. The step is shortened so step * K <= 1,
    which keeps the fastest mode inside the RK4 stability region.
    """
    mu = np.array(initial_mu, dtype=float)
    if step > 1e-3:
        raise InvalidInputs("step must be at most 1e-3")
    if t_end <= 0 or mu.size == 0:
        return mu
    k = np.arange(mu.size, dtype=float)
    K = max(1, mu.size - 1)
    steps = int(math.ceil(t_end / min(step, 1.0 / K)))
    h = t_end / steps

    def f(m):
        out = -k * m
        out[:-1] += k[1:] * m[1:]
        return out

    for _ in range(steps):
        k1 = f(mu)
        k2 = f(mu + 0.5 * h * k1)
        k3 = f(mu + 0.5 * h * k2)
        k4 = f(mu + h * k3)
        mu = mu + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return mu


@dataclass(frozen=True, eq=False)
class UrnRun:
    n: int
    k: int
    removed_red: np.ndarray  # R_i for i = 0..steps
    t_half: int | None

    @property
    def steps(self) -> int:
        return int(self.removed_red.size - 1)


def urn_simulate(n: int, k: int, rng) -> UrnRun:
    """Each step removes a red ball, then a uniform ball among the rest, until no red is left.

    An empty urn counts as red fraction 0. With n odd the last step may find
    only the red ball and remove it alone.
    """
    if n < 1 or not 0 <= k <= n:
        raise InvalidInputs(f"need n >= 1 and 0 <= k <= n, got n={n}, k={k}")
    rnd = py_random(rng).random
    red, balls = k, n
    removed = [0]
    t_half = 0 if 2 * red < balls else None
    i = 0
    while red > 0:
        red -= 1
        balls -= 1
        gone = 1
        if balls > 0:
            if rnd() * balls < red:
                red -= 1
                gone = 2
            balls -= 1
        i += 1
        removed.append(removed[-1] + gone)
        if t_half is None and (balls == 0 or 2 * red < balls):
            t_half = i
    return UrnRun(n, k, np.array(removed, dtype=np.int64), t_half)


# --- output --------------------------------------------------------------

def trajectory_csv(traj: PhaseTrajectory) -> str:
    K = traj.mu.shape[1] - 1 if traj.mu.ndim == 2 and traj.mu.shape[1] else -1
    header = ["t", "u", "a_or_b"] + [f"mu_{k}" for k in range(K + 1)]
    lines = [",".join(header)]
    for i in range(traj.times.size):
        row = [traj.times[i], traj.u[i], traj.secondary[i], *traj.mu[i]]
        lines.append(",".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def write_trajectory(traj: PhaseTrajectory, path, curves: FluidCurves | None = None) -> Path:
    """Write the CSV and a ``.json`` metadata sidecar next to it; returns the sidecar path."""
    path = Path(path)
    path.write_text(trajectory_csv(traj))
    closed = None
    if curves is not None:
        closed = curves.t1 if traj.phase == 1 else curves.t2
    meta = {
        "n": traj.n,
        "seed": traj.seed,
        "lambda": None if curves is None else curves.lam,
        "p1": None if curves is None else curves.p1,
        "T1_or_T2_empirical": traj.stop_time,
        "T1_or_T2_closed_form": closed,
    }
    sidecar = path.with_suffix(".json")
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return sidecar
