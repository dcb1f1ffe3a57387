"""Analytic engine on degree distributions.

Everything here acts on a truncated probability mass sequence ``p_k``:
criticality parameters, the one-stage map M1 (exhaust the degree-1
vertices, then resolve the blocked half-edges), its iteration into an
independence ratio, the Poisson and power-law families, and the
degree-capping upper bound.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    AlphaOutOfRange,
    AlreadyQuasiOptimal,
    DegenerateStage,
    InvalidDistribution,
    NegativeMass,
    NotConverged,
    ZeroMeanDegree,
)
from .series import polylog, power_tail, zeta

DEFAULT_TAIL_TOL = 1e-10
# Strict comparisons with 1 use this margin to avoid boundary flapping.
STRICT_EPS = 1e-12
# Source masses below this fraction of the total are dropped before thinning.
_THIN_CUTOFF = 1e-18


@dataclass(frozen=True, eq=False)
class DegreeDistribution:
    """Probability of degree k for k = 0..K, with ``tail_tol`` mass allowed beyond K."""

    mass: np.ndarray
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        m = np.array(self.mass, dtype=float, copy=True).ravel()
        if m.size == 0:
            raise InvalidDistribution("empty mass sequence")
        if not np.all(np.isfinite(m)):
            raise InvalidDistribution("mass contains non-finite entries")
        if np.any(m < 0) or np.any(m > 1):
            raise InvalidDistribution("mass entries must lie in [0, 1]")
        total = float(m.sum())
        if not (1 - self.tail_tol - 1e-15 <= total <= 1 + 1e-12):
            raise InvalidDistribution(f"mass sums to {total!r}, outside [1 - {self.tail_tol}, 1 + 1e-12]")
        m.setflags(write=False)
        object.__setattr__(self, "mass", m)

    @property
    def truncation_K(self) -> int:
        return self.mass.size - 1

    @property
    def degrees(self) -> np.ndarray:
        return np.arange(self.mass.size)

    def p(self, k: int) -> float:
        return float(self.mass[k]) if 0 <= k < self.mass.size else 0.0

    def generating_function(self, z: float, derivative: int = 0) -> float:
        """G_D and its derivatives evaluated at z."""
        k = self.degrees
        coef = np.ones_like(self.mass)
        for d in range(derivative):
            coef = coef * (k - d)
        powers = np.where(k >= derivative, np.power(float(z), np.maximum(k - derivative, 0)), 0.0)
        return float(np.sum(coef * powers * self.mass))

    @classmethod
    def from_dict(cls, masses: Mapping[int, float], tail_tol: float = DEFAULT_TAIL_TOL) -> "DegreeDistribution":
        K = max(masses) if masses else 0
        m = np.zeros(K + 1)
        for k, v in masses.items():
            m[int(k)] = v
        return cls(m, tail_tol)

    @classmethod
    def poisson(cls, lam: float, tail_tol: float = DEFAULT_TAIL_TOL, truncation: int | None = None) -> "DegreeDistribution":
        return poisson_distribution(lam, tail_tol=tail_tol, truncation=truncation)

    @classmethod
    def powerlaw(cls, alpha: float, K: int | None = None, tail_tol: float = DEFAULT_TAIL_TOL) -> "DegreeDistribution":
        return powerlaw_distribution(alpha, K, tail_tol=tail_tol)

    @classmethod
    def from_spec(cls, spec: Mapping) -> "DegreeDistribution":
        """Build from the JSON distribution spec used by the CLI."""
        kind = spec.get("kind")
        trunc = spec.get("truncation")
        if kind == "poisson":
            return poisson_distribution(float(spec["lambda"]), truncation=trunc)
        if kind == "powerlaw":
            return powerlaw_distribution(float(spec["alpha"]), trunc)
        if kind == "explicit":
            mass = spec["mass"]
            if isinstance(mass, Mapping):
                return cls.from_dict({int(k): float(v) for k, v in mass.items()})
            return cls(np.asarray(mass, dtype=float))
        raise InvalidDistribution(f"unknown distribution kind {kind!r}")

    def __repr__(self):
        return f"DegreeDistribution(K={self.truncation_K}, mean={moments(self)[0]:.6g})"


@dataclass(frozen=True)
class CriticalityReport:
    lambda_: float
    nu: float
    q: float
    q_tilde: float
    nu_tilde: float
    subcritical: bool
    one_step_quasi_optimal: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lambda_")
        return {k: d[k] for k in ("lambda", "nu", "q", "q_tilde", "nu_tilde", "subcritical", "one_step_quasi_optimal")}


@dataclass(frozen=True)
class M1StageRecord:
    """Snapshot of one application of M1.

    ``weight`` is the product of earlier survivor fractions, i.e. the share
    of the original population this stage acts on; ``ratio_increment`` is
    already multiplied by it.
    """

    stage: int
    lambda_i: float
    q_i: float
    q_tilde_i: float
    r_i: float
    removed_fraction: float
    survivor_fraction: float
    ratio_increment: float
    consumed_half_edges: float
    weight: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PoissonMixtureState:
    """A_i Poisson(lambda_i)(k) + B_i 1{k=1} on k >= 1, in units of the original population."""

    lambda_i: float
    a_i: float = 1.0
    b_i: float = 0.0

    def masses(self, K: int) -> np.ndarray:
        """Unnormalized masses for k = 0..K (degree 0 left at 0)."""
        k = np.arange(K + 1)
        out = self.a_i * _poisson_pmf(self.lambda_i, K)
        out[0] = 0.0
        if K >= 1:
            out[1] += self.b_i
        return np.where(k >= 1, out, 0.0)


@dataclass(frozen=True)
class RatioResult:
    ratio: float
    stages: list = field(default_factory=list)
    terminated_subcritical: bool = False
    stages_used: int = 0
    converged: bool = True
    subcritical_stage: int | None = None
    residual_weight: float = 0.0

    def require_convergence(self) -> "RatioResult":
        if not self.converged:
            raise NotConverged(
                f"still supercritical after {self.stages_used} stages (residual weight {self.residual_weight:.3g})",
                result=self,
            )
        return self

    def to_dict(self) -> dict:
        return {
            "ratio": self.ratio,
            "terminated_subcritical": self.terminated_subcritical,
            "stages_used": self.stages_used,
            "converged": self.converged,
            "subcritical_stage": self.subcritical_stage,
            "residual_weight": self.residual_weight,
            "stages": [s.to_dict() for s in self.stages],
        }


def _poisson_pmf(lam: float, K: int) -> np.ndarray:
    k = np.arange(K + 1)
    if lam == 0:
        return (k == 0).astype(float)
    logfact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, K + 1)))))
    return np.exp(-lam + k * math.log(lam) - logfact)


def poisson_distribution(lam: float, tail_tol: float = DEFAULT_TAIL_TOL, truncation: int | None = None) -> DegreeDistribution:
    """Poisson(lam) truncated where the dropped upper tail is below ``tail_tol``, renormalized."""
    if lam < 0:
        raise InvalidDistribution("Poisson mean must be non-negative")
    if truncation is None:
        K = max(1, int(lam))
        while True:
            pmf = _poisson_pmf(lam, K)
            if 1.0 - pmf.sum() < tail_tol and pmf[-1] < tail_tol:
                break
            K = int(K * 1.25) + 2
        # shrink to the smallest admissible K
        cdf = np.cumsum(pmf)
        K = int(np.argmax(1.0 - cdf < tail_tol))
        K = max(K, 1)
    else:
        K = int(truncation)
    pmf = _poisson_pmf(lam, K)
    if 1.0 - pmf.sum() > tail_tol:
        raise InvalidDistribution(f"truncation K={K} drops {1 - pmf.sum():.3g} > tail_tol")
    return DegreeDistribution(pmf / pmf.sum(), tail_tol)


def powerlaw_distribution(alpha: float, K: int | None = None, tail_tol: float = DEFAULT_TAIL_TOL) -> DegreeDistribution:
    """p_k proportional to k**-alpha on 1..K, renormalized over the truncation."""
    if alpha <= 3:
        raise AlphaOutOfRange(f"alpha must exceed 3 for a finite second moment, got {alpha}")
    z = zeta(alpha)
    if K is None:
        K = max(2, int((tail_tol * (alpha - 1) * z) ** (-1.0 / (alpha - 1))))
        while power_tail(alpha, K + 1) / z >= tail_tol:
            K = int(K * 1.1) + 1
    tail = power_tail(alpha, K + 1) / z
    if tail >= tail_tol:
        raise InvalidDistribution(f"K={K} leaves tail mass {tail:.3g} >= tail_tol={tail_tol}")
    k = np.arange(1, K + 1, dtype=float)
    m = np.concatenate(([0.0], k**-alpha / z))
    return DegreeDistribution(m / m.sum(), tail_tol)


def moments(dist: DegreeDistribution) -> tuple[float, float]:
    """Mean degree and second moment over the truncated support."""
    k = dist.degrees
    return float(np.sum(k * dist.mass)), float(np.sum(k * k * dist.mass))


def _q_and_q_tilde(mass: np.ndarray, lam: float) -> tuple[float, float]:
    k = np.arange(mass.size)
    p1 = mass[1] if mass.size > 1 else 0.0
    q = min(1.0, max(0.0, 1.0 - p1 / lam))
    if q == 0.0:
        return 0.0, 0.0
    survivors = np.where(k >= 2, np.power(q, k) * mass, 0.0)
    q_tilde = float(np.sum(k * survivors)) / (q * q * lam)
    return float(q), float(min(1.0, q_tilde))


def criticality(dist: DegreeDistribution) -> CriticalityReport:
    lam, second = moments(dist)
    if lam <= 0:
        raise ZeroMeanDegree("criticality needs a positive mean degree")
    k = dist.degrees
    p = dist.mass
    nu = (second - lam) / lam
    q, q_tilde = _q_and_q_tilde(p, lam)
    pw = np.power(q, np.maximum(k - 2, 0))
    nu_tilde = float(np.sum(np.where(k >= 2, k * (k - 1) * pw * p, 0.0))) / lam
    return CriticalityReport(
        lambda_=lam,
        nu=nu,
        q=q,
        q_tilde=q_tilde,
        nu_tilde=nu_tilde,
        subcritical=nu < 1 - STRICT_EPS,
        one_step_quasi_optimal=nu_tilde < 1 - STRICT_EPS,
    )


def poisson_nu_tilde(lam: float) -> float:
    """Closed form of G''(Q)/lambda for Poisson(lam)."""
    return lam * math.exp(-lam * math.exp(-lam))


def _bisect(f, lo: float, hi: float, tol: float) -> float:
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ArithmeticError(f"no sign change on [{lo}, {hi}]: f={flo!r}, {fhi!r}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def poisson_lambda0() -> float:
    """Mean degree where the Poisson one-step criterion reaches 1."""
    return _bisect(lambda x: poisson_nu_tilde(x) - 1.0, 1.0, 2.0, 1e-10)


def powerlaw_nu_tilde(alpha: float) -> float:
    """G''(Q)/lambda for the untruncated power law, from polylogarithms."""
    if alpha <= 3:
        raise AlphaOutOfRange(f"alpha must exceed 3, got {alpha}")
    z1 = zeta(alpha - 1)
    q = 1.0 - 1.0 / z1
    return (polylog(alpha - 2, q) - polylog(alpha - 1, q)) / (q * q * z1)


def powerlaw_threshold() -> float:
    """Exponent where zeta(alpha-2) = 2 zeta(alpha-1): the power-law supercriticality boundary."""
    return _bisect(lambda a: zeta(a - 2) - 2 * zeta(a - 1), 3.0 + 1e-9, 4.0, 1e-8)


def binomial_thinning(mu: Sequence[float], keep: float) -> np.ndarray:
    """Keep each half-edge of every vertex independently with probability ``keep``.

    out[k] = sum_j mu[j] C(j, k) keep**k (1 - keep)**(j - k). This is also the
    time-t solution of the pure-death system d mu(k)/dt = (k+1) mu(k+1) - k mu(k)
    with keep = exp(-t).
    """
    mu = np.asarray(mu, dtype=float)
    out = np.zeros_like(mu)
    if keep >= 1.0:
        return mu.copy()
    total = mu.sum()
    if keep <= 0.0 or total == 0:
        out[0] = total
        return out
    live = np.nonzero(mu > _THIN_CUTOFF * total)[0]
    top = int(live[-1])
    logfact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, top + 1)))))
    lk, ld = math.log(keep), math.log1p(-keep)
    kk = np.arange(top + 1)
    block = 512
    for start in range(0, top + 1, block):
        j = np.arange(start, min(top + 1, start + block))[:, None]
        valid = kk[None, :] <= j
        diff = np.where(valid, j - kk[None, :], 0)
        logpmf = logfact[j] - logfact[kk][None, :] - logfact[diff] + kk[None, :] * lk + diff * ld
        w = np.where(valid, np.exp(logpmf), 0.0)
        out[: top + 1] += mu[j[:, 0]] @ w
    return out


def apply_m1(dist: DegreeDistribution, stage: int = 1, weight: float = 1.0) -> tuple[DegreeDistribution, M1StageRecord]:
    """One application of M1.

    Degree-0 vertices are set aside (they join the independent set), degree-k
    vertices survive phase 1 with probability Q**k, and phase 2 thins each
    survivor's half-edges with retention Q-tilde. The returned distribution
    is normalized over the surviving population.
    """
    lam, _ = moments(dist)
    if lam <= 0:
        raise ZeroMeanDegree("M1 needs a positive mean degree")
    p = dist.mass
    k = dist.degrees
    r = float(p[0])
    q, q_tilde = _q_and_q_tilde(p, lam)
    survivors = np.where(k >= 2, np.power(q, k) * p, 0.0)
    surv = float(survivors.sum())
    consumed = lam * (1.0 - q * q)
    if not np.isfinite(surv) or surv < 0:
        raise DegenerateStage(f"survivor fraction {surv!r}")
    record = M1StageRecord(
        stage=stage,
        lambda_i=lam,
        q_i=q,
        q_tilde_i=q_tilde,
        r_i=r,
        removed_fraction=min(1.0, max(0.0, 1.0 - r - surv)),
        survivor_fraction=surv,
        ratio_increment=weight * (r + 0.5 * consumed),
        consumed_half_edges=consumed,
        weight=weight,
    )
    if surv == 0.0:
        # Graph exhausted inside this stage; the point mass at 0 carries zero weight.
        return DegreeDistribution(np.array([1.0]), dist.tail_tol), record
    out = binomial_thinning(survivors, q_tilde)
    return DegreeDistribution(out / out.sum(), dist.tail_tol), record


def iterate_m1(
    dist: DegreeDistribution,
    max_stages: int = 100,
    stage_floor: float = 1e-9,
    terminal_stages: int = 200,
) -> RatioResult:
    """Accumulate the independence ratio over repeated M1 applications.

    ``max_stages`` bounds the supercritical part; once a stage is
    subcritical up to ``terminal_stages`` further applications finish the
    tree-like remainder. The loop also ends once the surviving population
    drops to ``stage_floor``.
    """
    if max_stages < 1:
        raise ValueError("max_stages must be >= 1")
    ratio = 0.0
    weight = 1.0
    records: list[M1StageRecord] = []
    sub_at = None
    converged = False
    used = 0
    current = dist
    while True:
        lam, _ = moments(current)
        if lam <= 0:
            ratio += weight * float(current.mass.sum())
            weight = 0.0
            if sub_at is None:
                sub_at = used
            converged = True
            break
        if sub_at is None and criticality(current).subcritical:
            sub_at = used
        if sub_at is None and used >= max_stages:
            break
        if sub_at is not None and used - sub_at >= terminal_stages:
            converged = True
            break
        if current.p(1) == 0.0:
            # M1 is the identity on degrees >= 1; nothing more to peel.
            if sub_at is not None:
                converged = True
            break
        current, rec = apply_m1(current, stage=used + 1, weight=weight)
        records.append(rec)
        ratio += rec.ratio_increment
        weight *= rec.survivor_fraction
        used += 1
        if weight <= stage_floor:
            converged = True
            break
    return RatioResult(
        ratio=ratio,
        stages=records,
        terminated_subcritical=sub_at is not None,
        stages_used=used,
        converged=converged,
        subcritical_stage=sub_at,
        residual_weight=weight,
    )


def poisson_m1_step(state: PoissonMixtureState, tol: float = 1e-12) -> PoissonMixtureState:
    """Advance the Poisson + delta_1 mixture by one M1 application.

    Q and Q-tilde come from the mixture's masses in closed form:
    sum k m_k = A lam + B, m_1 = A lam e^-lam + B and
    sum_{k>=2} k Q^k m_k = A lam Q (e^{-lam (1-Q)} - e^{-lam}).
    A negative B is expected: it removes the degree-1 part of the Poisson
    component that was not produced by thinning.
    """
    lam, a, b = state.lambda_i, state.a_i, state.b_i
    m1 = a * lam * math.exp(-lam) + b
    if m1 < -tol * max(1.0, abs(a)):
        raise NegativeMass(f"degree-1 mass {m1!r} is negative")
    mean = a * lam + b
    if mean <= 0 or lam <= 0:
        return PoissonMixtureState(0.0, a, 0.0)
    q = 1.0 - m1 / mean
    if q <= 0:
        return PoissonMixtureState(0.0, 0.0, 0.0)
    q_tilde = a * lam * q * (math.exp(-lam * (1 - q)) - math.exp(-lam)) / (q * q * mean)
    return PoissonMixtureState(
        lambda_i=q_tilde * q * lam,
        a_i=math.exp(-(1 - q) * lam) * a,
        b_i=-a * q_tilde * q * lam * math.exp(-lam),
    )


def _capped(mass: np.ndarray, k: int, fraction: float) -> np.ndarray:
    m = mass.copy()
    moved = m[k] * fraction
    m[k] -= moved
    m[1] += moved
    return m


def degree_cap_upper_bound(dist: DegreeDistribution, target: float = 1 - 1e-6, max_stages: int = 100) -> tuple[DegreeDistribution, float]:
    """Turn high-degree vertices into degree-1 vertices until the one-step criterion holds.

    Classes are capped from the largest degree downwards; inside the class
    that crosses the target the moved fraction is found by bisection. The
    independence ratio of the capped law bounds the original from above,
    because capping only deletes edges.
    """
    if criticality(dist).one_step_quasi_optimal:
        raise AlreadyQuasiOptimal("nu_tilde < 1 already; the ratio itself is exact")
    base = np.array(dist.mass)
    if base.size < 2:
        base = np.concatenate((base, [0.0]))

    def nt(m):
        return criticality(DegreeDistribution(m, dist.tail_tol)).nu_tilde

    chosen = None
    for k in range(base.size - 1, 1, -1):
        if base[k] == 0:
            continue
        full = _capped(base, k, 1.0)
        if nt(full) < target:
            lo, hi = 0.0, 1.0
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if nt(_capped(base, k, mid)) < target:
                    hi = mid
                else:
                    lo = mid
            chosen = _capped(base, k, hi)
            break
        base = full
    if chosen is None:
        chosen = base
    capped = DegreeDistribution(chosen, dist.tail_tol)
    return capped, iterate_m1(capped, max_stages=max_stages).ratio
